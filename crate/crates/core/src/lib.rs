//! Deterministic simulator of power-gradient route construction in anonymous
//! sensor networks.
//!
//! Sensors carry no identifiers. The only thing that differentiates them is
//! the power level they perceive in a single broadcast from a central sink,
//! which decays with the inverse square of distance and is therefore
//! invertible to a radial distance. Sensors answer the sink's question by
//! staggering their broadcasts on radial timers (outskirts first), aggregating
//! whatever they overhear from farther out, and forwarding inward unless a
//! nearer-by contributor makes the hop redundant.
//!
//! The crate is organized along the same lines as the system it models:
//!
//! * [`world`] — geometry, deployment sampling, the power law and timers
//! * [`protocol`] — the sink and sensor state machines
//! * [`engine`] — discrete-event execution of one trial and the trace digraph
//! * [`metrics`] — the three performance indicators
//! * [`experiment`] — parameter sweeps, aggregation, CSV and plot emission
//!
//! Everything is reproducible: a deployment is a pure function of its seed
//! (ChaCha12, pinned), a trial is a pure function of its deployment, and a
//! sweep is a pure function of its spec, independent of thread count.

pub mod digraph;
pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod protocol;
pub mod tokens;
pub mod trace;
pub mod world;

mod grid;

pub use digraph::{Node, TraceDigraph};
pub use engine::{export_dot, run_trial, run_trial_with, SimOptions, TrialOutcome};
pub use metrics::MetricsReport;
pub use world::{sample_deployment, Deployment, SensorSite, WorldConfig};
