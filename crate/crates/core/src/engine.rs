//! Discrete-event execution of one trial.
//!
//! The sink broadcasts the question at t = 0; it reaches sensor `i` at
//! `R_i / v`. Answer broadcasts are delivered with zero latency by default
//! (only the question propagates at wave speed and only timers consume
//! time), to exactly the nodes within Euclidean distance `r` of the emitter.
//! Timers fire at `R_i / v + 2 (R - R_i) / v`, so the firing wave sweeps from
//! the rim inward, and the sink closes at `2 R / v`.
//!
//! Events at equal timestamps pop in a fixed kind order — question arrivals,
//! then answer deliveries, then timer firings, then the sink deadline — and
//! within a kind by insertion sequence. Everything downstream of a sampled
//! deployment is therefore bit-deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::digraph::{Node, TraceDigraph};
use crate::grid::SpatialGrid;
use crate::protocol::{
    Answer, ProtocolParams, SensorId, SensorProtocolState, SinkDisposition, SinkState,
};
use crate::tokens::{SourceToken, TokenSet};
use crate::trace::{TraceKind, TraceRecord};
use crate::world::{sink_deadline, Deployment};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimOptions {
    /// Deliver answers at wave speed instead of instantly. Exploratory; the
    /// shipped experiments all use zero-latency delivery.
    pub finite_answer_speed: bool,
    /// Record a trace of every transmission.
    pub record_trace: bool,
}

/// Counts of deliveries that changed nothing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Answers that reached a sensor before the question did.
    pub ignored_before_question: u64,
    /// Answers that reached a sensor after its timer had fired.
    pub ignored_after_fire: u64,
    /// Answers that reached the sink past its deadline.
    pub sink_dropped_late: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub digraph: TraceDigraph,
    /// Every answer emission by a sensor, initial and timer-triggered.
    pub total_broadcasts: u64,
    /// The sink's frozen answer set.
    pub collected: TokenSet,
    pub diagnostics: Diagnostics,
    /// Present when [`SimOptions::record_trace`] was set.
    pub trace: Option<Vec<TraceRecord>>,
}

#[derive(Debug, Clone)]
enum EventKind {
    QuestionArrival(SensorId),
    AnswerDelivery { receiver: Node, tag: f64, payload: TokenSet, sender: SensorId },
    TimerFire(SensorId),
    SinkDeadline,
}

impl EventKind {
    fn priority(&self) -> u8 {
        match self {
            EventKind::QuestionArrival(_) => 0,
            EventKind::AnswerDelivery { .. } => 1,
            EventKind::TimerFire(_) => 2,
            EventKind::SinkDeadline => 3,
        }
    }
}

struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl Event {
    fn key(&self) -> (u64, u8, u64) {
        // Times are finite and nonnegative, so the IEEE bit pattern orders
        // them correctly.
        (self.time.to_bits(), self.kind.priority(), self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first.
        self.key().cmp(&other.key()).reverse()
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Which nodes a broadcast reaches: sensors within `r` (emitter excluded)
/// and possibly the sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reception {
    /// In-range sensor ids, ascending.
    pub sensors: Vec<SensorId>,
    pub includes_sink: bool,
}

fn reception(
    grid: &SpatialGrid,
    deployment: &Deployment,
    emitter: Node,
    radius: f64,
) -> Reception {
    let sites = &deployment.sites;
    match emitter {
        Node::Sink => {
            let sensors = sites
                .iter()
                .filter(|s| s.sink_distance <= radius)
                .map(|s| s.id)
                .collect();
            Reception { sensors, includes_sink: false }
        }
        Node::Sensor(id) => {
            let origin = &sites[id];
            let mut sensors = Vec::new();
            grid.candidates(origin.x, origin.y, |candidate| {
                let candidate = candidate as usize;
                if candidate != id && sites[candidate].distance_to(origin) <= radius {
                    sensors.push(candidate);
                }
            });
            sensors.sort_unstable();
            Reception { sensors, includes_sink: origin.sink_distance <= radius }
        }
    }
}

/// Exact closed-disc reception membership for a broadcast of the given
/// radius. Standalone convenience; the trial loop reuses one grid.
pub fn neighbors_within(deployment: &Deployment, emitter: Node, radius: f64) -> Reception {
    assert!(radius > 0.0, "broadcast radius must be positive");
    let grid = SpatialGrid::build(&deployment.sites, radius, deployment.config.disc_radius);
    reception(&grid, deployment, emitter, radius)
}

/// DOT rendering of a finished trial's digraph, positions scaled to a unit
/// disc.
pub fn export_dot(outcome: &TrialOutcome, deployment: &Deployment) -> String {
    outcome.digraph.to_dot(deployment)
}

/// Run one trial under default options (zero-latency answers, no trace).
pub fn run_trial(deployment: &Deployment) -> TrialOutcome {
    run_trial_with(deployment, SimOptions::default())
}

pub fn run_trial_with(deployment: &Deployment, options: SimOptions) -> TrialOutcome {
    Engine::new(deployment, options).run()
}

struct Engine<'a> {
    deployment: &'a Deployment,
    options: SimOptions,
    params: ProtocolParams,
    grid: SpatialGrid,
    states: Vec<SensorProtocolState>,
    sink: SinkState,
    queue: BinaryHeap<Event>,
    next_seq: u64,
    digraph: TraceDigraph,
    total_broadcasts: u64,
    diagnostics: Diagnostics,
    trace: Option<Vec<TraceRecord>>,
}

impl<'a> Engine<'a> {
    fn new(deployment: &'a Deployment, options: SimOptions) -> Self {
        let config = &deployment.config;
        let params = ProtocolParams {
            sink_power: config.sink_power,
            disc_radius: config.disc_radius,
            wave_speed: config.wave_speed,
            gap_factor: config.gap_factor,
            broadcast_radius: deployment.broadcast_radius,
        };
        let universe = config.n_sources as u32;

        let mut digraph = TraceDigraph::new(config.n_sensors);
        let mut next_token = 0u32;
        let states = deployment
            .sites
            .iter()
            .map(|site| {
                digraph.sensors[site.id].is_source = site.is_source;
                let token = site.is_source.then(|| {
                    let t = SourceToken(next_token);
                    next_token += 1;
                    t
                });
                SensorProtocolState::new(universe, token)
            })
            .collect();
        debug_assert_eq!(next_token as usize, config.n_sources);

        let deadline = sink_deadline(config.disc_radius, config.wave_speed);
        let mut engine = Engine {
            deployment,
            options,
            params,
            grid: SpatialGrid::build(
                &deployment.sites,
                deployment.broadcast_radius,
                config.disc_radius,
            ),
            states,
            sink: SinkState::new(universe, deadline),
            queue: BinaryHeap::with_capacity(4 * config.n_sensors + 2),
            next_seq: 0,
            digraph,
            total_broadcasts: 0,
            diagnostics: Diagnostics::default(),
            trace: options.record_trace.then(Vec::new),
        };

        for site in &deployment.sites {
            let arrival = site.sink_distance / config.wave_speed;
            engine.push(arrival, EventKind::QuestionArrival(site.id));
        }
        engine.push(deadline, EventKind::SinkDeadline);
        if let Some(trace) = &mut engine.trace {
            trace.push(TraceRecord {
                time: 0.0,
                kind: TraceKind::Question,
                sender: Node::Sink,
                receivers: deployment.sites.iter().map(|s| Node::Sensor(s.id)).collect(),
                tag: config.sink_power,
                payload_size: 0,
            });
        }
        engine
    }

    fn push(&mut self, time: f64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Event { time, seq, kind });
    }

    fn run(mut self) -> TrialOutcome {
        while let Some(event) = self.queue.pop() {
            let now = event.time;
            match event.kind {
                EventKind::QuestionArrival(id) => {
                    let measured = self.deployment.sites[id].perceived_power;
                    let out = self.states[id]
                        .on_question(&self.params, measured)
                        .expect("question delivered once per sensor");
                    self.push(now + out.timer_delay, EventKind::TimerFire(id));
                    if let Some(answer) = out.emission {
                        self.broadcast(id, answer, now);
                    }
                }
                EventKind::AnswerDelivery { receiver, tag, payload, sender } => {
                    self.deliver(receiver, tag, payload, sender, now);
                }
                EventKind::TimerFire(id) => {
                    self.digraph.sensors[id].fired = true;
                    let emission = self.states[id]
                        .on_timer(&self.params)
                        .expect("timer fires once per sensor");
                    if let Some(answer) = emission {
                        for sender in self.states[id].store.distinct_senders() {
                            self.digraph.add_edge(Node::Sensor(sender), Node::Sensor(id));
                        }
                        self.broadcast(id, answer, now);
                    }
                }
                EventKind::SinkDeadline => {
                    self.sink.on_deadline();
                }
            }
        }

        for (id, state) in self.states.iter().enumerate() {
            self.digraph.sensors[id].broadcasts = state.broadcast_count;
        }
        TrialOutcome {
            digraph: self.digraph,
            total_broadcasts: self.total_broadcasts,
            collected: self.sink.collected(),
            diagnostics: self.diagnostics,
            trace: self.trace,
        }
    }

    fn deliver(&mut self, receiver: Node, tag: f64, payload: TokenSet, sender: SensorId, now: f64) {
        use crate::protocol::DeliveryDisposition::*;
        match receiver {
            Node::Sensor(id) => match self.states[id].on_answer(tag, &payload, sender) {
                Incorporated => {}
                IgnoredAfterFire => self.diagnostics.ignored_after_fire += 1,
                IgnoredBeforeQuestion => self.diagnostics.ignored_before_question += 1,
            },
            Node::Sink => match self.sink.on_answer(tag, &payload, sender, now) {
                SinkDisposition::Accepted => {
                    self.digraph.add_edge(Node::Sensor(sender), Node::Sink);
                }
                SinkDisposition::DroppedLate => self.diagnostics.sink_dropped_late += 1,
            },
        }
    }

    fn broadcast(&mut self, emitter: SensorId, answer: Answer, now: f64) {
        self.total_broadcasts += 1;
        let radius = self.deployment.broadcast_radius;
        let rec = reception(&self.grid, self.deployment, Node::Sensor(emitter), radius);
        let origin = &self.deployment.sites[emitter];
        let v = self.deployment.config.wave_speed;

        if let Some(trace) = &mut self.trace {
            let mut receivers: Vec<Node> = rec.sensors.iter().map(|&id| Node::Sensor(id)).collect();
            if rec.includes_sink {
                receivers.push(Node::Sink);
            }
            trace.push(TraceRecord {
                time: now,
                kind: TraceKind::Answer,
                sender: Node::Sensor(emitter),
                receivers,
                tag: answer.tag,
                payload_size: answer.payload.len(),
            });
        }

        for &id in &rec.sensors {
            let at = if self.options.finite_answer_speed {
                now + origin.distance_to(&self.deployment.sites[id]) / v
            } else {
                now
            };
            self.push(
                at,
                EventKind::AnswerDelivery {
                    receiver: Node::Sensor(id),
                    tag: answer.tag,
                    payload: answer.payload.clone(),
                    sender: emitter,
                },
            );
        }
        if rec.includes_sink {
            let at = if self.options.finite_answer_speed {
                now + origin.sink_distance / v
            } else {
                now
            };
            self.push(
                at,
                EventKind::AnswerDelivery {
                    receiver: Node::Sink,
                    tag: answer.tag,
                    payload: answer.payload,
                    sender: emitter,
                },
            );
        }
    }
}
