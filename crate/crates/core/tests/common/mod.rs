//! Shared test support: an independent reference simulator, hand-built
//! deployments, and random instance generators.

use std::collections::BTreeSet;

use rand::Rng;

use sinkward::digraph::Node;
use sinkward::engine::{Diagnostics, TrialOutcome};
use sinkward::metrics::{compute_report, MetricsReport};
use sinkward::tokens::{SourceToken, TokenSet};
use sinkward::world::{Deployment, SensorSite, WorldConfig};

/// Everything the reference simulator produces for a trial.
#[derive(Debug, PartialEq)]
pub struct ReferenceOutcome {
    pub edges: BTreeSet<(Node, Node)>,
    pub total_broadcasts: u64,
    pub collected: TokenSet,
    pub diagnostics: Diagnostics,
}

/// Straight-line chronological simulator for zero-latency trials: every
/// moment (question arrivals, timer firings, the deadline) is sorted into
/// one global list and processed in order, with deliveries handled inline
/// at emission time and receivers found by plain linear scans. No event
/// queue, no spatial index, no protocol state machine.
pub fn simulate_reference(deployment: &Deployment) -> ReferenceOutcome {
    let config = &deployment.config;
    let sites = &deployment.sites;
    let n = sites.len();
    let v = config.wave_speed;
    let b0 = config.sink_power;
    let radius = deployment.broadcast_radius;
    let gap_threshold = config.gap_factor * radius;
    let deadline = 2.0 * config.disc_radius / v;
    let universe = config.n_sources as u32;

    let mut next_token = 0u32;
    let own_token: Vec<Option<SourceToken>> = sites
        .iter()
        .map(|s| {
            s.is_source.then(|| {
                let t = SourceToken(next_token);
                next_token += 1;
                t
            })
        })
        .collect();

    // Radial distance each sensor recovers from its measured power, capped
    // at the known disc radius.
    let recovered: Vec<f64> = sites
        .iter()
        .map(|s| (b0 / s.perceived_power).sqrt().min(config.disc_radius))
        .collect();
    let arrival: Vec<f64> = sites.iter().map(|s| s.sink_distance / v).collect();
    let fire: Vec<f64> = (0..n)
        .map(|i| arrival[i] + 2.0 * (config.disc_radius - recovered[i]) / v)
        .collect();

    // Moments in global chronological order; at equal times arrivals come
    // before firings before the deadline, then site index.
    #[derive(Clone, Copy, PartialEq)]
    enum Moment {
        Arrival(usize),
        Fire(usize),
        Deadline,
    }
    let mut moments: Vec<(f64, u8, usize, Moment)> = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        moments.push((arrival[i], 0, i, Moment::Arrival(i)));
        moments.push((fire[i], 2, i, Moment::Fire(i)));
    }
    moments.push((deadline, 3, usize::MAX, Moment::Deadline));
    moments.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
    });

    let mut stores: Vec<Vec<(f64, TokenSet, usize)>> = vec![Vec::new(); n];
    let mut fired = vec![false; n];
    let mut broadcasts = vec![0u8; n];
    let mut edges = BTreeSet::new();
    let mut total_broadcasts = 0u64;
    let mut collected = TokenSet::empty(universe);
    let mut diagnostics = Diagnostics::default();

    // One zero-latency broadcast, delivered inline to every node within the
    // reception radius.
    let mut deliver = |emitter: usize,
                       tag: f64,
                       payload: &TokenSet,
                       now: f64,
                       stores: &mut Vec<Vec<(f64, TokenSet, usize)>>,
                       fired: &[bool],
                       edges: &mut BTreeSet<(Node, Node)>,
                       collected: &mut TokenSet,
                       diagnostics: &mut Diagnostics| {
        for j in 0..n {
            if j == emitter || sites[j].distance_to(&sites[emitter]) > radius {
                continue;
            }
            if arrival[j] > now {
                diagnostics.ignored_before_question += 1;
            } else if fired[j] {
                diagnostics.ignored_after_fire += 1;
            } else {
                stores[j].push((tag, payload.clone(), emitter));
            }
        }
        if sites[emitter].sink_distance <= radius {
            if now <= deadline {
                collected.union_with(payload);
                edges.insert((Node::Sensor(emitter), Node::Sink));
            } else {
                diagnostics.sink_dropped_late += 1;
            }
        }
    };

    for &(now, _, _, moment) in &moments {
        match moment {
            Moment::Arrival(i) => {
                if sites[i].is_source {
                    let payload = TokenSet::singleton(universe, own_token[i].unwrap());
                    broadcasts[i] += 1;
                    total_broadcasts += 1;
                    deliver(
                        i,
                        sites[i].perceived_power,
                        &payload,
                        now,
                        &mut stores,
                        &fired,
                        &mut edges,
                        &mut collected,
                        &mut diagnostics,
                    );
                }
            }
            Moment::Fire(i) => {
                fired[i] = true;
                if stores[i].is_empty() {
                    continue;
                }
                let own_power = sites[i].perceived_power;
                let best = stores[i]
                    .iter()
                    .map(|(tag, _, _)| *tag)
                    .filter(|&tag| tag < own_power)
                    .fold(f64::NAN, f64::max);
                let relay_distance =
                    if best.is_nan() { f64::INFINITY } else { (b0 / best).sqrt() };
                if relay_distance - recovered[i] > gap_threshold {
                    let mut payload = TokenSet::empty(universe);
                    if let Some(token) = own_token[i] {
                        payload.insert(token);
                    }
                    for (_, entry, _) in &stores[i] {
                        payload.union_with(entry);
                    }
                    for sender in
                        stores[i].iter().map(|(_, _, s)| *s).collect::<BTreeSet<usize>>()
                    {
                        edges.insert((Node::Sensor(sender), Node::Sensor(i)));
                    }
                    broadcasts[i] += 1;
                    total_broadcasts += 1;
                    deliver(
                        i,
                        own_power,
                        &payload,
                        now,
                        &mut stores,
                        &fired,
                        &mut edges,
                        &mut collected,
                        &mut diagnostics,
                    );
                }
            }
            Moment::Deadline => {}
        }
    }

    ReferenceOutcome { edges, total_broadcasts, collected, diagnostics }
}

/// Metrics for a reference outcome, over a digraph rebuilt from its edges.
pub fn reference_report(
    reference: &ReferenceOutcome,
    deployment: &Deployment,
) -> MetricsReport {
    let mut digraph = sinkward::TraceDigraph::new(deployment.sites.len());
    for site in &deployment.sites {
        digraph.sensors[site.id].is_source = site.is_source;
    }
    for &(from, to) in &reference.edges {
        digraph.add_edge(from, to);
    }
    let outcome = TrialOutcome {
        digraph,
        total_broadcasts: reference.total_broadcasts,
        collected: reference.collected.clone(),
        diagnostics: reference.diagnostics,
        trace: None,
    };
    compute_report(&outcome, deployment.config.n_sources)
}

/// Assert the production engine and the reference simulator agree exactly.
pub fn assert_matches_reference(deployment: &Deployment, label: &str) {
    let outcome = sinkward::run_trial(deployment);
    let reference = simulate_reference(deployment);
    assert_eq!(outcome.digraph.edges, reference.edges, "{label}: digraphs differ");
    assert_eq!(
        outcome.total_broadcasts, reference.total_broadcasts,
        "{label}: broadcast counts differ"
    );
    assert_eq!(outcome.collected, reference.collected, "{label}: collected sets differ");
    assert_eq!(outcome.diagnostics, reference.diagnostics, "{label}: diagnostics differ");
    assert_eq!(
        compute_report(&outcome, deployment.config.n_sources),
        reference_report(&reference, deployment),
        "{label}: metrics differ"
    );
}

/// Deployment with explicit positions; the broadcast radius is taken as
/// given and `expected_neighbors` back-derived from it.
pub fn line_world(
    points: &[(f64, f64, bool)],
    gap_factor: f64,
    broadcast_radius: f64,
) -> Deployment {
    let n = points.len();
    let n_sources = points.iter().filter(|p| p.2).count();
    let expected_neighbors = broadcast_radius * broadcast_radius * n as f64;
    let config = WorldConfig::canonical(n, n_sources, gap_factor, expected_neighbors, 0);
    let sites = points
        .iter()
        .enumerate()
        .map(|(id, &(x, y, is_source))| {
            let d = (x * x + y * y).sqrt();
            SensorSite {
                id,
                x,
                y,
                sink_distance: d,
                perceived_power: 1.0 / (d * d),
                is_source,
            }
        })
        .collect();
    Deployment { config, sites, broadcast_radius }
}

/// One source at 0.8 with relays at 0.55 and 0.28 on the x-axis; reception
/// radius 0.3, gap factor 0.3. Builds the three-hop chain.
pub fn scenario_a() -> Deployment {
    line_world(&[(0.8, 0.0, true), (0.55, 0.0, false), (0.28, 0.0, false)], 0.3, 0.3)
}

/// Scenario A plus an off-axis relay near 0.55 that makes the on-axis
/// relay's hop redundant.
pub fn scenario_b() -> Deployment {
    line_world(
        &[(0.8, 0.0, true), (0.55, 0.0, false), (0.28, 0.0, false), (0.55, 0.1, false)],
        0.3,
        0.3,
    )
}

/// Random small instance for oracle comparisons.
pub fn random_config(rng: &mut impl Rng, max_sensors: usize, seed: u64) -> WorldConfig {
    let n = rng.gen_range(1..=max_sensors);
    let n_sources = rng.gen_range(1..=n);
    let gap_factor = rng.gen_range(0.0..1.0);
    let expected_neighbors = rng.gen_range(0.3..=n as f64);
    WorldConfig::canonical(n, n_sources, gap_factor, expected_neighbors, seed)
}
