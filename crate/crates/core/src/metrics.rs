//! The three performance indicators computed from a trial outcome.
//!
//! All three are pure functions of the trace digraph and the broadcast
//! count: the fraction of sources with a directed path to the sink, the
//! ratio of broadcasts to the theoretical minimum, and how far the useful
//! part of the digraph is from a tree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::digraph::{Node, TraceDigraph};
use crate::engine::TrialOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Fraction of sources with a directed path to the sink, in [0, 1].
    pub connected_fraction: f64,
    /// Total broadcasts over the minimum possible (one per source); >= 1.
    pub power_ratio: f64,
    /// Edges on directed paths to the sink over c - 1; >= 1, or 0 when the
    /// sink is alone.
    pub treeness: f64,
    /// Nodes with a directed path to the sink, the sink included.
    pub c: usize,
}

/// Nodes from which a directed path to the sink exists, the sink included:
/// breadth-first traversal over reversed edges.
pub fn reach_set(digraph: &TraceDigraph) -> BTreeSet<Node> {
    let n = digraph.sensor_count();
    let index = |node: &Node| match node {
        Node::Sensor(id) => *id,
        Node::Sink => n,
    };
    let mut reverse = vec![Vec::new(); n + 1];
    for (from, to) in &digraph.edges {
        reverse[index(to)].push(index(from));
    }

    let mut reached = vec![false; n + 1];
    reached[n] = true;
    let mut frontier = std::collections::VecDeque::from([n]);
    while let Some(node) = frontier.pop_front() {
        for &tail in &reverse[node] {
            if !reached[tail] {
                reached[tail] = true;
                frontier.push_back(tail);
            }
        }
    }
    reached
        .iter()
        .enumerate()
        .filter_map(|(i, &hit)| hit.then(|| if i == n { Node::Sink } else { Node::Sensor(i) }))
        .collect()
}

/// Share of the `n_star` sources inside the reach set.
pub fn connected_sources_fraction(digraph: &TraceDigraph, n_star: usize) -> f64 {
    assert!(n_star >= 1, "a trial has at least one source");
    let reach = reach_set(digraph);
    let connected = digraph
        .source_ids()
        .filter(|&id| reach.contains(&Node::Sensor(id)))
        .count();
    connected as f64 / n_star as f64
}

/// Broadcasts per source; the minimum is one initial answer per source.
pub fn power_usage_ratio(total_broadcasts: u64, n_star: usize) -> f64 {
    assert!(n_star >= 1, "a trial has at least one source");
    total_broadcasts as f64 / n_star as f64
}

/// Edges lying on directed paths to the sink over `c - 1`, or 0 when only
/// the sink reaches itself. An edge lies on such a path exactly when its
/// head reaches the sink (its tail then does too).
pub fn treeness(digraph: &TraceDigraph) -> f64 {
    let reach = reach_set(digraph);
    let c = reach.len();
    if c == 1 {
        return 0.0;
    }
    let qualifying = digraph.edges.iter().filter(|(_, to)| reach.contains(to)).count();
    qualifying as f64 / (c - 1) as f64
}

/// Relative power usage rescaled by the neighborhood size: actual energy per
/// broadcast grows with r^2, hence linearly with n_r.
pub fn energy_index(power_ratio: f64, expected_neighbors: f64) -> f64 {
    debug_assert!(power_ratio > 0.0 && expected_neighbors > 0.0);
    power_ratio * expected_neighbors
}

/// All indicators for one finished trial.
pub fn compute_report(outcome: &TrialOutcome, n_star: usize) -> MetricsReport {
    MetricsReport {
        connected_fraction: connected_sources_fraction(&outcome.digraph, n_star),
        power_ratio: power_usage_ratio(outcome.total_broadcasts, n_star),
        treeness: treeness(&outcome.digraph),
        c: reach_set(&outcome.digraph).len(),
    }
}
