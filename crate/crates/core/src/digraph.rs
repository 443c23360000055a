//! The trace digraph: sensors plus the sink as nodes, with an edge for every
//! recorded reception-and-forward relation.
//!
//! An edge `(j, i)` between sensors means sensor `i` broadcast as its timer
//! went off while information from `j` sat in its aggregate; an edge
//! `(i, sink)` means the sink accepted an answer from `i`. Edges form a set:
//! repeated relations collapse.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::protocol::SensorId;
use crate::world::Deployment;

/// A digraph node. `Sensor` sorts before `Sink`, and sensors sort by id, so
/// edge sets iterate deterministically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Sensor(SensorId),
    Sink,
}

impl Serialize for Node {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Node::Sensor(id) => serializer.serialize_u64(*id as u64),
            Node::Sink => serializer.serialize_str("sink"),
        }
    }
}

impl<'de> Deserialize<'de> for Node {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Id(u64),
            Name(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Id(id) => Ok(Node::Sensor(id as usize)),
            Repr::Name(s) if s == "sink" => Ok(Node::Sink),
            Repr::Name(s) => Err(D::Error::custom(format!("unknown node {s:?}"))),
        }
    }
}

/// Instrumentation flags kept per sensor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SensorFlags {
    pub is_source: bool,
    pub fired: bool,
    pub broadcasts: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceDigraph {
    pub sensors: Vec<SensorFlags>,
    pub edges: BTreeSet<(Node, Node)>,
}

impl TraceDigraph {
    pub fn new(sensor_count: usize) -> Self {
        Self { sensors: vec![SensorFlags::default(); sensor_count], edges: BTreeSet::new() }
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors.len()
    }

    /// Sensors plus the sink.
    pub fn node_count(&self) -> usize {
        self.sensors.len() + 1
    }

    pub fn add_edge(&mut self, from: Node, to: Node) {
        debug_assert!(from != to, "self-loops cannot occur");
        debug_assert!(from != Node::Sink, "the sink never forwards");
        self.edges.insert((from, to));
    }

    pub fn source_ids(&self) -> impl Iterator<Item = SensorId> + '_ {
        self.sensors
            .iter()
            .enumerate()
            .filter_map(|(id, f)| f.is_source.then_some(id))
    }

    /// DOT rendering with positions scaled to a unit disc. The sink is the
    /// distinguished double circle at the origin; sources carry a
    /// `source=true` attribute and a star shape.
    pub fn to_dot(&self, deployment: &Deployment) -> String {
        assert_eq!(self.sensors.len(), deployment.sites.len(), "digraph/deployment mismatch");
        let scale = 1.0 / deployment.config.disc_radius;
        let mut out = String::new();
        out.push_str("digraph routes {\n");
        out.push_str("  sink [shape=doublecircle, pos=\"0,0!\"];\n");
        for site in &deployment.sites {
            let attrs = if self.sensors[site.id].is_source {
                "shape=star, source=true"
            } else {
                "shape=point"
            };
            writeln!(
                out,
                "  s{} [{}, pos=\"{:.6},{:.6}!\"];",
                site.id,
                attrs,
                site.x * scale,
                site.y * scale
            )
            .unwrap();
        }
        for (from, to) in &self.edges {
            let name = |n: &Node| match n {
                Node::Sensor(id) => format!("s{id}"),
                Node::Sink => "sink".into(),
            };
            writeln!(out, "  {} -> {};", name(from), name(to)).unwrap();
        }
        out.push_str("}\n");
        out
    }
}
