//! JSON-lines trace of the broadcasts in one trial.
//!
//! One record per transmission: the sink's question and every answer, with
//! the exact receiver set the reception geometry produced. Payloads are
//! logged by size only.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::digraph::Node;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: TraceKind,
    pub sender: Node,
    pub receivers: Vec<Node>,
    /// Power tag of the message: the broadcast level for the question, the
    /// emitter's perceived power for an answer.
    pub tag: f64,
    pub payload_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Question,
    Answer,
}

pub fn write_jsonl<W: Write>(records: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let records = vec![
            TraceRecord {
                time: 0.0,
                kind: TraceKind::Question,
                sender: Node::Sink,
                receivers: vec![Node::Sensor(0), Node::Sensor(1)],
                tag: 1.0,
                payload_size: 0,
            },
            TraceRecord {
                time: 1.45,
                kind: TraceKind::Answer,
                sender: Node::Sensor(1),
                receivers: vec![Node::Sensor(0), Node::Sink],
                tag: 3.305785123966942,
                payload_size: 1,
            },
        ];
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("\"kind\":\"question\""));
        assert_eq!(read_jsonl(&text).unwrap(), records);
    }
}
