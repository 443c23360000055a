//! The sink and sensor state machines.
//!
//! Both are expressed as transition functions on owned state: an input
//! (question, answer delivery, timer, deadline) mutates the state and returns
//! whatever should be emitted or scheduled. Nothing here performs I/O or
//! knows about positions; reception geometry is the engine's job.
//!
//! A sensor's life is `Idle -> TimerPending -> Fired`. On the question it
//! measures the perceived power, recovers its radial distance, arms a timer
//! proportional to twice its distance to the rim, and (if a source)
//! broadcasts its own answer at once. While the timer is pending it
//! incorporates every answer it hears, tagged with the sender's power. When
//! the timer fires it forwards the aggregate inward unless the nearest
//! farther-out contributor is within `f * r` radially, in which case the hop
//! is redundant and it stays quiet.

use crate::tokens::{SourceToken, TokenSet};
use crate::world::{distance_from_power, timer_duration, WorldError};
use thiserror::Error;

/// Instrumentation-only sensor identifier; the protocol never keys decisions
/// on it.
pub type SensorId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("question received in phase {0:?}")]
    QuestionOutOfPhase(Phase),
    #[error("timer fired in phase {0:?}")]
    TimerOutOfPhase(Phase),
    #[error("relay selection on an empty store")]
    EmptyStore,
    #[error(transparent)]
    Domain(#[from] WorldError),
}

/// Per-trial constants every sensor knows after hearing the question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub sink_power: f64,
    pub disc_radius: f64,
    pub wave_speed: f64,
    pub gap_factor: f64,
    pub broadcast_radius: f64,
}

/// An `Answer(P, S)` broadcast: the emitter's perceived power plus its
/// flattened aggregate.
#[derive(Debug, Clone, PartialEq)]
pub struct Answer {
    pub tag: f64,
    pub payload: TokenSet,
}

/// One incorporated answer, tagged with the power value the delivering
/// message carried and (for instrumentation) the direct sender.
#[derive(Debug, Clone, PartialEq)]
pub struct AnswerEntry {
    pub tag: f64,
    pub payload: TokenSet,
    pub sender: SensorId,
}

/// A node's aggregate: its own answer, if it is a source, plus everything it
/// has incorporated, in arrival order. Entries are never removed.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateStore {
    universe: u32,
    pub own_answer: Option<SourceToken>,
    pub entries: Vec<AnswerEntry>,
}

impl AggregateStore {
    pub fn new(universe: u32, own_answer: Option<SourceToken>) -> Self {
        Self { universe, own_answer, entries: Vec::new() }
    }

    pub fn received_any(&self) -> bool {
        !self.entries.is_empty()
    }

    pub fn incorporate(&mut self, tag: f64, payload: &TokenSet, sender: SensorId) {
        debug_assert!(tag > 0.0, "answer tag must be positive");
        debug_assert!(!payload.is_empty(), "answer payload must be nonempty");
        self.entries.push(AnswerEntry { tag, payload: payload.clone(), sender });
    }

    /// Union of the own answer and every incorporated payload.
    pub fn flatten(&self) -> TokenSet {
        let mut set = TokenSet::empty(self.universe);
        if let Some(token) = self.own_answer {
            set.insert(token);
        }
        for entry in &self.entries {
            set.union_with(&entry.payload);
        }
        set
    }

    /// Distinct direct senders of incorporated entries, ascending.
    pub fn distinct_senders(&self) -> Vec<SensorId> {
        let mut senders: Vec<SensorId> = self.entries.iter().map(|e| e.sender).collect();
        senders.sort_unstable();
        senders.dedup();
        senders
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    TimerPending,
    Fired,
}

/// What happened to a delivered answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeliveryDisposition {
    Incorporated,
    /// The receiver's timer had already fired; the answer is dropped.
    IgnoredAfterFire,
    /// The receiver has not heard the question yet; the answer is dropped.
    IgnoredBeforeQuestion,
}

/// Result of scanning the store for the farther-out contributor nearest in
/// radius: the greatest tag strictly below the selector's own power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOutcome {
    /// Tag of the selected entry, when one qualifies.
    pub relay_power: Option<f64>,
    /// Radial distance recovered from the selected tag; infinity when no
    /// entry qualifies.
    pub relay_distance: f64,
}

impl SelectionOutcome {
    pub fn found(&self) -> bool {
        self.relay_power.is_some()
    }
}

/// Greatest tag strictly below `own_power`, and the distance it implies.
/// Entries tagged at or above `own_power` come from strictly-nearer-the-sink
/// senders and never qualify. Ties in tag imply the same distance, so the
/// choice among tied entries is unobservable.
pub fn select_relay(
    store: &AggregateStore,
    own_power: f64,
    sink_power: f64,
) -> Result<SelectionOutcome, ProtocolError> {
    if store.entries.is_empty() {
        return Err(ProtocolError::EmptyStore);
    }
    let best = store
        .entries
        .iter()
        .map(|e| e.tag)
        .filter(|&tag| tag < own_power)
        .fold(None, |acc: Option<f64>, tag| Some(acc.map_or(tag, |a| a.max(tag))));
    match best {
        Some(tag) => Ok(SelectionOutcome {
            relay_power: Some(tag),
            relay_distance: distance_from_power(sink_power, tag)?,
        }),
        None => Ok(SelectionOutcome { relay_power: None, relay_distance: f64::INFINITY }),
    }
}

/// Emission plus timer request produced by handling the question.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionOutcome {
    pub emission: Option<Answer>,
    /// Delay until this sensor's timer fires, `2 (R - R_i) / v`.
    pub timer_delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorProtocolState {
    pub phase: Phase,
    /// Perceived power, valid once the question has been handled.
    pub perceived_power: f64,
    /// Radial distance recovered from the perceived power.
    pub sink_distance: f64,
    pub store: AggregateStore,
    pub is_source: bool,
    pub broadcast_count: u8,
}

impl SensorProtocolState {
    pub fn new(universe: u32, own_answer: Option<SourceToken>) -> Self {
        Self {
            phase: Phase::Idle,
            perceived_power: f64::NAN,
            sink_distance: f64::NAN,
            is_source: own_answer.is_some(),
            store: AggregateStore::new(universe, own_answer),
            broadcast_count: 0,
        }
    }

    /// Handle `Question(B0, R)` heard at power `measured_power`: recover the
    /// radial distance, arm the timer, and broadcast the own answer when a
    /// source.
    pub fn on_question(
        &mut self,
        params: &ProtocolParams,
        measured_power: f64,
    ) -> Result<QuestionOutcome, ProtocolError> {
        if self.phase != Phase::Idle {
            return Err(ProtocolError::QuestionOutOfPhase(self.phase));
        }
        self.perceived_power = measured_power;
        // Rounding in the power round-trip can land a rim sensor an ulp past
        // R; the known upper bound caps it.
        self.sink_distance =
            distance_from_power(params.sink_power, measured_power)?.min(params.disc_radius);
        let timer_delay =
            timer_duration(params.disc_radius, self.sink_distance, params.wave_speed)?;
        self.phase = Phase::TimerPending;
        let emission = if self.is_source {
            self.broadcast_count += 1;
            Some(Answer { tag: self.perceived_power, payload: self.store.flatten() })
        } else {
            None
        };
        Ok(QuestionOutcome { emission, timer_delay })
    }

    /// Handle a delivered `Answer(P, S)`. Only a sensor whose timer is still
    /// pending incorporates it.
    pub fn on_answer(
        &mut self,
        tag: f64,
        payload: &TokenSet,
        sender: SensorId,
    ) -> DeliveryDisposition {
        match self.phase {
            Phase::TimerPending => {
                self.store.incorporate(tag, payload, sender);
                DeliveryDisposition::Incorporated
            }
            Phase::Fired => DeliveryDisposition::IgnoredAfterFire,
            Phase::Idle => DeliveryDisposition::IgnoredBeforeQuestion,
        }
    }

    /// Handle the timer going off: forward the aggregate unless nothing was
    /// incorporated or the gap test fails.
    pub fn on_timer(&mut self, params: &ProtocolParams) -> Result<Option<Answer>, ProtocolError> {
        if self.phase != Phase::TimerPending {
            return Err(ProtocolError::TimerOutOfPhase(self.phase));
        }
        self.phase = Phase::Fired;
        if !self.store.received_any() {
            return Ok(None);
        }
        let selection = select_relay(&self.store, self.perceived_power, params.sink_power)?;
        let gap = selection.relay_distance - self.sink_distance;
        if gap > params.gap_factor * params.broadcast_radius {
            self.broadcast_count += 1;
            debug_assert!(self.broadcast_count <= if self.is_source { 2 } else { 1 });
            Ok(Some(Answer { tag: self.perceived_power, payload: self.store.flatten() }))
        } else {
            Ok(None)
        }
    }
}

/// What happened to an answer arriving at the sink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkDisposition {
    Accepted,
    DroppedLate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkState {
    pub store: AggregateStore,
    /// The sink stops collecting at `2 R / v` (arrivals exactly on the
    /// deadline are still accepted).
    pub deadline: f64,
    pub closed: bool,
}

impl SinkState {
    pub fn new(universe: u32, deadline: f64) -> Self {
        Self { store: AggregateStore::new(universe, None), deadline, closed: false }
    }

    pub fn on_answer(
        &mut self,
        tag: f64,
        payload: &TokenSet,
        sender: SensorId,
        now: f64,
    ) -> SinkDisposition {
        if self.closed || now > self.deadline {
            return SinkDisposition::DroppedLate;
        }
        self.store.incorporate(tag, payload, sender);
        SinkDisposition::Accepted
    }

    pub fn on_deadline(&mut self) {
        self.closed = true;
    }

    /// The trial's collected answer set.
    pub fn collected(&self) -> TokenSet {
        self.store.flatten()
    }
}
