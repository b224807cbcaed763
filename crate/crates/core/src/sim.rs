//! Discrete-event simulation substrate.
//!
//! The engine keeps a virtual clock in whole microseconds and a priority queue
//! ordered by `(fire_at, seq)`, so events that share a timestamp run in the
//! order they were scheduled. Randomness comes from labelled ChaCha streams
//! derived from the root seed; forking a new label never perturbs the draws of
//! an existing stream.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Microseconds since simulation start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms * 1_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-6
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl std::ops::Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl std::ops::Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Handle returned by [`Engine::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u64);

/// Short tag naming what an event does; used in the event log.
pub trait EventKind {
    fn kind(&self) -> &'static str;
}

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub id: EventId,
    pub fire_at: SimTime,
    pub seq: u64,
    pub target: &'static str,
    pub payload: P,
}

impl<P> PartialEq for Event<P> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<P> Eq for Event<P> {}

impl<P> PartialOrd for Event<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so that `BinaryHeap` pops the earliest event first.
impl<P> Ord for Event<P> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Counters used to check that no event is lost or processed twice.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventAccounting {
    pub scheduled: u64,
    pub processed: u64,
    pub cancelled: u64,
}

pub struct Engine<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Event<P>>,
    cancelled: HashSet<EventId>,
    seed: u64,
    accounting: EventAccounting,
    log: Option<Vec<String>>,
}

impl<P: EventKind> Engine<P> {
    pub fn new(seed: u64) -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            seed,
            accounting: EventAccounting::default(),
            log: None,
        }
    }

    /// Record one `time_us, target, kind` line per processed event.
    pub fn with_event_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    pub fn accounting(&self) -> EventAccounting {
        self.accounting
    }

    pub fn schedule(&mut self, fire_at: SimTime, target: &'static str, payload: P) -> Result<EventId> {
        if fire_at < self.now {
            return Err(Error::ScheduleInPast { at: fire_at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        let id = EventId(seq);
        self.queue.push(Event { id, fire_at, seq, target, payload });
        self.accounting.scheduled += 1;
        Ok(id)
    }

    /// Schedule `delay` after the current clock. Never fails.
    pub fn schedule_in(&mut self, delay: SimTime, target: &'static str, payload: P) -> EventId {
        let at = self.now + delay;
        self.schedule(at, target, payload).expect("relative schedule is never in the past")
    }

    /// Returns `false` if the event already fired or was cancelled before.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.0 >= self.next_seq || self.cancelled.contains(&id) {
            return false;
        }
        if !self.queue.iter().any(|e| e.id == id) {
            return false;
        }
        self.cancelled.insert(id);
        self.accounting.cancelled += 1;
        true
    }

    /// Pops the next live event with `fire_at <= limit`, advancing the clock to it.
    pub fn pop_due(&mut self, limit: SimTime) -> Option<Event<P>> {
        loop {
            let head = self.queue.peek()?;
            if head.fire_at > limit {
                return None;
            }
            let ev = self.queue.pop().expect("peeked");
            if self.cancelled.remove(&ev.id) {
                continue;
            }
            debug_assert!(ev.fire_at >= self.now);
            self.now = ev.fire_at;
            self.accounting.processed += 1;
            if let Some(log) = self.log.as_mut() {
                log.push(format!("{}, {}, {}", ev.fire_at, ev.target, ev.payload.kind()));
            }
            return Some(ev);
        }
    }

    /// Processes every event due at or before `t_end`, then parks the clock at `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64>
    where
        F: FnMut(&mut Self, Event<P>) -> Result<()>,
    {
        if t_end < self.now {
            return Err(Error::RunInPast { target: t_end, now: self.now });
        }
        let mut count = 0;
        while let Some(ev) = self.pop_due(t_end) {
            handler(self, ev)?;
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }

    /// Drops every pending event (used by whole-node resets).
    pub fn cancel_where<F: Fn(&P) -> bool>(&mut self, pred: F) -> usize {
        let ids: Vec<EventId> = self
            .queue
            .iter()
            .filter(|e| !self.cancelled.contains(&e.id) && pred(&e.payload))
            .map(|e| e.id)
            .collect();
        for id in &ids {
            self.cancelled.insert(*id);
        }
        self.accounting.cancelled += ids.len() as u64;
        ids.len()
    }

    pub fn fork_rng(&self, label: &str) -> SeededRng {
        SeededRng::derive(self.seed, label)
    }

    pub fn event_log(&self) -> Option<&[String]> {
        self.log.as_deref()
    }

    pub fn take_event_log(&mut self) -> Option<Vec<String>> {
        self.log.take()
    }
}

/// Deterministic random stream keyed by `(root seed, label)`.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    label: String,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn derive(seed: u64, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(seed.to_le_bytes());
        h.update(label.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        Self { seed, label: label.to_owned(), inner: ChaCha8Rng::from_seed(key) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Child stream `label/sub`.
    pub fn fork(&self, sub: &str) -> SeededRng {
        SeededRng::derive(self.seed, &format!("{}/{}", self.label, sub))
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}
