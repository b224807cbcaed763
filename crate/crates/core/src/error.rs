use thiserror::Error;

use crate::sim::SimTime;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot schedule at {at} µs: clock is already at {now} µs")]
    ScheduleInPast { at: SimTime, now: SimTime },

    #[error("cannot run backwards to {target} µs from {now} µs")]
    RunInPast { target: SimTime, now: SimTime },

    #[error("invalid frame: {0}")]
    Frame(String),

    #[error("frame footer too narrow: width {width} at depth {depth} cannot hold a 16-bit CRC")]
    FooterTooNarrow { width: usize, depth: u8 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("workload error: {0}")]
    Workload(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("undefined failure rate: no correct time observed")]
    UndefinedRate,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
