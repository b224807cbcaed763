//! Deterministic discrete-event simulator of an FPGA + VPU payload under
//! single-event upsets.

pub mod corruption;
pub mod error;
pub mod fpga;
pub mod harness;
pub mod inject;
pub mod link;
pub mod sim;
pub mod vpu;

pub use error::{Error, Result};
pub use sim::{Engine, SeededRng, SimTime};
