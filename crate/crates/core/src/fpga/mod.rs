//! Configuration-memory model of the FPGA node and its mitigation stack.

pub mod config_mem;
pub mod ecc;
pub mod fir;
pub mod icap;
pub mod layout;
pub mod node;
pub mod scrubber;
pub mod tmr;

pub use config_mem::{BitAddr, ConfigMemory, FRAME_BITS, FRAME_BYTES};
pub use fir::fir_filter;
pub use icap::{Acquire, Icap, IcapOwner, IcapStats};
pub use layout::{Architecture, Component, ComponentSize, EssentialBitMap, FpgaConfig, Layout, ScrubMode, ScrubberConfig};
pub use node::{CheckpointRecord, ConfigMutation, FpgaComponentState, FpgaEvent, FpgaNode, NodeOutput, ResetInterval};
pub use scrubber::{RepairReport, ScanReport, Scrubber};
pub use tmr::{run_tmr_pipeline, tmr_vote, TmrHealth, TmrOutcome, VoteStatus};
