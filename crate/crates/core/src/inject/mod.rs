//! Fault-injection campaigns against the FPGA, the VPU and the links.

mod campaign;
mod vpu;

pub use campaign::{
    build_campaign, Address, ExplicitEvent, InjectionCampaign, InjectionEvent, InjectionKind, ScheduleSpec, TargetSpec,
    VPU_WORKERS,
};
pub use vpu::{corrupt_vpu, golden_digest};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::fpga::ConfigMutation;
use crate::link::Link;
use crate::sim::SimTime;

/// One applied (or explicitly skipped) injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub time: SimTime,
    pub kind: InjectionKind,
    pub address: Address,
    /// What was actually touched, e.g. a component or byte offsets.
    pub detail: String,
    pub applied: bool,
}

impl MutationRecord {
    pub fn noop(time: SimTime, kind: InjectionKind, address: Address, why: &str) -> Self {
        Self { time, kind, address, detail: why.to_string(), applied: false }
    }

    /// `time_us kind address`, with a trailing marker for skipped events.
    pub fn log_line(&self) -> String {
        if self.applied {
            format!("{} {} {}", self.time, self.kind, self.address)
        } else {
            format!("{} {} {} noop", self.time, self.kind, self.address)
        }
    }
}

impl From<&ConfigMutation> for MutationRecord {
    fn from(m: &ConfigMutation) -> Self {
        Self {
            time: m.time,
            kind: InjectionKind::FpgaConfigBit,
            address: Address::ConfigBit { frame: m.addr.frame, bit: m.addr.bit },
            detail: m.component.map_or("non-essential".to_string(), |c| c.name().to_string()),
            applied: true,
        }
    }
}

/// Flips one bit of the oldest frame on `link`. An idle link yields a
/// no-op record.
pub fn corrupt_link_bit(link: &mut Link, time: SimTime, position: u64) -> Result<MutationRecord> {
    let address = Address::LinkBit { link: link.id(), position };
    Ok(match link.corrupt_bit(position)? {
        Some(frame_no) => MutationRecord {
            time,
            kind: InjectionKind::LinkBit,
            address,
            detail: format!("frame {frame_no}"),
            applied: true,
        },
        None => MutationRecord::noop(time, InjectionKind::LinkBit, address, "link idle"),
    })
}

/// Mutation log, one line per record.
pub fn mutation_log(records: &[MutationRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&r.log_line());
        s.push('\n');
    }
    s
}

pub fn log_digest(records: &[MutationRecord]) -> String {
    let d = Sha256::digest(mutation_log(records).as_bytes());
    d.iter().map(|b| format!("{b:02x}")).collect()
}
