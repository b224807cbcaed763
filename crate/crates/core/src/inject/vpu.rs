//! Byte-burst corruption of VPU memories.

use rand::Rng;

use super::{Address, InjectionEvent, InjectionKind, MutationRecord};
use crate::error::{Error, Result};
use crate::sim::SeededRng;
use crate::vpu::{VpuState, WORKERS};

pub const MAX_BURST: usize = 4;

/// XORs a 1..=4 byte burst with non-zero values somewhere in `buf`.
/// Returns the first offset and the burst length.
fn burst(buf: &mut [u8], rng: &mut SeededRng) -> (usize, usize) {
    let len = rng.gen_range(1..=MAX_BURST).min(buf.len());
    let at = rng.gen_range(0..=buf.len() - len);
    for b in &mut buf[at..at + len] {
        *b ^= rng.gen_range(1..=255u8);
    }
    (at, len)
}

/// Applies one VPU injection. Positions come from the event's salt, so the
/// same event always hits the same bytes.
pub fn corrupt_vpu(event: &InjectionEvent, vpu: &mut VpuState) -> Result<MutationRecord> {
    let Address::Worker { worker, salt } = event.address else {
        return Err(Error::Config(format!("{} needs a worker address", event.kind)));
    };
    if worker >= WORKERS {
        return Err(Error::Config(format!("worker {worker} out of range")));
    }
    let mut rng = SeededRng::derive(salt, "vpu-burst");
    let applied = |detail: String| MutationRecord { time: event.time, kind: event.kind, address: event.address, detail, applied: true };
    let noop = |why: &str| MutationRecord::noop(event.time, event.kind, event.address, why);
    Ok(match event.kind {
        InjectionKind::VpuDdrInput => {
            let r = vpu.ddr_region(worker).ok_or_else(|| Error::Invariant(format!("worker {worker} has no DDR region")))?;
            let base = r.start;
            let (at, len) = burst(&mut vpu.ddr_input_mut()[r], &mut rng);
            applied(format!("ddr+{} len {len}", base + at))
        }
        InjectionKind::VpuWorkerLocal => match vpu.workers[worker].tile.as_mut() {
            Some(t) => {
                let (at, len) = burst(&mut t.data, &mut rng);
                applied(format!("cmx+{at} len {len}"))
            }
            None => noop("tile not resident"),
        },
        InjectionKind::VpuSharedVar => match vpu.workers[worker].shared.as_mut() {
            Some(s) => {
                let mut word = s.row_count.to_be_bytes();
                let (at, len) = burst(&mut word, &mut rng);
                s.row_count = u32::from_be_bytes(word);
                applied(format!("row_count+{at} len {len}"))
            }
            None => noop("control word not written"),
        },
        InjectionKind::VpuInstr => {
            let (at, len) = burst(&mut vpu.workers[worker].instr, &mut rng);
            applied(format!("code+{at} len {len}"))
        }
        k => return Err(Error::Config(format!("{k} is not a VPU injection"))),
    })
}

pub fn golden_digest(vpu: &VpuState) -> String {
    vpu.golden_digest()
}
