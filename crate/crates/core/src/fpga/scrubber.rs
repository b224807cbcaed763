//! Configuration memory scrubbing: a cyclic readback scan and per-frame
//! repair in either replace or ECC mode.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config_mem::{ConfigMemory, FrameCheck};
use super::layout::{ScrubMode, ScrubberConfig};

/// Outcome of checking the frame under the scan pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub frame: u32,
    pub check: FrameCheck,
    /// The frame needs a repair slot on the ICAP.
    pub needs_repair: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairReport {
    pub frame: u32,
    pub mode: ScrubMode,
    pub corrected_bits: usize,
    /// Words with more damage than ECC can fix; left in place and reported.
    pub uncorrectable_words: usize,
    pub restored: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScrubStats {
    pub scans: u64,
    pub detections: u64,
    pub repairs: u64,
    pub uncorrectable: u64,
}

#[derive(Debug, Clone)]
pub struct Scrubber {
    cfg: ScrubberConfig,
    ptr: u32,
    frames: u32,
    /// Frames ECC could not fix; not retried until they change or a reset.
    stuck: BTreeSet<u32>,
    stats: ScrubStats,
}

impl Scrubber {
    pub fn new(cfg: ScrubberConfig, frames: u32) -> Self {
        assert!(frames > 0);
        Self { cfg, ptr: 0, frames, stuck: BTreeSet::new(), stats: ScrubStats::default() }
    }

    pub fn config(&self) -> &ScrubberConfig {
        &self.cfg
    }

    pub fn pointer(&self) -> u32 {
        self.ptr
    }

    pub fn stats(&self) -> ScrubStats {
        self.stats
    }

    /// Set once enhanced repair met damage it cannot correct.
    pub fn uncorrectable(&self) -> bool {
        !self.stuck.is_empty()
    }

    /// Checks one frame against its stored codes and advances the pointer.
    pub fn cms_step(&mut self, mem: &ConfigMemory) -> ScanReport {
        let frame = self.ptr;
        self.ptr = (self.ptr + 1) % self.frames;
        self.stats.scans += 1;
        let check = mem.check_frame(frame as usize);
        let dirty = !check.clean();
        if !dirty {
            self.stuck.remove(&frame);
        }
        let needs_repair = dirty && !self.stuck.contains(&frame);
        if needs_repair {
            self.stats.detections += 1;
        }
        ScanReport { frame, check, needs_repair }
    }

    /// Applies the repair of `frame` once its ICAP slot has elapsed.
    pub fn complete_repair(&mut self, mem: &mut ConfigMemory, frame: u32) -> RepairReport {
        self.stats.repairs += 1;
        match self.cfg.mode {
            ScrubMode::Replace => {
                let corrected = mem.flipped_in_frame(frame as usize).len();
                mem.restore_frame(frame as usize);
                RepairReport { frame, mode: ScrubMode::Replace, corrected_bits: corrected, uncorrectable_words: 0, restored: true }
            }
            ScrubMode::EnhancedRepair => {
                let r = mem.ecc_repair_frame(frame as usize);
                let restored = r.uncorrectable_words == 0 && r.crc_ok_after;
                if !restored {
                    self.stuck.insert(frame);
                    self.stats.uncorrectable += 1;
                }
                RepairReport {
                    frame,
                    mode: ScrubMode::EnhancedRepair,
                    corrected_bits: r.corrected_bits,
                    uncorrectable_words: r.uncorrectable_words,
                    restored,
                }
            }
        }
    }

    pub fn reset(&mut self) {
        self.ptr = 0;
        self.stuck.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpga::config_mem::BitAddr;
    use crate::sim::SeededRng;

    fn setup(mode: ScrubMode) -> (ConfigMemory, Scrubber) {
        let mem = ConfigMemory::new(8, &mut SeededRng::derive(9, "scrub")).unwrap();
        let cfg = ScrubberConfig { mode, ..Default::default() };
        (mem, Scrubber::new(cfg, 8))
    }

    #[test]
    fn clean_memory_has_no_detections() {
        let (mem, mut s) = setup(ScrubMode::Replace);
        for _ in 0..16 {
            assert!(!s.cms_step(&mem).needs_repair);
        }
        assert_eq!(s.stats().detections, 0);
        assert_eq!(s.pointer(), 0);
    }

    #[test]
    fn replace_restores_golden() {
        let (mut mem, mut s) = setup(ScrubMode::Replace);
        mem.flip(BitAddr::new(5, 100)).unwrap();
        let hit = (0..8).map(|_| s.cms_step(&mem)).find(|r| r.needs_repair).unwrap();
        assert_eq!(hit.frame, 5);
        let r = s.complete_repair(&mut mem, 5);
        assert!(r.restored);
        assert!(mem.frame_matches_golden(5));
    }

    #[test]
    fn double_flip_in_word_is_reported_not_fixed() {
        let (mut mem, mut s) = setup(ScrubMode::EnhancedRepair);
        mem.flip(BitAddr::new(2, 32)).unwrap();
        mem.flip(BitAddr::new(2, 33)).unwrap();
        let hit = (0..8).map(|_| s.cms_step(&mem)).find(|r| r.needs_repair).unwrap();
        assert_eq!(hit.check.uncorrectable_words, 1);
        let r = s.complete_repair(&mut mem, 2);
        assert!(!r.restored);
        assert_eq!(r.uncorrectable_words, 1);
        assert!(s.uncorrectable());
        // the stuck frame is not queued again
        assert!((0..8).all(|_| !s.cms_step(&mem).needs_repair));
    }
}
