//! Configuration memory: 404-byte frames, a golden store, and per-frame
//! detection codes (a CRC-16 over the frame plus SECDED per 32-bit word).

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ecc::{self, Syndrome};
use crate::error::{Error, Result};
use crate::link::{crc16_ccitt, Crc16};

pub const FRAME_BYTES: usize = 404;
pub const FRAME_BITS: u32 = (FRAME_BYTES * 8) as u32;
pub const WORDS_PER_FRAME: usize = FRAME_BYTES / 4;

/// A configuration bit: frame index plus bit offset inside the frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BitAddr {
    pub frame: u32,
    pub bit: u32,
}

impl BitAddr {
    pub fn new(frame: u32, bit: u32) -> Self {
        Self { frame, bit }
    }

    pub fn linear(self) -> u64 {
        self.frame as u64 * FRAME_BITS as u64 + self.bit as u64
    }

    pub fn from_linear(l: u64) -> Self {
        Self { frame: (l / FRAME_BITS as u64) as u32, bit: (l % FRAME_BITS as u64) as u32 }
    }
}

impl std::fmt::Display for BitAddr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f{}:b{}", self.frame, self.bit)
    }
}

/// What a readback of one frame found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameCheck {
    pub crc_ok: bool,
    pub single_bit_words: usize,
    pub uncorrectable_words: usize,
}

impl FrameCheck {
    pub fn clean(&self) -> bool {
        self.crc_ok && self.single_bit_words == 0 && self.uncorrectable_words == 0
    }
}

/// Result of an ECC-based in-place repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EccRepair {
    pub corrected_bits: usize,
    pub uncorrectable_words: usize,
    pub crc_ok_after: bool,
}

#[derive(Debug, Clone)]
pub struct ConfigMemory {
    data: Vec<u8>,
    golden: Vec<u8>,
    frame_crc: Vec<Crc16>,
    frame_ecc: Vec<u8>,
}

impl ConfigMemory {
    /// Builds a memory of `frames` frames filled with `rng` content, which
    /// becomes the golden image.
    pub fn new(frames: usize, rng: &mut dyn RngCore) -> Result<Self> {
        if frames == 0 {
            return Err(Error::Config("configuration memory needs at least one frame".into()));
        }
        let mut golden = vec![0u8; frames * FRAME_BYTES];
        rng.fill_bytes(&mut golden);
        Ok(Self::from_golden(golden))
    }

    pub fn from_golden(golden: Vec<u8>) -> Self {
        assert_eq!(golden.len() % FRAME_BYTES, 0, "golden image must be whole frames");
        let frame_crc = golden.chunks(FRAME_BYTES).map(crc16_ccitt).collect();
        let frame_ecc = golden.chunks(4).map(|w| ecc::encode(u32::from_le_bytes(w.try_into().unwrap()))).collect();
        Self { data: golden.clone(), golden, frame_crc, frame_ecc }
    }

    pub fn frames(&self) -> usize {
        self.data.len() / FRAME_BYTES
    }

    pub fn total_bits(&self) -> u64 {
        self.data.len() as u64 * 8
    }

    pub fn size_bytes(&self) -> usize {
        self.data.len()
    }

    pub fn frame(&self, idx: usize) -> &[u8] {
        &self.data[idx * FRAME_BYTES..(idx + 1) * FRAME_BYTES]
    }

    pub fn golden_frame(&self, idx: usize) -> &[u8] {
        &self.golden[idx * FRAME_BYTES..(idx + 1) * FRAME_BYTES]
    }

    pub fn contains(&self, addr: BitAddr) -> bool {
        (addr.frame as usize) < self.frames() && addr.bit < FRAME_BITS
    }

    pub fn bit(&self, addr: BitAddr) -> bool {
        let l = addr.linear() as usize;
        self.data[l / 8] >> (l % 8) & 1 == 1
    }

    pub fn is_flipped(&self, addr: BitAddr) -> bool {
        let l = addr.linear() as usize;
        (self.data[l / 8] ^ self.golden[l / 8]) >> (l % 8) & 1 == 1
    }

    /// XOR-flips one bit. Returns the new bit value.
    pub fn flip(&mut self, addr: BitAddr) -> Result<bool> {
        if !self.contains(addr) {
            return Err(Error::Config(format!("bit address {addr} outside {} frames", self.frames())));
        }
        let l = addr.linear() as usize;
        self.data[l / 8] ^= 1 << (l % 8);
        Ok(self.bit(addr))
    }

    pub fn frame_matches_golden(&self, idx: usize) -> bool {
        self.frame(idx) == self.golden_frame(idx)
    }

    /// Readback check against the stored codes; never looks at the golden store.
    pub fn check_frame(&self, idx: usize) -> FrameCheck {
        let frame = self.frame(idx);
        let mut single = 0;
        let mut multi = 0;
        for (w, bytes) in frame.chunks(4).enumerate() {
            let word = u32::from_le_bytes(bytes.try_into().unwrap());
            match ecc::check(word, self.frame_ecc[idx * WORDS_PER_FRAME + w]) {
                Syndrome::Clean => {}
                Syndrome::Single(_) => single += 1,
                Syndrome::Uncorrectable => multi += 1,
            }
        }
        FrameCheck { crc_ok: crc16_ccitt(frame) == self.frame_crc[idx], single_bit_words: single, uncorrectable_words: multi }
    }

    /// Data-reload repair from the golden store.
    pub fn restore_frame(&mut self, idx: usize) {
        let r = idx * FRAME_BYTES..(idx + 1) * FRAME_BYTES;
        self.data[r.clone()].copy_from_slice(&self.golden[r]);
    }

    /// Algorithmic repair: fixes single-bit words, then re-checks the frame CRC.
    pub fn ecc_repair_frame(&mut self, idx: usize) -> EccRepair {
        let mut corrected = 0;
        let mut uncorrectable = 0;
        for w in 0..WORDS_PER_FRAME {
            let off = idx * FRAME_BYTES + w * 4;
            let word = u32::from_le_bytes(self.data[off..off + 4].try_into().unwrap());
            match ecc::check(word, self.frame_ecc[idx * WORDS_PER_FRAME + w]) {
                Syndrome::Clean => {}
                Syndrome::Single(b) => {
                    let fixed = word ^ (1 << b);
                    self.data[off..off + 4].copy_from_slice(&fixed.to_le_bytes());
                    corrected += 1;
                }
                Syndrome::Uncorrectable => uncorrectable += 1,
            }
        }
        let crc_ok_after = crc16_ccitt(self.frame(idx)) == self.frame_crc[idx];
        EccRepair { corrected_bits: corrected, uncorrectable_words: uncorrectable, crc_ok_after }
    }

    pub fn restore_all(&mut self) {
        self.data.copy_from_slice(&self.golden);
    }

    /// Flipped bit addresses inside one frame.
    pub fn flipped_in_frame(&self, idx: usize) -> Vec<BitAddr> {
        let mut out = Vec::new();
        for (i, (c, g)) in self.frame(idx).iter().zip(self.golden_frame(idx)).enumerate() {
            let mut d = c ^ g;
            while d != 0 {
                let b = d.trailing_zeros();
                out.push(BitAddr::new(idx as u32, i as u32 * 8 + b));
                d &= d - 1;
            }
        }
        out
    }

    pub fn flipped_count(&self) -> usize {
        self.data.iter().zip(&self.golden).map(|(a, b)| (a ^ b).count_ones() as usize).sum()
    }

    pub fn golden_digest(&self) -> [u8; 32] {
        let d = Sha256::digest(&self.golden);
        let mut out = [0u8; 32];
        out.copy_from_slice(&d);
        out
    }
}
