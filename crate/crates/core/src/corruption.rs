//! Deterministic output corruption shared by the FPGA and VPU models.
//!
//! A faulty unit is summarised by a 64-bit tag derived from the set of bits
//! flipped in its memory. The tag seeds a mask generator; the unit's output is
//! the correct output XOR that mask. Each tag also fixes a corruption density
//! in `[0.5, 1.0]`, the share of output samples that the mask touches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 64-bit finaliser from SplitMix64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Order-independent tag of a set of flipped addresses. Flipping the same
/// address twice cancels, matching the memory contents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CorruptionTag(pub u64);

impl CorruptionTag {
    pub fn toggle(&mut self, address: u64) {
        self.0 ^= mix64(address);
    }

    pub fn from_addresses<I: IntoIterator<Item = u64>>(addrs: I) -> Self {
        let mut t = CorruptionTag::default();
        for a in addrs {
            t.toggle(a);
        }
        t
    }

    /// Tag of a memory image that differs from its golden copy.
    pub fn from_diff(current: &[u8], golden: &[u8]) -> Self {
        let mut t = CorruptionTag::default();
        for (i, (c, g)) in current.iter().zip(golden).enumerate() {
            let mut d = c ^ g;
            while d != 0 {
                let b = d.trailing_zeros() as u64;
                t.toggle(i as u64 * 8 + b);
                d &= d - 1;
            }
        }
        t
    }

    /// Mixes in a context value, e.g. a replica index, so identical faults in
    /// different units still produce different masks.
    pub fn salted(self, salt: u64) -> Self {
        CorruptionTag(mix64(self.0 ^ mix64(salt)))
    }

    pub fn density(self) -> f64 {
        0.5 + 0.5 * ((mix64(self.0 ^ 0xD3A5_17C0) >> 11) as f64 / (1u64 << 53) as f64)
    }

    fn masks(self, len: usize) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        let density = self.density();
        let mut masks: Vec<u64> =
            (0..len).map(|_| if rng.gen::<f64>() < density { rng.gen::<u64>() | 1 } else { 0 }).collect();
        if len > 0 && masks.iter().all(|&m| m == 0) {
            masks[(self.0 % len as u64) as usize] = rng.gen::<u64>() | 1;
        }
        masks
    }

    pub fn apply_i64(self, samples: &mut [i64]) {
        let masks = self.masks(samples.len());
        for (s, m) in samples.iter_mut().zip(masks) {
            *s ^= m as i64;
        }
    }

    /// XORs mantissa bits only, so corrupted values stay finite.
    pub fn apply_f64(self, samples: &mut [f64]) {
        const MANTISSA: u64 = (1 << 52) - 1;
        let masks = self.masks(samples.len());
        for (s, m) in samples.iter_mut().zip(masks) {
            if m != 0 {
                let m = (m & MANTISSA) | 1;
                *s = f64::from_bits(s.to_bits() ^ m);
            }
        }
    }
}
