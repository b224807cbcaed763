//! CRC-16-CCITT as used on the CIF/LCD pixel links.
//!
//! Polynomial 0x1021, initial register 0x0000, MSB first, no reflection and no
//! final XOR (the "XMODEM" parameterisation).

use super::frame::Depth;

pub const POLY: u16 = 0x1021;
pub const INIT: u16 = 0x0000;

const TABLE: [u16; 256] = build_table();

const fn build_table() -> [u16; 256] {
    let mut table = [0u16; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = (i as u16) << 8;
        let mut b = 0;
        while b < 8 {
            crc = if crc & 0x8000 != 0 { (crc << 1) ^ POLY } else { crc << 1 };
            b += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
pub struct Crc16(pub u16);

impl std::fmt::Display for Crc16 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "0x{:04X}", self.0)
    }
}

#[inline]
pub fn update(crc: u16, byte: u8) -> u16 {
    (crc << 8) ^ TABLE[((crc >> 8) as u8 ^ byte) as usize]
}

pub fn crc16_ccitt(bytes: &[u8]) -> Crc16 {
    Crc16(bytes.iter().fold(INIT, |c, &b| update(c, b)))
}

/// One on-the-fly CRC calculator fed a pixel per clock at a fixed width.
///
/// The link hardware runs three of these side by side (8, 16 and 24 bit) and
/// picks the matching one once the active rows are done.
#[derive(Debug, Clone, Copy)]
pub struct PixelCrc {
    depth: Depth,
    reg: u16,
}

impl PixelCrc {
    pub fn new(depth: Depth) -> Self {
        Self { depth, reg: INIT }
    }

    pub fn depth(&self) -> Depth {
        self.depth
    }

    /// Feeds the low `depth` bits of `pixel`, most significant byte first.
    #[inline]
    pub fn push(&mut self, pixel: u32) {
        for i in (0..self.depth.bytes()).rev() {
            self.reg = update(self.reg, (pixel >> (8 * i)) as u8);
        }
    }

    pub fn value(&self) -> Crc16 {
        Crc16(self.reg)
    }

    pub fn reset(&mut self) {
        self.reg = INIT;
    }
}

/// The three per-depth calculators running in parallel on the same pixel stream.
#[derive(Debug, Clone)]
pub struct CrcBank {
    units: [PixelCrc; 3],
}

impl Default for CrcBank {
    fn default() -> Self {
        Self { units: [PixelCrc::new(Depth::D8), PixelCrc::new(Depth::D16), PixelCrc::new(Depth::D24)] }
    }
}

impl CrcBank {
    pub fn push(&mut self, pixel: u32) {
        for u in &mut self.units {
            u.push(pixel);
        }
    }

    pub fn select(&self, depth: Depth) -> Crc16 {
        self.units[depth.index()].value()
    }

    pub fn reset(&mut self) {
        self.units.iter_mut().for_each(PixelCrc::reset);
    }
}
