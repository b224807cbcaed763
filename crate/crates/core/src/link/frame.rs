//! Pixel frames, the footer-row wire format and its text dump.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::crc::{crc16_ccitt, Crc16};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Depth {
    D8,
    D16,
    D24,
}

impl Depth {
    pub fn bits(self) -> u8 {
        match self {
            Depth::D8 => 8,
            Depth::D16 => 16,
            Depth::D24 => 24,
        }
    }

    pub fn bytes(self) -> usize {
        self.bits() as usize / 8
    }

    pub fn max_value(self) -> u32 {
        (1u32 << self.bits()) - 1
    }

    pub(crate) fn index(self) -> usize {
        match self {
            Depth::D8 => 0,
            Depth::D16 => 1,
            Depth::D24 => 2,
        }
    }

    /// Footer pixels needed to carry the 16-bit CRC.
    pub fn crc_pixels(self) -> usize {
        match self {
            Depth::D8 => 2,
            Depth::D16 | Depth::D24 => 1,
        }
    }
}

impl TryFrom<u8> for Depth {
    type Error = Error;
    fn try_from(bits: u8) -> Result<Self> {
        match bits {
            8 => Ok(Depth::D8),
            16 => Ok(Depth::D16),
            24 => Ok(Depth::D24),
            other => Err(Error::Frame(format!("unsupported bit depth {other}"))),
        }
    }
}

impl From<Depth> for u8 {
    fn from(d: Depth) -> u8 {
        d.bits()
    }
}

/// Active image rows, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelFrame {
    pub width: usize,
    pub height: usize,
    pub depth: Depth,
    pub pixels: Vec<u32>,
}

impl PixelFrame {
    pub fn new(width: usize, height: usize, depth: Depth, pixels: Vec<u32>) -> Result<Self> {
        let f = Self { width, height, depth, pixels };
        f.validate()?;
        Ok(f)
    }

    pub fn zeroed(width: usize, height: usize, depth: Depth) -> Self {
        Self { width, height, depth, pixels: vec![0; width * height] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Frame(format!("empty geometry {}x{}", self.width, self.height)));
        }
        if self.pixels.len() != self.width * self.height {
            return Err(Error::Frame(format!(
                "{} pixels for a {}x{} frame",
                self.pixels.len(),
                self.width,
                self.height
            )));
        }
        let max = self.depth.max_value();
        if let Some(p) = self.pixels.iter().find(|&&p| p > max) {
            return Err(Error::Frame(format!("pixel {p:#x} exceeds {}-bit depth", self.depth.bits())));
        }
        Ok(())
    }
}

/// Row-major, big-endian per pixel. This byte stream is the CRC domain.
pub fn serialize_pixels(frame: &PixelFrame) -> Vec<u8> {
    let n = frame.depth.bytes();
    let mut out = Vec::with_capacity(frame.pixels.len() * n);
    for &p in &frame.pixels {
        for i in (0..n).rev() {
            out.push((p >> (8 * i)) as u8);
        }
    }
    out
}

/// Active rows followed by one footer row; the footer's first pixel(s) hold the CRC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameWire {
    pub width: usize,
    pub height: usize,
    pub depth: Depth,
    pub pixels: Vec<u32>,
}

impl FrameWire {
    pub fn rows(&self) -> usize {
        self.pixels.len() / self.width.max(1)
    }

    pub fn footer(&self) -> &[u32] {
        &self.pixels[self.height * self.width..]
    }

    pub fn total_pixels(&self) -> usize {
        self.pixels.len()
    }

    pub fn total_bits(&self) -> u64 {
        self.pixels.len() as u64 * self.depth.bits() as u64
    }

    /// Flips bit `position` of the wire, counted pixel by pixel with each
    /// pixel contributing `depth` bits, most significant first.
    pub fn flip_bit(&mut self, position: u64) -> Result<()> {
        let bits = self.depth.bits() as u64;
        let pixel = (position / bits) as usize;
        if pixel >= self.pixels.len() {
            return Err(Error::Frame(format!("bit {position} beyond {} wire bits", self.total_bits())));
        }
        let bit = bits - 1 - position % bits;
        self.pixels[pixel] ^= 1 << bit;
        Ok(())
    }

    /// `width height depth` then one line of hex pixels per row, footer last.
    pub fn dump(&self) -> String {
        let digits = self.depth.bits() as usize / 4;
        let mut s = format!("{} {} {}\n", self.width, self.height, self.depth.bits());
        for row in self.pixels.chunks(self.width) {
            for (i, p) in row.iter().enumerate() {
                if i > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{:0digits$X}", p, digits = digits);
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Frame("empty dump".into()))?;
        let fields: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| Error::Frame(format!("bad header field {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        let [width, height, depth] = fields[..] else {
            return Err(Error::Frame(format!("header needs 3 fields, got {}", fields.len())));
        };
        let depth = Depth::try_from(u8::try_from(depth).map_err(|_| Error::Frame("bad depth".into()))?)?;
        let mut pixels = Vec::with_capacity(width * (height + 1));
        for line in lines {
            let row: Vec<u32> = line
                .split_whitespace()
                .map(|t| u32::from_str_radix(t, 16).map_err(|e| Error::Frame(format!("bad pixel {t:?}: {e}"))))
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(Error::Frame(format!("row of {} pixels, expected {width}", row.len())));
            }
            pixels.extend(row);
        }
        if pixels.len() != width * (height + 1) {
            return Err(Error::Frame(format!("expected {} rows incl. footer", height + 1)));
        }
        Ok(Self { width, height, depth, pixels })
    }
}

pub(crate) fn check_footer_width(width: usize, depth: Depth) -> Result<()> {
    if width < depth.crc_pixels() {
        return Err(Error::FooterTooNarrow { width, depth: depth.bits() });
    }
    Ok(())
}

/// CRC placement inside the footer row.
pub(crate) fn place_crc(footer: &mut [u32], depth: Depth, crc: Crc16) {
    match depth {
        Depth::D8 => {
            footer[0] = (crc.0 >> 8) as u32;
            footer[1] = (crc.0 & 0xFF) as u32;
        }
        Depth::D16 | Depth::D24 => footer[0] = crc.0 as u32,
    }
}

pub(crate) fn extract_crc(footer: &[u32], depth: Depth) -> Crc16 {
    match depth {
        Depth::D8 => Crc16((((footer[0] & 0xFF) << 8) | (footer[1] & 0xFF)) as u16),
        Depth::D16 => Crc16(footer[0] as u16),
        Depth::D24 => Crc16((footer[0] & 0xFFFF) as u16),
    }
}

/// True when every footer bit outside the CRC field is zero.
pub(crate) fn padding_is_zero(footer: &[u32], depth: Depth) -> bool {
    let n = depth.crc_pixels();
    let field_ok = match depth {
        Depth::D24 => footer[0] >> 16 == 0,
        _ => true,
    };
    field_ok && footer[n..].iter().all(|&p| p == 0)
}

pub fn encode_frame(frame: &PixelFrame) -> Result<FrameWire> {
    frame.validate()?;
    check_footer_width(frame.width, frame.depth)?;
    let crc = crc16_ccitt(&serialize_pixels(frame));
    let mut pixels = Vec::with_capacity(frame.pixels.len() + frame.width);
    pixels.extend_from_slice(&frame.pixels);
    let mut footer = vec![0u32; frame.width];
    place_crc(&mut footer, frame.depth, crc);
    pixels.extend(footer);
    Ok(FrameWire { width: frame.width, height: frame.height, depth: frame.depth, pixels })
}

/// Receiver-side verdict, mirrored into the link status registers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoded {
    pub frame: PixelFrame,
    pub crc_ok: bool,
    pub received_crc: Crc16,
    pub computed_crc: Crc16,
    /// Footer bits outside the CRC field were all zero.
    pub padding_ok: bool,
}

pub fn decode_frame(wire: &FrameWire) -> Result<Decoded> {
    if wire.width == 0 || wire.height == 0 {
        return Err(Error::Frame("empty geometry".into()));
    }
    if wire.pixels.len() != wire.width * (wire.height + 1) {
        return Err(Error::Frame(format!(
            "wire holds {} pixels, expected {} rows of {} incl. footer",
            wire.pixels.len(),
            wire.height + 1,
            wire.width
        )));
    }
    check_footer_width(wire.width, wire.depth)?;
    let active = wire.width * wire.height;
    let max = wire.depth.max_value();
    let frame = PixelFrame {
        width: wire.width,
        height: wire.height,
        depth: wire.depth,
        pixels: wire.pixels[..active].iter().map(|&p| p & max).collect(),
    };
    let footer = wire.footer();
    let computed_crc = crc16_ccitt(&serialize_pixels(&frame));
    let received_crc = extract_crc(footer, wire.depth);
    Ok(Decoded {
        crc_ok: computed_crc == received_crc,
        received_crc,
        computed_crc,
        padding_ok: padding_is_zero(footer, wire.depth),
        frame,
    })
}
