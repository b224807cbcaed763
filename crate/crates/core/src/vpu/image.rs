//! Grey images and binary PGM (P5) I/O.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer input image, 8- or 16-bit depending on `maxval`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub pixels: Vec<u16>,
}

impl Image {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Workload("empty image".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::LengthMismatch(pixels.len(), width * height));
        }
        if maxval == 0 {
            return Err(Error::Workload("maxval must be > 0".into()));
        }
        if let Some(p) = pixels.iter().find(|&&p| p > maxval) {
            return Err(Error::Workload(format!("pixel {p} above maxval {maxval}")));
        }
        Ok(Self { width, height, maxval, pixels })
    }

    pub fn random<R: Rng + ?Sized>(width: usize, height: usize, maxval: u16, rng: &mut R) -> Self {
        let pixels = (0..width * height).map(|_| rng.gen_range(0..=maxval)).collect();
        Self { width, height, maxval, pixels }
    }

    pub fn bytes_per_pixel(&self) -> usize {
        if self.maxval > 255 {
            2
        } else {
            1
        }
    }

    pub fn at(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    /// Row-major, big-endian for 16-bit.
    pub fn rows_to_bytes(&self, rows: std::ops::Range<usize>) -> Vec<u8> {
        let px = &self.pixels[rows.start * self.width..rows.end * self.width];
        encode_pixels(px, self.bytes_per_pixel())
    }

    pub fn read_pgm<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        parse_pgm(&buf)
    }

    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P5\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        w.write_all(&encode_pixels(&self.pixels, self.bytes_per_pixel()))?;
        Ok(())
    }
}

pub fn encode_pixels(px: &[u16], bpp: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(px.len() * bpp);
    for &p in px {
        if bpp == 2 {
            out.extend_from_slice(&p.to_be_bytes());
        } else {
            out.push(p as u8);
        }
    }
    out
}

pub fn decode_pixels(bytes: &[u8], bpp: usize) -> Vec<u16> {
    if bpp == 2 {
        bytes.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
    } else {
        bytes.iter().map(|&b| b as u16).collect()
    }
}

fn parse_pgm(buf: &[u8]) -> Result<Image> {
    let bad = |m: &str| Error::Workload(format!("PGM: {m}"));
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < buf.len() && (buf[pos].is_ascii_whitespace() || buf[pos] == b'#') {
            if buf[pos] == b'#' {
                while pos < buf.len() && buf[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&buf[start..pos]).map_err(|_| bad("header not ASCII"))?.to_string());
    }
    if fields[0] != "P5" {
        return Err(bad("not a binary graymap"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number"));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval == 0 || maxval > 65535 {
        return Err(bad("maxval out of range"));
    }
    // exactly one whitespace byte before the raster
    pos += 1;
    let bpp = if maxval > 255 { 2 } else { 1 };
    let need = w * h * bpp;
    if buf.len() < pos + need {
        return Err(bad("truncated raster"));
    }
    Image::new(w, h, maxval as u16, decode_pixels(&buf[pos..pos + need], bpp))
}

/// Kernel output plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn rows_mut(&mut self, rows: std::ops::Range<usize>) -> &mut [f64] {
        &mut self.data[rows.start * self.width..rows.end * self.width]
    }

    /// Integer view clamped to `maxval`, for writing a golden output.
    pub fn to_image(&self, maxval: u16) -> Image {
        let pixels = self.data.iter().map(|&v| v.round().clamp(0.0, maxval as f64) as u16).collect();
        Image { width: self.width, height: self.height, maxval, pixels }
    }
}

/// Fraction of pixels that differ bit-wise.
pub fn error_rate(output: &Plane, golden: &Plane) -> Result<f64> {
    if output.width != golden.width || output.height != golden.height {
        return Err(Error::Workload(format!(
            "dimension mismatch {}x{} vs {}x{}",
            output.width, output.height, golden.width, golden.height
        )));
    }
    let bad = output.data.iter().zip(&golden.data).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    Ok(bad as f64 / golden.data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SeededRng;

    #[test]
    fn pgm_round_trip_both_depths() {
        let mut rng = SeededRng::derive(1, "pgm");
        for maxval in [255u16, 4095] {
            let img = Image::random(7, 5, maxval, &mut rng);
            let mut buf = Vec::new();
            img.write_pgm(&mut buf).unwrap();
            assert_eq!(Image::read_pgm(&buf[..]).unwrap(), img);
        }
    }

    #[test]
    fn pgm_header_comments() {
        let mut buf = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        buf.extend_from_slice(&[9, 200]);
        let img = Image::read_pgm(&buf[..]).unwrap();
        assert_eq!(img.pixels, vec![9, 200]);
    }

    #[test]
    fn pgm_rejects_ascii_variant() {
        assert!(Image::read_pgm(&b"P2\n1 1\n255\n0\n"[..]).is_err());
    }

    #[test]
    fn error_rate_bounds() {
        let a = Plane { width: 2, height: 2, data: vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(error_rate(&a, &a).unwrap(), 0.0);
        let b = Plane { width: 2, height: 2, data: vec![0.0; 4] };
        assert_eq!(error_rate(&a, &b).unwrap(), 1.0);
        assert!(error_rate(&a, &Plane::zeros(4, 1)).is_err());
    }
}
