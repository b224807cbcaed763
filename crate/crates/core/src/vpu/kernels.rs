//! Benchmark kernels, stripe partitioning and tiles.

use serde::{Deserialize, Serialize};

use super::image::{decode_pixels, Image, Plane};
use crate::error::{Error, Result};
use crate::link::{crc16_ccitt, Crc16};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Conv2d,
    Binning2d,
}

/// Fixed 3×3 smoothing kernel used by the benchmark.
pub const CONV_KERNEL: [[f64; 3]; 3] = [[0.0625, 0.125, 0.0625], [0.125, 0.25, 0.125], [0.0625, 0.125, 0.0625]];
pub const BIN_FACTOR: usize = 2;

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Conv2d => "conv2d",
            Kernel::Binning2d => "binning2d",
        }
    }

    fn halo(self) -> usize {
        match self {
            Kernel::Conv2d => 1,
            Kernel::Binning2d => 0,
        }
    }

    /// Stripe heights are multiples of this.
    fn row_unit(self) -> usize {
        match self {
            Kernel::Conv2d => 1,
            Kernel::Binning2d => BIN_FACTOR,
        }
    }

    pub fn output_dims(self, width: usize, height: usize) -> (usize, usize) {
        match self {
            Kernel::Conv2d => (width, height),
            Kernel::Binning2d => (width / BIN_FACTOR, height / BIN_FACTOR),
        }
    }

    /// Whole-image reference result.
    pub fn golden(self, img: &Image) -> Result<Plane> {
        let tile = Tile::whole(img);
        let data = self.run(&tile)?;
        let (w, h) = self.output_dims(img.width, img.height);
        Ok(Plane { width: w, height: h, data })
    }

    pub fn run(self, tile: &Tile) -> Result<Vec<f64>> {
        match self {
            Kernel::Conv2d => conv2d(tile, &CONV_KERNEL),
            Kernel::Binning2d => binning2d(tile, BIN_FACTOR),
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "conv2d" | "conv" => Ok(Kernel::Conv2d),
            "binning2d" | "binn2d" | "binning" => Ok(Kernel::Binning2d),
            _ => Err(Error::Config(format!("unknown kernel {s:?}"))),
        }
    }
}

/// An input stripe as shipped to a worker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tile {
    pub index: usize,
    pub width: usize,
    /// First owned image row.
    pub row_start: usize,
    /// Owned rows; output covers exactly these.
    pub rows: usize,
    pub halo_top: usize,
    pub halo_bottom: usize,
    pub image_height: usize,
    pub bpp: usize,
    /// Serialized pixels, halo rows included.
    pub data: Vec<u8>,
    pub crc: Crc16,
}

impl Tile {
    fn whole(img: &Image) -> Self {
        let data = img.rows_to_bytes(0..img.height);
        let crc = crc16_ccitt(&data);
        Tile {
            index: 0,
            width: img.width,
            row_start: 0,
            rows: img.height,
            halo_top: 0,
            halo_bottom: 0,
            image_height: img.height,
            bpp: img.bytes_per_pixel(),
            data,
            crc,
        }
    }

    pub fn crc_ok(&self) -> bool {
        crc16_ccitt(&self.data) == self.crc
    }

    pub fn pixels(&self) -> Vec<u16> {
        decode_pixels(&self.data, self.bpp)
    }

    /// Image rows held, halo included.
    pub fn held_rows(&self) -> std::ops::Range<usize> {
        self.row_start - self.halo_top..self.row_start + self.rows + self.halo_bottom
    }

    pub fn output_rows(&self, kernel: Kernel) -> std::ops::Range<usize> {
        match kernel {
            Kernel::Conv2d => self.row_start..self.row_start + self.rows,
            Kernel::Binning2d => self.row_start / BIN_FACTOR..(self.row_start + self.rows) / BIN_FACTOR,
        }
    }
}

/// Row spans of a balanced split: heights differ by at most one `unit`.
pub fn stripe_spans(height: usize, parts: usize, unit: usize) -> Result<Vec<std::ops::Range<usize>>> {
    if parts == 0 {
        return Err(Error::Workload("need at least one worker".into()));
    }
    if !height.is_multiple_of(unit) {
        return Err(Error::Workload(format!("height {height} not divisible by {unit}")));
    }
    let units = height / unit;
    if units < parts {
        return Err(Error::Workload(format!("{height} rows cannot feed {parts} stripes")));
    }
    let (base, extra) = (units / parts, units % parts);
    let mut spans = Vec::with_capacity(parts);
    let mut at = 0;
    for i in 0..parts {
        let n = (base + usize::from(i < extra)) * unit;
        spans.push(at..at + n);
        at += n;
    }
    Ok(spans)
}

/// Cuts `img` into contiguous stripes with the halo `kernel` needs and a
/// CRC over each tile's bytes.
pub fn partition_workload(img: &Image, parts: usize, kernel: Kernel) -> Result<Vec<Tile>> {
    if kernel == Kernel::Binning2d && !img.width.is_multiple_of(BIN_FACTOR) {
        return Err(Error::Workload(format!("width {} not divisible by {BIN_FACTOR}", img.width)));
    }
    let halo = kernel.halo();
    let spans = stripe_spans(img.height, parts, kernel.row_unit())?;
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            let top = halo.min(r.start);
            let bottom = halo.min(img.height - r.end);
            let data = img.rows_to_bytes(r.start - top..r.end + bottom);
            let crc = crc16_ccitt(&data);
            Tile {
                index,
                width: img.width,
                row_start: r.start,
                rows: r.len(),
                halo_top: top,
                halo_bottom: bottom,
                image_height: img.height,
                bpp: img.bytes_per_pixel(),
                data,
                crc,
            }
        })
        .collect())
}

/// 3×3 convolution over the owned rows; zero outside the image.
pub fn conv2d(tile: &Tile, k: &[[f64; 3]; 3]) -> Result<Vec<f64>> {
    let at_top = tile.row_start == 0;
    let at_bottom = tile.row_start + tile.rows == tile.image_height;
    if (!at_top && tile.halo_top < 1) || (!at_bottom && tile.halo_bottom < 1) {
        return Err(Error::Workload(format!("tile {} lacks its halo rows", tile.index)));
    }
    let px = tile.pixels();
    let w = tile.width;
    let held = tile.rows + tile.halo_top + tile.halo_bottom;
    if px.len() != held * w {
        return Err(Error::LengthMismatch(px.len(), held * w));
    }
    let mut out = Vec::with_capacity(tile.rows * w);
    for y in 0..tile.rows {
        let ly = (y + tile.halo_top) as isize;
        for x in 0..w {
            let mut acc = 0.0;
            for (i, krow) in k.iter().enumerate() {
                let yy = ly + i as isize - 1;
                if yy < 0 || yy >= held as isize {
                    continue;
                }
                for (j, &kv) in krow.iter().enumerate() {
                    let xx = x as isize + j as isize - 1;
                    if xx < 0 || xx >= w as isize {
                        continue;
                    }
                    acc += kv * px[yy as usize * w + xx as usize] as f64;
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// Mean of each `f`×`f` block, rounded half-up.
pub fn binning2d(tile: &Tile, f: usize) -> Result<Vec<f64>> {
    if f == 0 || !tile.rows.is_multiple_of(f) || !tile.width.is_multiple_of(f) {
        return Err(Error::Workload(format!("{}x{} stripe not divisible by {f}", tile.width, tile.rows)));
    }
    let px = tile.pixels();
    let w = tile.width;
    let off = tile.halo_top * w;
    let n = (f * f) as u64;
    let mut out = Vec::with_capacity(tile.rows / f * w / f);
    for by in 0..tile.rows / f {
        for bx in 0..w / f {
            let mut sum = 0u64;
            for dy in 0..f {
                for dx in 0..f {
                    sum += px[off + (by * f + dy) * w + bx * f + dx] as u64;
                }
            }
            out.push(((2 * sum + n) / (2 * n)) as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SeededRng;

    fn img(w: usize, h: usize, f: impl Fn(usize, usize) -> u16) -> Image {
        let px = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Image::new(w, h, 4095, px).unwrap()
    }

    #[test]
    fn twelve_rows_twelve_workers() {
        let t = partition_workload(&img(4, 12, |_, _| 1), 12, Kernel::Conv2d).unwrap();
        assert!(t.iter().all(|t| t.rows == 1));
    }

    #[test]
    fn hundred_rows_balanced() {
        let t = partition_workload(&img(4, 100, |_, _| 1), 12, Kernel::Conv2d).unwrap();
        let mut h: Vec<usize> = t.iter().map(|t| t.rows).collect();
        h.sort();
        assert_eq!(h, [vec![8; 8], vec![9; 4]].concat());
        assert!(t.iter().all(Tile::crc_ok));
    }

    #[test]
    fn too_small_image_rejected() {
        assert!(partition_workload(&img(4, 5, |_, _| 1), 12, Kernel::Conv2d).is_err());
    }

    #[test]
    fn identity_kernel() {
        let im = img(6, 5, |x, y| (x * 7 + y * 3) as u16);
        let tiles = partition_workload(&im, 2, Kernel::Conv2d).unwrap();
        let id = [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]];
        let out: Vec<f64> = tiles.iter().flat_map(|t| conv2d(t, &id).unwrap()).collect();
        let want: Vec<f64> = im.pixels.iter().map(|&p| p as f64).collect();
        assert_eq!(out, want);
    }

    #[test]
    fn ones_kernel_on_constant() {
        let im = img(5, 5, |_, _| 3);
        let t = partition_workload(&im, 1, Kernel::Conv2d).unwrap();
        let out = conv2d(&t[0], &[[1.0; 3]; 3]).unwrap();
        assert_eq!(out[2 * 5 + 2], 27.0);
        // corner sees only 4 pixels
        assert_eq!(out[0], 12.0);
    }

    #[test]
    fn missing_halo_is_an_error() {
        let im = img(4, 4, |_, _| 1);
        let mut t = partition_workload(&im, 2, Kernel::Conv2d).unwrap();
        t[1].halo_top = 0;
        t[1].data.drain(..4 * 2);
        assert!(conv2d(&t[1], &CONV_KERNEL).is_err());
    }

    fn conv_oracle(im: &Image, k: &[[f64; 3]; 3]) -> Vec<f64> {
        let (w, h) = (im.width as isize, im.height as isize);
        let get = |x: isize, y: isize| if x < 0 || y < 0 || x >= w || y >= h { 0.0 } else { im.at(x as usize, y as usize) as f64 };
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += k[i][j] * get(x + j as isize - 1, y + i as isize - 1);
                    }
                }
                out.push(s);
            }
        }
        out
    }

    #[test]
    fn conv_matches_brute_force() {
        let mut rng = SeededRng::derive(3, "conv");
        let k = [[0.3, -1.2, 0.7], [2.5, 0.01, -0.4], [1.1, 0.9, -2.0]];
        for parts in [1, 3, 8] {
            let im = Image::random(8, 8, 4095, &mut rng);
            let want = conv_oracle(&im, &k);
            let got: Vec<f64> =
                partition_workload(&im, parts, Kernel::Conv2d).unwrap().iter().flat_map(|t| conv2d(t, &k).unwrap()).collect();
            for (a, b) in got.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn binning_cases() {
        let c = img(4, 4, |_, _| 9);
        let t = partition_workload(&c, 1, Kernel::Binning2d).unwrap();
        assert_eq!(binning2d(&t[0], 2).unwrap(), vec![9.0; 4]);

        let b = Image::new(2, 2, 255, vec![1, 2, 3, 4]).unwrap();
        let t = partition_workload(&b, 1, Kernel::Binning2d).unwrap();
        assert_eq!(binning2d(&t[0], 2).unwrap(), vec![3.0]);

        let odd = Image::new(3, 2, 255, vec![1; 6]).unwrap();
        assert!(partition_workload(&odd, 1, Kernel::Binning2d).is_err());
    }

    #[test]
    fn binning_matches_brute_force() {
        let mut rng = SeededRng::derive(4, "bin");
        let im = Image::random(16, 24, 4095, &mut rng);
        let mut want = Vec::new();
        for by in 0..12 {
            for bx in 0..8 {
                let s: f64 = [(0, 0), (0, 1), (1, 0), (1, 1)].iter().map(|(dy, dx)| im.at(bx * 2 + dx, by * 2 + dy) as f64).sum();
                want.push((s / 4.0 + 0.5).floor());
            }
        }
        let got: Vec<f64> =
            partition_workload(&im, 5, Kernel::Binning2d).unwrap().iter().flat_map(|t| binning2d(t, 2).unwrap()).collect();
        assert_eq!(got, want);
    }
}
