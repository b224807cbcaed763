//! Pixel-per-clock footer state machines for the transmit and receive sides.
//!
//! Both sides run a [`CrcBank`] over the active rows and only look at the
//! bit depth once the footer row starts. They must agree bit for bit with
//! [`encode_frame`](super::encode_frame) / [`decode_frame`](super::decode_frame).

use super::crc::{Crc16, CrcBank};
use super::frame::{check_footer_width, extract_crc, padding_is_zero, place_crc, Depth, PixelFrame};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FooterState {
    Active { remaining: usize },
    Footer { column: usize },
    Done,
}

/// Streams a frame's active pixels followed by its footer row.
#[derive(Debug, Clone)]
pub struct FooterTransmitter<'a> {
    frame: &'a PixelFrame,
    bank: CrcBank,
    state: FooterState,
    next: usize,
    footer: Vec<u32>,
}

impl<'a> FooterTransmitter<'a> {
    pub fn new(frame: &'a PixelFrame) -> Result<Self> {
        frame.validate()?;
        check_footer_width(frame.width, frame.depth)?;
        Ok(Self {
            frame,
            bank: CrcBank::default(),
            state: FooterState::Active { remaining: frame.pixels.len() },
            next: 0,
            footer: Vec::new(),
        })
    }

    pub fn state(&self) -> FooterState {
        self.state
    }
}

impl Iterator for FooterTransmitter<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        match self.state {
            FooterState::Active { remaining } => {
                let p = self.frame.pixels[self.next];
                self.next += 1;
                self.bank.push(p);
                self.state = if remaining == 1 {
                    let mut footer = vec![0u32; self.frame.width];
                    place_crc(&mut footer, self.frame.depth, self.bank.select(self.frame.depth));
                    self.footer = footer;
                    FooterState::Footer { column: 0 }
                } else {
                    FooterState::Active { remaining: remaining - 1 }
                };
                Some(p)
            }
            FooterState::Footer { column } => {
                let p = self.footer[column];
                self.state = if column + 1 == self.frame.width {
                    FooterState::Done
                } else {
                    FooterState::Footer { column: column + 1 }
                };
                Some(p)
            }
            FooterState::Done => None,
        }
    }
}

/// Contents of the link status register after a frame completes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkStatus {
    pub crc_ok: bool,
    pub received_crc: Crc16,
    pub computed_crc: Crc16,
    pub padding_ok: bool,
}

#[derive(Debug, Clone)]
pub struct FooterReceiver {
    width: usize,
    height: usize,
    depth: Depth,
    bank: CrcBank,
    state: FooterState,
    active: Vec<u32>,
    footer: Vec<u32>,
    status: Option<LinkStatus>,
}

impl FooterReceiver {
    pub fn new(width: usize, height: usize, depth: Depth) -> Result<Self> {
        check_footer_width(width, depth)?;
        Ok(Self {
            width,
            height,
            depth,
            bank: CrcBank::default(),
            state: FooterState::Active { remaining: width * height },
            active: Vec::with_capacity(width * height),
            footer: Vec::with_capacity(width),
            status: None,
        })
    }

    /// Accepts one pixel; returns the status once the footer row has been taken in.
    pub fn push(&mut self, pixel: u32) -> Option<LinkStatus> {
        match self.state {
            FooterState::Active { remaining } => {
                let p = pixel & self.depth.max_value();
                self.bank.push(p);
                self.active.push(p);
                self.state = if remaining == 1 {
                    FooterState::Footer { column: 0 }
                } else {
                    FooterState::Active { remaining: remaining - 1 }
                };
                None
            }
            FooterState::Footer { column } => {
                self.footer.push(pixel);
                if column + 1 == self.width {
                    self.state = FooterState::Done;
                    let received_crc = extract_crc(&self.footer, self.depth);
                    let computed_crc = self.bank.select(self.depth);
                    let st = LinkStatus {
                        crc_ok: received_crc == computed_crc,
                        received_crc,
                        computed_crc,
                        padding_ok: padding_is_zero(&self.footer, self.depth),
                    };
                    self.status = Some(st);
                    Some(st)
                } else {
                    self.state = FooterState::Footer { column: column + 1 };
                    None
                }
            }
            FooterState::Done => None,
        }
    }

    pub fn status(&self) -> Option<LinkStatus> {
        self.status
    }

    pub fn into_frame(self) -> PixelFrame {
        PixelFrame { width: self.width, height: self.height, depth: self.depth, pixels: self.active }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::{decode_frame, encode_frame};

    #[test]
    fn transmitter_matches_encoder() {
        for depth in [Depth::D8, Depth::D16, Depth::D24] {
            let pixels: Vec<u32> = (0..24u32).map(|i| i.wrapping_mul(2654435761) & depth.max_value()).collect();
            let f = PixelFrame::new(6, 4, depth, pixels).unwrap();
            let streamed: Vec<u32> = FooterTransmitter::new(&f).unwrap().collect();
            assert_eq!(streamed, encode_frame(&f).unwrap().pixels);
        }
    }

    #[test]
    fn receiver_matches_decoder() {
        let f = PixelFrame::new(5, 3, Depth::D24, (0..15).map(|i| i * 0x10101).collect()).unwrap();
        let mut wire = encode_frame(&f).unwrap();
        wire.flip_bit(37).unwrap();
        let mut rx = FooterReceiver::new(5, 3, Depth::D24).unwrap();
        let mut status = None;
        for &p in &wire.pixels {
            if let Some(s) = rx.push(p) {
                status = Some(s);
            }
        }
        let status = status.unwrap();
        let d = decode_frame(&wire).unwrap();
        assert_eq!(status.crc_ok, d.crc_ok);
        assert_eq!(status.received_crc, d.received_crc);
        assert_eq!(status.computed_crc, d.computed_crc);
        assert!(!status.crc_ok);
        assert_eq!(rx.into_frame(), d.frame);
    }
}
