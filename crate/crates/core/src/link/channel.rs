use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::frame::FrameWire;
use crate::error::{Error, Result};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkId {
    /// Camera interface, FPGA to VPU.
    Cif,
    /// Display interface, VPU to FPGA.
    Lcd,
}

impl LinkId {
    pub fn name(self) -> &'static str {
        match self {
            LinkId::Cif => "cif",
            LinkId::Lcd => "lcd",
        }
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    frame_no: u64,
    deliver_at: SimTime,
    wire: FrameWire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub frame_no: u64,
    pub deliver_at: SimTime,
}

/// Ordered, lossless parallel pixel bus moving one pixel per clock.
#[derive(Debug, Clone)]
pub struct Link {
    id: LinkId,
    pixel_clock_hz: u64,
    busy_until: SimTime,
    next_frame: u64,
    in_flight: VecDeque<InFlight>,
}

impl Link {
    pub fn new(id: LinkId, pixel_clock_hz: u64) -> Result<Self> {
        if pixel_clock_hz == 0 {
            return Err(Error::Config("link pixel clock must be > 0".into()));
        }
        Ok(Self { id, pixel_clock_hz, busy_until: SimTime::ZERO, next_frame: 0, in_flight: VecDeque::new() })
    }

    pub fn id(&self) -> LinkId {
        self.id
    }

    /// Time on the wire for `pixels` pixels, rounded up to the next microsecond.
    pub fn latency(&self, pixels: usize) -> SimTime {
        SimTime((pixels as u64 * 1_000_000).div_ceil(self.pixel_clock_hz))
    }

    /// Queues a frame; it starts once the bus is free and arrives after its wire time.
    pub fn transmit(&mut self, wire: FrameWire, at: SimTime) -> Result<Delivery> {
        if wire.pixels.is_empty() || wire.width == 0 {
            return Err(Error::Frame("zero-size payload".into()));
        }
        let start = at.max(self.busy_until);
        let deliver_at = start + self.latency(wire.pixels.len());
        self.busy_until = deliver_at;
        let frame_no = self.next_frame;
        self.next_frame += 1;
        self.in_flight.push_back(InFlight { frame_no, deliver_at, wire });
        Ok(Delivery { frame_no, deliver_at })
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Flips one bit of the oldest frame still on the wire.
    /// Returns the frame number hit, or `None` when the link is idle.
    pub fn corrupt_bit(&mut self, position: u64) -> Result<Option<u64>> {
        match self.in_flight.front_mut() {
            Some(f) => {
                let pos = position % f.wire.total_bits();
                f.wire.flip_bit(pos)?;
                Ok(Some(f.frame_no))
            }
            None => Ok(None),
        }
    }

    /// Hands over the oldest frame. Frames always leave in transmit order.
    pub fn deliver(&mut self, now: SimTime) -> Option<(u64, FrameWire)> {
        match self.in_flight.front() {
            Some(f) if f.deliver_at <= now => {
                let f = self.in_flight.pop_front().expect("front");
                Some((f.frame_no, f.wire))
            }
            _ => None,
        }
    }
}
