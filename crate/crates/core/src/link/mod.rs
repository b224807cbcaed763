//! CRC-footer frame protocol for the FPGA/VPU pixel links.

mod channel;
pub mod crc;
mod frame;
mod fsm;

pub use channel::{Delivery, Link, LinkId};
pub use crc::{crc16_ccitt, Crc16, CrcBank, PixelCrc};
pub use frame::{decode_frame, encode_frame, serialize_pixels, Decoded, Depth, FrameWire, PixelFrame};
pub use fsm::{FooterReceiver, FooterState, FooterTransmitter, LinkStatus};
