//! Self-checks behind the `verify` command.

use rand::{Rng, RngCore};

use super::config::CampaignSpec;
use super::run::run;
use crate::fpga::tmr_vote;
use crate::inject::ScheduleSpec;
use crate::link::{crc16_ccitt, decode_frame, encode_frame, Depth, PixelFrame};
use crate::sim::SeededRng;
use crate::vpu::{FtMode, Image, Kernel, VpuConfig, VpuState, WORKERS};

/// Shift-register CRC, one bit at a time.
fn crc_bitwise(data: &[u8]) -> u16 {
    let mut reg: u16 = 0;
    for &byte in data {
        for i in (0..8).rev() {
            let top = (reg >> 15) & 1;
            let bit = ((byte >> i) & 1) as u16;
            reg <<= 1;
            if top ^ bit == 1 {
                reg ^= 0x1021;
            }
        }
    }
    reg
}

fn crc_check() -> bool {
    let mut rng = SeededRng::derive(1, "verify-crc");
    crc_bitwise(b"123456789") == crc16_ccitt(b"123456789").0
        && (0..1000).all(|_| {
            let mut buf = vec![0u8; rng.gen_range(0..256)];
            rng.fill_bytes(&mut buf);
            crc_bitwise(&buf) == crc16_ccitt(&buf).0
        })
}

fn frame_check() -> bool {
    let mut rng = SeededRng::derive(2, "verify-frame");
    for depth in [Depth::D8, Depth::D16, Depth::D24] {
        for _ in 0..20 {
            let (w, h) = (rng.gen_range(2..12), rng.gen_range(1..12));
            let px = (0..w * h).map(|_| rng.gen_range(0..=depth.max_value())).collect();
            let Ok(f) = PixelFrame::new(w, h, depth, px) else { return false };
            let Ok(wire) = encode_frame(&f) else { return false };
            match decode_frame(&wire) {
                Ok(d) if d.crc_ok && d.frame == f => {}
                _ => return false,
            }
            let active = (w * h) as u64 * depth.bits() as u64;
            let pos = rng.gen_range(0..active);
            let mut bad = wire.clone();
            if bad.flip_bit(pos).is_err() || decode_frame(&bad).map_or(true, |d| d.crc_ok) {
                return false;
            }
        }
    }
    true
}

fn voter_check() -> bool {
    let mut ok = true;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                let Ok((v, s)) = tmr_vote(&[a], &[b], &[c]) else { return false };
                let want = if a == b || a == c { Some(a) } else if b == c { Some(b) } else { None };
                ok &= match want {
                    Some(x) => v[0] == x && s[0] != crate::fpga::VoteStatus::Uncorrectable,
                    None => v[0] == a && s[0] == crate::fpga::VoteStatus::Uncorrectable,
                };
            }
        }
    }
    ok
}

fn recovery_check() -> bool {
    let img = Image::random(64, 64, 255, &mut SeededRng::derive(3, "verify-img"));
    [FtMode::Imr, FtMode::Dmr].into_iter().all(|mode| {
        let Ok(mut v) = VpuState::new(VpuConfig::default(), &img, Kernel::Conv2d, mode) else { return false };
        v.dispatch();
        for w in (0..WORKERS).step_by(2) {
            match mode {
                FtMode::Imr => v.workers[w].instr[w] ^= 0xA5,
                _ => v.workers[w].tile.as_mut().expect("dispatched").data[0] ^= 0xA5,
            }
        }
        v.execute().is_ok_and(|r| r.error_rate == 0.0)
    })
}

fn determinism_check() -> bool {
    let spec = CampaignSpec { schedule: ScheduleSpec { duration_us: 200_000, ..Default::default() }, ..Default::default() };
    match (run(&spec), run(&spec)) {
        (Ok(a), Ok(b)) => a.to_json().ok() == b.to_json().ok() && a.mutation_log == b.mutation_log,
        _ => false,
    }
}

pub fn verify() -> Vec<(String, bool)> {
    vec![
        ("crc16 matches bit-serial reference".into(), crc_check()),
        ("frame round trip and single-bit detection".into(), frame_check()),
        ("majority voter truth table".into(), voter_check()),
        ("instruction and data recovery give exact output".into(), recovery_check()),
        ("repeated run is byte-identical".into(), determinism_check()),
    ]
}
