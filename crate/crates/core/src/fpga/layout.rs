//! Design components, the eight mitigation stacks, and how components map
//! onto configuration frames and essential bits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::config_mem::{BitAddr, FRAME_BITS, FRAME_BYTES};
use crate::error::{Error, Result};
use crate::sim::{SeededRng, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    #[serde(rename = "fir_0")]
    Fir0,
    #[serde(rename = "fir_1")]
    Fir1,
    #[serde(rename = "fir_2")]
    Fir2,
    VoterIn,
    VoterOut,
    CmsCtrl,
    DprCtrl,
    WdUart,
}

impl Component {
    pub const ALL: [Component; 8] = [
        Component::Fir0,
        Component::Fir1,
        Component::Fir2,
        Component::VoterIn,
        Component::VoterOut,
        Component::CmsCtrl,
        Component::DprCtrl,
        Component::WdUart,
    ];

    pub const REPLICAS: [Component; 3] = [Component::Fir0, Component::Fir1, Component::Fir2];

    pub fn name(self) -> &'static str {
        match self {
            Component::Fir0 => "fir_0",
            Component::Fir1 => "fir_1",
            Component::Fir2 => "fir_2",
            Component::VoterIn => "voter_in",
            Component::VoterOut => "voter_out",
            Component::CmsCtrl => "cms_ctrl",
            Component::DprCtrl => "dpr_ctrl",
            Component::WdUart => "wd_uart",
        }
    }

    pub fn replica_index(self) -> Option<usize> {
        Component::REPLICAS.iter().position(|&c| c == self)
    }

    /// Datapath components stall once they accumulate too many flips;
    /// controllers simply stop working as soon as they are hit.
    pub fn is_datapath(self) -> bool {
        matches!(self, Component::Fir0 | Component::Fir1 | Component::Fir2 | Component::VoterIn | Component::VoterOut)
    }

    /// Accelerator instances live in reconfigurable partitions; voters and
    /// controllers are static logic that partial reconfiguration cannot reach.
    pub fn is_reconfigurable(self) -> bool {
        self.replica_index().is_some()
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Component::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown component {s:?}")))
    }
}

/// Which mitigation techniques are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Architecture {
    pub tmr: bool,
    pub dpr: bool,
    pub cms: bool,
    pub wd: bool,
}

impl Architecture {
    pub const NONE: Architecture = Architecture { tmr: false, dpr: false, cms: false, wd: false };

    /// The eight stacks in reporting order, least to most protected.
    pub fn table_rows() -> [Architecture; 8] {
        let a = |tmr, dpr, cms, wd| Architecture { tmr, dpr, cms, wd };
        [
            a(false, false, false, false),
            a(true, false, false, false),
            a(false, true, false, false),
            a(false, false, true, false),
            a(true, true, false, false),
            a(true, false, true, false),
            a(true, true, true, false),
            a(true, true, true, true),
        ]
    }

    pub fn id(&self) -> String {
        let mut parts = Vec::new();
        if self.cms {
            parts.push("cms");
        }
        if self.dpr {
            parts.push("dpr");
        }
        if self.tmr {
            parts.push("tmr");
        }
        if self.wd {
            parts.push("wd");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }

    pub fn label(&self) -> String {
        if *self == Architecture::NONE {
            "No FT (app only)".into()
        } else {
            self.id().to_uppercase().replace('+', " + ")
        }
    }

    pub fn components(&self) -> Vec<Component> {
        let mut v = vec![Component::Fir0];
        if self.tmr {
            v.extend([Component::Fir1, Component::Fir2, Component::VoterIn, Component::VoterOut]);
        }
        if self.cms {
            v.push(Component::CmsCtrl);
        }
        if self.dpr {
            v.push(Component::DprCtrl);
        }
        if self.wd {
            v.push(Component::WdUart);
        }
        v
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let mut a = Architecture::NONE;
        if s == "none" || s == "noft" || s == "no-ft" {
            return Ok(a);
        }
        for part in s.split('+') {
            match part.trim() {
                "tmr" => a.tmr = true,
                "dpr" => a.dpr = true,
                "cms" => a.cms = true,
                "wd" => a.wd = true,
                other => return Err(Error::Config(format!("unknown technique {other:?} in {s:?}"))),
            }
        }
        if a.wd && !(a.cms && a.dpr && a.tmr) {
            return Err(Error::Config("the watchdog stack requires cms+dpr+tmr".into()));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSize {
    pub frames: u32,
    pub essential_bits: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScrubMode {
    Replace,
    EnhancedRepair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScrubberConfig {
    pub mode: ScrubMode,
    pub frame_repair_latency_us: u64,
    pub scan_period_us: u64,
}

impl Default for ScrubberConfig {
    fn default() -> Self {
        Self { mode: ScrubMode::Replace, frame_repair_latency_us: 18_000, scan_period_us: 100 }
    }
}

impl ScrubberConfig {
    pub fn frame_repair_latency(&self) -> SimTime {
        SimTime(self.frame_repair_latency_us)
    }

    pub fn scan_period(&self) -> SimTime {
        SimTime(self.scan_period_us)
    }
}

/// Everything that parameterises an FPGA node apart from the technique set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FpgaConfig {
    pub total_frames: u32,
    pub sizes: BTreeMap<Component, ComponentSize>,
    /// Seed for the golden bitstream and the essential-bit map; a property
    /// of the design, not of the run.
    pub design_seed: u64,
    pub scrubber: ScrubberConfig,
    pub icap_bytes_per_sec: u64,
    /// Full-reset duration; defaults to the whole memory at ICAP throughput.
    pub reset_duration_us: Option<u64>,
    pub watchdog_timeout_us: u64,
    /// Blind refresh period of the application region when DPR runs without TMR.
    pub dpr_refresh_period_us: u64,
    /// Flipped essential bits after which a datapath component stalls.
    /// `None` derives it from `bare_app_erroneous_share` and the campaign length.
    pub hang_threshold: Option<u32>,
    pub bare_app_erroneous_share: f64,
    pub fir_taps: usize,
    pub fir_block: usize,
    /// Without partial reconfiguration the placer packs the whole TMR
    /// datapath into this many shared frames. `None` keeps one region per
    /// component.
    pub tmr_shared_frames: Option<u32>,
}

impl Default for FpgaConfig {
    fn default() -> Self {
        let s = |frames, essential_bits| ComponentSize { frames, essential_bits };
        let sizes = BTreeMap::from([
            (Component::Fir0, s(1, 600)),
            (Component::Fir1, s(1, 600)),
            (Component::Fir2, s(1, 600)),
            (Component::VoterIn, s(1, 10)),
            (Component::VoterOut, s(1, 10)),
            (Component::CmsCtrl, s(1, 4)),
            (Component::DprCtrl, s(1, 4)),
            (Component::WdUart, s(1, 4)),
        ]);
        Self {
            total_frames: 64,
            sizes,
            design_seed: 0x5E_ED,
            scrubber: ScrubberConfig::default(),
            icap_bytes_per_sec: 67_000_000,
            reset_duration_us: None,
            watchdog_timeout_us: 100_000,
            dpr_refresh_period_us: 40_000,
            hang_threshold: None,
            bare_app_erroneous_share: 0.08,
            fir_taps: 8,
            fir_block: 32,
            tmr_shared_frames: Some(1),
        }
    }
}

impl FpgaConfig {
    pub fn size_of(&self, c: Component) -> ComponentSize {
        self.sizes.get(&c).copied().unwrap_or(ComponentSize { frames: 1, essential_bits: 1 })
    }

    /// ICAP transfer time for `bytes`, rounded up to whole microseconds.
    pub fn icap_duration(&self, bytes: u64) -> SimTime {
        SimTime((bytes * 1_000_000).div_ceil(self.icap_bytes_per_sec))
    }

    pub fn reset_duration(&self) -> SimTime {
        match self.reset_duration_us {
            Some(us) => SimTime(us),
            None => self.icap_duration(self.total_frames as u64 * FRAME_BYTES as u64),
        }
    }

    pub fn hang_threshold_for(&self, injections: u64) -> u32 {
        self.hang_threshold
            .unwrap_or_else(|| (self.bare_app_erroneous_share * injections as f64).round() as u32 + 1)
            .max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.icap_bytes_per_sec == 0 {
            return Err(Error::Config("icap throughput must be > 0".into()));
        }
        if self.scrubber.scan_period_us == 0 {
            return Err(Error::Config("scan period must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.bare_app_erroneous_share) {
            return Err(Error::Config("bare_app_erroneous_share must lie in [0, 1)".into()));
        }
        if self.fir_taps == 0 || self.fir_block == 0 {
            return Err(Error::Config("fir taps and block length must be > 0".into()));
        }
        for (c, s) in &self.sizes {
            if s.frames == 0 || s.essential_bits == 0 || s.essential_bits > s.frames * FRAME_BITS {
                return Err(Error::Config(format!("bad size for {c}: {s:?}")));
            }
        }
        if self.tmr_shared_frames == Some(0) {
            return Err(Error::Config("tmr_shared_frames must be > 0".into()));
        }
        Ok(())
    }
}

/// Essential configuration bits per component.
#[derive(Debug, Clone)]
pub struct EssentialBitMap {
    by_component: BTreeMap<Component, Vec<BitAddr>>,
    essential: Vec<u64>,
}

impl EssentialBitMap {
    pub fn bits(&self, c: Component) -> &[BitAddr] {
        self.by_component.get(&c).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        self.by_component.keys().copied()
    }

    pub fn is_essential(&self, addr: BitAddr) -> bool {
        let l = addr.linear() as usize;
        self.essential.get(l / 64).is_some_and(|w| w >> (l % 64) & 1 == 1)
    }

    pub fn total(&self) -> usize {
        self.by_component.values().map(Vec::len).sum()
    }
}

/// Frame ownership and essential bits for one architecture.
#[derive(Debug, Clone)]
pub struct Layout {
    pub arch: Architecture,
    pub total_frames: u32,
    regions: BTreeMap<Component, std::ops::Range<u32>>,
    owners: Vec<Vec<Component>>,
    pub essential: EssentialBitMap,
}

impl Layout {
    pub fn build(arch: Architecture, cfg: &FpgaConfig) -> Result<Self> {
        cfg.validate()?;
        // groups of components sharing one frame span
        let comps = arch.components();
        let mut groups: Vec<(Vec<Component>, u32)> = Vec::new();
        match cfg.tmr_shared_frames {
            Some(n) if arch.tmr && !arch.dpr => {
                let (dp, rest): (Vec<_>, Vec<_>) = comps.iter().partition(|c| c.is_datapath());
                groups.push((dp, n));
                groups.extend(rest.into_iter().map(|c| (vec![c], cfg.size_of(c).frames)));
            }
            _ => groups.extend(comps.iter().map(|&c| (vec![c], cfg.size_of(c).frames))),
        }

        let mut regions = BTreeMap::new();
        let mut owners = vec![Vec::new(); cfg.total_frames as usize];
        let total_bits = cfg.total_frames as usize * FRAME_BITS as usize;
        let mut essential = vec![0u64; total_bits.div_ceil(64)];
        let mut by_component = BTreeMap::new();
        let rng = SeededRng::derive(cfg.design_seed, "essential-bits");
        let mut next = 0u32;
        for (members, frames) in groups {
            let r = next..next + frames;
            if r.end > cfg.total_frames {
                return Err(Error::Config(format!("{} frames needed by {arch}, memory has {}", r.end, cfg.total_frames)));
            }
            next = r.end;
            let span = frames as usize * FRAME_BITS as usize;
            let need: usize = members.iter().map(|c| cfg.size_of(*c).essential_bits as usize).sum();
            if need > span {
                return Err(Error::Config(format!("{need} essential bits do not fit in {frames} frame(s)")));
            }
            let label = members.iter().map(|c| c.name()).collect::<Vec<_>>().join("+");
            let mut grng = rng.fork(&label);
            let picked = sample(&mut grng, span, need).into_vec();
            let mut offset = 0;
            for c in members {
                let n = cfg.size_of(c).essential_bits as usize;
                let mut bits: Vec<BitAddr> = picked[offset..offset + n]
                    .iter()
                    .map(|&i| BitAddr::from_linear(r.start as u64 * FRAME_BITS as u64 + i as u64))
                    .collect();
                offset += n;
                bits.sort();
                for a in &bits {
                    let l = a.linear() as usize;
                    essential[l / 64] |= 1 << (l % 64);
                }
                for f in r.clone() {
                    owners[f as usize].push(c);
                }
                regions.insert(c, r.clone());
                by_component.insert(c, bits);
            }
        }
        Ok(Self { arch, total_frames: cfg.total_frames, regions, owners, essential: EssentialBitMap { by_component, essential } })
    }

    pub fn region(&self, c: Component) -> Option<std::ops::Range<u32>> {
        self.regions.get(&c).cloned()
    }

    pub fn region_bytes(&self, c: Component) -> u64 {
        self.region(c).map_or(0, |r| (r.end - r.start) as u64 * FRAME_BYTES as u64)
    }

    /// Components with essential bits in `frame`.
    pub fn owners(&self, frame: u32) -> &[Component] {
        self.owners.get(frame as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn components(&self) -> impl Iterator<Item = Component> + '_ {
        self.regions.keys().copied()
    }

    pub fn has(&self, c: Component) -> bool {
        self.regions.contains_key(&c)
    }

    /// Component owning an essential bit.
    pub fn component_of(&self, addr: BitAddr) -> Option<Component> {
        if !self.essential.is_essential(addr) {
            return None;
        }
        self.owners(addr.frame).iter().copied().find(|c| self.essential.bits(*c).binary_search(&addr).is_ok())
    }
}
