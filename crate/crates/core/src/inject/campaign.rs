//! Campaign schedules: when and where each upset lands.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fpga::{BitAddr, Component, Layout};
use crate::link::LinkId;
use crate::sim::{SeededRng, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    FpgaConfigBit,
    VpuDdrInput,
    VpuWorkerLocal,
    VpuSharedVar,
    VpuInstr,
    LinkBit,
}

impl InjectionKind {
    pub fn name(self) -> &'static str {
        match self {
            InjectionKind::FpgaConfigBit => "fpga_config_bit",
            InjectionKind::VpuDdrInput => "vpu_ddr_input",
            InjectionKind::VpuWorkerLocal => "vpu_worker_local",
            InjectionKind::VpuSharedVar => "vpu_shared_var",
            InjectionKind::VpuInstr => "vpu_instr",
            InjectionKind::LinkBit => "link_bit",
        }
    }

    pub fn is_vpu(self) -> bool {
        matches!(
            self,
            InjectionKind::VpuDdrInput | InjectionKind::VpuWorkerLocal | InjectionKind::VpuSharedVar | InjectionKind::VpuInstr
        )
    }
}

impl std::fmt::Display for InjectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Resolved target coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Address {
    ConfigBit { frame: u32, bit: u32 },
    /// Byte positions inside the worker's region are drawn from `salt` when
    /// the region size is known.
    Worker { worker: usize, salt: u64 },
    LinkBit { link: LinkId, position: u64 },
}

impl std::fmt::Display for Address {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Address::ConfigBit { frame, bit } => write!(f, "f{frame}:b{bit}"),
            Address::Worker { worker, salt } => write!(f, "w{worker}:{salt:016x}"),
            Address::LinkBit { link, position } => write!(f, "{}:{position}", link.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub time: SimTime,
    pub kind: InjectionKind,
    pub address: Address,
}

/// One weighted class of targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: InjectionKind,
    #[serde(default = "one")]
    pub weight: f64,
    /// FPGA components to aim at; empty means every component of the stack.
    #[serde(default)]
    pub components: Vec<Component>,
    /// VPU workers to aim at; empty means all of them.
    #[serde(default)]
    pub workers: Vec<usize>,
    #[serde(default)]
    pub link: Option<LinkId>,
}

fn one() -> f64 {
    1.0
}

/// Hand-written event for regression scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitEvent {
    pub time_us: u64,
    pub kind: InjectionKind,
    #[serde(default)]
    pub frame: u32,
    #[serde(default)]
    pub bit: u32,
    #[serde(default)]
    pub worker: usize,
    #[serde(default)]
    pub salt: u64,
    #[serde(default)]
    pub position: u64,
    #[serde(default)]
    pub link: Option<LinkId>,
}

impl ExplicitEvent {
    fn resolve(&self) -> InjectionEvent {
        let address = match self.kind {
            InjectionKind::FpgaConfigBit => Address::ConfigBit { frame: self.frame, bit: self.bit },
            InjectionKind::LinkBit => Address::LinkBit { link: self.link.unwrap_or(LinkId::Cif), position: self.position },
            _ => Address::Worker { worker: self.worker, salt: self.salt },
        };
        InjectionEvent { time: SimTime(self.time_us), kind: self.kind, address }
    }
}

/// Schedule shape: either periodic sampling or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleSpec {
    pub duration_us: u64,
    pub period_us: u64,
    pub targets: Vec<TargetSpec>,
    pub events: Vec<ExplicitEvent>,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            duration_us: 4_000_000,
            period_us: 4_000,
            targets: vec![TargetSpec {
                kind: InjectionKind::FpgaConfigBit,
                weight: 1.0,
                components: Vec::new(),
                workers: Vec::new(),
                link: None,
            }],
            events: Vec::new(),
        }
    }
}

impl ScheduleSpec {
    pub fn periodic_count(&self) -> u64 {
        if self.period_us == 0 {
            0
        } else {
            self.duration_us.div_ceil(self.period_us)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionCampaign {
    pub seed: u64,
    pub duration: SimTime,
    pub schedule: Vec<InjectionEvent>,
    pub targets: Vec<TargetSpec>,
}

impl InjectionCampaign {
    pub fn len(&self) -> usize {
        self.schedule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schedule.is_empty()
    }
}

/// Order in which component bit sets are concatenated before sampling.
/// Every injection draws one uniform position over the concatenation, so
/// under a fixed seed a given controller is hit at nearly the same
/// injection index whatever else the stack contains.
const SAMPLING_ORDER: [Component; 8] = [
    Component::CmsCtrl,
    Component::DprCtrl,
    Component::WdUart,
    Component::VoterIn,
    Component::VoterOut,
    Component::Fir0,
    Component::Fir1,
    Component::Fir2,
];

/// Worker count used when a class names no workers.
pub const VPU_WORKERS: usize = 12;

/// Samples the schedule. FPGA addresses come uniformly from the union of
/// the selected components' essential bits in `layout`.
pub fn build_campaign(spec: &ScheduleSpec, layout: Option<&Layout>, rng: &mut SeededRng) -> Result<InjectionCampaign> {
    let seed = rng.seed();
    if !spec.events.is_empty() {
        let mut schedule: Vec<InjectionEvent> = spec.events.iter().map(ExplicitEvent::resolve).collect();
        schedule.sort_by_key(|e| e.time);
        return Ok(InjectionCampaign { seed, duration: SimTime(spec.duration_us), schedule, targets: spec.targets.clone() });
    }
    if spec.period_us == 0 {
        return Err(Error::Config("injection period must be > 0".into()));
    }
    if spec.targets.is_empty() {
        return Err(Error::Config("campaign has no target classes".into()));
    }

    // resolve the candidate pool of each class up front
    let mut pools: Vec<Vec<BitAddr>> = Vec::with_capacity(spec.targets.len());
    for t in &spec.targets {
        if t.weight < 0.0 || !t.weight.is_finite() {
            return Err(Error::Config(format!("bad weight {} for {}", t.weight, t.kind)));
        }
        let mut pool = Vec::new();
        match t.kind {
            InjectionKind::FpgaConfigBit => {
                let layout = layout.ok_or_else(|| Error::Config("FPGA targets need an architecture".into()))?;
                let comps: Vec<Component> =
                    if t.components.is_empty() { layout.components().collect() } else { t.components.clone() };
                if let Some(c) = comps.iter().find(|c| !layout.has(**c)) {
                    return Err(Error::Config(format!("component {c} is not part of {}", layout.arch)));
                }
                for c in SAMPLING_ORDER.iter().filter(|c| comps.contains(c)) {
                    pool.extend_from_slice(layout.essential.bits(*c));
                }
                if pool.is_empty() {
                    return Err(Error::Config("empty FPGA target set".into()));
                }
            }
            k if k.is_vpu()
                && t.workers.iter().any(|&w| w >= VPU_WORKERS) => {
                    return Err(Error::Config(format!("worker index out of range in {:?}", t.workers)));
                }
            _ => {}
        }
        pools.push(pool);
    }
    let weights = WeightedIndex::new(spec.targets.iter().map(|t| t.weight))
        .map_err(|e| Error::Config(format!("target weights: {e}")))?;

    let n = spec.periodic_count();
    let mut schedule = Vec::with_capacity(n as usize);
    for i in 0..n {
        let time = SimTime(i * spec.period_us);
        let ci = if spec.targets.len() == 1 { 0 } else { weights.sample(rng) };
        let t = &spec.targets[ci];
        let address = match t.kind {
            InjectionKind::FpgaConfigBit => {
                let pool = &pools[ci];
                let u: f64 = rng.gen();
                let a = pool[((u * pool.len() as f64) as usize).min(pool.len() - 1)];
                Address::ConfigBit { frame: a.frame, bit: a.bit }
            }
            InjectionKind::LinkBit => Address::LinkBit { link: t.link.unwrap_or(LinkId::Cif), position: rng.gen() },
            _ => {
                let worker = if t.workers.is_empty() { rng.gen_range(0..VPU_WORKERS) } else { t.workers[rng.gen_range(0..t.workers.len())] };
                Address::Worker { worker, salt: rng.gen() }
            }
        };
        schedule.push(InjectionEvent { time, kind: t.kind, address });
    }
    Ok(InjectionCampaign { seed, duration: SimTime(spec.duration_us), schedule, targets: spec.targets.clone() })
}
