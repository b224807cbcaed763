//! Single runs: one stack (or VPU job) under one seed.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{CampaignSpec, Target};
use super::reliability::fit_lambda;
use super::timeline::{classify_timeline, Class, FunctionalityTimeline};
use crate::error::{Error, Result};
use crate::fpga::{Architecture, BitAddr, FpgaEvent, FpgaNode, IcapStats, Layout};
use crate::inject::{build_campaign, corrupt_vpu, log_digest, mutation_log, Address, InjectionEvent, InjectionKind, MutationRecord};
use crate::sim::{Engine, SeededRng, SimTime};
use crate::vpu::{Image, TimingReport, VpuState, WORKERS};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpgaStats {
    pub injections: usize,
    pub hang_threshold: u32,
    pub repairs: usize,
    pub reloads: usize,
    pub resets: usize,
    pub heartbeats: u64,
    pub icap: IcapStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpuStats {
    pub kernel: String,
    pub mode: String,
    pub kind: InjectionKind,
    pub impaired_requested: usize,
    pub error_rate: f64,
    pub class: Class,
    pub detected: Vec<usize>,
    pub redispatched: usize,
    pub stalled: Vec<usize>,
    pub flagged_pixels: usize,
    pub degraded: bool,
    pub timing: TimingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub target: Target,
    /// Stack id for FPGA runs, mitigation mode for VPU runs.
    pub arch: String,
    pub seed: u64,
    pub timeline: Option<FunctionalityTimeline>,
    /// Failures per second; absent when no correct time was observed.
    pub lambda: Option<f64>,
    pub fpga: Option<FpgaStats>,
    pub vpu: Option<VpuStats>,
    pub mutations: usize,
    pub mutation_digest: String,
    #[serde(skip)]
    pub mutation_log: String,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn digest(&self) -> Result<String> {
        let d = Sha256::digest(self.to_json()?.as_bytes());
        Ok(d.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn correct_pct(&self) -> Option<f64> {
        self.timeline.as_ref().map(|t| t.totals.correct)
    }
}

pub fn run(spec: &CampaignSpec) -> Result<RunReport> {
    match spec.target {
        Target::Fpga => run_fpga(spec, spec.architecture()?, spec.seed),
        Target::Vpu => run_vpu(spec, spec.seed),
    }
}

/// Drives one FPGA stack through the campaign and classifies every window.
pub fn run_fpga(spec: &CampaignSpec, arch: Architecture, seed: u64) -> Result<RunReport> {
    spec.fpga.validate()?;
    let layout = Layout::build(arch, &spec.fpga)?;
    let campaign = build_campaign(&spec.schedule, Some(&layout), &mut SeededRng::derive(seed, "fpga-injections"))?;
    let k = spec.fpga.hang_threshold_for(campaign.len() as u64);
    let mut node = FpgaNode::new(arch, &spec.fpga, k)?;
    let mut engine: Engine<FpgaEvent> = Engine::new(seed);

    let duration = campaign.duration;
    let period = spec.schedule.period_us.max(1);
    let windows = duration.0.div_ceil(period) as u32;
    for ev in &campaign.schedule {
        let Address::ConfigBit { frame, bit } = ev.address else {
            return Err(Error::Config(format!("{} cannot target the FPGA", ev.kind)));
        };
        let p = FpgaEvent::Inject(BitAddr::new(frame, bit));
        engine.schedule(ev.time, p.target(), p)?;
    }
    for w in 0..windows {
        let p = FpgaEvent::Checkpoint(w);
        engine.schedule(SimTime((w as u64 + 1) * period - 1), p.target(), p)?;
    }
    node.start(&mut engine)?;
    engine.run_until(duration, |eng, ev| node.handle(eng, ev))?;

    let icap = node.icap().stats();
    if icap.double_grants > 0 {
        return Err(Error::Invariant(format!("{} ICAP double grants", icap.double_grants)));
    }
    let in_window = campaign.schedule.iter().filter(|e| e.time < duration).count();
    if node.mutations.len() != in_window {
        return Err(Error::Invariant(format!("{} injections scheduled, {} applied", in_window, node.mutations.len())));
    }
    let timeline = classify_timeline(&node.checkpoints, &node.golden_output(), SimTime(period), windows);
    if !timeline.is_partition() {
        return Err(Error::Invariant("timeline does not partition the run".into()));
    }
    let records: Vec<MutationRecord> = node.mutations.iter().map(MutationRecord::from).collect();
    Ok(RunReport {
        target: Target::Fpga,
        arch: arch.id(),
        seed,
        lambda: fit_lambda(&timeline).ok().map(|m| m.lambda),
        timeline: Some(timeline),
        fpga: Some(FpgaStats {
            injections: records.len(),
            hang_threshold: k,
            repairs: node.repairs.len(),
            reloads: node.reloads.len(),
            resets: node.resets.len(),
            heartbeats: node.heartbeats,
            icap,
        }),
        vpu: None,
        mutations: records.len(),
        mutation_digest: log_digest(&records),
        mutation_log: mutation_log(&records),
    })
}

/// One VPU job with `impaired` distinct workers hit once each.
pub fn run_vpu(spec: &CampaignSpec, seed: u64) -> Result<RunReport> {
    let c = &spec.vpu;
    let mut rng = SeededRng::derive(seed, "vpu-campaign");
    let image = match &c.image {
        Some(path) => Image::read_pgm(std::fs::File::open(path)?)?,
        None => Image::random(c.width, c.height, c.maxval, &mut rng.fork("image")),
    };
    let mut vpu = VpuState::new(c.node.clone(), &image, c.kernel, c.mode)?;
    let golden = vpu.golden_digest();

    let mut workers: Vec<usize> = (0..WORKERS).collect();
    workers.shuffle(&mut rng);
    workers.truncate(c.impaired);
    workers.sort_unstable();
    let events: Vec<InjectionEvent> = workers
        .iter()
        .map(|&worker| InjectionEvent { time: SimTime::ZERO, kind: c.kind, address: Address::Worker { worker, salt: rng.gen() } })
        .collect();

    // code and DDR input are hit before the DMA, CMX tiles and control
    // words after it
    let before_dma = |k: InjectionKind| matches!(k, InjectionKind::VpuInstr | InjectionKind::VpuDdrInput);
    let mut records = Vec::with_capacity(events.len());
    for e in events.iter().filter(|e| before_dma(e.kind)) {
        records.push(corrupt_vpu(e, &mut vpu)?);
    }
    vpu.dispatch();
    for e in events.iter().filter(|e| !before_dma(e.kind)) {
        records.push(corrupt_vpu(e, &mut vpu)?);
    }
    if vpu.golden_digest() != golden {
        return Err(Error::Invariant("an injection reached a golden store".into()));
    }
    let r = vpu.execute()?;
    if vpu.golden_digest() != golden {
        return Err(Error::Invariant("golden stores changed during execution".into()));
    }
    let class = if !r.stalled.is_empty() && r.error_rate > 0.0 {
        Class::Down
    } else if r.error_rate > 0.0 {
        Class::Erroneous
    } else {
        Class::Correct
    };
    Ok(RunReport {
        target: Target::Vpu,
        arch: c.mode.label(),
        seed,
        timeline: None,
        lambda: None,
        fpga: None,
        vpu: Some(VpuStats {
            kernel: c.kernel.name().into(),
            mode: c.mode.label(),
            kind: c.kind,
            impaired_requested: c.impaired,
            error_rate: r.error_rate,
            class,
            detected: r.impaired,
            redispatched: r.redispatched.len(),
            stalled: r.stalled,
            flagged_pixels: r.flagged_pixels,
            degraded: r.degraded,
            timing: r.timing,
        }),
        mutations: records.len(),
        mutation_digest: log_digest(&records),
        mutation_log: mutation_log(&records),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inject::ScheduleSpec;
    use crate::vpu::{FtMode, Kernel};

    fn short(arch: &str) -> CampaignSpec {
        CampaignSpec {
            arch: arch.into(),
            schedule: ScheduleSpec { duration_us: 400_000, ..Default::default() },
            ..Default::default()
        }
    }

    #[test]
    fn no_injections_is_all_correct() {
        for arch in Architecture::table_rows() {
            let mut s = short(&arch.id());
            s.schedule.targets.clear();
            // one event past the end keeps the explicit list non-empty
            s.schedule.events = vec![crate::inject::ExplicitEvent {
                time_us: 10_000_000,
                kind: InjectionKind::FpgaConfigBit,
                frame: 0,
                bit: 0,
                worker: 0,
                salt: 0,
                position: 0,
                link: None,
            }];
            let r = run(&s).unwrap();
            assert_eq!(r.timeline.unwrap().totals.correct, 100.0, "{arch}");
            assert_eq!(r.lambda, Some(0.0));
        }
    }

    #[test]
    fn repeated_run_is_identical() {
        let s = short("cms+dpr+tmr+wd");
        let a = run(&s).unwrap();
        let b = run(&s).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.mutation_log, b.mutation_log);
    }

    #[test]
    fn vpu_imr_run_is_clean() {
        let mut s = CampaignSpec { target: Target::Vpu, ..Default::default() };
        s.vpu.mode = FtMode::Imr;
        s.vpu.kernel = Kernel::Binning2d;
        s.vpu.impaired = 6;
        s.vpu.width = 64;
        s.vpu.height = 64;
        let r = run(&s).unwrap();
        let v = r.vpu.unwrap();
        assert_eq!(v.error_rate, 0.0);
        assert_eq!(v.detected.len(), 6);
        assert_eq!(r.mutations, 6);
    }
}
