//! The FPGA node as a set of event handlers: injections, readback scrubbing,
//! partial reconfiguration, TMR checkpoints, the external watchdog and full
//! resets.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config_mem::{BitAddr, ConfigMemory};
use super::fir::{fir_filter, fir_on_instance};
use super::icap::{Acquire, Icap, IcapOwner};
use super::layout::{Architecture, Component, FpgaConfig, Layout, ScrubMode};
use super::scrubber::{RepairReport, Scrubber};
use super::tmr::{run_tmr_pipeline, InstanceHealth, PipelineOutput, TmrHealth};
use crate::corruption::CorruptionTag;
use crate::error::{Error, Result};
use crate::sim::{Engine, Event, EventId, EventKind, SeededRng, SimTime};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FpgaEvent {
    Inject(BitAddr),
    Checkpoint(u32),
    ScanTick,
    RepairDone(u32),
    ReloadDone(Component),
    Refresh,
    WatchdogExpiry,
    ResetDone,
}

impl EventKind for FpgaEvent {
    fn kind(&self) -> &'static str {
        match self {
            FpgaEvent::Inject(_) => "inject",
            FpgaEvent::Checkpoint(_) => "checkpoint",
            FpgaEvent::ScanTick => "scan",
            FpgaEvent::RepairDone(_) => "repair_done",
            FpgaEvent::ReloadDone(_) => "reload_done",
            FpgaEvent::Refresh => "refresh",
            FpgaEvent::WatchdogExpiry => "watchdog_expiry",
            FpgaEvent::ResetDone => "reset_done",
        }
    }
}

impl FpgaEvent {
    pub fn target(&self) -> &'static str {
        match self {
            FpgaEvent::Inject(_) => "injector",
            FpgaEvent::Checkpoint(_) => "fpga",
            FpgaEvent::ScanTick | FpgaEvent::RepairDone(_) => "cms",
            FpgaEvent::ReloadDone(_) | FpgaEvent::Refresh => "dpr",
            FpgaEvent::WatchdogExpiry | FpgaEvent::ResetDone => "wd",
        }
    }

    /// Work that a full reset discards.
    fn is_node_work(&self) -> bool {
        matches!(self, FpgaEvent::ScanTick | FpgaEvent::RepairDone(_) | FpgaEvent::ReloadDone(_) | FpgaEvent::Refresh)
    }
}

/// Public view of one component's health.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpgaComponentState {
    pub component: Component,
    pub healthy: bool,
    pub flipped_essential: usize,
    pub corruption_tag: u64,
    /// Upsets absorbed since the component was last fully clean.
    pub hits: u32,
    pub hung: bool,
}

#[derive(Debug, Clone, Default)]
struct CompState {
    flipped: usize,
    tag: CorruptionTag,
    hits: u32,
    hung: bool,
}

impl CompState {
    fn health(&self) -> InstanceHealth {
        if self.hung {
            InstanceHealth::Hung
        } else if self.flipped > 0 {
            InstanceHealth::Faulty(self.tag)
        } else {
            InstanceHealth::Healthy
        }
    }
}

/// One configuration-bit upset as applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigMutation {
    pub time: SimTime,
    pub addr: BitAddr,
    pub component: Option<Component>,
    pub bit_after: bool,
}

impl ConfigMutation {
    pub fn log_line(&self) -> String {
        format!("{} fpga_config_bit {}", self.time, self.addr)
    }
}

/// What the datapath produced at a checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeOutput {
    InReset,
    NoOutput,
    Samples(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub window: u32,
    pub time: SimTime,
    pub output: NodeOutput,
    pub uncorrectable_votes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairRecord {
    pub frame: u32,
    pub detected_at: SimTime,
    pub granted_at: SimTime,
    pub done_at: SimTime,
    pub report: Option<RepairReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReloadRecord {
    pub component: Component,
    pub requested_at: SimTime,
    pub granted_at: SimTime,
    pub done_at: SimTime,
    pub bytes: u64,
    pub applied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetInterval {
    pub start: SimTime,
    pub end: SimTime,
}

#[derive(Debug, Clone, Default)]
struct CmsState {
    /// Frame detected and waiting for (or holding) the ICAP, with detection and grant times.
    pending: Option<(u32, SimTime, Option<SimTime>)>,
}

#[derive(Debug, Clone, Default)]
struct DprState {
    queue: VecDeque<(Component, SimTime)>,
    active: Option<(Component, SimTime, Option<SimTime>)>,
}

pub struct FpgaNode {
    arch: Architecture,
    cfg: FpgaConfig,
    layout: Layout,
    mem: ConfigMemory,
    comps: BTreeMap<Component, CompState>,
    hang_threshold: u32,
    icap: Icap,
    scrubber: Scrubber,
    cms: CmsState,
    dpr: DprState,
    watchdog: Option<EventId>,
    resetting: Option<SimTime>,
    pub resets: Vec<ResetInterval>,
    input: Vec<i64>,
    coeffs: Vec<i64>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub mutations: Vec<ConfigMutation>,
    pub repairs: Vec<RepairRecord>,
    pub reloads: Vec<ReloadRecord>,
    pub heartbeats: u64,
}

impl FpgaNode {
    /// `hang_threshold` is the number of upsets after which a datapath
    /// component stalls.
    pub fn new(arch: Architecture, cfg: &FpgaConfig, hang_threshold: u32) -> Result<Self> {
        let mut cfg = cfg.clone();
        if arch.wd {
            cfg.scrubber.mode = ScrubMode::EnhancedRepair;
        }
        let layout = Layout::build(arch, &cfg)?;
        let mem = ConfigMemory::new(cfg.total_frames as usize, &mut SeededRng::derive(cfg.design_seed, "bitstream"))?;
        let comps = layout.components().map(|c| (c, CompState::default())).collect();
        let mut irng = SeededRng::derive(cfg.design_seed, "fir-input");
        let input = (0..cfg.fir_block).map(|_| irng.gen_range(-128..128)).collect();
        let mut crng = SeededRng::derive(cfg.design_seed, "fir-coeffs");
        let coeffs = (0..cfg.fir_taps).map(|_| crng.gen_range(1..16)).collect();
        let scrubber = Scrubber::new(cfg.scrubber.clone(), cfg.total_frames);
        Ok(Self {
            arch,
            cfg,
            layout,
            mem,
            comps,
            hang_threshold: hang_threshold.max(1),
            icap: Icap::default(),
            scrubber,
            cms: CmsState::default(),
            dpr: DprState::default(),
            watchdog: None,
            resetting: None,
            resets: Vec::new(),
            input,
            coeffs,
            checkpoints: Vec::new(),
            mutations: Vec::new(),
            repairs: Vec::new(),
            reloads: Vec::new(),
            heartbeats: 0,
        })
    }

    pub fn arch(&self) -> Architecture {
        self.arch
    }

    pub fn config(&self) -> &FpgaConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn memory(&self) -> &ConfigMemory {
        &self.mem
    }

    pub fn icap(&self) -> &Icap {
        &self.icap
    }

    pub fn scrubber(&self) -> &Scrubber {
        &self.scrubber
    }

    pub fn hang_threshold(&self) -> u32 {
        self.hang_threshold
    }

    pub fn test_input(&self) -> &[i64] {
        &self.input
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn golden_output(&self) -> Vec<i64> {
        fir_filter(&self.input, &self.coeffs)
    }

    pub fn is_resetting(&self) -> bool {
        self.resetting.is_some()
    }

    pub fn state(&self, c: Component) -> Option<FpgaComponentState> {
        self.comps.get(&c).map(|s| FpgaComponentState {
            component: c,
            healthy: s.flipped == 0,
            flipped_essential: s.flipped,
            corruption_tag: s.tag.0,
            hits: s.hits,
            hung: s.hung,
        })
    }

    pub fn healthy(&self, c: Component) -> bool {
        self.comps.get(&c).is_some_and(|s| s.flipped == 0)
    }

    pub fn all_healthy(&self) -> bool {
        self.comps.values().all(|s| s.flipped == 0 && !s.hung)
    }

    /// Schedules the periodic machinery. Call once before running.
    pub fn start(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        self.start_services(engine, engine.now())
    }

    fn start_services(&mut self, engine: &mut Engine<FpgaEvent>, at: SimTime) -> Result<()> {
        if self.arch.cms {
            schedule(engine, at, FpgaEvent::ScanTick)?;
        }
        if self.arch.dpr && !self.arch.tmr {
            schedule(engine, at + SimTime(self.cfg.dpr_refresh_period_us), FpgaEvent::Refresh)?;
        }
        if self.arch.wd {
            self.watchdog = Some(schedule(engine, at + SimTime(self.cfg.watchdog_timeout_us), FpgaEvent::WatchdogExpiry)?);
        }
        Ok(())
    }

    /// Output of one accelerator instance, `None` when it is stalled.
    pub fn component_fir(&self, c: Component, input: &[i64]) -> Option<Vec<i64>> {
        let s = self.comps.get(&c)?;
        match s.health() {
            InstanceHealth::Hung => None,
            h => Some(fir_on_instance(input, &self.coeffs, h.fault().map(|t| t.salted(c as u64)))),
        }
    }

    /// XOR-flips one configuration bit and updates the owning component.
    pub fn inject_config_bit(&mut self, time: SimTime, addr: BitAddr) -> Result<ConfigMutation> {
        let bit_after = self.mem.flip(addr)?;
        let component = self.layout.component_of(addr);
        if let Some(c) = component {
            let k = self.hang_threshold;
            let s = self.comps.get_mut(&c).expect("component of layout");
            if self.mem.is_flipped(addr) {
                s.flipped += 1;
            } else {
                s.flipped -= 1;
            }
            s.tag.toggle(addr.linear());
            s.hits += 1;
            if c.is_datapath() && s.hits >= k {
                s.hung = true;
            }
            if s.flipped == 0 {
                s.hits = 0;
                s.hung = false;
            }
        }
        let m = ConfigMutation { time, addr, component, bit_after };
        self.mutations.push(m.clone());
        Ok(m)
    }

    /// Recomputes the components with essential bits in `frames`.
    fn refresh_frames(&mut self, frames: std::ops::Range<u32>) {
        let mut touched: Vec<Component> = frames.flat_map(|f| self.layout.owners(f).to_vec()).collect();
        touched.sort();
        touched.dedup();
        for c in touched {
            let mut flipped = 0;
            let mut tag = CorruptionTag::default();
            for a in self.layout.essential.bits(c) {
                if self.mem.is_flipped(*a) {
                    flipped += 1;
                    tag.toggle(a.linear());
                }
            }
            let s = self.comps.get_mut(&c).expect("owner is a component");
            s.flipped = flipped;
            s.tag = tag;
            if flipped == 0 {
                s.hits = 0;
                s.hung = false;
            }
        }
    }

    /// Restores every frame of a reconfigurable region; returns the bytes written.
    pub fn dpr_reload(&mut self, c: Component) -> u64 {
        let Some(r) = self.layout.region(c) else { return 0 };
        for f in r.clone() {
            self.mem.restore_frame(f as usize);
        }
        self.refresh_frames(r);
        self.layout.region_bytes(c)
    }

    /// Reload time of a region over the ICAP.
    pub fn reload_duration(&self, c: Component) -> SimTime {
        self.cfg.icap_duration(self.layout.region_bytes(c))
    }

    fn restore_all(&mut self) {
        self.mem.restore_all();
        for s in self.comps.values_mut() {
            *s = CompState::default();
        }
    }

    /// Datapath output for the test vector plus replicas asking for repair.
    pub fn evaluate(&self) -> (NodeOutput, usize, Vec<Component>) {
        if !self.arch.tmr {
            return match self.component_fir(Component::Fir0, &self.input) {
                None => (NodeOutput::NoOutput, 0, Vec::new()),
                Some(v) => (NodeOutput::Samples(v), 0, Vec::new()),
            };
        }
        let h = |c| self.comps.get(&c).map(CompState::health).unwrap_or_default();
        let health = TmrHealth {
            voter_in: h(Component::VoterIn),
            replicas: [h(Component::Fir0), h(Component::Fir1), h(Component::Fir2)],
            voter_out: h(Component::VoterOut),
        };
        let o = run_tmr_pipeline(&self.input, &self.coeffs, &health);
        let out = match o.output {
            PipelineOutput::NoOutput => NodeOutput::NoOutput,
            PipelineOutput::Samples(v) => NodeOutput::Samples(v),
        };
        (out, o.uncorrectable, o.repair_requests)
    }

    /// Starts a whole-device reset from the golden image.
    pub fn full_reset(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        if self.resetting.is_some() {
            return Ok(());
        }
        let now = engine.now();
        engine.cancel_where(FpgaEvent::is_node_work);
        if let Some(id) = self.watchdog.take() {
            engine.cancel(id);
        }
        self.icap.reset();
        self.scrubber.reset();
        self.cms = CmsState::default();
        self.dpr = DprState::default();
        self.resetting = Some(now);
        schedule(engine, now + self.cfg.reset_duration(), FpgaEvent::ResetDone)?;
        Ok(())
    }

    pub fn handle(&mut self, engine: &mut Engine<FpgaEvent>, ev: Event<FpgaEvent>) -> Result<()> {
        let now = ev.fire_at;
        match ev.payload {
            FpgaEvent::Inject(addr) => {
                self.inject_config_bit(now, addr)?;
            }
            FpgaEvent::Checkpoint(w) => self.on_checkpoint(engine, w)?,
            FpgaEvent::ScanTick => self.on_scan(engine)?,
            FpgaEvent::RepairDone(frame) => self.on_repair_done(engine, frame)?,
            FpgaEvent::ReloadDone(c) => self.on_reload_done(engine, c)?,
            FpgaEvent::Refresh => {
                self.dpr_request(engine, Component::Fir0)?;
                schedule(engine, now + SimTime(self.cfg.dpr_refresh_period_us), FpgaEvent::Refresh)?;
            }
            FpgaEvent::WatchdogExpiry => {
                self.watchdog = None;
                self.full_reset(engine)?;
            }
            FpgaEvent::ResetDone => {
                let start = self.resetting.take().ok_or_else(|| Error::Invariant("reset completed twice".into()))?;
                self.restore_all();
                self.resets.push(ResetInterval { start, end: now });
                self.start_services(engine, now)?;
            }
        }
        Ok(())
    }

    fn on_checkpoint(&mut self, engine: &mut Engine<FpgaEvent>, window: u32) -> Result<()> {
        let now = engine.now();
        if self.resetting.is_some() {
            self.checkpoints.push(CheckpointRecord { window, time: now, output: NodeOutput::InReset, uncorrectable_votes: 0 });
            return Ok(());
        }
        let (output, uncorrectable, requests) = self.evaluate();
        if self.arch.dpr {
            for c in requests.into_iter().filter(|c| c.is_reconfigurable()) {
                self.dpr_request(engine, c)?;
            }
        }
        let alive = output != NodeOutput::NoOutput;
        self.checkpoints.push(CheckpointRecord { window, time: now, output, uncorrectable_votes: uncorrectable });

        // The scrubber reports through the UART link; silence on any
        // detected-but-unfixable error lets the timer run out.
        if self.arch.wd
            && alive
            && uncorrectable == 0
            && self.healthy(Component::CmsCtrl)
            && self.healthy(Component::WdUart)
            && !self.scrubber.uncorrectable()
        {
            if let Some(id) = self.watchdog.take() {
                engine.cancel(id);
            }
            self.heartbeats += 1;
            self.watchdog = Some(schedule(engine, now + SimTime(self.cfg.watchdog_timeout_us), FpgaEvent::WatchdogExpiry)?);
        }
        Ok(())
    }

    fn on_scan(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        if self.cms.pending.is_some() {
            return Ok(());
        }
        let now = engine.now();
        // a faulty controller idles; the scan clock keeps running
        if !self.healthy(Component::CmsCtrl) {
            schedule(engine, now + self.cfg.scrubber.scan_period(), FpgaEvent::ScanTick)?;
            return Ok(());
        }
        let report = self.scrubber.cms_step(&self.mem);
        if !report.needs_repair {
            schedule(engine, now + self.cfg.scrubber.scan_period(), FpgaEvent::ScanTick)?;
            return Ok(());
        }
        self.cms.pending = Some((report.frame, now, None));
        if self.icap.acquire(IcapOwner::Cms)? == Acquire::Granted {
            self.begin_repair(engine)?;
        }
        Ok(())
    }

    fn begin_repair(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        self.expect_holder(IcapOwner::Cms)?;
        let now = engine.now();
        let (frame, detected, _) = self.cms.pending.ok_or_else(|| Error::Invariant("CMS granted without a frame".into()))?;
        self.cms.pending = Some((frame, detected, Some(now)));
        schedule(engine, now + self.cfg.scrubber.frame_repair_latency(), FpgaEvent::RepairDone(frame))?;
        Ok(())
    }

    fn on_repair_done(&mut self, engine: &mut Engine<FpgaEvent>, frame: u32) -> Result<()> {
        self.expect_holder(IcapOwner::Cms)?;
        let now = engine.now();
        let (pending, detected_at, granted) =
            self.cms.pending.take().ok_or_else(|| Error::Invariant("repair finished with nothing pending".into()))?;
        if pending != frame {
            return Err(Error::Invariant(format!("repair of frame {frame} but {pending} was pending")));
        }
        let report = if self.healthy(Component::CmsCtrl) {
            let r = self.scrubber.complete_repair(&mut self.mem, frame);
            self.refresh_frames(frame..frame + 1);
            Some(r)
        } else {
            None
        };
        self.repairs.push(RepairRecord { frame, detected_at, granted_at: granted.unwrap_or(detected_at), done_at: now, report });
        self.release(engine, IcapOwner::Cms)?;
        schedule(engine, now + self.cfg.scrubber.scan_period(), FpgaEvent::ScanTick)?;
        Ok(())
    }

    /// Queues a reload of a reconfigurable region.
    pub fn dpr_request(&mut self, engine: &mut Engine<FpgaEvent>, c: Component) -> Result<()> {
        if !self.arch.dpr || !self.healthy(Component::DprCtrl) || !self.layout.has(c) {
            return Ok(());
        }
        if self.dpr.active.is_some_and(|(a, _, _)| a == c) || self.dpr.queue.iter().any(|(q, _)| *q == c) {
            return Ok(());
        }
        self.dpr.queue.push_back((c, engine.now()));
        self.next_reload(engine)
    }

    fn next_reload(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        if self.dpr.active.is_some() {
            return Ok(());
        }
        let Some((c, requested)) = self.dpr.queue.pop_front() else { return Ok(()) };
        self.dpr.active = Some((c, requested, None));
        if self.icap.acquire(IcapOwner::Dpr)? == Acquire::Granted {
            self.begin_reload(engine)?;
        }
        Ok(())
    }

    fn begin_reload(&mut self, engine: &mut Engine<FpgaEvent>) -> Result<()> {
        self.expect_holder(IcapOwner::Dpr)?;
        let now = engine.now();
        let (c, requested, _) = self.dpr.active.ok_or_else(|| Error::Invariant("DPR granted without a region".into()))?;
        self.dpr.active = Some((c, requested, Some(now)));
        schedule(engine, now + self.reload_duration(c), FpgaEvent::ReloadDone(c))?;
        Ok(())
    }

    fn on_reload_done(&mut self, engine: &mut Engine<FpgaEvent>, c: Component) -> Result<()> {
        self.expect_holder(IcapOwner::Dpr)?;
        let now = engine.now();
        let (active, requested_at, granted) =
            self.dpr.active.take().ok_or_else(|| Error::Invariant("reload finished with nothing active".into()))?;
        if active != c {
            return Err(Error::Invariant(format!("reload of {c} but {active} was active")));
        }
        let applied = self.healthy(Component::DprCtrl);
        let bytes = if applied { self.dpr_reload(c) } else { 0 };
        self.reloads.push(ReloadRecord { component: c, requested_at, granted_at: granted.unwrap_or(requested_at), done_at: now, bytes, applied });
        self.release(engine, IcapOwner::Dpr)?;
        if applied {
            self.next_reload(engine)?;
        } else {
            self.dpr.queue.clear();
        }
        Ok(())
    }

    fn release(&mut self, engine: &mut Engine<FpgaEvent>, owner: IcapOwner) -> Result<()> {
        match self.icap.release(owner)? {
            Some(IcapOwner::Cms) => self.begin_repair(engine),
            Some(IcapOwner::Dpr) => self.begin_reload(engine),
            None => Ok(()),
        }
    }

    fn expect_holder(&self, owner: IcapOwner) -> Result<()> {
        if self.icap.holder() != Some(owner) {
            return Err(Error::Invariant(format!("{owner:?} working without the ICAP (holder {:?})", self.icap.holder())));
        }
        Ok(())
    }

    /// Frames the configured region list covers, for diagnostics.
    pub fn region_of(&self, c: Component) -> Option<std::ops::Range<u32>> {
        self.layout.region(c)
    }

    pub fn flip_is_essential(&self, addr: BitAddr) -> bool {
        self.layout.essential.is_essential(addr)
    }
}

fn schedule(engine: &mut Engine<FpgaEvent>, at: SimTime, ev: FpgaEvent) -> Result<EventId> {
    let target = ev.target();
    engine.schedule(at, target, ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(arch: &str) -> (FpgaNode, Engine<FpgaEvent>) {
        let n = FpgaNode::new(arch.parse().unwrap(), &FpgaConfig::default(), 81).unwrap();
        (n, Engine::new(1))
    }

    fn run(n: &mut FpgaNode, e: &mut Engine<FpgaEvent>, until: SimTime) {
        e.run_until(until, |eng, ev| n.handle(eng, ev)).unwrap();
    }

    #[test]
    fn flip_twice_restores_health() {
        let (mut n, _) = node("tmr");
        let a = n.layout().essential.bits(Component::Fir1)[3];
        n.inject_config_bit(SimTime::ZERO, a).unwrap();
        assert!(!n.healthy(Component::Fir1));
        n.inject_config_bit(SimTime::ZERO, a).unwrap();
        assert!(n.healthy(Component::Fir1));
        assert!(n.memory().frame_matches_golden(a.frame as usize));
    }

    #[test]
    fn non_essential_flip_changes_nothing() {
        let (mut n, _) = node("none");
        let a = (0..3232).map(|b| BitAddr::new(0, b)).find(|a| !n.flip_is_essential(*a)).unwrap();
        let m = n.inject_config_bit(SimTime::ZERO, a).unwrap();
        assert_eq!(m.component, None);
        assert!(n.all_healthy());
    }

    #[test]
    fn healthy_and_faulty_fir_differ() {
        let (mut n, _) = node("none");
        let good = n.component_fir(Component::Fir0, n.test_input()).unwrap();
        assert_eq!(good, n.golden_output());
        let a = n.layout().essential.bits(Component::Fir0)[0];
        n.inject_config_bit(SimTime::ZERO, a).unwrap();
        let bad = n.component_fir(Component::Fir0, n.test_input()).unwrap();
        assert_ne!(good, bad);
    }

    #[test]
    fn scrubber_repairs_18ms_after_detection() {
        let (mut n, mut e) = node("cms");
        n.start(&mut e).unwrap();
        let a = n.layout().essential.bits(Component::Fir0)[10];
        e.schedule(SimTime::from_ms(1), "injector", FpgaEvent::Inject(a)).unwrap();
        run(&mut n, &mut e, SimTime::from_ms(40));
        assert_eq!(n.repairs.len(), 1);
        let r = &n.repairs[0];
        assert_eq!(r.done_at - r.detected_at, SimTime::from_ms(18));
        assert!(n.all_healthy());
    }

    #[test]
    fn faulty_scrubber_stops_repairing() {
        let (mut n, mut e) = node("cms");
        n.start(&mut e).unwrap();
        let ctrl = n.layout().essential.bits(Component::CmsCtrl)[0];
        let app = n.layout().essential.bits(Component::Fir0)[0];
        e.schedule(SimTime::from_ms(1), "injector", FpgaEvent::Inject(ctrl)).unwrap();
        e.schedule(SimTime::from_ms(2), "injector", FpgaEvent::Inject(app)).unwrap();
        run(&mut n, &mut e, SimTime::from_ms(200));
        assert!(n.repairs.iter().all(|r| r.report.is_none()));
        assert!(!n.healthy(Component::Fir0));
    }

    #[test]
    fn tmr_requests_drive_partial_reload() {
        let (mut n, mut e) = node("dpr+tmr");
        n.start(&mut e).unwrap();
        let a = n.layout().essential.bits(Component::Fir2)[0];
        e.schedule(SimTime::from_ms(1), "injector", FpgaEvent::Inject(a)).unwrap();
        e.schedule(SimTime::from_ms(4), "fpga", FpgaEvent::Checkpoint(0)).unwrap();
        run(&mut n, &mut e, SimTime::from_ms(5));
        assert_eq!(n.checkpoints[0].output, NodeOutput::Samples(n.golden_output()));
        assert_eq!(n.reloads.len(), 1);
        assert_eq!(n.reloads[0].done_at - n.reloads[0].granted_at, n.config().icap_duration(404));
        assert!(n.all_healthy());
    }

    #[test]
    fn dpr_waits_for_scrub_repair() {
        let (mut n, mut e) = node("cms+dpr+tmr");
        let a = n.layout().essential.bits(Component::Fir0)[0];
        let b = n.layout().essential.bits(Component::Fir1)[0];
        e.schedule(SimTime::ZERO, "injector", FpgaEvent::Inject(a)).unwrap();
        e.schedule(SimTime::from_ms(1), "injector", FpgaEvent::Inject(b)).unwrap();
        n.start(&mut e).unwrap();
        e.schedule(SimTime::from_ms(2), "fpga", FpgaEvent::Checkpoint(0)).unwrap();
        run(&mut n, &mut e, SimTime::from_ms(30));
        // scrubber grabbed the port first; the reload of fir_1 waited for it
        let rep = &n.repairs[0];
        let rel = n.reloads.iter().find(|r| r.component == Component::Fir1).unwrap();
        assert!(rel.granted_at >= rep.done_at);
        assert_eq!(n.icap().stats().double_grants, 0);
    }

    #[test]
    fn watchdog_resets_silent_node() {
        let (mut n, mut e) = node("cms+dpr+tmr+wd");
        n.start(&mut e).unwrap();
        let ctrl = n.layout().essential.bits(Component::CmsCtrl)[0];
        e.schedule(SimTime::from_ms(1), "injector", FpgaEvent::Inject(ctrl)).unwrap();
        for w in 0..60u32 {
            e.schedule(SimTime::from_us(w as u64 * 4000 + 3999), "fpga", FpgaEvent::Checkpoint(w)).unwrap();
        }
        run(&mut n, &mut e, SimTime::from_ms(240));
        assert_eq!(n.resets.len(), 1);
        assert!(n.healthy(Component::CmsCtrl));
        assert_eq!(n.resets[0].end - n.resets[0].start, n.config().reset_duration());
        assert!(n.checkpoints.iter().any(|c| c.output == NodeOutput::InReset) || n.config().reset_duration() < SimTime::from_ms(4));
    }

    #[test]
    fn hang_after_threshold() {
        let n0 = FpgaNode::new(Architecture::NONE, &FpgaConfig::default(), 3).unwrap();
        let mut n = n0;
        let bits = n.layout().essential.bits(Component::Fir0).to_vec();
        for a in &bits[..2] {
            n.inject_config_bit(SimTime::ZERO, *a).unwrap();
        }
        assert!(!(n.evaluate().0 == NodeOutput::NoOutput));
        n.inject_config_bit(SimTime::ZERO, bits[2]).unwrap();
        assert_eq!(n.evaluate().0, NodeOutput::NoOutput);
    }
}
