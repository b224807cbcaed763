//! Supervisor plus twelve workers, with the instruction-recovery,
//! data-recovery and N-modular mitigation schemes.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::image::{Image, Plane};
use super::kernels::{partition_workload, Kernel, Tile};
use crate::corruption::CorruptionTag;
use crate::error::{Error, Result};
use crate::link::{crc16_ccitt, Crc16};
use crate::sim::SeededRng;

pub const WORKERS: usize = 12;
pub const CMX_BYTES: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "n")]
pub enum FtMode {
    None,
    Imr,
    Dmr,
    Nmr(usize),
}

impl FtMode {
    pub fn label(self) -> String {
        match self {
            FtMode::None => "no-ft".into(),
            FtMode::Imr => "imr".into(),
            FtMode::Dmr => "dmr".into(),
            FtMode::Nmr(n) => format!("nmr{n}"),
        }
    }
}

impl std::str::FromStr for FtMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "no-ft" => Ok(FtMode::None),
            "imr" => Ok(FtMode::Imr),
            "dmr" => Ok(FtMode::Dmr),
            "nmr1" => Ok(FtMode::Nmr(1)),
            "nmr3" => Ok(FtMode::Nmr(3)),
            "nmr5" => Ok(FtMode::Nmr(5)),
            _ => Err(Error::Config(format!("unknown VPU mode {s:?}"))),
        }
    }
}

/// Synthetic task durations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VpuTiming {
    pub conv_us_per_px: f64,
    pub bin_us_per_px: f64,
    pub dma_us: u64,
    pub crc_check_us: u64,
    pub reschedule_us: u64,
    pub vote_us_per_px: f64,
}

impl Default for VpuTiming {
    fn default() -> Self {
        Self { conv_us_per_px: 0.5, bin_us_per_px: 0.1, dma_us: 100, crc_check_us: 8_000, reschedule_us: 40_000, vote_us_per_px: 0.004 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VpuConfig {
    pub instr_bytes: usize,
    pub code_seed: u64,
    pub timing: VpuTiming,
}

impl Default for VpuConfig {
    fn default() -> Self {
        Self { instr_bytes: 4096, code_seed: 0x5AFE, timing: VpuTiming::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NmrConfig {
    pub n: usize,
    pub groups: Vec<Vec<usize>>,
    pub unused: Vec<usize>,
}

impl NmrConfig {
    pub fn new(n: usize) -> Result<Self> {
        if ![1, 3, 5].contains(&n) {
            return Err(Error::Config(format!("redundancy {n} not in {{1, 3, 5}}")));
        }
        let g = WORKERS / n;
        let groups = (0..g).map(|i| (i * n..(i + 1) * n).collect()).collect();
        let unused = (g * n..WORKERS).collect();
        Ok(Self { n, groups, unused })
    }

    pub fn group_of(&self, worker: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&worker))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkerStatus {
    Functional,
    Impaired,
    Recovering,
}

/// Control word the supervisor hands each worker: how many rows to process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SharedWord {
    pub row_count: u32,
    pub crc: Crc16,
}

impl SharedWord {
    fn new(rows: usize) -> Self {
        let row_count = rows as u32;
        Self { row_count, crc: crc16_ccitt(&row_count.to_be_bytes()) }
    }

    pub fn crc_ok(&self) -> bool {
        crc16_ccitt(&self.row_count.to_be_bytes()) == self.crc
    }
}

#[derive(Debug, Clone)]
pub struct WorkerCore {
    pub id: usize,
    pub instr: Vec<u8>,
    pub status: WorkerStatus,
    /// CMX-resident tile after DMA.
    pub tile: Option<Tile>,
    pub shared: Option<SharedWord>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub dma_us: u64,
    pub crc_check_us: u64,
    pub reschedule_us: u64,
    pub compute_us: f64,
    pub voting_us: f64,
    pub total_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Redispatch {
    pub tile: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpuReport {
    pub mode: FtMode,
    pub kernel: Kernel,
    pub error_rate: f64,
    pub impaired: Vec<usize>,
    pub redispatched: Vec<Redispatch>,
    pub stalled: Vec<usize>,
    /// Pixels where the vote found no majority.
    pub flagged_pixels: usize,
    /// Every worker was impaired; all code was restored before executing.
    pub degraded: bool,
    /// The retained input copy no longer matches its digest.
    pub unrecoverable_input: bool,
    pub timing: TimingReport,
    #[serde(skip)]
    pub output: Option<Plane>,
}

impl VpuReport {
    pub fn output(&self) -> &Plane {
        self.output.as_ref().expect("report built with output")
    }
}

/// One processing job on the VPU.
#[derive(Debug, Clone)]
pub struct VpuState {
    cfg: VpuConfig,
    kernel: Kernel,
    mode: FtMode,
    width: usize,
    height: usize,
    bpp: usize,
    /// Working input buffer in DDR.
    ddr_input: Vec<u8>,
    /// Retained CRC-verified copy used for restoration.
    golden_input: Vec<u8>,
    golden_input_digest: [u8; 32],
    golden_instr: Vec<u8>,
    baseline_crc: Vec<Crc16>,
    pub workers: Vec<WorkerCore>,
    /// Tiles in dispatch order with their worker(s).
    plan: Vec<Tile>,
    assignment: Vec<Vec<usize>>,
    nmr: Option<NmrConfig>,
    dispatched: bool,
    golden_output: Plane,
}

impl VpuState {
    pub fn new(cfg: VpuConfig, image: &Image, kernel: Kernel, mode: FtMode) -> Result<Self> {
        let nmr = match mode {
            FtMode::Nmr(n) => Some(NmrConfig::new(n)?),
            _ => None,
        };
        let (plan, assignment) = match &nmr {
            Some(c) => (partition_workload(image, c.groups.len(), kernel)?, c.groups.clone()),
            None => (partition_workload(image, WORKERS, kernel)?, (0..WORKERS).map(|w| vec![w]).collect()),
        };
        let cmx: usize = plan.iter().zip(&assignment).map(|(t, ws)| t.data.len() * ws.len()).sum();
        if cmx > CMX_BYTES {
            return Err(Error::Workload(format!("tiles need {cmx} B of CMX, only {CMX_BYTES} B available")));
        }
        let mut code = vec![0u8; cfg.instr_bytes];
        SeededRng::derive(cfg.code_seed, &format!("worker-code/{}", kernel.name())).fill_bytes(&mut code);
        let baseline = crc16_ccitt(&code);
        let workers = (0..WORKERS)
            .map(|id| WorkerCore { id, instr: code.clone(), status: WorkerStatus::Functional, tile: None, shared: None })
            .collect();
        let ddr_input = image.rows_to_bytes(0..image.height);
        Ok(Self {
            golden_output: kernel.golden(image)?,
            cfg,
            kernel,
            mode,
            width: image.width,
            height: image.height,
            bpp: image.bytes_per_pixel(),
            golden_input_digest: Sha256::digest(&ddr_input).into(),
            golden_input: ddr_input.clone(),
            ddr_input,
            golden_instr: code,
            baseline_crc: vec![baseline; WORKERS],
            workers,
            plan,
            assignment,
            nmr,
            dispatched: false,
        })
    }

    pub fn mode(&self) -> FtMode {
        self.mode
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn golden_output(&self) -> &Plane {
        &self.golden_output
    }

    pub fn nmr(&self) -> Option<&NmrConfig> {
        self.nmr.as_ref()
    }

    pub fn is_dispatched(&self) -> bool {
        self.dispatched
    }

    /// Digest over every golden store; injections must never change it.
    pub fn golden_digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(&self.golden_input);
        h.update(&self.golden_instr);
        h.update(self.golden_input_digest);
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Byte range in the DDR input buffer holding the rows `worker` owns.
    pub fn ddr_region(&self, worker: usize) -> Option<std::ops::Range<usize>> {
        let ti = self.assignment.iter().position(|ws| ws.contains(&worker))?;
        let t = &self.plan[ti];
        let row_bytes = self.width * self.bpp;
        Some(t.row_start * row_bytes..(t.row_start + t.rows) * row_bytes)
    }

    pub fn ddr_input_mut(&mut self) -> &mut [u8] {
        &mut self.ddr_input
    }

    /// DMA from DDR into each worker's CMX and write the control words.
    pub fn dispatch(&mut self) {
        for (ti, ws) in self.assignment.iter().enumerate() {
            let t = self.slice_tile(&self.plan[ti], &self.ddr_input);
            for &w in ws {
                self.workers[w].tile = Some(t.clone());
                self.workers[w].shared = Some(SharedWord::new(t.rows));
            }
        }
        self.dispatched = true;
    }

    /// Re-cuts a planned tile from `src`; the CRC stays the one computed
    /// from the retained copy.
    fn slice_tile(&self, plan: &Tile, src: &[u8]) -> Tile {
        let row_bytes = self.width * self.bpp;
        let held = plan.held_rows();
        Tile { data: src[held.start * row_bytes..held.end * row_bytes].to_vec(), ..plan.clone() }
    }

    fn instr_ok(&self, w: usize) -> bool {
        crc16_ccitt(&self.workers[w].instr) == self.baseline_crc[w]
    }

    fn rate(&self) -> f64 {
        match self.kernel {
            Kernel::Conv2d => self.cfg.timing.conv_us_per_px,
            Kernel::Binning2d => self.cfg.timing.bin_us_per_px,
        }
    }

    /// Runs the kernel as worker `w` would on `tile`. `None` means the
    /// worker stalled.
    pub fn worker_execute(&self, w: usize, tile: &Tile, shared: SharedWord) -> Result<Option<Vec<f64>>> {
        let rows = tile.rows as u32;
        if shared.row_count > rows {
            return Ok(None);
        }
        let mut out = self.kernel.run(tile)?;
        if shared.row_count < rows {
            // stops early; the rest of its output buffer stays zero
            let (ow, oh) = self.kernel.output_dims(self.width, tile.rows);
            let done = self.kernel.output_dims(self.width, shared.row_count as usize).1.min(oh);
            out[done * ow..].fill(0.0);
        }
        let core = &self.workers[w];
        if core.instr != self.golden_instr {
            CorruptionTag::from_diff(&core.instr, &self.golden_instr).salted(w as u64).apply_f64(&mut out);
        }
        Ok(Some(out))
    }

    fn place(&self, out: &mut Plane, tile: &Tile, data: &[f64]) {
        let rows = tile.output_rows(self.kernel);
        out.rows_mut(rows).copy_from_slice(data);
    }

    fn new_plane(&self) -> Plane {
        let (w, h) = self.kernel.output_dims(self.width, self.height);
        Plane::zeros(w, h)
    }

    fn tile_px(t: &Tile) -> f64 {
        (t.rows * t.width) as f64
    }

    fn ensure_dispatched(&mut self) {
        if !self.dispatched {
            self.dispatch();
        }
    }

    /// Executes the job under the configured mode.
    pub fn execute(&mut self) -> Result<VpuReport> {
        self.ensure_dispatched();
        match self.mode {
            FtMode::None | FtMode::Nmr(1) => self.plain_cycle(),
            FtMode::Imr => self.imr_cycle(),
            FtMode::Dmr => self.dmr_cycle(),
            FtMode::Nmr(_) => self.nmr_execute(),
        }
    }

    fn report(&self, output: Plane, timing: TimingReport) -> Result<VpuReport> {
        let error_rate = super::image::error_rate(&output, &self.golden_output)?;
        let unrecoverable_input = <[u8; 32]>::from(Sha256::digest(&self.golden_input)) != self.golden_input_digest;
        Ok(VpuReport {
            mode: self.mode,
            kernel: self.kernel,
            error_rate,
            impaired: Vec::new(),
            redispatched: Vec::new(),
            stalled: Vec::new(),
            flagged_pixels: 0,
            degraded: false,
            unrecoverable_input,
            timing,
            output: Some(output),
        })
    }

    fn finish_timing(mut t: TimingReport) -> TimingReport {
        t.total_us = t.dma_us as f64 + t.crc_check_us as f64 + t.reschedule_us as f64 + t.compute_us + t.voting_us;
        t
    }

    /// Twelve-way parallel run with no checks.
    fn plain_cycle(&mut self) -> Result<VpuReport> {
        let mut out = self.new_plane();
        let mut stalled = Vec::new();
        let mut compute: f64 = 0.0;
        for w in 0..WORKERS {
            let (Some(tile), Some(sw)) = (self.workers[w].tile.clone(), self.workers[w].shared) else { continue };
            compute = compute.max(Self::tile_px(&tile) * self.rate());
            match self.worker_execute(w, &tile, sw)? {
                Some(d) => self.place(&mut out, &tile, &d),
                None => stalled.push(w),
            }
        }
        let timing = Self::finish_timing(TimingReport { dma_us: self.cfg.timing.dma_us, compute_us: compute, ..Default::default() });
        let mut r = self.report(out, timing)?;
        r.stalled = stalled;
        Ok(r)
    }

    /// Instruction-memory recovery: CRC the code of every worker, move the
    /// work of impaired ones to functional ones, then restore their code.
    pub fn imr_cycle(&mut self) -> Result<VpuReport> {
        self.ensure_dispatched();
        let impaired: Vec<usize> = (0..WORKERS).filter(|&w| !self.instr_ok(w)).collect();
        for &w in &impaired {
            self.workers[w].status = WorkerStatus::Impaired;
        }
        let degraded = impaired.len() == WORKERS;
        if degraded {
            for w in 0..WORKERS {
                self.restore_instr(w);
            }
        }
        let functional: Vec<usize> = (0..WORKERS).filter(|&w| self.workers[w].status == WorkerStatus::Functional).collect();
        let mut jobs: Vec<Vec<(usize, Tile, SharedWord)>> = vec![Vec::new(); WORKERS];
        let mut redispatched = Vec::new();
        let mut k = 0;
        for w in 0..WORKERS {
            let (Some(tile), Some(sw)) = (self.workers[w].tile.clone(), self.workers[w].shared) else { continue };
            let to = if self.workers[w].status == WorkerStatus::Functional {
                w
            } else {
                let to = functional[k % functional.len()];
                k += 1;
                redispatched.push(Redispatch { tile: tile.index, from: w, to });
                self.workers[w].status = WorkerStatus::Recovering;
                to
            };
            jobs[to].push((tile.index, tile, sw));
        }
        let (out, compute, stalled) = self.run_jobs(&jobs)?;
        for &w in &impaired {
            self.restore_instr(w);
        }
        let timing = Self::finish_timing(TimingReport {
            dma_us: self.cfg.timing.dma_us,
            crc_check_us: self.cfg.timing.crc_check_us,
            reschedule_us: if redispatched.is_empty() { 0 } else { self.cfg.timing.reschedule_us },
            compute_us: compute,
            ..Default::default()
        });
        let mut r = self.report(out, timing)?;
        r.impaired = impaired;
        r.redispatched = redispatched;
        r.stalled = stalled;
        r.degraded = degraded;
        Ok(r)
    }

    fn restore_instr(&mut self, w: usize) {
        self.workers[w].instr.clone_from(&self.golden_instr);
        self.workers[w].status = WorkerStatus::Functional;
    }

    /// Data-memory recovery: every worker checks its tile and control word
    /// before computing; failed tiles are restored from the retained input
    /// and rescheduled on workers whose check passed.
    pub fn dmr_cycle(&mut self) -> Result<VpuReport> {
        self.ensure_dispatched();
        let failed: Vec<usize> = (0..WORKERS)
            .filter(|&w| {
                let c = &self.workers[w];
                !(c.tile.as_ref().is_some_and(Tile::crc_ok) && c.shared.is_some_and(|s| s.crc_ok()))
            })
            .collect();
        let passed: Vec<usize> = (0..WORKERS).filter(|w| !failed.contains(w)).collect();
        let mut jobs: Vec<Vec<(usize, Tile, SharedWord)>> = vec![Vec::new(); WORKERS];
        for &w in &passed {
            let c = &self.workers[w];
            let t = c.tile.clone().expect("checked");
            jobs[w].push((t.index, t, c.shared.expect("checked")));
        }
        let mut redispatched = Vec::new();
        for (k, &w) in failed.iter().enumerate() {
            self.workers[w].status = WorkerStatus::Impaired;
            let ti = self.assignment.iter().position(|ws| ws.contains(&w)).expect("every worker has a tile");
            let plan = self.plan[ti].clone();
            let fresh = self.slice_tile(&plan, &self.golden_input);
            let region = self.ddr_region(w).expect("assigned");
            let golden = self.golden_input[region.clone()].to_vec();
            self.ddr_input[region].copy_from_slice(&golden);
            let to = if passed.is_empty() { w } else { passed[k % passed.len()] };
            redispatched.push(Redispatch { tile: fresh.index, from: w, to });
            jobs[to].push((fresh.index, fresh.clone(), SharedWord::new(fresh.rows)));
            self.workers[w].tile = Some(fresh.clone());
            self.workers[w].shared = Some(SharedWord::new(fresh.rows));
            self.workers[w].status = WorkerStatus::Functional;
        }
        let (out, compute, stalled) = self.run_jobs(&jobs)?;
        let timing = Self::finish_timing(TimingReport {
            dma_us: self.cfg.timing.dma_us,
            crc_check_us: self.cfg.timing.crc_check_us,
            reschedule_us: if redispatched.is_empty() { 0 } else { self.cfg.timing.reschedule_us },
            compute_us: compute,
            ..Default::default()
        });
        let mut r = self.report(out, timing)?;
        r.impaired = failed;
        r.redispatched = redispatched;
        r.stalled = stalled;
        Ok(r)
    }

    /// Each worker runs its queue serially; latency is the longest queue.
    fn run_jobs(&self, jobs: &[Vec<(usize, Tile, SharedWord)>]) -> Result<(Plane, f64, Vec<usize>)> {
        let mut out = self.new_plane();
        let mut longest: f64 = 0.0;
        let mut stalled = Vec::new();
        for (w, q) in jobs.iter().enumerate() {
            let mut busy = 0.0;
            for (_, tile, sw) in q {
                busy += Self::tile_px(tile) * self.rate();
                match self.worker_execute(w, tile, *sw)? {
                    Some(d) => self.place(&mut out, tile, &d),
                    None => stalled.push(w),
                }
            }
            longest = longest.max(busy);
        }
        Ok((out, longest, stalled))
    }

    /// Group-redundant execution: each group member computes the group's
    /// tile and the supervisor votes per pixel. No rescheduling, no repair.
    pub fn nmr_execute(&mut self) -> Result<VpuReport> {
        self.ensure_dispatched();
        let cfg = self.nmr.clone().ok_or_else(|| Error::Config("not an N-modular job".into()))?;
        let mut out = self.new_plane();
        let mut flagged = 0;
        let mut stalled = Vec::new();
        let mut compute: f64 = 0.0;
        let mut voted_px = 0usize;
        for (gi, group) in cfg.groups.iter().enumerate() {
            let plan = &self.plan[gi];
            let mut results: Vec<Option<Vec<f64>>> = Vec::with_capacity(group.len());
            for &w in group {
                let c = &self.workers[w];
                let (Some(tile), Some(sw)) = (c.tile.clone(), c.shared) else { continue };
                compute = compute.max(Self::tile_px(&tile) * self.rate());
                let r = self.worker_execute(w, &tile, sw)?;
                if r.is_none() {
                    stalled.push(w);
                }
                results.push(r);
            }
            let (voted, bad) = vote(&results, cfg.n);
            flagged += bad;
            voted_px += voted.len();
            // a fully stalled group leaves its stripe unwritten
            if !voted.is_empty() {
                self.place(&mut out, plan, &voted);
            }
        }
        let timing = Self::finish_timing(TimingReport {
            dma_us: self.cfg.timing.dma_us,
            compute_us: compute,
            voting_us: voted_px as f64 * cfg.n as f64 * self.cfg.timing.vote_us_per_px,
            ..Default::default()
        });
        let mut r = self.report(out, timing)?;
        r.flagged_pixels = flagged;
        r.stalled = stalled;
        r.impaired = (0..WORKERS).filter(|&w| !self.instr_ok(w)).collect();
        Ok(r)
    }
}

/// Per-pixel majority over member outputs. A value wins with more than
/// `n / 2` votes; otherwise the first member's value is kept and the pixel
/// is flagged. Stalled members cast no vote.
pub fn vote(results: &[Option<Vec<f64>>], n: usize) -> (Vec<f64>, usize) {
    let live: Vec<&Vec<f64>> = results.iter().flatten().collect();
    let Some(first) = live.first() else { return (Vec::new(), 0) };
    let len = first.len();
    let mut out = Vec::with_capacity(len);
    let mut flagged = 0;
    for i in 0..len {
        let mut winner = None;
        for cand in &live {
            let v = cand[i].to_bits();
            if live.iter().filter(|o| o[i].to_bits() == v).count() > n / 2 {
                winner = Some(cand[i]);
                break;
            }
        }
        match winner {
            Some(v) => out.push(v),
            None => {
                flagged += 1;
                out.push(first[i]);
            }
        }
    }
    (out, flagged)
}
