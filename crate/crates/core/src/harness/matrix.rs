//! Architecture × seed matrices, aggregate tables and report files.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CampaignSpec, Target};
use super::reliability::{fit_pooled, ReliabilityModel};
use super::run::{run_fpga, run_vpu, RunReport};
use crate::error::Result;
use crate::fpga::Architecture;
use crate::inject::InjectionKind;
use crate::vpu::{FtMode, Kernel, TimingReport};

pub const VPU_IMPAIRED_COUNTS: [usize; 4] = [3, 6, 9, 12];

/// Aggregate over seeds for one stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchRow {
    pub arch: String,
    pub label: String,
    pub down: f64,
    pub erroneous: f64,
    pub correct: f64,
    pub correct_min: f64,
    pub correct_max: f64,
    pub lambda: Option<f64>,
    pub lambda_per_seed: Vec<Option<f64>>,
    #[serde(skip)]
    pub curve: Option<ReliabilityModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpuTableRow {
    pub kernel: String,
    pub mode: String,
    pub impaired: usize,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub timing: TimingReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub rows: Vec<ArchRow>,
    pub vpu_rows: Vec<VpuTableRow>,
    pub reports: Vec<RunReport>,
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Medians per stack, in the order the stacks first appear in `reports`.
pub fn summarize(reports: &[RunReport]) -> Vec<ArchRow> {
    let mut order: Vec<String> = Vec::new();
    for r in reports.iter().filter(|r| r.target == Target::Fpga) {
        if !order.contains(&r.arch) {
            order.push(r.arch.clone());
        }
    }
    order
        .into_iter()
        .map(|arch| {
            let rs: Vec<&RunReport> = reports.iter().filter(|r| r.arch == arch && r.timeline.is_some()).collect();
            let tls: Vec<_> = rs.iter().map(|r| r.timeline.clone().expect("filtered")).collect();
            let col = |f: fn(&super::timeline::Shares) -> f64| median(&tls.iter().map(|t| f(&t.totals)).collect::<Vec<_>>());
            let correct: Vec<f64> = tls.iter().map(|t| t.totals.correct).collect();
            let curve = fit_pooled(&tls).ok();
            ArchRow {
                label: arch.parse::<Architecture>().map(|a| a.label()).unwrap_or_else(|_| arch.clone()),
                down: col(|s| s.down),
                erroneous: col(|s| s.erroneous),
                correct: col(|s| s.correct),
                correct_min: correct.iter().copied().fold(f64::INFINITY, f64::min),
                correct_max: correct.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                lambda: curve.as_ref().map(|m| m.lambda),
                lambda_per_seed: rs.iter().map(|r| r.lambda).collect(),
                curve,
                arch,
            }
        })
        .collect()
}

/// One report per (stack, seed), cells run in parallel.
pub fn run_matrix(archs: &[Architecture], seeds: &[u64], spec: &CampaignSpec) -> Result<MatrixReport> {
    let cells: Vec<(Architecture, u64)> = archs.iter().flat_map(|&a| seeds.iter().map(move |&s| (a, s))).collect();
    let reports = cells.par_iter().map(|&(a, s)| run_fpga(spec, a, s)).collect::<Result<Vec<_>>>()?;
    Ok(MatrixReport { rows: summarize(&reports), vpu_rows: Vec::new(), reports })
}

/// Error-rate ranges per kernel, mode and impaired-core count.
pub fn run_vpu_table(
    spec: &CampaignSpec,
    kernels: &[Kernel],
    modes: &[(FtMode, InjectionKind)],
    counts: &[usize],
    seeds: &[u64],
) -> Result<Vec<VpuTableRow>> {
    let mut cells = Vec::new();
    for &k in kernels {
        for &(m, kind) in modes {
            for &n in counts {
                cells.push((k, m, kind, n));
            }
        }
    }
    cells
        .par_iter()
        .map(|&(kernel, mode, kind, impaired)| {
            let mut s = spec.clone();
            s.target = Target::Vpu;
            s.vpu.kernel = kernel;
            s.vpu.mode = mode;
            s.vpu.kind = kind;
            s.vpu.impaired = impaired;
            let runs = seeds.iter().map(|&seed| run_vpu(&s, seed)).collect::<Result<Vec<_>>>()?;
            let rates: Vec<f64> = runs.iter().map(|r| r.vpu.as_ref().expect("vpu run").error_rate).collect();
            let worst = runs
                .iter()
                .map(|r| r.vpu.as_ref().expect("vpu run").timing)
                .max_by(|a, b| a.total_us.total_cmp(&b.total_us))
                .unwrap_or_default();
            Ok(VpuTableRow {
                kernel: kernel.name().into(),
                mode: mode.label(),
                impaired,
                min: rates.iter().copied().fold(f64::INFINITY, f64::min),
                max: rates.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                median: median(&rates),
                timing: worst,
            })
        })
        .collect()
}

fn table_csv(rows: &[ArchRow]) -> String {
    let mut s = String::from("architecture,down_pct,erroneous_pct,correct_pct,correct_min,correct_max,lambda_per_s\n");
    for r in rows {
        let lambda = r.lambda.map_or(String::new(), |l| format!("{l:.6}"));
        let _ = writeln!(
            s,
            "{},{:.2},{:.2},{:.2},{:.2},{:.2},{}",
            r.arch, r.down, r.erroneous, r.correct, r.correct_min, r.correct_max, lambda
        );
    }
    s
}

fn curves_csv(rows: &[ArchRow]) -> String {
    let mut s = String::from("architecture,t_s,reliability\n");
    for r in rows {
        if let Some(m) = &r.curve {
            for (t, v) in &m.curve {
                let _ = writeln!(s, "{},{t:.3},{v:.9}", r.arch);
            }
        }
    }
    s
}

fn vpu_csv(rows: &[VpuTableRow]) -> String {
    let mut s = String::from(
        "kernel,mode,impaired,min_pct,max_pct,median_pct,crc_check_us,reschedule_us,voting_us,compute_us,total_us\n",
    );
    for r in rows {
        let t = &r.timing;
        let _ = writeln!(
            s,
            "{},{},{},{:.2},{:.2},{:.2},{},{},{:.1},{:.1},{:.1}",
            r.kernel,
            r.mode,
            r.impaired,
            100.0 * r.min,
            100.0 * r.max,
            100.0 * r.median,
            t.crc_check_us,
            t.reschedule_us,
            t.voting_us,
            t.compute_us,
            t.total_us
        );
    }
    s
}

/// All CSV sections of a report, concatenated.
pub fn render_csv(report: &MatrixReport) -> String {
    let mut s = String::new();
    if !report.rows.is_empty() {
        s.push_str(&table_csv(&report.rows));
    }
    if !report.vpu_rows.is_empty() {
        s.push_str(&vpu_csv(&report.vpu_rows));
    }
    s
}

/// Writes `table.csv`, `curves.csv`, `vpu_table.csv` and `summary.json`
/// under `dir`. Returns the paths written.
pub fn emit_report(report: &MatrixReport, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, body: String| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    if !report.rows.is_empty() {
        put("table.csv", table_csv(&report.rows))?;
        put("curves.csv", curves_csv(&report.rows))?;
    }
    if !report.vpu_rows.is_empty() {
        put("vpu_table.csv", vpu_csv(&report.vpu_rows))?;
    }
    put("summary.json", serde_json::to_string_pretty(report)?)?;
    Ok(written)
}
