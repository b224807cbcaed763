//! Campaign orchestration, classification, reliability fits and reports.

mod config;
mod matrix;
mod reliability;
mod run;
mod timeline;
mod verify;

pub use config::{CampaignSpec, Target, VpuCampaign};
pub use matrix::{
    emit_report, median, render_csv, run_matrix, run_vpu_table, summarize, ArchRow, MatrixReport, VpuTableRow, VPU_IMPAIRED_COUNTS,
};
pub use reliability::{fit_lambda, fit_pooled, reliability, ReliabilityModel, CURVE_POINTS};
pub use run::{run, run_fpga, run_vpu, FpgaStats, RunReport, VpuStats};
pub use timeline::{classify_output, classify_timeline, Class, FunctionalityTimeline, Interval, Shares};
pub use verify::verify;
