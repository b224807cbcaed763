use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ftsim::fpga::Architecture;
use ftsim::harness::{self, CampaignSpec, MatrixReport, Target, VPU_IMPAIRED_COUNTS};
use ftsim::inject::InjectionKind;
use ftsim::vpu::{FtMode, Kernel};
use ftsim::Error;

#[derive(Parser)]
#[command(name = "ftsim", version, about = "FPGA + VPU fault-injection simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one campaign and write its report and mutation log.
    Run {
        #[arg(long)]
        arch: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every (architecture, seed) cell and aggregate.
    Matrix {
        /// Comma-separated stacks, or `all` for the eight reporting rows.
        #[arg(long, default_value = "all")]
        archs: String,
        /// `a..b` or a comma-separated list.
        #[arg(long, default_value = "0..10")]
        seeds: String,
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print a previously written summary or run report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the built-in oracle and property checks.
    Verify,
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, Error> {
    let bad = || Error::Config(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if b <= a {
            return Err(bad());
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn parse_archs(s: &str) -> Result<Vec<Architecture>, Error> {
    if s == "all" {
        return Ok(Architecture::table_rows().to_vec());
    }
    s.split(',').map(str::parse).collect()
}

fn load(campaign: &Option<PathBuf>) -> Result<CampaignSpec, Error> {
    match campaign {
        Some(p) => CampaignSpec::load(p),
        None => Ok(CampaignSpec::default()),
    }
}

fn print_rows(m: &MatrixReport) {
    if !m.rows.is_empty() {
        println!("{:<24} {:>8} {:>10} {:>8}  {:>10}", "architecture", "down%", "erroneous%", "correct%", "lambda/s");
        for r in &m.rows {
            let l = r.lambda.map_or("-".to_string(), |l| format!("{l:.4}"));
            println!("{:<24} {:>8.2} {:>10.2} {:>8.2}  {:>10}", r.label, r.down, r.erroneous, r.correct, l);
        }
    }
    if !m.vpu_rows.is_empty() {
        println!("{:<10} {:<6} {:>8} {:>8} {:>8}", "kernel", "mode", "impaired", "min%", "max%");
        for r in &m.vpu_rows {
            println!("{:<10} {:<6} {:>8} {:>8.2} {:>8.2}", r.kernel, r.mode, r.impaired, 100.0 * r.min, 100.0 * r.max);
        }
    }
}

fn execute(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Run { arch, seed, campaign, out } => {
            let mut spec = load(&campaign)?;
            if let Some(a) = arch {
                spec.arch = a;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            spec.validate()?;
            let r = harness::run(&spec)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("report.json"), r.to_json()?)?;
            std::fs::write(out.join("mutations.log"), &r.mutation_log)?;
            match (&r.timeline, &r.vpu) {
                (Some(t), _) => println!(
                    "{} seed {}: down {:.2}% erroneous {:.2}% correct {:.2}%",
                    r.arch, r.seed, t.totals.down, t.totals.erroneous, t.totals.correct
                ),
                (None, Some(v)) => println!("{} {} seed {}: error rate {:.4}", v.kernel, v.mode, r.seed, v.error_rate),
                _ => {}
            }
            println!("mutation log digest {}", r.mutation_digest);
        }
        Cmd::Matrix { archs, seeds, campaign, out } => {
            let spec = load(&campaign)?;
            let seeds = parse_seeds(&seeds)?;
            let m = match spec.target {
                Target::Fpga => harness::run_matrix(&parse_archs(&archs)?, &seeds, &spec)?,
                Target::Vpu => {
                    let modes = [
                        (FtMode::None, InjectionKind::VpuInstr),
                        (FtMode::Imr, InjectionKind::VpuInstr),
                        (FtMode::Dmr, InjectionKind::VpuWorkerLocal),
                        (FtMode::Nmr(3), InjectionKind::VpuInstr),
                    ];
                    let vpu_rows = harness::run_vpu_table(
                        &spec,
                        &[Kernel::Conv2d, Kernel::Binning2d],
                        &modes,
                        &VPU_IMPAIRED_COUNTS,
                        &seeds,
                    )?;
                    MatrixReport { vpu_rows, ..Default::default() }
                }
            };
            print_rows(&m);
            for p in harness::emit_report(&m, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Cmd::Report { input, format } => {
            let text = std::fs::read_to_string(&input)?;
            let mut m: MatrixReport = match serde_json::from_str(&text) {
                Ok(m) => m,
                Err(_) => {
                    let r: harness::RunReport = serde_json::from_str(&text)?;
                    MatrixReport { rows: harness::summarize(std::slice::from_ref(&r)), reports: vec![r], ..Default::default() }
                }
            };
            // curves are not stored; refit them from the runs
            if !m.reports.is_empty() {
                m.rows = harness::summarize(&m.reports);
            }
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&m)?),
                Format::Csv => print!("{}", harness::render_csv(&m)),
            }
        }
        Cmd::Verify => {
            let results = harness::verify();
            let mut failed = 0;
            for (name, ok) in &results {
                println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
                failed += usize::from(!ok);
            }
            if failed > 0 {
                return Err(Error::Invariant(format!("{failed} check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Invariant(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
