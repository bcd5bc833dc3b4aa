//! Argument parsing and the four subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iterlab_core::comb::{SdpSettings, SdpStatus};
use iterlab_core::haar::{haar_unitary, RngStream, ScalarAccumulator};
use iterlab_core::strategies::{Strategy, DEFAULT_SCALAR_SAMPLES};

use crate::formats::{CombFile, HaarCheckJson, ReportJson, SdpJson};
use crate::run::evaluate;
use crate::sweep::{run_sweep, Figure, SweepConfig};
use crate::table::{Provenance, SweepTable};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "iterlab", version, about = "Fidelities of single-use strategies for iterating an unknown unitary")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one fidelity value.
    Fidelity(FidelityArgs),
    /// Reproduce the data behind a figure as CSV.
    Sweep(SweepArgs),
    /// Check Haar trace moments and sampler unitarity.
    HaarCheck(HaarArgs),
    /// Solve for the optimal comb.
    Sdp(SdpArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    #[value(name = "random")]
    Random,
    #[value(name = "random_mc")]
    RandomMc,
    #[value(name = "estimation")]
    Estimation,
    #[value(name = "estimation_onb")]
    EstimationOnb,
    #[value(name = "identity")]
    Identity,
    #[value(name = "direct")]
    Direct,
    #[value(name = "direct_mc")]
    DirectMc,
    #[value(name = "optimal")]
    Optimal,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Random => Strategy::Random,
            StrategyArg::RandomMc => Strategy::RandomMc,
            StrategyArg::Estimation => Strategy::Estimation,
            StrategyArg::EstimationOnb => Strategy::EstimationOnb,
            StrategyArg::Identity => Strategy::Identity,
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::DirectMc => Strategy::DirectMc,
            StrategyArg::Optimal => Strategy::Optimal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|_| format!("`{s}` is not a decimal or 0x-hex 64-bit seed"))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// RNG seed; falls back to ITERLAB_SEED, then 0xC0FFEE.
    #[arg(long, env = "ITERLAB_SEED", value_parser = parse_seed, default_value = "0xC0FFEE")]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Maximum causality residual of the returned comb.
    #[arg(long, value_parser = parse_positive, default_value_t = 1e-9)]
    pub tol_feas: f64,
    /// Maximum certified duality gap.
    #[arg(long, value_parser = parse_positive, default_value_t = 1e-4)]
    pub tol_gap: f64,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..), default_value_t = 5_000)]
    pub max_iter: u32,
}

impl SolverArgs {
    fn settings(&self) -> SdpSettings {
        SdpSettings {
            tol_feas: self.tol_feas,
            tol_gap: self.tol_gap,
            max_iter: self.max_iter as usize,
        }
    }
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    #[arg(long, value_enum)]
    pub strategy: StrategyArg,
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=16))]
    pub d: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Monte Carlo samples; strategy default when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(100..))]
    pub samples: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// 3: random vs estimation, 4: identity vs direct, 5: optimum vs identity.
    #[arg(long, value_parser = clap::value_parser!(u8).range(3..=5))]
    pub figure: u8,
    /// Largest n in the grid (default 8, or 6 for figure 5).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n_max: Option<u32>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(100..))]
    pub samples: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HaarArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=64))]
    pub d: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    #[arg(long, value_parser = clap::value_parser!(u64).range(100..), default_value_t = DEFAULT_SCALAR_SAMPLES)]
    pub samples: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SdpArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=3))]
    pub d: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub n: u32,
    /// Objective samples (default 10⁵ at d = 2, 3·10⁴ at d = 3).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1000..))]
    pub samples: Option<u64>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write the optimal comb to this file.
    #[arg(long)]
    pub dump_comb: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn timestamp() -> String {
    humantime::format_rfc3339_seconds(SystemTime::now()).to_string()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fidelity(a) => cmd_fidelity(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::HaarCheck(a) => cmd_haar_check(a),
        Command::Sdp(a) => cmd_sdp(a),
    }
}

fn cmd_fidelity(a: FidelityArgs) -> Result<(), CliError> {
    let strategy = Strategy::from(a.strategy);
    let d = a.d as usize;
    let seed = a.seed.seed;
    let outcome = evaluate(strategy, d, a.n, a.samples, seed, 0, &a.solver.settings())?;
    let mut out = output(&a.out)?;
    match a.format {
        Format::Json => {
            serde_json::to_writer(&mut out, &ReportJson::from(&outcome.report))?;
            writeln!(out)?;
        }
        Format::Csv => {
            let mut prov = Provenance::default();
            prov.push("iterlab", env!("CARGO_PKG_VERSION"));
            prov.push("seed", format!("{seed} ({seed:#x})"));
            prov.push("timestamp", timestamp());
            SweepTable::new(vec![outcome.report.clone()], prov)?.write_csv(&mut out)?;
        }
    }
    out.flush()?;
    match outcome.solution {
        Some(sol) if sol.status != SdpStatus::Optimal => Err(CliError::NonConvergence(format!(
            "solver stopped with status {} (gap {:e})",
            sol.status.as_str(),
            sol.gap
        ))),
        _ => Ok(()),
    }
}

fn cmd_sweep(a: SweepArgs) -> Result<(), CliError> {
    let figure = Figure::from_number(a.figure)
        .ok_or_else(|| CliError::Usage(format!("unknown figure {}", a.figure)))?;
    let cfg = SweepConfig {
        figure,
        n_max: a.n_max,
        samples: a.samples,
        seed: a.seed.seed,
        sdp: a.solver.settings(),
    };
    let outcome = run_sweep(&cfg, &timestamp())?;
    let mut out = output(&a.out)?;
    match a.format {
        Format::Csv => outcome.table.write_csv(&mut out)?,
        Format::Json => {
            for r in outcome.table.rows() {
                serde_json::to_writer(&mut out, &ReportJson::from(r))?;
                writeln!(out)?;
            }
        }
    }
    out.flush()?;
    if outcome.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::NonConvergence(outcome.failures.join("; ")))
    }
}

fn cmd_haar_check(a: HaarArgs) -> Result<(), CliError> {
    let d = a.d as usize;
    let seed = a.seed.seed;
    let mut rng = RngStream::new(seed, 0);
    let mut acc = ScalarAccumulator::new();
    let mut worst: f64 = 0.0;
    for _ in 0..a.samples {
        let u = haar_unitary(d, &mut rng)?;
        worst = worst.max(u.unitarity_deviation());
        acc.push(u.pow(a.n).trace().norm_sqr());
    }
    let est = acc.estimate();
    let expected = (a.n as usize).min(d) as u64;
    let pass = (est.mean - expected as f64).abs() <= 5.0 * est.stderr + 1e-12 && worst < 1e-10;
    let report = HaarCheckJson {
        d,
        n: a.n,
        samples: a.samples,
        seed,
        trace_moment_estimate: est.mean,
        expected,
        stderr: est.stderr,
        unitarity_max_residual: worst,
        pass,
    };
    let mut out = output(&a.out)?;
    serde_json::to_writer(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    if pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "trace moment {} deviates from {expected} (stderr {}), unitarity residual {worst:e}",
            est.mean, est.stderr
        )))
    }
}

fn cmd_sdp(a: SdpArgs) -> Result<(), CliError> {
    let d = a.d as usize;
    let seed = a.seed.seed;
    let outcome = evaluate(Strategy::Optimal, d, a.n, a.samples, seed, 0, &a.solver.settings())?;
    let sol = outcome
        .solution
        .expect("the optimal strategy always carries a solution");
    let r = &outcome.report;
    let summary = SdpJson {
        d,
        n: a.n,
        samples: r.samples,
        seed,
        primal_value: sol.primal_value,
        primal_stderr: r.stderr,
        upper_bound: sol.upper_bound,
        gap: sol.gap,
        feasibility_residual: sol.feasibility_residual,
        iterations: sol.iterations,
        status: sol.status.as_str().to_owned(),
    };
    let mut out = output(&a.out)?;
    serde_json::to_writer(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;
    if let Some(path) = &a.dump_comb {
        CombFile::new(&sol.comb, a.n, r.samples, seed, sol.primal_value).write(path)?;
    }
    if sol.status == SdpStatus::Optimal {
        Ok(())
    } else {
        Err(CliError::NonConvergence(format!(
            "solver stopped with status {} (gap {:e})",
            sol.status.as_str(),
            sol.gap
        )))
    }
}
