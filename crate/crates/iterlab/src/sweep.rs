//! Figure grids and their parallel evaluation.

use std::fmt;

use iterlab_core::comb::{SdpSettings, SdpStatus};
use iterlab_core::strategies::Strategy;
use rayon::prelude::*;

use crate::run::{evaluate, CellOutcome};
use crate::table::{Provenance, SweepTable};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Random guess against estimation.
    Three,
    /// Identity channel against direct use.
    Four,
    /// Comb optimum against the identity channel.
    Five,
}

impl Figure {
    pub fn from_number(k: u8) -> Option<Self> {
        match k {
            3 => Some(Figure::Three),
            4 => Some(Figure::Four),
            5 => Some(Figure::Five),
            _ => None,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Figure::Three => 3,
            Figure::Four => 4,
            Figure::Five => 5,
        }
    }

    pub fn strategies(self) -> [Strategy; 2] {
        match self {
            Figure::Three => [Strategy::Random, Strategy::Estimation],
            Figure::Four => [Strategy::Identity, Strategy::DirectMc],
            Figure::Five => [Strategy::Optimal, Strategy::Identity],
        }
    }

    pub fn dims(self) -> &'static [usize] {
        match self {
            Figure::Three | Figure::Four => &[2, 3, 4],
            Figure::Five => &[2, 3],
        }
    }

    pub fn default_n_max(self) -> u32 {
        match self {
            Figure::Three | Figure::Four => 8,
            Figure::Five => 6,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub strategy: Strategy,
    pub d: usize,
    pub n: u32,
}

impl Cell {
    /// Stream index unique to the cell, so results do not depend on the
    /// order in which cells run.
    pub fn stream_index(&self) -> u64 {
        let s = Strategy::ALL
            .iter()
            .position(|&k| k == self.strategy)
            .expect("strategy listed in ALL") as u64;
        (s << 40) | ((self.d as u64) << 20) | u64::from(self.n)
    }
}

pub fn grid(figure: Figure, n_max: u32) -> Vec<Cell> {
    let mut cells = Vec::new();
    for strategy in figure.strategies() {
        for &d in figure.dims() {
            for n in 1..=n_max {
                cells.push(Cell { strategy, d, n });
            }
        }
    }
    cells
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub figure: Figure,
    pub n_max: Option<u32>,
    pub samples: Option<u64>,
    pub seed: u64,
    pub sdp: SdpSettings,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub table: SweepTable,
    /// Cells whose solver did not converge or whose evaluation failed.
    pub failures: Vec<String>,
}

pub fn run_sweep(cfg: &SweepConfig, timestamp: &str) -> Result<SweepOutcome, CliError> {
    let n_max = cfg.n_max.unwrap_or_else(|| cfg.figure.default_n_max());
    let cells = grid(cfg.figure, n_max);
    let results: Vec<(Cell, iterlab_core::Result<CellOutcome>)> = cells
        .par_iter()
        .map(|c| {
            let out = evaluate(c.strategy, c.d, c.n, cfg.samples, cfg.seed, c.stream_index(), &cfg.sdp);
            (*c, out)
        })
        .collect();

    let mut prov = Provenance::default();
    prov.push("iterlab", env!("CARGO_PKG_VERSION"));
    prov.push("seed", format!("{} ({:#x})", cfg.seed, cfg.seed));
    prov.push("timestamp", timestamp);
    let [a, b] = cfg.figure.strategies();
    let dims: Vec<String> = cfg.figure.dims().iter().map(ToString::to_string).collect();
    prov.push(
        "grid",
        format!("figure {}; {a},{b} x d {{{}}} x n 1..={n_max}", cfg.figure, dims.join(",")),
    );
    prov.push(
        "samples",
        cfg.samples
            .map_or_else(|| "strategy defaults".to_owned(), |s| s.to_string()),
    );

    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (cell, res) in results {
        let tag = format!("{} d={} n={}", cell.strategy, cell.d, cell.n);
        match res {
            Ok(out) => {
                if let Some(sol) = &out.solution {
                    let line = format!(
                        "{tag} status={} gap={:e} residual={:e} iterations={}",
                        sol.status.as_str(),
                        sol.gap,
                        sol.feasibility_residual,
                        sol.iterations
                    );
                    if sol.status != SdpStatus::Optimal {
                        failures.push(line.clone());
                    }
                    prov.push("sdp", line);
                }
                rows.push(out.report);
            }
            Err(e) => {
                let line = format!("{tag} error={e}");
                prov.push("failed", line.clone());
                failures.push(line);
            }
        }
    }
    Ok(SweepOutcome {
        table: SweepTable::new(rows, prov)?,
        failures,
    })
}
