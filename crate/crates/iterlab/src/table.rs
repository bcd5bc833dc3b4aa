//! Sweep tables and their CSV form.
//!
//! The file starts with `#` provenance lines, then the header
//! `strategy,d,n,fidelity,stderr,samples,seed` and one row per cell. Floats
//! use the shortest representation that parses back to the same value.

use std::io::{Read, Write};

use iterlab_core::strategies::{Strategy, StrategyReport};
use serde::{Deserialize, Serialize};

use crate::formats::expects_bias_warning;
use crate::CliError;

pub const HEADER: [&str; 7] = ["strategy", "d", "n", "fidelity", "stderr", "samples", "seed"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    /// `key: value` pairs written as comment lines, in order.
    pub entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.to_owned(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    rows: Vec<StrategyReport>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    strategy: String,
    d: usize,
    n: u32,
    fidelity: f64,
    stderr: f64,
    samples: u64,
    seed: Option<u64>,
}

fn sort_key(r: &StrategyReport) -> (&'static str, usize, u32) {
    (r.strategy.as_str(), r.d, r.n)
}

impl SweepTable {
    /// Sorts rows by `(strategy, d, n)` and rejects duplicate keys.
    pub fn new(mut rows: Vec<StrategyReport>, provenance: Provenance) -> Result<Self, CliError> {
        rows.sort_by(|a, b| sort_key(a).cmp(&sort_key(b)));
        if let Some(w) = rows.windows(2).find(|w| sort_key(&w[0]) == sort_key(&w[1])) {
            let (s, d, n) = sort_key(&w[0]);
            return Err(CliError::Format(format!("duplicate row {s} d={d} n={n}")));
        }
        Ok(Self { rows, provenance })
    }

    pub fn rows(&self) -> &[StrategyReport] {
        &self.rows
    }

    pub fn find(&self, strategy: Strategy, d: usize, n: u32) -> Option<&StrategyReport> {
        self.rows
            .iter()
            .find(|r| r.strategy == strategy && r.d == d && r.n == n)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), CliError> {
        for (k, v) in &self.provenance.entries {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for r in &self.rows {
            w.serialize(CsvRow {
                strategy: r.strategy.to_string(),
                d: r.d,
                n: r.n,
                fidelity: r.fidelity,
                stderr: r.stderr,
                samples: r.samples,
                seed: r.seed,
            })?;
        }
        if self.rows.is_empty() {
            w.write_record(HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(mut input: R) -> Result<Self, CliError> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut provenance = Provenance::default();
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            let line = line.trim_start();
            let (k, v) = line.split_once(": ").unwrap_or((line, ""));
            provenance.push(k, v);
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        if reader.headers()?.iter().ne(HEADER) {
            return Err(CliError::Format(format!(
                "unexpected CSV header, want {}",
                HEADER.join(",")
            )));
        }
        let mut rows = Vec::new();
        for row in reader.deserialize() {
            let row: CsvRow = row?;
            let strategy: Strategy = row.strategy.parse()?;
            rows.push(StrategyReport {
                strategy,
                d: row.d,
                n: row.n,
                fidelity: row.fidelity,
                stderr: row.stderr,
                samples: row.samples,
                seed: row.seed,
                bias_warning: expects_bias_warning(strategy, row.samples),
            });
        }
        Self::new(rows, provenance)
    }

    /// The CSV without its comment lines.
    pub fn csv_body(&self) -> Result<String, CliError> {
        let bare = Self {
            rows: self.rows.clone(),
            provenance: Provenance::default(),
        };
        let mut buf = Vec::new();
        bare.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| CliError::Format(e.to_string()))
    }
}
