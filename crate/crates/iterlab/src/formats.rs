//! JSON encodings for matrices, comb dumps and command results.
//!
//! Floats are written with 17 significant digits so every value survives a
//! round trip bit for bit. Non-finite values become `null`.

use std::fs;
use std::path::Path;

use iterlab_core::comb::CombOperator;
use iterlab_core::linalg::ComplexMatrix;
use iterlab_core::strategies::{Strategy, StrategyReport, BIAS_WARNING_SAMPLES};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Serde helpers that write floats with 17 significant digits.
pub mod f17 {
    use serde::ser::{Error, SerializeSeq};
    use serde::{Serialize, Serializer};
    use serde_json::value::RawValue;

    pub fn format(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".to_owned()
        }
    }

    struct Raw(f64);

    impl Serialize for Raw {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            RawValue::from_string(format(self.0))
                .map_err(S::Error::custom)?
                .serialize(s)
        }
    }

    pub fn scalar<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Raw(*x).serialize(s)
    }

    pub fn slice<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for &x in xs {
            seq.serialize_element(&Raw(x))?;
        }
        seq.end()
    }
}

/// `{rows, cols, re, im}` with row-major parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    #[serde(serialize_with = "f17::slice")]
    pub re: Vec<f64>,
    #[serde(serialize_with = "f17::slice")]
    pub im: Vec<f64>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: m.as_slice().iter().map(|z| z.re).collect(),
            im: m.as_slice().iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = iterlab_core::Error;

    fn try_from(m: &MatrixJson) -> Result<Self, Self::Error> {
        ComplexMatrix::from_parts(m.rows, m.cols, &m.re, &m.im)
    }
}

/// Comb dump: run header plus the comb matrix in canonical factor order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombFile {
    pub d: usize,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    #[serde(serialize_with = "f17::scalar")]
    pub primal_value: f64,
    pub matrix: MatrixJson,
}

impl CombFile {
    pub fn new(comb: &CombOperator, n: u32, samples: u64, seed: u64, primal_value: f64) -> Self {
        Self {
            d: comb.d(),
            n,
            samples,
            seed,
            primal_value,
            matrix: comb.matrix().into(),
        }
    }

    pub fn to_comb(&self) -> Result<CombOperator, iterlab_core::Error> {
        CombOperator::from_matrix(self.d, ComplexMatrix::try_from(&self.matrix)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// One fidelity datum as emitted by `fidelity` and JSON sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub strategy: String,
    pub d: usize,
    pub n: u32,
    #[serde(serialize_with = "f17::scalar")]
    pub fidelity: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub stderr: f64,
    pub samples: u64,
    pub seed: Option<u64>,
    pub bias_warning: bool,
}

impl From<&StrategyReport> for ReportJson {
    fn from(r: &StrategyReport) -> Self {
        Self {
            strategy: r.strategy.to_string(),
            d: r.d,
            n: r.n,
            fidelity: r.fidelity,
            stderr: r.stderr,
            samples: r.samples,
            seed: r.seed,
            bias_warning: r.bias_warning,
        }
    }
}

impl TryFrom<&ReportJson> for StrategyReport {
    type Error = iterlab_core::Error;

    fn try_from(r: &ReportJson) -> Result<Self, Self::Error> {
        Ok(StrategyReport {
            strategy: r.strategy.parse::<Strategy>()?,
            d: r.d,
            n: r.n,
            fidelity: r.fidelity,
            stderr: r.stderr,
            samples: r.samples,
            seed: r.seed,
            bias_warning: r.bias_warning,
        })
    }
}

/// Whether a report of this shape carries the small-sample bias flag.
pub fn expects_bias_warning(strategy: Strategy, samples: u64) -> bool {
    strategy == Strategy::Estimation && samples < BIAS_WARNING_SAMPLES
}

#[derive(Clone, Debug, Serialize)]
pub struct HaarCheckJson {
    pub d: usize,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    #[serde(serialize_with = "f17::scalar")]
    pub trace_moment_estimate: f64,
    pub expected: u64,
    #[serde(serialize_with = "f17::scalar")]
    pub stderr: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub unitarity_max_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpJson {
    pub d: usize,
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    #[serde(serialize_with = "f17::scalar")]
    pub primal_value: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub primal_stderr: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub upper_bound: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub gap: f64,
    #[serde(serialize_with = "f17::scalar")]
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub status: String,
}

#[cfg(test)]
mod tests {
    use super::*;
    use iterlab_core::comb::identity_strategy_comb;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(f17::format(0.5), "5.0000000000000000e-1");
        assert_eq!(f17::format(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(f17::format(f64::INFINITY), "null");
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, -7.25e12] {
            assert_eq!(f17::format(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn matrix_json_layout() {
        let m = ComplexMatrix::from_parts(1, 2, &[1.0, 0.0], &[0.0, -0.5]).unwrap();
        let text = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
        assert_eq!(
            text,
            r#"{"rows":1,"cols":2,"re":[1.0000000000000000e0,0.0000000000000000e0],"im":[0.0000000000000000e0,-5.0000000000000000e-1]}"#
        );
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(ComplexMatrix::try_from(&back).unwrap(), m);
    }

    #[test]
    fn comb_file_round_trip() {
        let comb = identity_strategy_comb(2).unwrap();
        let file = CombFile::new(&comb, 3, 1000, 7, 0.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("comb.json");
        file.write(&path).unwrap();
        let back = CombFile::read(&path).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_comb().unwrap(), comb);
    }

    #[test]
    fn report_round_trip() {
        let r = iterlab_core::strategies::f_identity(3, 2).unwrap();
        let json = serde_json::to_string(&ReportJson::from(&r)).unwrap();
        let back: ReportJson = serde_json::from_str(&json).unwrap();
        assert_eq!(StrategyReport::try_from(&back).unwrap(), r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["fidelity"], 0.5);
        assert_eq!(v["stderr"], 0.0);
        assert_eq!(v["seed"], serde_json::Value::Null);
    }
}
