//! Fidelities of the single-use strategies for approximating `U ↦ Uⁿ`:
//! random guess, estimate-and-prepare (continuous and orthonormal-basis
//! measurements), the identity channel and the direct channel.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

#[allow(unused_imports)]
use num_traits::Float;

use crate::channels::{choi_depolarizing, vectorize, ChoiMatrix, UnitaryGate, VectorizedOp};
use crate::haar::{haar_unitary, mc_operator_mean_with, mc_scalar_mean, OperatorEstimate, RngStream};
use crate::linalg::ComplexMatrix;
use crate::{Error, Result, C64};

pub const DEFAULT_SEED: u64 = 0xC0FFEE;
pub const DEFAULT_SCALAR_SAMPLES: u64 = 100_000;
pub const DEFAULT_OPERATOR_SAMPLES: u64 = 10_000;
/// Below this many samples `d²Tr(M̂²)` carries a noticeable upward bias.
pub const BIAS_WARNING_SAMPLES: u64 = 10_000;

const MIN_SCALAR_SAMPLES: u64 = 100;
const MIN_OPERATOR_SAMPLES: u64 = 1_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    Random,
    RandomMc,
    Estimation,
    EstimationOnb,
    Identity,
    Direct,
    DirectMc,
    Optimal,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Random,
        Strategy::RandomMc,
        Strategy::Estimation,
        Strategy::EstimationOnb,
        Strategy::Identity,
        Strategy::Direct,
        Strategy::DirectMc,
        Strategy::Optimal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::RandomMc => "random_mc",
            Strategy::Estimation => "estimation",
            Strategy::EstimationOnb => "estimation_onb",
            Strategy::Identity => "identity",
            Strategy::Direct => "direct",
            Strategy::DirectMc => "direct_mc",
            Strategy::Optimal => "optimal",
        }
    }

    /// Whether the fidelity is a closed form (no sampling involved).
    pub fn is_exact(self) -> bool {
        matches!(self, Strategy::Random | Strategy::Identity | Strategy::Direct)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown strategy `{s}`")))
    }
}

/// One fidelity datum.
#[derive(Clone, Debug, PartialEq)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub d: usize,
    pub n: u32,
    pub fidelity: f64,
    /// Zero for closed forms.
    pub stderr: f64,
    /// Zero for closed forms.
    pub samples: u64,
    pub seed: Option<u64>,
    /// Set when a quadratic functional was evaluated on too few samples.
    pub bias_warning: bool,
}

impl StrategyReport {
    fn exact(strategy: Strategy, d: usize, n: u32, fidelity: f64) -> Self {
        Self {
            strategy,
            d,
            n,
            fidelity,
            stderr: 0.0,
            samples: 0,
            seed: None,
            bias_warning: false,
        }
    }

    fn sampled(strategy: Strategy, d: usize, n: u32, est: (f64, f64, u64), seed: u64) -> Self {
        Self {
            strategy,
            d,
            n,
            fidelity: est.0,
            stderr: est.1,
            samples: est.2,
            seed: Some(seed),
            bias_warning: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PnParameter {
    pub n: u32,
    pub d: usize,
    pub value: f64,
}

fn check_nd(n: u32, d: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    Ok(())
}

fn check_samples(samples: u64, min: u64) -> Result<()> {
    if samples < min {
        return Err(Error::InvalidArgument(alloc::format!(
            "need at least {min} samples, got {samples}"
        )));
    }
    Ok(())
}

/// `p_n = (min(n,d) − 1)/(d² − 1)`.
pub fn p_param(n: u32, d: usize) -> Result<PnParameter> {
    check_nd(n, d)?;
    let m = (n as usize).min(d) as f64;
    let d2 = (d * d) as f64;
    Ok(PnParameter {
        n,
        d,
        value: (m - 1.0) / (d2 - 1.0),
    })
}

/// `p² + (1 − p²)/d²`.
pub fn f_random(n: u32, d: usize) -> Result<StrategyReport> {
    let p = p_param(n, d)?.value;
    let d2 = (d * d) as f64;
    Ok(StrategyReport::exact(
        Strategy::Random,
        d,
        n,
        p * p + (1.0 - p * p) / d2,
    ))
}

/// `∫dU∫dV |⟨⟨Uⁿ|Vⁿ⟩⟩|²`.
pub fn f_random_mc(n: u32, d: usize, samples: u64, rng: &mut RngStream) -> Result<StrategyReport> {
    check_nd(n, d)?;
    check_samples(samples, MIN_SCALAR_SAMPLES)?;
    let seed = rng.seed();
    let est = mc_scalar_mean(samples, rng, |rng| {
        let u = haar_unitary(d, rng)?.pow(n);
        let v = haar_unitary(d, rng)?.pow(n);
        Ok(overlap_sq(&u, &v))
    })?;
    Ok(StrategyReport::sampled(
        Strategy::RandomMc,
        d,
        n,
        (est.mean, est.stderr, est.samples),
        seed,
    ))
}

/// `|⟨⟨A|B⟩⟩|² = |Tr(A†B)|²/d²`.
fn overlap_sq(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d = a.rows() as f64;
    let t: C64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.conj() * y)
        .sum();
    t.norm_sqr() / (d * d)
}

/// The depolarizing channel with parameter `p_n`, whose average fidelity
/// to `Uⁿ` equals the random-guess fidelity.
pub fn depolarizing_iterator_choi(n: u32, d: usize) -> Result<ChoiMatrix> {
    choi_depolarizing(p_param(n, d)?.value, d)
}

/// Monte Carlo estimate of `M_n = ∫dU |U⟩⟩⟨⟨U| ⊗ |Uⁿ⟩⟩⟨⟨Uⁿ|` on `d⁴` dimensions.
#[derive(Clone, Debug)]
pub struct EstimationMoment {
    pub n: u32,
    pub d: usize,
    pub estimate: OperatorEstimate,
}

impl EstimationMoment {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.estimate.mean
    }

    pub fn samples(&self) -> u64 {
        self.estimate.samples
    }

    pub fn norm_stderr(&self) -> f64 {
        self.estimate.norm_stderr
    }

    /// `d²Tr(M²)` with its jackknife standard error.
    pub fn fidelity(&self) -> (f64, f64) {
        let d2 = (self.d * self.d) as f64;
        let f = |m: &ComplexMatrix| d2 * m.trace_product(m).re;
        (f(self.matrix()), self.estimate.functional_stderr(f))
    }

    /// Choi matrix of the estimate-and-prepare channel for gate `u`,
    /// `d²⟨⟨u|M|u⟩⟩` with the contraction on the first factor, rescaled to
    /// unit trace.
    pub fn channel_for(&self, u: &UnitaryGate) -> Result<ChoiMatrix> {
        let d = self.d;
        if u.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: u.dim(),
            });
        }
        let d2 = d * d;
        let w = u.vectorize();
        let w = w.amplitudes();
        let m = self.matrix();
        let mut r = ComplexMatrix::zeros(d2, d2);
        for i in 0..d2 {
            for j in 0..d2 {
                let c = w[i].conj() * w[j];
                if c.norm_sqr() == 0.0 {
                    continue;
                }
                for a in 0..d2 {
                    for b in 0..d2 {
                        r[(a, b)] += c * m[(i * d2 + a, j * d2 + b)];
                    }
                }
            }
        }
        let r = r.hermitize();
        let tr = r.trace().re;
        ChoiMatrix::new(r.scale(1.0 / tr), d, d)
    }
}

fn add_rank_one(acc: &mut ComplexMatrix, v: &[C64]) {
    let n = v.len();
    let data = acc.as_mut_slice();
    for (i, vi) in v.iter().enumerate() {
        let row = &mut data[i * n..(i + 1) * n];
        for (x, vj) in row.iter_mut().zip(v) {
            *x += vi * vj.conj();
        }
    }
}

fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        out.extend(b.iter().map(|y| x * y));
    }
    out
}

pub fn m_matrix(n: u32, d: usize, samples: u64, rng: &mut RngStream) -> Result<EstimationMoment> {
    check_nd(n, d)?;
    check_samples(samples, MIN_OPERATOR_SAMPLES)?;
    let dim = d * d * d * d;
    let estimate = mc_operator_mean_with(samples, dim, rng, |rng, acc| {
        let u = haar_unitary(d, rng)?;
        let a = vectorize(&u)?;
        let b = vectorize(&u.pow(n))?;
        add_rank_one(acc, &kron_vec(a.amplitudes(), b.amplitudes()));
        Ok(())
    })?;
    Ok(EstimationMoment { n, d, estimate })
}

/// `d²Tr(M̂²)` on the Monte Carlo mean `M̂`; biased upward by `O(d²/samples)`.
pub fn f_estimation(n: u32, d: usize, samples: u64, rng: &mut RngStream) -> Result<StrategyReport> {
    let seed = rng.seed();
    let moment = m_matrix(n, d, samples, rng)?;
    let (f, se) = moment.fidelity();
    let mut report = StrategyReport::sampled(Strategy::Estimation, d, n, (f, se, samples), seed);
    report.bias_warning = samples < BIAS_WARNING_SAMPLES;
    Ok(report)
}

pub fn estimation_channel_choi(
    u: &UnitaryGate,
    n: u32,
    samples: u64,
    rng: &mut RngStream,
) -> Result<ChoiMatrix> {
    m_matrix(n, u.dim(), samples, rng)?.channel_for(u)
}

#[derive(Clone, Debug)]
pub struct OrthonormalGateBasis {
    pub d: usize,
    pub gates: Vec<UnitaryGate>,
}

impl OrthonormalGateBasis {
    pub fn vectors(&self) -> Vec<VectorizedOp> {
        self.gates.iter().map(UnitaryGate::vectorize).collect()
    }
}

/// Shift/clock basis `X^a Z^b`, indexed `a·d + b`.
pub fn weyl_basis(d: usize) -> Result<OrthonormalGateBasis> {
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    let omega = |k: usize| {
        let t = 2.0 * core::f64::consts::PI * (k % d) as f64 / d as f64;
        C64::new(t.cos(), t.sin())
    };
    let mut gates = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            // (X^a Z^b)|k⟩ = ω^{bk}|k + a⟩
            let m = ComplexMatrix::from_fn(d, d, |row, col| {
                if row == (col + a) % d {
                    omega(b * col)
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            gates.push(UnitaryGate::new(m)?);
        }
    }
    Ok(OrthonormalGateBasis { d, gates })
}

/// Measure in the Weyl basis and prepare `U_jⁿ`:
/// `∫dU Σ_j |⟨⟨U_j|U⟩⟩|² |⟨⟨Uⁿ|U_jⁿ⟩⟩|²`.
pub fn f_estimation_onb(
    n: u32,
    d: usize,
    samples: u64,
    rng: &mut RngStream,
) -> Result<StrategyReport> {
    check_nd(n, d)?;
    check_samples(samples, MIN_OPERATOR_SAMPLES)?;
    let seed = rng.seed();
    let basis = weyl_basis(d)?;
    let powers: Vec<ComplexMatrix> = basis.gates.iter().map(|g| g.matrix().pow(n)).collect();
    let est = mc_scalar_mean(samples, rng, |rng| {
        let u = haar_unitary(d, rng)?;
        let un = u.pow(n);
        let mut total = 0.0;
        let mut weight = 0.0;
        for (g, gn) in basis.gates.iter().zip(&powers) {
            let w = overlap_sq(g.matrix(), &u);
            weight += w;
            total += w * overlap_sq(&un, gn);
        }
        if (weight - 1.0).abs() > 1e-10 {
            return Err(Error::BadTrace {
                expected: 1.0,
                found: weight,
            });
        }
        Ok(total)
    })?;
    Ok(StrategyReport::sampled(
        Strategy::EstimationOnb,
        d,
        n,
        (est.mean, est.stderr, est.samples),
        seed,
    ))
}

/// `p + (1 − p)/d²`, which equals `min(n,d)/d²`.
pub fn f_identity(n: u32, d: usize) -> Result<StrategyReport> {
    let p = p_param(n, d)?.value;
    let d2 = (d * d) as f64;
    Ok(StrategyReport::exact(
        Strategy::Identity,
        d,
        n,
        p + (1.0 - p) / d2,
    ))
}

/// `∫dU |⟨⟨Uⁿ|U⟩⟩|²`.
pub fn f_direct_mc(n: u32, d: usize, samples: u64, rng: &mut RngStream) -> Result<StrategyReport> {
    check_nd(n, d)?;
    let seed = rng.seed();
    let est = mc_scalar_mean(samples, rng, |rng| {
        let u = haar_unitary(d, rng)?;
        Ok(overlap_sq(&u.pow(n), &u))
    })?;
    Ok(StrategyReport::sampled(
        Strategy::DirectMc,
        d,
        n,
        (est.mean, est.stderr, est.samples),
        seed,
    ))
}

/// `1` for `n = 1`, else `min(n−1, d)/d²`.
pub fn f_direct_closed(n: u32, d: usize) -> Result<StrategyReport> {
    check_nd(n, d)?;
    let f = if n == 1 {
        1.0
    } else {
        ((n - 1) as usize).min(d) as f64 / (d * d) as f64
    };
    Ok(StrategyReport::exact(Strategy::Direct, d, n, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bell, depolarizing_parameter_of, fidelity_to_unitary};
    use crate::linalg::{partial_trace, FactorizedSpace};
    use proptest::{prop_assert, proptest};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn p_parameter_values() {
        for d in 2..=6 {
            assert_eq!(p_param(1, d).unwrap().value, 0.0);
        }
        assert!(close(p_param(3, 2).unwrap().value, 1.0 / 3.0));
        assert!(close(p_param(2, 3).unwrap().value, 1.0 / 8.0));
        assert!(close(p_param(9, 3).unwrap().value, 2.0 / 8.0));
        assert!(p_param(0, 2).is_err());
        assert!(p_param(1, 1).is_err());
    }

    #[test]
    fn random_guess_closed_form() {
        assert!(close(f_random(1, 2).unwrap().fidelity, 0.25));
        assert!(close(f_random(3, 2).unwrap().fidelity, 1.0 / 3.0));
        assert_eq!(f_random(5, 2).unwrap().fidelity, f_random(2, 2).unwrap().fidelity);
        for d in 2..=4 {
            assert!(close(f_random(1, d).unwrap().fidelity, 1.0 / (d * d) as f64));
        }
        let r = f_random(4, 3).unwrap();
        assert_eq!((r.stderr, r.samples, r.seed), (0.0, 0, None));
    }

    #[test]
    fn identity_closed_form() {
        for n in 2..=8 {
            assert!(close(f_identity(n, 2).unwrap().fidelity, 0.5));
        }
        for n in 3..=8 {
            assert!(close(f_identity(n, 3).unwrap().fidelity, 1.0 / 3.0));
        }
        for d in 2..=4 {
            assert!(close(f_identity(1, d).unwrap().fidelity, 1.0 / (d * d) as f64));
            assert!(close(f_identity(2 * d as u32, d).unwrap().fidelity, 1.0 / d as f64));
        }
    }

    #[test]
    fn direct_closed_form() {
        for d in 2..=4 {
            assert_eq!(f_direct_closed(1, d).unwrap().fidelity, 1.0);
            for n in d as u32 + 1..=8 {
                let a = f_direct_closed(n, d).unwrap().fidelity;
                assert!(close(a, f_identity(n, d).unwrap().fidelity));
                assert!(close(a, 1.0 / d as f64));
            }
        }
        assert!(close(f_direct_closed(2, 2).unwrap().fidelity, 0.25));
        assert!(close(f_direct_closed(3, 2).unwrap().fidelity, 0.5));
    }

    #[test]
    fn closed_forms_plateau_and_degrade_with_d() {
        for d in 2..=4usize {
            for n in d as u32..=8 {
                assert_eq!(f_random(n, d).unwrap().fidelity, f_random(d as u32, d).unwrap().fidelity);
                assert_eq!(
                    f_identity(n, d).unwrap().fidelity,
                    f_identity(d as u32, d).unwrap().fidelity
                );
            }
        }
        for n in 1..=8 {
            for d in 2..=5 {
                assert!(f_random(n, d + 1).unwrap().fidelity < f_random(n, d).unwrap().fidelity);
                assert!(
                    f_identity(n, d + 1).unwrap().fidelity < f_identity(n, d).unwrap().fidelity
                );
            }
        }
    }

    #[test]
    fn depolarizing_identity_is_algebraic() {
        for d in 2..=4usize {
            let d2 = (d * d) as f64;
            for n in 1..=8u32 {
                let p = p_param(n, d).unwrap().value;
                let m = (n as usize).min(d) as f64;
                let lhs = p * m / d2 + (1.0 - p) / d2;
                assert!(close(lhs, f_random(n, d).unwrap().fidelity));
                assert!(close(f_identity(n, d).unwrap().fidelity, m / d2));
            }
        }
    }

    #[test]
    fn depolarizing_iterator_parameters() {
        let r = depolarizing_iterator_choi(1, 3).unwrap();
        assert!(r.matrix().distance(&ComplexMatrix::identity(9).scale(1.0 / 9.0)) < 1e-15);
        for (n, d) in [(2, 2), (3, 2), (2, 3), (7, 4)] {
            let r = depolarizing_iterator_choi(n, d).unwrap();
            let p = depolarizing_parameter_of(&r).unwrap();
            assert!(close(p, p_param(n, d).unwrap().value));
        }
    }

    #[test]
    fn depolarizing_iterator_matches_random_guess() {
        let r = depolarizing_iterator_choi(3, 2).unwrap();
        let est = mc_scalar_mean(100_000, &mut RngStream::new(5, 0), |rng| {
            let u = UnitaryGate::new(haar_unitary(2, rng)?)?.pow(3);
            fidelity_to_unitary(&r, &u)
        })
        .unwrap();
        assert!(est.agrees_with(1.0 / 3.0, 4.0), "{est:?}");
    }

    #[test]
    fn random_mc_matches_closed_form() {
        for (n, d, target) in [(3, 2, 1.0 / 3.0), (1, 3, 1.0 / 9.0)] {
            let r = f_random_mc(n, d, 100_000, &mut RngStream::new(11, n as u64)).unwrap();
            assert!((r.fidelity - target).abs() <= 4.0 * r.stderr, "{r:?}");
            assert_eq!(r.strategy, Strategy::RandomMc);
            assert_eq!(r.seed, Some(11));
        }
        let a = f_random_mc(2, 2, 500, &mut RngStream::new(3, 1)).unwrap();
        let b = f_random_mc(2, 2, 500, &mut RngStream::new(3, 1)).unwrap();
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
        assert_eq!(a, b);
        assert!(f_random_mc(2, 2, 99, &mut RngStream::new(3, 1)).is_err());
    }

    #[test]
    fn direct_mc_matches_closed_form() {
        for (n, d) in [(2, 2), (3, 2), (4, 2), (3, 3), (4, 3)] {
            let r = f_direct_mc(n, d, 50_000, &mut RngStream::new(13, n as u64)).unwrap();
            let target = f_direct_closed(n, d).unwrap().fidelity;
            assert!((r.fidelity - target).abs() <= 4.0 * r.stderr, "{r:?} vs {target}");
        }
        let r = f_direct_mc(1, 3, 1_000, &mut RngStream::new(13, 0)).unwrap();
        assert!((r.fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moment_marginals() {
        let (n, d) = (2u32, 2usize);
        let m = m_matrix(n, d, 20_000, &mut RngStream::new(17, 0)).unwrap();
        let mat = m.matrix();
        assert!(mat.is_hermitian(1e-12));
        assert!((mat.trace().re - 1.0).abs() < 1e-10);

        let space = FactorizedSpace::new(&[("a", d * d), ("b", d * d)]).unwrap();
        let d2 = (d * d) as f64;
        let first = partial_trace(mat, &space, &["b"]).unwrap();
        let flat = ComplexMatrix::identity(d * d).scale(1.0 / d2);
        assert!(first.distance(&flat) <= 4.0 * m.norm_stderr(), "{}", first.distance(&flat));

        let p = p_param(n, d).unwrap().value;
        let second = partial_trace(mat, &space, &["a"]).unwrap();
        let mut expect = bell(d).projector().scale(p);
        expect.axpy((1.0 - p) / d2, &ComplexMatrix::identity(d * d));
        assert!(second.distance(&expect) <= 4.0 * m.norm_stderr());
    }

    #[test]
    fn power_moment_matches_depolarizing_form() {
        // MC mean of |Uⁿ⟩⟩⟨⟨Uⁿ| against p|1⟩⟩⟨⟨1| + (1−p)·1/d².
        let (n, d) = (2u32, 3usize);
        let est = crate::haar::mc_operator_mean(10_000, &mut RngStream::new(19, 0), |rng| {
            let u = haar_unitary(d, rng)?;
            Ok(vectorize(&u.pow(n))?.projector())
        })
        .unwrap();
        let p = p_param(n, d).unwrap().value;
        assert!(close(p, 1.0 / 8.0));
        let mut expect = bell(d).projector().scale(p);
        expect.axpy((1.0 - p) / 9.0, &ComplexMatrix::identity(9));
        assert!(est.mean.distance(&expect) <= 4.0 * est.norm_stderr);
    }

    #[test]
    fn estimation_beats_random_guess_at_n1() {
        let r = f_estimation(1, 2, 100_000, &mut RngStream::new(23, 0)).unwrap();
        assert!(r.fidelity > 0.25 + 4.0 * r.stderr && r.fidelity < 1.0, "{r:?}");
        assert!(!r.bias_warning);
        let small = f_estimation(1, 2, 2_000, &mut RngStream::new(23, 0)).unwrap();
        assert!(small.bias_warning);
        assert!(f_estimation(1, 2, 999, &mut RngStream::new(23, 0)).is_err());
    }

    #[test]
    fn estimation_channel_for_identity_gate() {
        let d = 2;
        let u = UnitaryGate::new(ComplexMatrix::identity(d)).unwrap();
        let r = estimation_channel_choi(&u, 1, 10_000, &mut RngStream::new(29, 0)).unwrap();
        assert!((r.matrix().trace().re - 1.0).abs() < 1e-10);
        let overlap = r.matrix().expectation(bell(d).amplitudes()).re;
        assert!(overlap > 0.25 + 0.1, "{overlap}");
        let rho = crate::channels::DensityMatrix::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let out = crate::channels::apply_choi(&r, &rho).unwrap();
        assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn estimation_channel_reproduces_functional() {
        let (n, d) = (2u32, 2usize);
        let m = m_matrix(n, d, 20_000, &mut RngStream::new(31, 0)).unwrap();
        let (f, se) = m.fidelity();
        let est = mc_scalar_mean(5_000, &mut RngStream::new(31, 1), |rng| {
            let u = UnitaryGate::new(haar_unitary(d, rng)?)?;
            fidelity_to_unitary(&m.channel_for(&u)?, &u.pow(n))
        })
        .unwrap();
        let tol = 4.0 * (se * se + est.stderr * est.stderr).sqrt() + 4.0 * m.norm_stderr();
        assert!((est.mean - f).abs() <= tol, "{} vs {f} (tol {tol})", est.mean);
    }

    #[test]
    fn weyl_basis_is_orthonormal_and_complete() {
        for d in 2..=4 {
            let b = weyl_basis(d).unwrap();
            assert_eq!(b.gates.len(), d * d);
            let vs = b.vectors();
            let mut completeness = ComplexMatrix::zeros(d * d, d * d);
            for (j, vj) in vs.iter().enumerate() {
                for (k, vk) in vs.iter().enumerate() {
                    let g = vj.inner(vk);
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((g - C64::new(expect, 0.0)).norm() < 1e-12);
                }
                completeness.axpy(1.0, &vj.projector());
            }
            assert!(completeness.distance(&ComplexMatrix::identity(d * d)) < 1e-10);
        }
        let b = weyl_basis(2).unwrap();
        let x = b.gates[2].matrix();
        assert!((x[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let z = b.gates[1].matrix();
        assert!((z[(1, 1)] + C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn onb_estimation_between_random_and_one() {
        let r = f_estimation_onb(1, 2, 100_000, &mut RngStream::new(37, 0)).unwrap();
        assert!(r.fidelity > 0.25 + 4.0 * r.stderr && r.fidelity < 1.0, "{r:?}");
        let a = f_estimation_onb(2, 3, 1_000, &mut RngStream::new(37, 4)).unwrap();
        let b = f_estimation_onb(2, 3, 1_000, &mut RngStream::new(37, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dominance_chain_d2() {
        for n in 2..=4u32 {
            let e = f_estimation(n, 2, 10_000, &mut RngStream::new(41, n as u64)).unwrap();
            let r = f_random(n, 2).unwrap().fidelity;
            let i = f_identity(n, 2).unwrap().fidelity;
            assert!(e.fidelity >= r - 4.0 * e.stderr, "{e:?}");
            assert!(i >= e.fidelity - 4.0 * e.stderr, "{e:?}");
        }
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.as_str().parse::<Strategy>().unwrap(), s);
        }
        assert!("iden".parse::<Strategy>().is_err());
    }

    proptest! {
        #[test]
        fn closed_forms_lie_in_unit_interval(n in 1u32..40, d in 2usize..12) {
            for f in [f_random(n, d), f_identity(n, d), f_direct_closed(n, d)] {
                let f = f.unwrap().fidelity;
                prop_assert!((0.0..=1.0).contains(&f));
            }
            let p = p_param(n, d).unwrap().value;
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(f_identity(n, d).unwrap().fidelity >= f_random(n, d).unwrap().fidelity - 1e-15);
        }
    }
}
