//! Seeded Haar sampling and Monte Carlo estimators over the unitary group.
//!
//! Unitaries are drawn by the QR method: a Ginibre matrix `Z` (i.i.d. standard
//! complex normal entries) is factored as `Z = QR` and `U = Q·D` with
//! `D = diag(R_kk / |R_kk|)`, which removes the phase ambiguity of the
//! factorization and makes `U` exactly Haar distributed.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::linalg::{qr_unitary_factor, ComplexMatrix};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Number of blocks used by the block jackknife.
pub const JACKKNIFE_BLOCKS: usize = 20;

const MAX_QR_RETRIES: usize = 32;

/// Reproducible random stream identified by `(seed, stream_index)`.
///
/// Streams with the same seed but different indices are independent ChaCha8
/// streams; parallel workers must each take their own index.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            seed,
            stream_index,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on `(0, 1]` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal variate (Box–Muller; the second variate is cached).
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Standard complex normal: real and imaginary parts each `N(0, 1/2)`.
    pub fn complex_normal(&mut self) -> C64 {
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let re = self.standard_normal() * s;
        let im = self.standard_normal() * s;
        C64::new(re, im)
    }
}

/// `d×d` matrix of i.i.d. standard complex normal entries.
pub fn ginibre(d: usize, rng: &mut RngStream) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |_, _| rng.complex_normal())
}

/// Haar-distributed `d×d` unitary.
pub fn haar_unitary(d: usize, rng: &mut RngStream) -> Result<ComplexMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    for _ in 0..MAX_QR_RETRIES {
        let z = ginibre(d, rng);
        let (mut q, r) = match qr_unitary_factor(&z) {
            Ok(qr) => qr,
            Err(Error::RankDeficient) => continue,
            Err(e) => return Err(e),
        };
        for k in 0..d {
            let rkk = r[(k, k)];
            let phase = rkk / rkk.norm();
            for i in 0..d {
                q[(i, k)] *= phase;
            }
        }
        return Ok(q);
    }
    Err(Error::RankDeficient)
}

/// Mean of i.i.d. scalar samples with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `√samples`.
    pub stderr: f64,
    pub samples: u64,
}

/// Streaming mean/variance accumulator (Welford), mergeable across streams.
#[derive(Clone, Copy, Debug, Default)]
pub struct ScalarAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl ScalarAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Pools another accumulator into this one (Chan et al. update).
    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> ScalarEstimate {
        let stderr = if self.count > 1 {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        } else {
            0.0
        };
        ScalarEstimate {
            mean: self.mean,
            stderr,
            samples: self.count,
        }
    }
}

impl ScalarEstimate {
    /// Pools estimates from independent streams, weighting by sample count.
    pub fn pool(parts: &[ScalarEstimate]) -> ScalarEstimate {
        let n: u64 = parts.iter().map(|p| p.samples).sum();
        if n == 0 {
            return ScalarEstimate {
                mean: 0.0,
                stderr: 0.0,
                samples: 0,
            };
        }
        let mean = parts.iter().map(|p| p.mean * p.samples as f64).sum::<f64>() / n as f64;
        // Reconstruct each part's sum of squared deviations from its stderr.
        let mut m2 = 0.0;
        for p in parts {
            let k = p.samples as f64;
            let var = p.stderr * p.stderr * k;
            m2 += var * (k - 1.0).max(0.0) + k * (p.mean - mean) * (p.mean - mean);
        }
        let stderr = if n > 1 {
            (m2 / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        ScalarEstimate {
            mean,
            stderr,
            samples: n,
        }
    }

    /// `|mean − target| ≤ k · stderr`, with a floor for zero-variance cases.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr + 1e-12
    }
}

/// Scalar Monte Carlo mean of `f` over `samples` draws.
pub fn mc_scalar_mean(
    samples: u64,
    rng: &mut RngStream,
    mut f: impl FnMut(&mut RngStream) -> Result<f64>,
) -> Result<ScalarEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let mut acc = ScalarAccumulator::new();
    for _ in 0..samples {
        acc.push(f(rng)?);
    }
    Ok(acc.estimate())
}

/// `∫dU |Tr(U^n)|²`, which equals `min(n, d)` for Haar `U`.
pub fn trace_moment(d: usize, n: u32, samples: u64, rng: &mut RngStream) -> Result<ScalarEstimate> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument("need d ≥ 1 and n ≥ 1".into()));
    }
    if samples < 100 {
        return Err(Error::InvalidArgument("trace_moment needs ≥ 100 samples".into()));
    }
    mc_scalar_mean(samples, rng, |rng| {
        let u = haar_unitary(d, rng)?;
        Ok(u.pow(n).trace().norm_sqr())
    })
}

/// Operator-valued Monte Carlo mean with a block-jackknife error proxy.
#[derive(Clone, Debug)]
pub struct OperatorEstimate {
    /// Hermitized arithmetic mean.
    pub mean: ComplexMatrix,
    pub samples: u64,
    /// Jackknife estimate of the Frobenius-norm error of `mean`.
    pub norm_stderr: f64,
    /// Hermitized means of the jackknife blocks.
    pub block_means: Vec<ComplexMatrix>,
    block_sizes: Vec<u64>,
}

impl OperatorEstimate {
    /// Jackknife standard error of a scalar functional of the mean.
    pub fn functional_stderr(&self, f: impl Fn(&ComplexMatrix) -> f64) -> f64 {
        let b = self.block_means.len();
        if b < 2 {
            return 0.0;
        }
        let total = self.samples as f64;
        let leave_out: Vec<f64> = (0..b)
            .map(|k| {
                let nk = self.block_sizes[k] as f64;
                let mut m = self.mean.scale(total / (total - nk));
                m.axpy(-nk / (total - nk), &self.block_means[k]);
                f(&m)
            })
            .collect();
        let avg = leave_out.iter().sum::<f64>() / b as f64;
        let ss: f64 = leave_out.iter().map(|x| (x - avg) * (x - avg)).sum();
        ((b as f64 - 1.0) / b as f64 * ss).sqrt()
    }
}

/// Monte Carlo mean of a matrix-valued sampler, Hermitized as `(M + M†)/2`.
///
/// The `samples` draws are split into [`JACKKNIFE_BLOCKS`] contiguous blocks
/// (sizes differ by at most one); `norm_stderr` is the jackknife estimate of
/// the Frobenius error of the mean.
pub fn mc_operator_mean(
    samples: u64,
    rng: &mut RngStream,
    mut sampler: impl FnMut(&mut RngStream) -> Result<ComplexMatrix>,
) -> Result<OperatorEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let mut first = Some(sampler(rng)?);
    let dim = first.as_ref().map_or(0, |m| m.rows());
    mc_operator_mean_with(samples, dim, rng, |rng, acc| {
        let m = match first.take() {
            Some(m) => m,
            None => sampler(rng)?,
        };
        if (m.rows(), m.cols()) != (acc.rows(), acc.cols()) {
            return Err(Error::DimensionMismatch {
                expected: acc.rows(),
                found: m.rows(),
            });
        }
        acc.axpy(1.0, &m);
        Ok(())
    })
}

/// Like [`mc_operator_mean`] for a known dimension, with the sampler adding
/// its draw into the block accumulator itself so large rank-one terms are
/// never materialized.
pub fn mc_operator_mean_with(
    samples: u64,
    dim: usize,
    rng: &mut RngStream,
    mut add_sample: impl FnMut(&mut RngStream, &mut ComplexMatrix) -> Result<()>,
) -> Result<OperatorEstimate> {
    let blocks = JACKKNIFE_BLOCKS as u64;
    if samples < blocks {
        return Err(Error::InvalidArgument(alloc::format!(
            "operator means need at least {blocks} samples"
        )));
    }
    let mut block_means = Vec::with_capacity(JACKKNIFE_BLOCKS);
    let mut block_sizes = Vec::with_capacity(JACKKNIFE_BLOCKS);
    for b in 0..blocks {
        let size = samples / blocks + u64::from(b < samples % blocks);
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for _ in 0..size {
            add_sample(rng, &mut acc)?;
        }
        block_means.push(acc.scale(1.0 / size as f64).hermitize());
        block_sizes.push(size);
    }
    let mut mean = ComplexMatrix::zeros(dim, dim);
    for (m, &k) in block_means.iter().zip(&block_sizes) {
        mean.axpy(k as f64 / samples as f64, m);
    }
    let b = JACKKNIFE_BLOCKS as f64;
    let total = samples as f64;
    let mut ss = 0.0;
    for (m, &k) in block_means.iter().zip(&block_sizes) {
        // Leave-one-out mean minus full mean = (mean − m_k)·n_k/(N − n_k).
        let w = k as f64 / (total - k as f64);
        ss += (m.distance(&mean) * w).powi(2);
    }
    let norm_stderr = ((b - 1.0) / b * ss).sqrt();
    Ok(OperatorEstimate {
        mean,
        samples,
        norm_stderr,
        block_means,
        block_sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream_is_bit_identical() {
        let a = ginibre(3, &mut RngStream::new(42, 0));
        let b = ginibre(3, &mut RngStream::new(42, 0));
        assert_eq!(a, b);
        let c = ginibre(3, &mut RngStream::new(42, 1));
        assert_ne!(a, c);
    }

    #[test]
    fn ginibre_moments() {
        let mut rng = RngStream::new(1, 0);
        let mut re = ScalarAccumulator::new();
        let mut im = ScalarAccumulator::new();
        let mut sq = ScalarAccumulator::new();
        for _ in 0..100_000 {
            let z = ginibre(1, &mut rng)[(0, 0)];
            re.push(z.re);
            im.push(z.im);
            sq.push(z.norm_sqr());
        }
        assert!(re.estimate().agrees_with(0.0, 4.0));
        assert!(im.estimate().agrees_with(0.0, 4.0));
        assert!(sq.estimate().agrees_with(1.0, 4.0));
    }

    #[test]
    fn one_dimensional_haar_is_a_phase() {
        let mut rng = RngStream::new(5, 0);
        for _ in 0..100 {
            let u = haar_unitary(1, &mut rng).unwrap();
            assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = RngStream::new(6, 0);
        for d in 2..=4 {
            for _ in 0..10_000 {
                let u = haar_unitary(d, &mut rng).unwrap();
                let dev = u.adjoint().matmul(&u).distance(&ComplexMatrix::identity(d));
                assert!(dev < 1e-10);
            }
        }
    }

    #[test]
    fn haar_first_moment_vanishes() {
        let mut rng = RngStream::new(7, 0);
        let n = 100_000;
        let mut sum = ComplexMatrix::zeros(2, 2);
        let mut entry = ScalarAccumulator::new();
        for _ in 0..n {
            let u = haar_unitary(2, &mut rng).unwrap();
            entry.push(u[(0, 1)].re);
            sum.axpy(1.0, &u);
        }
        // Each of the 8 real coordinates has variance 1/4 per sample.
        let stderr = (8.0 * 0.25 / n as f64).sqrt();
        assert!(sum.scale(1.0 / n as f64).frobenius_norm() < 4.0 * stderr);
        assert!(entry.estimate().agrees_with(0.0, 4.0));
    }

    #[test]
    fn trace_moment_targets() {
        for (d, n, seed) in [(2, 1, 11), (2, 5, 12), (3, 2, 13)] {
            let est = trace_moment(d, n, 100_000, &mut RngStream::new(seed, 0)).unwrap();
            let expected = n.min(d as u32) as f64;
            assert!(est.agrees_with(expected, 4.0), "d={d} n={n}: {est:?}");
        }
    }

    #[test]
    fn trace_moment_plateaus_at_dimension() {
        let d = 2;
        let ests: Vec<_> = (2..=5)
            .map(|n| trace_moment(d, n, 50_000, &mut RngStream::new(99, n as u64)).unwrap())
            .collect();
        for a in &ests {
            assert!(a.agrees_with(2.0, 4.0));
            for b in &ests {
                let comb = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                assert!((a.mean - b.mean).abs() <= 4.0 * comb);
            }
        }
    }

    #[test]
    fn left_invariance_of_trace_distribution() {
        // Tr(W·U) has the same second moment as Tr(U) for fixed unitary W.
        let mut rng = RngStream::new(8, 0);
        let w = haar_unitary(2, &mut rng).unwrap();
        let plain = mc_scalar_mean(100_000, &mut RngStream::new(8, 1), |rng| {
            Ok(haar_unitary(2, rng)?.trace().norm_sqr())
        })
        .unwrap();
        let shifted = mc_scalar_mean(100_000, &mut RngStream::new(8, 2), |rng| {
            Ok(w.matmul(&haar_unitary(2, rng)?).trace().norm_sqr())
        })
        .unwrap();
        let comb = (plain.stderr.powi(2) + shifted.stderr.powi(2)).sqrt();
        assert!((plain.mean - shifted.mean).abs() <= 4.0 * comb);
        assert!(shifted.agrees_with(1.0, 4.0));
    }

    #[test]
    fn constant_sampler_has_zero_error() {
        let c = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        let est = mc_operator_mean(1000, &mut RngStream::new(0, 0), |_| Ok(c.clone())).unwrap();
        assert!(est.mean.distance(&c) < 1e-15);
        assert!(est.norm_stderr < 1e-15);
    }

    #[test]
    fn dimension_drift_is_an_error() {
        let mut k = 0;
        let res = mc_operator_mean(100, &mut RngStream::new(0, 0), |_| {
            k += 1;
            Ok(ComplexMatrix::identity(if k > 50 { 3 } else { 2 }))
        });
        assert!(matches!(res, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn pooling_streams_matches_single_accumulator() {
        let mut whole = ScalarAccumulator::new();
        let mut parts = Vec::new();
        for s in 0..4u64 {
            let mut rng = RngStream::new(3, s);
            let mut acc = ScalarAccumulator::new();
            for _ in 0..1000 {
                let x = rng.standard_normal();
                acc.push(x);
                whole.push(x);
            }
            parts.push(acc.estimate());
        }
        let pooled = ScalarEstimate::pool(&parts);
        let direct = whole.estimate();
        assert!((pooled.mean - direct.mean).abs() < 1e-12);
        assert!((pooled.stderr - direct.stderr).abs() < 1e-12);
        assert_eq!(pooled.samples, 4000);
    }
}
