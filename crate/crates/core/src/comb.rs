//! One-slot quantum combs that turn a single use of `U` into an
//! approximation of `Uⁿ`, and the semidefinite program for the best one.
//!
//! Factors: `0` input, `1` to the slot, `2` from the slot, `3` output.
//! Combs are stored in the canonical order `(1, 3, 0, 2)`.

#[allow(unused_imports)]
use num_traits::Float;

use crate::channels::{bell, vectorize, ChoiMatrix, UnitaryGate};
use crate::haar::{
    haar_unitary, mc_operator_mean_with, mc_scalar_mean, OperatorEstimate, RngStream,
    ScalarEstimate,
};
use crate::linalg::{
    complexify_averaged, factor_permutation, hermitian_eigendecomposition, partial_trace,
    permute_factors, realify_unchecked, symmetric_eigendecomposition, tensor_identity,
    ComplexMatrix, FactorizedSpace, HERMITIAN_TOL, PSD_TOL,
};
use crate::{Error, Result, C64};

const ADAPT_ITERS: usize = 500;

pub const CANONICAL_ORDER: [&str; 4] = ["1", "3", "0", "2"];

fn canonical_space(d: usize) -> FactorizedSpace {
    FactorizedSpace::uniform(&CANONICAL_ORDER, d).expect("distinct labels")
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument("d must be at least 2".into()));
    }
    Ok(())
}

/// Comb `R` on `(1, 3, 0, 2)` with its first tooth `R1` on `(1, 0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombOperator {
    d: usize,
    r: ComplexMatrix,
    r1: ComplexMatrix,
}

impl CombOperator {
    /// Checks shapes, Hermiticity and positivity; causality is checked
    /// separately by [`causality_residuals`].
    pub fn new(d: usize, r: ComplexMatrix, r1: ComplexMatrix) -> Result<Self> {
        check_d(d)?;
        for (m, dim) in [(&r, d.pow(4)), (&r1, d * d)] {
            let n = m.ensure_square()?;
            if n != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: n,
                });
            }
            let dev = m.hermiticity_deviation();
            if dev > HERMITIAN_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let min = hermitian_eigendecomposition(m)?.min();
            if min < -PSD_TOL * m.frobenius_norm().max(1.0) {
                return Err(Error::NotPsd(min));
            }
        }
        Ok(Self {
            d,
            r: r.hermitize(),
            r1: r1.hermitize(),
        })
    }

    /// Builds the comb with `R1 = Tr₂Tr₃ R`.
    pub fn from_matrix(d: usize, r: ComplexMatrix) -> Result<Self> {
        check_d(d)?;
        let r1 = partial_trace(&r, &canonical_space(d), &["3", "2"])?;
        Self::new(d, r, r1)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.r
    }

    pub fn reduced(&self) -> &ComplexMatrix {
        &self.r1
    }

    /// `t·self + (1 − t)·other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        let mut r = self.r.scale(t);
        r.axpy(1.0 - t, &other.r);
        let mut r1 = self.r1.scale(t);
        r1.axpy(1.0 - t, &other.r1);
        Self::new(self.d, r, r1)
    }
}

/// `(‖Tr₃R − (1₂/d)⊗R1‖_F, ‖Tr₁R1 − 1₀/d‖_F)`.
pub fn causality_residuals(comb: &CombOperator) -> Result<(f64, f64)> {
    let d = comb.d;
    let t3 = partial_trace(&comb.r, &canonical_space(d), &["3"])?;
    let space_102 = FactorizedSpace::uniform(&["1", "0", "2"], d)?;
    let lifted = tensor_identity(&comb.r1, &space_102, &["2"])?.scale(1.0 / d as f64);
    let r_a = t3.distance(&lifted);
    let space_10 = FactorizedSpace::uniform(&["1", "0"], d)?;
    let t1 = partial_trace(&comb.r1, &space_10, &["1"])?;
    let r_b = t1.distance(&ComplexMatrix::identity(d).scale(1.0 / d as f64));
    Ok((r_a, r_b))
}

/// Choi matrix of the comb with `u` plugged into its slot,
/// `d²⟨⟨U*₂₁|R|U*₂₁⟩⟩`, on `(3, 0)`.
pub fn contract(comb: &CombOperator, u: &UnitaryGate) -> Result<ChoiMatrix> {
    let d = comb.d;
    ChoiMatrix::new(contract_raw(comb, u)?, d, d)
}

fn contract_raw(comb: &CombOperator, u: &UnitaryGate) -> Result<ComplexMatrix> {
    let d = comb.d;
    if u.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: u.dim(),
        });
    }
    let d2 = d * d;
    let r = permute_factors(&comb.r, &canonical_space(d), &["2", "1", "3", "0"])?;
    let w = vectorize(&u.matrix().conj())?;
    let w = w.amplitudes();
    let mut out = ComplexMatrix::zeros(d2, d2);
    for a in 0..d2 {
        for b in 0..d2 {
            let c = w[a].conj() * w[b] * (d2 as f64);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for x in 0..d2 {
                for y in 0..d2 {
                    out[(x, y)] += c * r[(a * d2 + x, b * d2 + y)];
                }
            }
        }
    }
    Ok(out.hermitize())
}

/// `(1₁/d) ⊗ |1⟩⟩⟨⟨1|₃₀ ⊗ (1₂/d)`: discard the slot, output the input.
pub fn identity_strategy_comb(d: usize) -> Result<CombOperator> {
    check_d(d)?;
    let half = ComplexMatrix::identity(d).scale(1.0 / d as f64);
    let r = half.kron(&bell(d).projector()).kron(&half);
    CombOperator::from_matrix(d, r)
}

/// `|1⟩⟩⟨⟨1|₁₀ ⊗ |1⟩⟩⟨⟨1|₃₂`: send the input through the slot once.
pub fn direct_strategy_comb(d: usize) -> Result<CombOperator> {
    check_d(d)?;
    let b = bell(d).projector();
    let space = FactorizedSpace::uniform(&["1", "0", "3", "2"], d)?;
    let r = permute_factors(&b.kron(&b), &space, &CANONICAL_ORDER)?;
    CombOperator::from_matrix(d, r)
}

/// Monte Carlo estimate of `M̃_n = d²∫dU |Uⁿ₃₀⟩⟩⟨⟨Uⁿ₃₀| ⊗ |U*₂₁⟩⟩⟨⟨U*₂₁|`
/// in canonical order, so that the comb fidelity is `Tr(R·M̃_n)`.
#[derive(Clone, Debug)]
pub struct ObjectiveMatrix {
    pub d: usize,
    pub n: u32,
    pub estimate: OperatorEstimate,
}

impl ObjectiveMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.estimate.mean
    }

    pub fn samples(&self) -> u64 {
        self.estimate.samples
    }

    pub fn norm_stderr(&self) -> f64 {
        self.estimate.norm_stderr
    }

    /// `Tr(R·M̃)`.
    pub fn value(&self, comb: &CombOperator) -> f64 {
        comb.r.trace_product(self.matrix()).re
    }

    /// Jackknife standard error of [`ObjectiveMatrix::value`] for a fixed comb.
    pub fn value_stderr(&self, comb: &CombOperator) -> f64 {
        self.estimate
            .functional_stderr(|m| comb.r.trace_product(m).re)
    }
}

pub fn build_objective(
    n: u32,
    d: usize,
    samples: u64,
    rng: &mut RngStream,
) -> Result<ObjectiveMatrix> {
    check_d(d)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if samples < 1_000 {
        return Err(Error::InvalidArgument("objective needs ≥ 1000 samples".into()));
    }
    let sample_space = FactorizedSpace::uniform(&["3", "0", "2", "1"], d)?;
    let perm = factor_permutation(&sample_space, &CANONICAL_ORDER)?;
    let dim = d.pow(4);
    let scale = d as f64;
    let mut v = alloc::vec![C64::new(0.0, 0.0); dim];
    let estimate = mc_operator_mean_with(samples, dim, rng, |rng, acc| {
        let u = haar_unitary(d, rng)?;
        let a = vectorize(&u.pow(n))?;
        let b = vectorize(&u.conj())?;
        let mut k = 0;
        for x in a.amplitudes() {
            for y in b.amplitudes() {
                v[perm[k]] = x * y * scale;
                k += 1;
            }
        }
        let data = acc.as_mut_slice();
        for (i, vi) in v.iter().enumerate() {
            for (o, vj) in data[i * dim..(i + 1) * dim].iter_mut().zip(&v) {
                *o += vi * vj.conj();
            }
        }
        Ok(())
    })?;
    Ok(ObjectiveMatrix { d, n, estimate })
}

/// `∫dU ⟨⟨Uⁿ| C★U |Uⁿ⟩⟩`, sampled directly through [`contract`].
pub fn comb_fidelity_mc(
    comb: &CombOperator,
    n: u32,
    samples: u64,
    rng: &mut RngStream,
) -> Result<ScalarEstimate> {
    let d = comb.d;
    mc_scalar_mean(samples, rng, |rng| {
        let u = UnitaryGate::new(haar_unitary(d, rng)?)?;
        let c = contract_raw(comb, &u)?;
        Ok(c.expectation(u.pow(n).vectorize().amplitudes()).re)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    InfeasibleNumerics,
}

impl SdpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIter => "max_iter",
            SdpStatus::InfeasibleNumerics => "infeasible_numerics",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-9,
            tol_gap: 1e-4,
            max_iter: 5_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub comb: CombOperator,
    pub primal_value: f64,
    /// Certified upper bound on the optimum.
    pub upper_bound: f64,
    pub gap: f64,
    pub feasibility_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

/// Linear projections onto the comb constraints in canonical order.
struct Constraints {
    d: usize,
    full: FactorizedSpace,
    s102: FactorizedSpace,
    s10: FactorizedSpace,
}

impl Constraints {
    fn new(d: usize) -> Result<Self> {
        Ok(Self {
            d,
            full: canonical_space(d),
            s102: FactorizedSpace::uniform(&["1", "0", "2"], d)?,
            s10: FactorizedSpace::uniform(&["1", "0"], d)?,
        })
    }

    /// Returns `(P₃Y, P₂P₃Y, P₁P₂P₃Y)` with `P_S(Y) = (1_S/d) ⊗ Tr_S Y`.
    fn marginals(&self, y: &ComplexMatrix) -> Result<[ComplexMatrix; 3]> {
        let d = self.d as f64;
        let t3 = partial_trace(y, &self.full, &["3"])?;
        let t23 = partial_trace(&t3, &self.s102, &["2"])?;
        let t123 = partial_trace(&t23, &self.s10, &["1"])?;
        let p3 = tensor_identity(&t3, &self.full, &["3"])?.scale(1.0 / d);
        let p23 = tensor_identity(&t23, &self.full, &["3", "2"])?.scale(1.0 / (d * d));
        let p123 = tensor_identity(&t123, &self.full, &["3", "2", "1"])?.scale(1.0 / (d * d * d));
        Ok([p3, p23, p123])
    }

    /// Orthogonal projection onto the affine comb subspace.
    fn project_affine(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let [p3, p23, p123] = self.marginals(y)?;
        let dim = y.rows();
        let mut out = y - &p3;
        out.axpy(1.0, &p23);
        out.axpy(-1.0, &p123);
        for i in 0..dim {
            out[(i, i)] += 1.0 / dim as f64;
        }
        Ok(out)
    }

    /// Projection onto the constraint normals, `(Q_a + Q_b)Y`.
    fn project_normal(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        let [mut p3, p23, p123] = self.marginals(y)?;
        p3.axpy(-1.0, &p23);
        p3.axpy(1.0, &p123);
        Ok(p3)
    }
}

fn psd_projection(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = symmetric_eigendecomposition(&realify_unchecked(h))?;
    Ok(complexify_averaged(&eig.reconstruct_with(|l| l.max(0.0))))
}

fn extreme_eigenvalues(h: &ComplexMatrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigendecomposition(&realify_unchecked(&h.hermitize()))?;
    let min = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((min, max))
}

/// Hermitizes the objective and clips its negative eigenvalues.
fn prepare_objective(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = m.hermitize();
    let eig = hermitian_eigendecomposition(&h)?;
    if eig.min() >= 0.0 {
        return Ok(h);
    }
    Ok(eig.reconstruct_with(|l| l.max(0.0)).hermitize())
}

/// Maximizes `Tr(R·M̃)` over causal combs by ADMM on the split
/// `R ∈ affine constraints`, `Z ⪰ 0`, `R = Z`.
///
/// Every few iterations the PSD iterate is projected onto the constraints and
/// mixed with `1/d⁴` until positive, giving a feasible comb and a lower bound.
/// The scaled dual yields `N` in the span of the constraint normals, and
/// `Tr(N)/d⁴ + λ_max(M̃ − N)` bounds the optimum from above.
pub fn solve_optimal(obj: &ObjectiveMatrix, settings: &SdpSettings) -> Result<SdpSolution> {
    let d = obj.d;
    check_d(d)?;
    if !(settings.tol_feas > 0.0 && settings.tol_gap > 0.0) {
        return Err(Error::InvalidArgument("tolerances must be positive".into()));
    }
    let dim = d.pow(4);
    let m = prepare_objective(obj.matrix())?;
    let cons = Constraints::new(d)?;
    let floor = ComplexMatrix::identity(dim).scale(1.0 / dim as f64);

    let check_every = if d <= 2 { 10 } else { 20 };
    let mut rho = m.frobenius_norm().max(1e-3);
    let mut z = floor.clone();
    let mut u = ComplexMatrix::zeros(dim, dim);

    let mut best: Option<(f64, ComplexMatrix)> = None;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=settings.max_iter.max(1) {
        iterations = it;
        let mut y = &z - &u;
        y.axpy(1.0 / rho, &m);
        let x = cons.project_affine(&y)?;
        let z_prev = z;
        let mut xu = &x + &u;
        xu = xu.hermitize();
        z = psd_projection(&xu)?;
        u = &xu - &z;

        let r_primal = x.distance(&z);
        let r_dual = rho * z.distance(&z_prev);

        if it % check_every == 0 || it == settings.max_iter {
            if let Ok((value, comb)) = repair(&cons, &z, &floor, &m) {
                if best.as_ref().is_none_or(|(v, _)| value > *v) {
                    best = Some((value, comb));
                }
            }
            let mut w = m.clone();
            w.axpy(-rho, &u);
            let nrm = cons.project_normal(&w)?;
            let (_, lmax) = extreme_eigenvalues(&(&m - &nrm))?;
            let bound = nrm.trace().re / dim as f64 + lmax;
            if bound < upper {
                upper = bound;
            }
            if let Some((v, _)) = &best {
                if upper - v <= settings.tol_gap {
                    break;
                }
            }
        }

        // Residual balancing, frozen later on so the iteration cannot cycle.
        if it % check_every == 0 && it <= ADAPT_ITERS {
            if r_primal > 10.0 * r_dual {
                rho *= 2.0;
                u = u.scale(0.5);
            } else if r_dual > 10.0 * r_primal {
                rho *= 0.5;
                u = u.scale(2.0);
            }
        }
    }

    let Some((primal_value, r)) = best else {
        let comb = identity_strategy_comb(d)?;
        return Ok(SdpSolution {
            primal_value: obj.value(&comb),
            comb,
            upper_bound: upper,
            gap: f64::INFINITY,
            feasibility_residual: f64::INFINITY,
            iterations,
            status: SdpStatus::InfeasibleNumerics,
        });
    };
    let comb = CombOperator::from_matrix(d, r)?;
    let (ra, rb) = causality_residuals(&comb)?;
    let feasibility_residual = ra.max(rb);
    let gap = (upper - primal_value).max(0.0);
    let status = if feasibility_residual > settings.tol_feas {
        SdpStatus::InfeasibleNumerics
    } else if gap <= settings.tol_gap {
        SdpStatus::Optimal
    } else {
        SdpStatus::MaxIter
    };
    Ok(SdpSolution {
        comb,
        primal_value,
        upper_bound: upper,
        gap,
        feasibility_residual,
        iterations,
        status,
    })
}

/// Projects `z` onto the constraints and mixes in `1/d⁴` until positive.
fn repair(
    cons: &Constraints,
    z: &ComplexMatrix,
    floor: &ComplexMatrix,
    m: &ComplexMatrix,
) -> Result<(f64, ComplexMatrix)> {
    let x = cons.project_affine(z)?.hermitize();
    let (lmin, _) = extreme_eigenvalues(&x)?;
    let r = if lmin < 0.0 {
        let eps = -lmin;
        let t = eps / (eps + floor[(0, 0)].re);
        let mut r = x.scale(1.0 - t);
        r.axpy(t, floor);
        r
    } else {
        x
    };
    Ok((r.trace_product(m).re, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::choi_of_unitary;
    use crate::strategies::{f_direct_closed, f_identity};

    fn gate(d: usize, seed: u64) -> UnitaryGate {
        UnitaryGate::new(haar_unitary(d, &mut RngStream::new(seed, 0)).unwrap()).unwrap()
    }

    #[test]
    fn fixture_combs_are_causal() {
        for d in 2..=3 {
            for comb in [identity_strategy_comb(d).unwrap(), direct_strategy_comb(d).unwrap()] {
                let (a, b) = causality_residuals(&comb).unwrap();
                assert!(a < 1e-12 && b < 1e-12, "d={d}: {a} {b}");
                assert!((comb.matrix().trace().re - 1.0).abs() < 1e-12);
                assert!((comb.reduced().trace().re - 1.0).abs() < 1e-12);
            }
        }
        let id = identity_strategy_comb(2).unwrap();
        let expect = ComplexMatrix::identity(4).scale(0.25);
        assert!(id.reduced().distance(&expect) < 1e-15);
        let direct = direct_strategy_comb(2).unwrap();
        assert!(direct.reduced().distance(&bell(2).projector()) < 1e-15);
    }

    #[test]
    fn identity_comb_trace_over_output() {
        let d = 3;
        let id = identity_strategy_comb(d).unwrap();
        let t3 = partial_trace(id.matrix(), &canonical_space(d), &["3"]).unwrap();
        let expect = ComplexMatrix::identity(27).scale(1.0 / 27.0);
        assert!(t3.distance(&expect) < 1e-15);
    }

    #[test]
    fn convex_mixtures_stay_causal() {
        let id = identity_strategy_comb(2).unwrap();
        let direct = direct_strategy_comb(2).unwrap();
        for k in 0..=10 {
            let c = id.mix(&direct, k as f64 / 10.0).unwrap();
            let (a, b) = causality_residuals(&c).unwrap();
            assert!(a < 1e-12 && b < 1e-12);
        }
    }

    #[test]
    fn random_state_is_not_causal() {
        let d = 2;
        let g = crate::haar::ginibre(16, &mut RngStream::new(3, 0));
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        let c = CombOperator::from_matrix(d, m.scale(1.0 / tr)).unwrap();
        let (a, b) = causality_residuals(&c).unwrap();
        assert!(a > 1e-3 || b > 1e-3);
    }

    #[test]
    fn contractions_of_fixtures() {
        for d in 2..=3 {
            let id = identity_strategy_comb(d).unwrap();
            let direct = direct_strategy_comb(d).unwrap();
            for seed in 0..3 {
                let u = gate(d, 10 + seed);
                let c = contract(&id, &u).unwrap();
                assert!(c.matrix().distance(&bell(d).projector()) < 1e-12);
                let c = contract(&direct, &u).unwrap();
                assert!(c.matrix().distance(choi_of_unitary(&u).matrix()) < 1e-12);
            }
        }
        assert!(matches!(
            contract(&identity_strategy_comb(2).unwrap(), &gate(3, 1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn comb_validation_rejects_bad_input() {
        assert!(CombOperator::from_matrix(2, ComplexMatrix::identity(8)).is_err());
        let neg = ComplexMatrix::from_real_diagonal(&[-0.5; 16]);
        assert!(matches!(
            CombOperator::from_matrix(2, neg),
            Err(Error::NotPsd(_))
        ));
        assert!(identity_strategy_comb(1).is_err());
    }

    #[test]
    fn objective_trace_and_fixture_values() {
        let (n, d) = (3u32, 2usize);
        let obj = build_objective(n, d, 20_000, &mut RngStream::new(7, 0)).unwrap();
        assert!((obj.matrix().trace().re - 4.0).abs() <= 4.0 * obj.norm_stderr() + 1e-9);
        assert!(obj.matrix().is_hermitian(1e-12));

        let id = identity_strategy_comb(d).unwrap();
        let v = obj.value(&id);
        let target = f_identity(n, d).unwrap().fidelity;
        assert!((v - target).abs() <= 4.0 * obj.value_stderr(&id), "{v}");

        let direct = direct_strategy_comb(d).unwrap();
        let v = obj.value(&direct);
        let target = f_direct_closed(n, d).unwrap().fidelity;
        assert!((v - target).abs() <= 4.0 * obj.value_stderr(&direct) + 1e-12, "{v}");
    }

    #[test]
    fn direct_comb_is_exact_for_n1() {
        for d in 2..=3 {
            let obj = build_objective(1, d, 1_000, &mut RngStream::new(8, d as u64)).unwrap();
            let v = obj.value(&direct_strategy_comb(d).unwrap());
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn direct_comb_value_at_n2() {
        let obj = build_objective(2, 2, 20_000, &mut RngStream::new(9, 0)).unwrap();
        let direct = direct_strategy_comb(2).unwrap();
        let v = obj.value(&direct);
        assert!((v - 0.25).abs() <= 4.0 * obj.value_stderr(&direct), "{v}");
    }

    #[test]
    fn sampled_fidelity_agrees_with_objective() {
        let id = identity_strategy_comb(2).unwrap();
        let est = comb_fidelity_mc(&id, 3, 20_000, &mut RngStream::new(12, 0)).unwrap();
        assert!(est.agrees_with(0.5, 4.0), "{est:?}");
        let direct = direct_strategy_comb(2).unwrap();
        let est = comb_fidelity_mc(&direct, 2, 20_000, &mut RngStream::new(12, 1)).unwrap();
        assert!(est.agrees_with(0.25, 4.0), "{est:?}");
    }

    #[test]
    fn affine_projection_is_idempotent_and_fixes_feasible_combs() {
        let d = 2;
        let cons = Constraints::new(d).unwrap();
        let g = crate::haar::ginibre(16, &mut RngStream::new(4, 0));
        let h = (&g + &g.adjoint()).scale(0.5);
        let p = cons.project_affine(&h).unwrap();
        let pp = cons.project_affine(&p).unwrap();
        assert!(p.distance(&pp) < 1e-12);
        let id = identity_strategy_comb(d).unwrap();
        assert!(cons.project_affine(id.matrix()).unwrap().distance(id.matrix()) < 1e-14);

        // The correction h − Π(h) is orthogonal to directions inside the constraints.
        let delta = &identity_strategy_comb(d).unwrap().matrix().clone()
            - direct_strategy_comb(d).unwrap().matrix();
        let corr = &h - &p;
        assert!(corr.trace_product(&delta).norm() < 1e-12);
    }

    #[test]
    fn solver_finds_perfect_comb_for_n1() {
        let obj = build_objective(1, 2, 2_000, &mut RngStream::new(21, 0)).unwrap();
        let sol = solve_optimal(&obj, &SdpSettings::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "{sol:?}");
        assert!((sol.primal_value - 1.0).abs() < 1e-3, "{}", sol.primal_value);
        assert!(sol.feasibility_residual <= 1e-9);
    }

    #[test]
    fn solver_sandwich_d2() {
        for n in [2u32, 3] {
            let obj = build_objective(n, 2, 20_000, &mut RngStream::new(22, n as u64)).unwrap();
            let sol = solve_optimal(&obj, &SdpSettings::default()).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal, "{sol:?}");
            assert!(sol.gap <= 1e-4);
            let (a, b) = causality_residuals(&sol.comb).unwrap();
            assert!(a.max(b) <= 1e-9);
            let fixtures = [identity_strategy_comb(2).unwrap(), direct_strategy_comb(2).unwrap()];
            for c in &fixtures {
                assert!(sol.primal_value >= obj.value(c) - 1e-4);
            }
            assert!(sol.primal_value < 0.95);
            for seed in 0..5 {
                let c = contract(&sol.comb, &gate(2, 100 + seed)).unwrap();
                assert!((c.matrix().trace().re - 1.0).abs() < 1e-8);
            }
        }
    }
}
