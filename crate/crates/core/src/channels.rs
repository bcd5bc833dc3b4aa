//! Choi-operator calculus for channels on a `d`-level system.
//!
//! Choi matrices are normalized to unit trace, `R_T = (T ⊗ I)(|1⟩⟩⟨⟨1|)`, and
//! live on `out ⊗ in`.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{
    hermitian_eigendecomposition, partial_trace, psd_sqrt, ComplexMatrix, FactorizedSpace,
    HERMITIAN_TOL, PSD_TOL,
};
use crate::{Error, Result, C64};

/// Tolerance for unitarity and unit-trace checks.
pub const VALIDITY_TOL: f64 = 1e-8;

/// Vectorized operator `|V⟩⟩ = d^{-1/2} Σ V_jk |j⟩|k⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedOp {
    d: usize,
    amplitudes: Vec<C64>,
}

impl VectorizedOp {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `⟨⟨self|other⟩⟩ = Tr(self† other)/d`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.amplitudes)
    }
}

pub fn vectorize(v: &ComplexMatrix) -> Result<VectorizedOp> {
    let d = v.ensure_square()?;
    let s = 1.0 / (d as f64).sqrt();
    Ok(VectorizedOp {
        d,
        amplitudes: v.as_slice().iter().map(|z| z * s).collect(),
    })
}

/// The Bell vector `|1⟩⟩`.
pub fn bell(d: usize) -> VectorizedOp {
    vectorize(&ComplexMatrix::identity(d)).expect("identity is square")
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    matrix: ComplexMatrix,
}

impl UnitaryGate {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        matrix.ensure_square()?;
        let dev = matrix.unitarity_deviation();
        if dev > VALIDITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn pow(&self, n: u32) -> Self {
        Self {
            matrix: self.matrix.pow(n),
        }
    }

    pub fn vectorize(&self) -> VectorizedOp {
        vectorize(&self.matrix).expect("unitaries are square")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_state_like(&matrix, 1.0)?;
        Ok(Self {
            matrix: matrix.hermitize(),
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalized state vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        Self::new(ComplexMatrix::projector(psi))
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Normalized Choi matrix on `out ⊗ in`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix,
}

impl ChoiMatrix {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(matrix: ComplexMatrix, dim_out: usize, dim_in: usize) -> Result<Self> {
        let n = matrix.ensure_square()?;
        if n != dim_in * dim_out {
            return Err(Error::DimensionMismatch {
                expected: dim_in * dim_out,
                found: n,
            });
        }
        check_state_like(&matrix, 1.0)?;
        Ok(Self {
            dim_in,
            dim_out,
            matrix: matrix.hermitize(),
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    fn space(&self) -> FactorizedSpace {
        FactorizedSpace::new(&[("out", self.dim_out), ("in", self.dim_in)])
            .expect("distinct labels")
    }
}

fn check_state_like(m: &ComplexMatrix, trace: f64) -> Result<()> {
    m.ensure_square()?;
    let dev = m.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let tr = m.trace().re;
    if (tr - trace).abs() > VALIDITY_TOL {
        return Err(Error::BadTrace {
            expected: trace,
            found: tr,
        });
    }
    let min = hermitian_eigendecomposition(m)?.min();
    if min < -PSD_TOL * m.frobenius_norm().max(1.0) {
        return Err(Error::NotPsd(min));
    }
    Ok(())
}

/// `|U⟩⟩⟨⟨U|`.
pub fn choi_of_unitary(u: &UnitaryGate) -> ChoiMatrix {
    let d = u.dim();
    ChoiMatrix {
        dim_in: d,
        dim_out: d,
        matrix: u.vectorize().projector(),
    }
}

/// Depolarizing channel `ρ ↦ pρ + (1−p)·1/d`, with Choi matrix
/// `p|1⟩⟩⟨⟨1| + (1−p)·1/d²`. Completely positive for `−1/(d²−1) ≤ p ≤ 1`.
pub fn choi_depolarizing(p: f64, d: usize) -> Result<ChoiMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let d2 = (d * d) as f64;
    let lower = if d > 1 { -1.0 / (d2 - 1.0) } else { f64::NEG_INFINITY };
    if !(p.is_finite() && p <= 1.0 + 1e-12 && p >= lower - 1e-12) {
        return Err(Error::InvalidArgument(alloc::format!(
            "depolarizing parameter {p} outside the completely positive range"
        )));
    }
    let mut m = bell(d).projector().scale(p);
    m.axpy((1.0 - p) / d2, &ComplexMatrix::identity(d * d));
    Ok(ChoiMatrix {
        dim_in: d,
        dim_out: d,
        matrix: m,
    })
}

/// Channel action recovered from the Choi matrix:
/// `T(ρ) = d · Tr_in(R (1_out ⊗ ρᵀ))`.
pub fn apply_choi(r: &ChoiMatrix, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != r.dim_in {
        return Err(Error::DimensionMismatch {
            expected: r.dim_in,
            found: rho.dim(),
        });
    }
    let lifted = ComplexMatrix::identity(r.dim_out).kron(&rho.matrix().transpose());
    let prod = r.matrix.matmul(&lifted);
    let out = partial_trace(&prod, &r.space(), &["in"])?.scale(r.dim_in as f64);
    DensityMatrix::new(out)
}

/// Channel fidelity against a unitary: `⟨⟨U|R|U⟩⟩`.
pub fn fidelity_to_unitary(r: &ChoiMatrix, u: &UnitaryGate) -> Result<f64> {
    if r.dim_in != u.dim() || r.dim_out != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim_in,
            found: u.dim(),
        });
    }
    Ok(r.matrix.expectation(u.vectorize().amplitudes()).re)
}

/// Uhlmann fidelity of two Choi matrices, `(Tr √(√r1 · r2 · √r1))²`.
/// Eigenvalues down to `−1e-9` are clipped to zero.
pub fn fidelity_general(r1: &ChoiMatrix, r2: &ChoiMatrix) -> Result<f64> {
    if (r1.dim_in, r1.dim_out) != (r2.dim_in, r2.dim_out) {
        return Err(Error::DimensionMismatch {
            expected: r1.matrix.rows(),
            found: r2.matrix.rows(),
        });
    }
    let s = psd_sqrt(&r1.matrix, PSD_TOL)?;
    let inner = s.matmul(&r2.matrix).matmul(&s).hermitize();
    let eig = hermitian_eigendecomposition(&inner)?;
    if eig.min() < -PSD_TOL {
        return Err(Error::NotPsd(eig.min()));
    }
    let t: f64 = eig.values.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(t * t)
}

/// Parameter of the twirled channel, `(d²⟨⟨1|R|1⟩⟩ − 1)/(d² − 1)`.
pub fn depolarizing_parameter_of(r: &ChoiMatrix) -> Result<f64> {
    if r.dim_in != r.dim_out {
        return Err(Error::DimensionMismatch {
            expected: r.dim_in,
            found: r.dim_out,
        });
    }
    let d = r.dim_in;
    if d < 2 {
        return Err(Error::InvalidArgument("need d ≥ 2".into()));
    }
    let d2 = (d * d) as f64;
    let overlap = r.matrix.expectation(bell(d).amplitudes()).re;
    Ok((d2 * overlap - 1.0) / (d2 - 1.0))
}

/// The anti-diagonal permutation `Ω = Σ_k |k⟩⟨d−k−1|`, unitary and Hermitian.
pub fn omega(d: usize) -> Result<UnitaryGate> {
    if d < 2 {
        return Err(Error::InvalidArgument("need d ≥ 2".into()));
    }
    let m = ComplexMatrix::from_fn(d, d, |i, j| {
        C64::new(if i + j == d - 1 { 1.0 } else { 0.0 }, 0.0)
    });
    Ok(UnitaryGate { matrix: m })
}

/// `cos θ · 1 + i sin θ · Ω`, unitary for every `θ` since `Ω² = 1`.
pub fn theta_family(theta: f64, d: usize) -> Result<UnitaryGate> {
    let om = omega(d)?;
    let mut m = ComplexMatrix::identity(d).scale(theta.cos());
    let (s, _) = theta.sin_cos();
    for (a, b) in m.as_mut_slice().iter_mut().zip(om.matrix.as_slice()) {
        *a += C64::new(0.0, s) * b;
    }
    Ok(UnitaryGate { matrix: m })
}
