//! Dense complex linear algebra with labelled tensor factors.
//!
//! Storage is row-major and the basis index of `|j⟩⊗|k⟩` is `j·d_2 + k`;
//! every other module relies on this convention.

mod eigen;
mod matrix;
mod qr;
mod real;
mod space;

pub use eigen::{
    hermitian_eigendecomposition, psd_sqrt, symmetric_eigendecomposition, HermitianEigen,
    SymmetricEigen, HERMITIAN_TOL,
};
pub use matrix::ComplexMatrix;
pub use qr::qr_unitary_factor;
pub use real::{complexify, realify, RealMatrix};
pub(crate) use real::{complexify_averaged, realify_unchecked};
pub use space::{
    factor_permutation, partial_trace, permute_factors, permute_vector, tensor_identity,
    FactorizedSpace,
};

/// Relative PSD tolerance: a Hermitian matrix counts as PSD when its smallest
/// eigenvalue is at least `-PSD_TOL · max(‖h‖_F, 1)`.
pub const PSD_TOL: f64 = 1e-9;
