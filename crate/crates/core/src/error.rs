use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("entry count {found} does not match shape {rows}x{cols}")]
    EntryCount { rows: usize, cols: usize, found: usize },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("unknown tensor factor label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate tensor factor label `{0}`")]
    DuplicateLabel(String),
    #[error("requested order is not a permutation of the space's factors")]
    NotPermutation,
    #[error("matrix is not Hermitian (relative deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (relative deviation {0:e})")]
    NotUnitary(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("trace {found} differs from required {expected}")]
    BadTrace { expected: f64, found: f64 },
    #[error("matrix is numerically rank deficient")]
    RankDeficient,
    #[error("eigensolver failed to converge")]
    NoConvergence,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
