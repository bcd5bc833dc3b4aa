//! Numerical core for approximating the `n`-th power of an unknown unitary
//! gate from a single use of it.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices, tensor-factor bookkeeping, Householder
//!   QR, Hermitian and real-symmetric eigensolvers, real embedding.
//! - [`haar`]: seeded Ginibre/Haar sampling and Monte Carlo estimators with
//!   standard errors.
//! - [`channels`]: vectorization, Choi matrices, channel action and fidelities.
//! - [`strategies`]: random-guess, estimation, identity and direct strategies.
//! - [`comb`]: one-slot quantum combs, the Monte Carlo objective, and the
//!   semidefinite program for the optimal iterator.
//!
//! All Choi matrices use the trace-one convention: the Bell vector is
//! `|1⟩⟩ = d^{-1/2} Σ_j |j⟩|j⟩` and basis index `|j⟩⊗|k⟩` maps to `j·d + k`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod channels;
pub mod comb;
mod error;
pub mod haar;
pub mod linalg;
pub mod strategies;

pub use error::Error;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub type Result<T, E = Error> = core::result::Result<T, E>;
