use super::ComplexMatrix;
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Householder QR of a square matrix: `z = q·r`, `q` unitary, `r` upper
/// triangular.
///
/// Fails with [`Error::RankDeficient`] when a pivot falls below `1e-12·‖z‖_F`;
/// samplers treat that as a signal to draw again.
pub fn qr_unitary_factor(z: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = z.ensure_square()?;
    let scale = z.frobenius_norm();
    let mut r = z.clone();
    let mut q = ComplexMatrix::identity(n);
    let mut v = alloc::vec![C64::new(0.0, 0.0); n];

    for k in 0..n {
        let norm = (k..n).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale || norm == 0.0 {
            return Err(Error::RankDeficient);
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -phase * norm;

        for i in k..n {
            v[i] = r[(i, k)];
        }
        v[k] -= alpha;
        let vnorm = (k..n).map(|i| v[i].norm_sqr()).sum::<f64>().sqrt();
        for vi in v.iter_mut().skip(k) {
            *vi /= vnorm;
        }

        // r ← (1 − 2vv†) r on rows k.., columns k..
        for j in k..n {
            let s: C64 = (k..n).map(|i| v[i].conj() * r[(i, j)]).sum();
            let s = s * 2.0;
            for i in k..n {
                let vi = v[i];
                r[(i, j)] -= vi * s;
            }
        }
        // q ← q (1 − 2vv†) on columns k..
        for i in 0..n {
            let s: C64 = (k..n).map(|j| q[(i, j)] * v[j]).sum();
            let s = s * 2.0;
            for j in k..n {
                let vj = v[j].conj();
                q[(i, j)] -= s * vj;
            }
        }
        for i in k + 1..n {
            r[(i, k)] = C64::new(0.0, 0.0);
        }
        r[(k, k)] = alpha;
    }
    Ok((q, r))
}
