use alloc::vec::Vec;

use super::eigen::HERMITIAN_TOL;
use super::ComplexMatrix;
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Real symmetric embedding `[[Re h, −Im h], [Im h, Re h]]` of a Hermitian
/// matrix. `h ⪰ 0` iff the embedding is, and every eigenvalue of `h` appears
/// twice in it.
pub fn realify(h: &ComplexMatrix) -> Result<RealMatrix> {
    h.ensure_square()?;
    let dev = h.hermiticity_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(realify_unchecked(h))
}

pub(crate) fn realify_unchecked(h: &ComplexMatrix) -> RealMatrix {
    let n = h.rows();
    let m = 2 * n;
    let mut data = alloc::vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            data[i * m + j] = z.re;
            data[i * m + n + j] = -z.im;
            data[(n + i) * m + j] = z.im;
            data[(n + i) * m + n + j] = z.re;
        }
    }
    RealMatrix::from_vec(m, m, data)
}

/// Inverse of [`realify`]: reads `Re` from the upper-left block and `Im` from
/// the lower-left block.
pub fn complexify(s: &RealMatrix) -> Result<ComplexMatrix> {
    if s.rows != s.cols || !s.rows.is_multiple_of(2) {
        return Err(Error::InvalidArgument(alloc::format!(
            "complexify needs an even square matrix, got {}x{}",
            s.rows,
            s.cols
        )));
    }
    let n = s.rows / 2;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new(s.get(i, j), s.get(n + i, j))
    }))
}

/// Like [`complexify`] but averages the redundant blocks, for embeddings that
/// carry round-off from an eigensolver.
pub(crate) fn complexify_averaged(s: &RealMatrix) -> ComplexMatrix {
    let n = s.rows / 2;
    ComplexMatrix::from_fn(n, n, |i, j| {
        C64::new(
            0.5 * (s.get(i, j) + s.get(n + i, n + j)),
            0.5 * (s.get(n + i, j) - s.get(i, n + j)),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigendecomposition, symmetric_eigendecomposition};
    use proptest::prelude::*;

    #[test]
    fn identity_embeds_to_identity() {
        let r = realify(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(r, RealMatrix::from_fn(6, 6, |i, j| if i == j { 1.0 } else { 0.0 }));
    }

    #[test]
    fn imaginary_antisymmetric_part_by_hand() {
        // h = [[1, -i], [i, 2]]
        let h = ComplexMatrix::from_vec(
            2,
            2,
            alloc::vec![
                C64::new(1.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(2.0, 0.0)
            ],
        )
        .unwrap();
        let expected = RealMatrix::from_vec(
            4,
            4,
            alloc::vec![
                1.0, 0.0, 0.0, 1.0, //
                0.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 1.0, 0.0, //
                1.0, 0.0, 0.0, 2.0,
            ],
        );
        let r = realify(&h).unwrap();
        assert_eq!(r, expected);
        assert_eq!(r.trace(), 2.0 * h.trace().re);
        assert_eq!(complexify(&r).unwrap(), h);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_fn(2, 2, |i, _| C64::new(i as f64, 0.0));
        assert!(matches!(realify(&m), Err(Error::NotHermitian(_))));
    }

    proptest! {
        #[test]
        fn spectrum_doubles_and_roundtrip_is_exact(
            n in 1usize..=5,
            xs in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 25),
        ) {
            let h = ComplexMatrix::from_fn(n, n, |i, j| C64::new(xs[i * n + j].0, xs[i * n + j].1))
                .hermitize();
            let r = realify(&h).unwrap();
            prop_assert_eq!(&complexify(&r).unwrap(), &h);
            prop_assert_eq!(realify(&complexify(&r).unwrap()).unwrap(), r.clone());
            let ev = hermitian_eigendecomposition(&h).unwrap().values;
            let er = symmetric_eigendecomposition(&r).unwrap().values;
            for (k, l) in ev.iter().enumerate() {
                prop_assert!((er[2 * k] - l).abs() < 1e-9);
                prop_assert!((er[2 * k + 1] - l).abs() < 1e-9);
            }
        }
    }
}
