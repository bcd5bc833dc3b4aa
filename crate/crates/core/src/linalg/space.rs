use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::ComplexMatrix;
use crate::{Error, Result, C64};

/// Ordered list of labelled tensor factors, first factor most significant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizedSpace {
    factors: Vec<(String, usize)>,
}

impl FactorizedSpace {
    pub fn new<S: AsRef<str>>(factors: &[(S, usize)]) -> Result<Self> {
        let mut out: Vec<(String, usize)> = Vec::with_capacity(factors.len());
        for (label, dim) in factors {
            let label = label.as_ref();
            if *dim == 0 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "factor `{label}` has zero dimension"
                )));
            }
            if out.iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateLabel(label.to_owned()));
            }
            out.push((label.to_owned(), *dim));
        }
        Ok(Self { factors: out })
    }

    /// `k` factors of equal dimension `d` with the given labels.
    pub fn uniform<S: AsRef<str>>(labels: &[S], d: usize) -> Result<Self> {
        let pairs: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_ref(), d)).collect();
        Self::new(&pairs)
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|(l, _)| l.as_str())
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn factor_dim(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// The space left after removing `labels`, in original relative order.
    pub fn without<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let removed = self.positions(labels)?;
        Ok(Self {
            factors: self
                .factors
                .iter()
                .enumerate()
                .filter(|(i, _)| !removed.contains(i))
                .map(|(_, f)| f.clone())
                .collect(),
        })
    }

    fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let p = self.position(l.as_ref())?;
            if out.contains(&p) {
                return Err(Error::DuplicateLabel(l.as_ref().to_owned()));
            }
            out.push(p);
        }
        Ok(out)
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.factors[i + 1].1;
        }
        strides
    }

    /// Flat offsets, in the full space, of every joint index of the factors
    /// at `positions` (enumerated row-major in the given order).
    fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let mut offs = vec![0usize];
        for &p in positions {
            let (d, s) = (self.factors[p].1, strides[p]);
            offs = offs
                .iter()
                .flat_map(|&o| (0..d).map(move |k| o + k * s))
                .collect();
        }
        offs
    }

    fn split(&self, labels: &[impl AsRef<str>]) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut traced = self.positions(labels)?;
        traced.sort_unstable();
        let kept = (0..self.len()).filter(|i| !traced.contains(i)).collect();
        Ok((kept, traced))
    }

    fn check(&self, m: &ComplexMatrix) -> Result<usize> {
        let n = m.ensure_square()?;
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(n)
    }
}

/// Traces out the factors named in `traced`; the remaining factors keep
/// their relative order.
pub fn partial_trace<S: AsRef<str>>(
    m: &ComplexMatrix,
    space: &FactorizedSpace,
    traced: &[S],
) -> Result<ComplexMatrix> {
    space.check(m)?;
    let (kept, traced) = space.split(traced)?;
    let ko = space.offsets(&kept);
    let to = space.offsets(&traced);
    let n = ko.len();
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, &ra) in ko.iter().enumerate() {
        for (b, &rb) in ko.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for &t in &to {
                acc += m[(ra + t, rb + t)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Inverse companion of [`partial_trace`]: returns `1_T ⊗ m` laid out in the
/// order of `space`, where `T` are the factors named in `identity_on` and `m`
/// acts on the remaining factors.
pub fn tensor_identity<S: AsRef<str>>(
    m: &ComplexMatrix,
    space: &FactorizedSpace,
    identity_on: &[S],
) -> Result<ComplexMatrix> {
    let (kept, ident) = space.split(identity_on)?;
    let ko = space.offsets(&kept);
    let io = space.offsets(&ident);
    let k = m.ensure_square()?;
    if k != ko.len() {
        return Err(Error::DimensionMismatch {
            expected: ko.len(),
            found: k,
        });
    }
    let n = space.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for (a, &ra) in ko.iter().enumerate() {
        for (b, &rb) in ko.iter().enumerate() {
            let v = m[(a, b)];
            for &t in &io {
                out[(ra + t, rb + t)] = v;
            }
        }
    }
    Ok(out)
}

/// For each basis index of `space`, its index after reordering the factors
/// to `new_order`.
pub fn factor_permutation<S: AsRef<str>>(
    space: &FactorizedSpace,
    new_order: &[S],
) -> Result<Vec<usize>> {
    if new_order.len() != space.len() {
        return Err(Error::NotPermutation);
    }
    let positions = space.positions(new_order).map_err(|e| match e {
        Error::DuplicateLabel(_) => Error::NotPermutation,
        other => other,
    })?;
    // Enumerating the old space in the new factor order yields, at position
    // `new_index`, the old flat index of that basis state.
    let old_of_new = space.offsets(&positions);
    let mut new_of_old = vec![0; old_of_new.len()];
    for (new, &old) in old_of_new.iter().enumerate() {
        new_of_old[old] = new;
    }
    Ok(new_of_old)
}

/// Reorders the tensor factors of `m` to `new_order`.
pub fn permute_factors<S: AsRef<str>>(
    m: &ComplexMatrix,
    space: &FactorizedSpace,
    new_order: &[S],
) -> Result<ComplexMatrix> {
    let n = space.check(m)?;
    let p = factor_permutation(space, new_order)?;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(p[i], p[j])] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Reorders the tensor factors of a state vector to `new_order`.
pub fn permute_vector<S: AsRef<str>>(
    v: &[C64],
    space: &FactorizedSpace,
    new_order: &[S],
) -> Result<Vec<C64>> {
    if v.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: v.len(),
        });
    }
    let p = factor_permutation(space, new_order)?;
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (i, &x) in v.iter().enumerate() {
        out[p[i]] = x;
    }
    Ok(out)
}
