use std::collections::BTreeMap;

use crate::scalar::{orderings, Scalar};

use super::{FunctionalError, MultiVectorField, SlotIndex};

/// Rank-`n` kernel given by full (unordered) index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct WickKernel<S> {
    pub rank: usize,
    pub entries: Vec<(Vec<u32>, S)>,
}

impl<S: Scalar> WickKernel<S> {
    pub fn new(rank: usize, entries: Vec<(Vec<u32>, S)>) -> Self {
        Self { rank, entries }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WickPolynomial<S> {
    pub functional: MultiVectorField<S>,
    /// Ranks whose kernel was not symmetric and had to be symmetrized.
    pub symmetrized: Vec<usize>,
}

/// `F(φ) = Σ_n ⟨u_n, φ^⊗n⟩`. Kernels are symmetrized; `F` itself does not
/// depend on whether they were symmetric.
pub fn wick_polynomial<S: Scalar>(
    n_sites: usize,
    kernels: &[WickKernel<S>],
) -> Result<WickPolynomial<S>, FunctionalError> {
    let mut functional = MultiVectorField::zero(0, n_sites);
    let mut symmetrized = Vec::new();
    for kernel in kernels {
        let mut full: BTreeMap<Vec<u32>, S> = BTreeMap::new();
        for (idx, v) in &kernel.entries {
            if idx.len() != kernel.rank {
                return Err(FunctionalError::SlotCount { expected: kernel.rank, got: idx.len() });
            }
            if let Some(&i) = idx.iter().find(|&&i| i as usize >= n_sites) {
                return Err(FunctionalError::IndexOutOfRange { index: i, n_sites });
            }
            let e = full.entry(idx.clone()).or_insert_with(S::zero);
            *e = e.clone() + v.clone();
        }
        let mut grouped: BTreeMap<Vec<u32>, Vec<S>> = BTreeMap::new();
        for (idx, v) in &full {
            let mut key = idx.clone();
            key.sort_unstable();
            grouped.entry(key).or_default().push(v.clone());
        }
        let mut symmetric = true;
        for (key, vals) in grouped {
            let n_ord = orderings(&key);
            if vals.len() as i64 != n_ord || vals.iter().any(|v| *v != vals[0]) {
                symmetric = false;
            }
            let sum = vals.into_iter().fold(S::zero(), |a, b| a + b);
            functional.add_canonical(SlotIndex { sym: key, anti: vec![] }, sum * S::from_ratio(1, n_ord));
        }
        if !symmetric {
            symmetrized.push(kernel.rank);
        }
    }
    Ok(WickPolynomial { functional, symmetrized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wick_examples() {
        let w = wick_polynomial(3, &[WickKernel::new(1, vec![(vec![1], 1.0)])]).unwrap();
        assert_eq!(w.functional.evaluate(&[5.0, 7.0, 9.0], &[]).unwrap(), 7.0);
        let w = wick_polynomial(3, &[WickKernel::new(2, vec![(vec![2, 2], 1.0)])]).unwrap();
        assert_eq!(w.functional.evaluate(&[5.0, 7.0, 3.0], &[]).unwrap(), 9.0);
        assert!(w.symmetrized.is_empty());
    }

    #[test]
    fn asymmetric_kernel_is_flagged() {
        let w = wick_polynomial(3, &[WickKernel::new(2, vec![(vec![0, 1], 2.0)])]).unwrap();
        assert_eq!(w.symmetrized, vec![2]);
        assert_eq!(w.functional.coefficient(&[1, 0], &[]), 1.0);
        assert_eq!(w.functional.evaluate(&[3.0, 4.0, 0.0], &[]).unwrap(), 24.0);
    }
}
