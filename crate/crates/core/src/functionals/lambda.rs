use crate::scalar::Scalar;

use super::MultiVectorField;

/// Polynomial in λ with multivector-field coefficients, `Σ_j λʲ Q_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaPoly<S> {
    coefficients: Vec<MultiVectorField<S>>,
}

impl<S: Scalar> LambdaPoly<S> {
    pub fn new(coefficients: Vec<MultiVectorField<S>>) -> Self {
        assert!(!coefficients.is_empty(), "a λ-polynomial needs a constant term");
        Self { coefficients }
    }

    pub fn coefficients(&self) -> &[MultiVectorField<S>] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    pub fn at(&self, lambda: &S) -> MultiVectorField<S> {
        let mut acc = self.coefficients.last().unwrap().clone();
        for c in self.coefficients.iter().rev().skip(1) {
            acc = acc.scale(lambda).add(c).expect("coefficients share shape");
        }
        acc
    }

    /// `∫₀¹ λˡ Q(λ) dλ = Σ_j Q_j / (j + l + 1)`, exact in rational mode.
    pub fn integrate_with_power(&self, l: usize) -> MultiVectorField<S> {
        let first = &self.coefficients[0];
        let mut acc = MultiVectorField::zero(first.k(), first.n_sites());
        for (j, c) in self.coefficients.iter().enumerate() {
            let w = S::from_ratio(1, (j + l + 1) as i64);
            acc = acc.add(&c.scale(&w)).expect("coefficients share shape");
        }
        acc
    }
}
