//! Poisson bracket and ⋆-product of polynomial functionals and multivector
//! fields, with the slot permutation `σ_{n,m,k}`.
//!
//! `F ⋆ G = Σₙ ℏⁿ/n! 𝓑ₙ(F, G)` with `𝓑ₙ(F,G)(φ) = ⟨F^(n)(φ), (Δ⁺)^⊗n G^(n)(φ)⟩`.
//! For polynomials the series terminates, so everything below is exact up
//! to floating round-off in the kernel entries.

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::functionals::{sub_multisets, FunctionalError, MultiVectorField, SlotIndex};
use crate::lattice::PropagatorSet;
use crate::linalg::{next_permutation, DenseMatrix};
use crate::scalar::{factorial, orderings, Scalar, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantizeError {
    #[error("kernel is {rows}x{cols}, functionals live on {n_sites} sites")]
    KernelShape { rows: usize, cols: usize, n_sites: usize },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// The permutation `σ_{n,m,k}` of `2n+m+k` slots. Acting on a tuple it
/// places the first-factor slots of the `n` contractions first, then the
/// `m` free slots, then the second-factor slots, then the `k` free slots:
/// `σ(v)ᵢ = v_{σ⁻¹(i)}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SlotPermutation {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// `σ⁻¹`, zero-based.
    pub inverse: Vec<usize>,
    /// `σ`, zero-based.
    pub mapping: Vec<usize>,
}

pub fn sigma_permutation(n: usize, m: usize, k: usize) -> SlotPermutation {
    let len = 2 * n + m + k;
    let inverse: Vec<usize> = (1..=len)
        .map(|i| {
            if i <= n {
                2 * i - 1
            } else if i <= n + m {
                i + n
            } else if i <= 2 * n + m {
                2 * (i - n - m)
            } else {
                i
            }
        })
        .map(|v| v - 1)
        .collect();
    let mut mapping = vec![0; len];
    for (i, &j) in inverse.iter().enumerate() {
        mapping[j] = i;
    }
    SlotPermutation { n, m, k, inverse, mapping }
}

impl SlotPermutation {
    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn is_bijection(&self) -> bool {
        let mut seen = vec![false; self.len()];
        for &j in &self.mapping {
            if j >= seen.len() || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        self.mapping.iter().enumerate().all(|(i, &j)| self.inverse[j] == i)
    }

    pub fn apply<T: Clone>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.len());
        self.inverse.iter().map(|&j| v[j].clone()).collect()
    }

    pub fn apply_inverse<T: Clone>(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.len());
        self.mapping.iter().map(|&j| v[j].clone()).collect()
    }
}

/// Power series in ℏ; entry `n` is the full coefficient of `ℏⁿ`
/// (the `1/n!` is already included).
#[derive(Clone, Debug, PartialEq)]
pub struct HbarSeries<S> {
    terms: Vec<MultiVectorField<S>>,
}

impl<S: Scalar> HbarSeries<S> {
    pub fn new(terms: Vec<MultiVectorField<S>>) -> Self {
        assert!(!terms.is_empty(), "an ℏ-series needs a constant term");
        let mut s = Self { terms };
        s.trim();
        s
    }

    pub fn constant(f: MultiVectorField<S>) -> Self {
        Self { terms: vec![f] }
    }

    fn trim(&mut self) {
        while self.terms.len() > 1 && self.terms.last().is_some_and(|t| t.is_zero()) {
            self.terms.pop();
        }
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn terms(&self) -> &[MultiVectorField<S>] {
        &self.terms
    }

    /// Coefficient of `ℏⁿ` (zero beyond the order).
    pub fn coefficient(&self, n: usize) -> MultiVectorField<S> {
        self.terms.get(n).cloned().unwrap_or_else(|| {
            let t = &self.terms[0];
            MultiVectorField::zero(t.k(), t.n_sites())
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, QuantizeError> {
        let len = self.terms.len().max(other.terms.len());
        let terms = (0..len).map(|n| self.coefficient(n).sub(&other.coefficient(n))).collect::<Result<_, _>>()?;
        Ok(Self::new(terms))
    }

    /// Largest coefficient magnitude over all powers.
    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.max_abs()).fold(0.0, f64::max)
    }

    /// `(Σ ℏᵃ Aₐ) ⋆ (Σ ℏᵇ B_b)`.
    pub fn star(&self, other: &Self, kernel: &DenseMatrix<S>) -> Result<Self, QuantizeError> {
        let mut out: Vec<Option<MultiVectorField<S>>> = Vec::new();
        for (a, x) in self.terms.iter().enumerate() {
            for (b, y) in other.terms.iter().enumerate() {
                let prod = star_multivector(x, y, kernel)?;
                for (c, t) in prod.terms.into_iter().enumerate() {
                    let p = a + b + c;
                    if out.len() <= p {
                        out.resize(p + 1, None);
                    }
                    out[p] = Some(match out[p].take() {
                        Some(acc) => acc.add(&t)?,
                        None => t,
                    });
                }
            }
        }
        let k = self.terms[0].k() + other.terms[0].k();
        let n_sites = self.terms[0].n_sites();
        Ok(Self::new(out.into_iter().map(|t| t.unwrap_or_else(|| MultiVectorField::zero(k, n_sites))).collect()))
    }

    /// Per-power coefficient norms.
    pub fn norms(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.max_abs()).collect()
    }

    /// `{order, terms: [functional per power]}`.
    pub fn to_json(&self) -> Value {
        json!({"order": self.order(), "terms": self.terms.iter().map(|t| t.to_json()).collect::<Vec<_>>()})
    }
}

fn check_kernel<S: Scalar>(kernel: &DenseMatrix<S>, n_sites: usize) -> Result<(), QuantizeError> {
    if kernel.rows() != n_sites || kernel.cols() != n_sites {
        return Err(QuantizeError::KernelShape { rows: kernel.rows(), cols: kernel.cols(), n_sites });
    }
    Ok(())
}

fn shuffle_sign(a: &[u32], b: &[u32]) -> bool {
    let inversions: usize = a.iter().map(|&x| b.iter().filter(|&&y| y < x).count()).sum();
    inversions % 2 == 1
}

/// `Σ_β Π_r K[a_r, β_r]` over distinct orderings `β` of `b`.
fn matched_sum<S: Scalar>(a: &[u32], b: &[u32], kernel: &DenseMatrix<S>) -> S {
    let mut ord = b.to_vec();
    let mut total = S::zero();
    loop {
        let mut term = S::one();
        for (x, y) in a.iter().zip(&ord) {
            term = term * kernel.get(*x as usize, *y as usize).clone();
            if term.is_zero() {
                break;
            }
        }
        total = total + term;
        if !next_permutation(&mut ord) {
            break;
        }
    }
    total
}

/// `𝓑ₙ(X, Y)`: `n` field slots of `X` contracted with `n` of `Y` through
/// `kernel`, vector slots combined by the wedge product.
pub fn contract_n<S: Scalar>(
    x: &MultiVectorField<S>,
    y: &MultiVectorField<S>,
    kernel: &DenseMatrix<S>,
    n: usize,
) -> Result<MultiVectorField<S>, QuantizeError> {
    check_kernel(kernel, x.n_sites())?;
    if y.n_sites() != x.n_sites() {
        return Err(FunctionalError::ShapeMismatch { expected: x.n_sites(), got: y.n_sites() }.into());
    }
    let mut out = MultiVectorField::zero(x.k() + y.k(), x.n_sites());
    for (p, ia, va) in x.entries() {
        if p < n {
            continue;
        }
        let fa = factorial(p) / factorial(p - n);
        let splits_a = sub_multisets(&ia.sym, n);
        for (q, ib, vb) in y.entries() {
            if q < n || ia.anti.iter().any(|j| ib.anti.contains(j)) {
                continue;
            }
            let fb = factorial(q) / factorial(q - n);
            let negate = shuffle_sign(&ia.anti, &ib.anti);
            let mut anti = ia.anti.clone();
            anti.extend_from_slice(&ib.anti);
            anti.sort_unstable();
            let base = va.clone() * vb.clone() * S::from_i64(fa * fb);
            for (a, ra) in &splits_a {
                let oa = orderings(a) * orderings(ra);
                for (b, rb) in sub_multisets(&ib.sym, n) {
                    let m = matched_sum(a, &b, kernel);
                    if m.is_zero() {
                        continue;
                    }
                    let mut sym = ra.clone();
                    sym.extend_from_slice(&rb);
                    sym.sort_unstable();
                    let w = S::from_ratio(oa * orderings(&rb), orderings(&sym));
                    let v = base.clone() * m * w;
                    out.add_canonical(SlotIndex { sym, anti: anti.clone() }, if negate { -v } else { v });
                }
            }
        }
    }
    Ok(out)
}

/// `{F, G}(φ) = ⟨F^(1)(φ), Δ G^(1)(φ)⟩`.
pub fn poisson_bracket<S: Scalar>(
    f: &MultiVectorField<S>,
    g: &MultiVectorField<S>,
    commutator: &DenseMatrix<S>,
) -> Result<MultiVectorField<S>, QuantizeError> {
    contract_n(f, g, commutator, 1)
}

/// `X ⋆ Y` for multivector fields, wedge on the vector slots. For
/// functionals this is the ⋆-product.
pub fn star_multivector<S: Scalar>(
    x: &MultiVectorField<S>,
    y: &MultiVectorField<S>,
    two_point: &DenseMatrix<S>,
) -> Result<HbarSeries<S>, QuantizeError> {
    let top = x.max_degree().unwrap_or(0).min(y.max_degree().unwrap_or(0));
    let terms = (0..=top)
        .map(|n| contract_n(x, y, two_point, n).map(|t| t.scale(&S::from_ratio(1, factorial(n)))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HbarSeries::new(terms))
}

pub fn star_product<S: Scalar>(
    f: &MultiVectorField<S>,
    g: &MultiVectorField<S>,
    two_point: &DenseMatrix<S>,
) -> Result<HbarSeries<S>, QuantizeError> {
    star_multivector(f, g, two_point)
}

fn complexify(f: &MultiVectorField<f64>) -> MultiVectorField<C64> {
    f.map(|v| C64::new(*v, 0.0))
}

/// Sup-norm of `[F ⋆ G − G ⋆ F]_{ℏ¹} − i{F, G}` on coefficients.
pub fn check_first_order_commutator(
    f: &MultiVectorField<f64>,
    g: &MultiVectorField<f64>,
    props: &PropagatorSet,
) -> Result<f64, QuantizeError> {
    let (fc, gc) = (complexify(f), complexify(g));
    let fg = star_product(&fc, &gc, &props.two_point)?;
    let gf = star_product(&gc, &fc, &props.two_point)?;
    let comm = fg.sub(&gf)?.coefficient(1);
    let bracket = complexify(&poisson_bracket(f, g, props.commutator())?).scale(&C64::new(0.0, 1.0));
    Ok(comm.sub(&bracket)?.max_abs())
}

/// Sup-norm of `(F⋆G)⋆H − F⋆(G⋆H)` over all powers of ℏ.
pub fn check_associativity<S: Scalar>(
    f: &MultiVectorField<S>,
    g: &MultiVectorField<S>,
    h: &MultiVectorField<S>,
    two_point: &DenseMatrix<S>,
) -> Result<f64, QuantizeError> {
    let (sf, sg, sh) =
        (HbarSeries::constant(f.clone()), HbarSeries::constant(g.clone()), HbarSeries::constant(h.clone()));
    let left = sf.star(&sg, two_point)?.star(&sh, two_point)?;
    let right = sf.star(&sg.star(&sh, two_point)?, two_point)?;
    Ok(left.sub(&right)?.max_abs())
}

/// Sup-norm of `{F,{G,H}} + {G,{H,F}} + {H,{F,G}}`.
pub fn jacobi_residual<S: Scalar>(
    f: &MultiVectorField<S>,
    g: &MultiVectorField<S>,
    h: &MultiVectorField<S>,
    commutator: &DenseMatrix<S>,
) -> Result<f64, QuantizeError> {
    let pb = |a: &MultiVectorField<S>, b: &MultiVectorField<S>| poisson_bracket(a, b, commutator);
    let sum = pb(f, &pb(g, h)?)?.add(&pb(g, &pb(h, f)?)?)?.add(&pb(h, &pb(f, g)?)?)?;
    Ok(sum.max_abs())
}

/// Sup-norm of `{F, G·H} − {F,G}·H − G·{F,H}`.
pub fn leibniz_residual<S: Scalar>(
    f: &MultiVectorField<S>,
    g: &MultiVectorField<S>,
    h: &MultiVectorField<S>,
    commutator: &DenseMatrix<S>,
) -> Result<f64, QuantizeError> {
    let lhs = poisson_bracket(f, &g.wedge(h)?, commutator)?;
    let rhs = poisson_bracket(f, g, commutator)?.wedge(h)?.add(&g.wedge(&poisson_bracket(f, h, commutator)?)?)?;
    Ok(lhs.sub(&rhs)?.max_abs())
}
