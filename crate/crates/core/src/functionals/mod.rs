//! Polynomial functionals and multivector fields over lattice sites.
//!
//! A k-vector field of polynomial degree ≤ D is stored as one coefficient
//! tensor per degree `d`, of rank `d + k`, symmetric in the first `d`
//! ("field") slots and antisymmetric in the last `k` ("vector") slots.
//! Only canonical index pairs are kept: the symmetric block sorted, the
//! antisymmetric block strictly increasing. The stored value is the full
//! tensor entry at that index pair, so
//!
//! `X(φ){h₁..h_k} = Σ_{(I,J)} c[I;J] · #orderings(I) · φ^I · det[h_r(J_s)]`.

mod lambda;
mod wick;

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::{next_permutation, small_determinant, DenseMatrix};
use crate::scalar::{factorial, orderings, Scalar};

pub use lambda::LambdaPoly;
pub use wick::{wick_polynomial, WickKernel, WickPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("expected {expected} slot arguments, got {got}")]
    SlotCount { expected: usize, got: usize },
    #[error("vector has {got} entries, functional lives on {expected} sites")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("site index {index} out of range for {n_sites} sites")]
    IndexOutOfRange { index: u32, n_sites: usize },
    #[error("vector degrees differ: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("functional JSON: {0}")]
    Json(String),
}

/// Canonical index pair: sorted symmetric block, strictly increasing
/// antisymmetric block.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotIndex {
    pub sym: Vec<u32>,
    pub anti: Vec<u32>,
}

impl SlotIndex {
    /// Canonicalizes arbitrary index lists. Returns the sign picked up by
    /// sorting the antisymmetric block, or `None` if it has a repeat.
    pub fn canonical(mut sym: Vec<u32>, anti: Vec<u32>) -> Option<(Self, i32)> {
        sym.sort_unstable();
        let sign = crate::linalg::permutation_sign(&anti);
        let mut anti = anti;
        anti.sort_unstable();
        if anti.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((Self { sym, anti }, sign))
    }

    pub fn sites(&self) -> impl Iterator<Item = u32> + '_ {
        self.sym.iter().chain(&self.anti).copied()
    }
}

/// A homogeneous tensor, symmetric in `sym_rank` slots and antisymmetric in
/// `anti_rank` slots. Derivatives `X^(n)(φ)` are returned in this form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymAntiTensor<S> {
    pub sym_rank: usize,
    pub anti_rank: usize,
    pub entries: BTreeMap<SlotIndex, S>,
}

impl<S: Scalar> SymAntiTensor<S> {
    pub fn zero(sym_rank: usize, anti_rank: usize) -> Self {
        Self { sym_rank, anti_rank, entries: BTreeMap::new() }
    }

    pub fn get(&self, idx: &SlotIndex) -> S {
        self.entries.get(idx).cloned().unwrap_or_else(S::zero)
    }

    /// Full entry at an arbitrary (not necessarily canonical) index.
    pub fn entry(&self, sym: &[u32], anti: &[u32]) -> S {
        match SlotIndex::canonical(sym.to_vec(), anti.to_vec()) {
            Some((idx, sign)) => {
                let v = self.get(&idx);
                if sign < 0 {
                    -v
                } else {
                    v
                }
            }
            None => S::zero(),
        }
    }

    /// Full contraction `⟨T, u₁⊗…⊗u_n ⊗ h₁⊗…⊗h_k⟩`.
    pub fn contract(&self, us: &[&[S]], hs: &[&[S]]) -> Result<S, FunctionalError> {
        if us.len() != self.sym_rank {
            return Err(FunctionalError::SlotCount { expected: self.sym_rank, got: us.len() });
        }
        if hs.len() != self.anti_rank {
            return Err(FunctionalError::SlotCount { expected: self.anti_rank, got: hs.len() });
        }
        let mut total = S::zero();
        for (idx, v) in &self.entries {
            let mut ord = idx.sym.clone();
            let mut sym_part = S::zero();
            loop {
                let mut term = S::one();
                for (r, &i) in ord.iter().enumerate() {
                    term = term * us[r][i as usize].clone();
                }
                sym_part = sym_part + term;
                if !next_permutation(&mut ord) {
                    break;
                }
            }
            if sym_part.is_zero() {
                continue;
            }
            total = total + v.clone() * sym_part * anti_det(&idx.anti, hs);
        }
        Ok(total)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|v| v.magnitude()).fold(0.0, f64::max)
    }
}

fn anti_det<S: Scalar>(anti: &[u32], hs: &[&[S]]) -> S {
    let m: Vec<Vec<S>> = hs.iter().map(|h| anti.iter().map(|&j| h[j as usize].clone()).collect()).collect();
    small_determinant(&m)
}

fn monomial<S: Scalar>(sites: &[u32], phi: &[S]) -> S {
    sites.iter().fold(S::one(), |acc, &i| acc * phi[i as usize].clone())
}

/// All distinct sub-multisets of `sorted` of size `n`, with their remainders.
pub fn sub_multisets(sorted: &[u32], n: usize) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut runs: Vec<(u32, usize)> = Vec::new();
    for &i in sorted {
        match runs.last_mut() {
            Some((v, m)) if *v == i => *m += 1,
            _ => runs.push((i, 1)),
        }
    }
    let mut out = Vec::new();
    let mut take = vec![0usize; runs.len()];
    fn rec(
        runs: &[(u32, usize)],
        pos: usize,
        left: usize,
        take: &mut Vec<usize>,
        out: &mut Vec<(Vec<u32>, Vec<u32>)>,
    ) {
        if pos == runs.len() {
            if left == 0 {
                let mut s = Vec::new();
                let mut r = Vec::new();
                for (&(v, m), &t) in runs.iter().zip(take.iter()) {
                    s.extend(std::iter::repeat(v).take(t));
                    r.extend(std::iter::repeat(v).take(m - t));
                }
                out.push((s, r));
            }
            return;
        }
        for t in 0..=runs[pos].1.min(left) {
            take[pos] = t;
            rec(runs, pos + 1, left - t, take, out);
        }
        take[pos] = 0;
    }
    rec(&runs, 0, n, &mut take, &mut out);
    out
}

/// Shuffle sign for merging two disjoint strictly increasing lists.
fn shuffle_sign(a: &[u32], b: &[u32]) -> i32 {
    let mut inversions = 0usize;
    for &x in a {
        inversions += b.iter().filter(|&&y| y < x).count();
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `c'[I'] = Σ_ι Π_r M_{choice}[ι_r, I'_r]` over sorted `I'`, recording how
/// many factors came from the second matrix (the λ power for pencils).
#[allow(clippy::too_many_arguments)]
pub(crate) fn expand_sorted<S: Scalar>(
    ordering: &[u32],
    mats: &[&[Vec<(u32, S)>]],
    pos: usize,
    lo: u32,
    acc: S,
    second: usize,
    cur: &mut Vec<u32>,
    out: &mut dyn FnMut(&[u32], usize, S),
) {
    if pos == ordering.len() {
        out(cur, second, acc);
        return;
    }
    for (m_id, m) in mats.iter().enumerate() {
        for (col, v) in &m[ordering[pos] as usize] {
            if *col < lo {
                continue;
            }
            cur.push(*col);
            expand_sorted(ordering, mats, pos + 1, *col, acc.clone() * v.clone(), second + m_id, cur, out);
            cur.pop();
        }
    }
}

/// A k-vector field with polynomial coefficients. `k = 0` is a polynomial
/// functional.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiVectorField<S> {
    k: usize,
    n_sites: usize,
    terms: BTreeMap<usize, BTreeMap<SlotIndex, S>>,
}

pub type PolyFunctional<S> = MultiVectorField<S>;

impl<S: Scalar> MultiVectorField<S> {
    pub fn zero(k: usize, n_sites: usize) -> Self {
        Self { k, n_sites, terms: BTreeMap::new() }
    }

    pub fn constant(n_sites: usize, c: S) -> Self {
        let mut f = Self::zero(0, n_sites);
        f.add_entry(vec![], vec![], c);
        f
    }

    /// `⟨u, φ⟩`.
    pub fn linear(u: &[S]) -> Self {
        let mut f = Self::zero(0, u.len());
        for (i, v) in u.iter().enumerate() {
            f.add_entry(vec![i as u32], vec![], v.clone());
        }
        f
    }

    /// k-vector field constant in φ with the given canonical entries.
    pub fn constant_vector(k: usize, n_sites: usize, entries: impl IntoIterator<Item = (Vec<u32>, S)>) -> Self {
        let mut f = Self::zero(k, n_sites);
        for (anti, v) in entries {
            f.add_entry(vec![], anti, v);
        }
        f
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }
    pub fn terms(&self) -> &BTreeMap<usize, BTreeMap<SlotIndex, S>> {
        &self.terms
    }
    pub fn term(&self, d: usize) -> Option<&BTreeMap<SlotIndex, S>> {
        self.terms.get(&d)
    }
    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn n_entries(&self) -> usize {
        self.terms.values().map(|t| t.len()).sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, &SlotIndex, &S)> {
        self.terms.iter().flat_map(|(d, t)| t.iter().map(move |(i, v)| (*d, i, v)))
    }

    /// Adds `v` to the full tensor entry at the given (arbitrary order)
    /// index. Antisymmetric repeats are dropped; the sign of sorting the
    /// antisymmetric block is applied.
    pub fn add_entry(&mut self, sym: Vec<u32>, anti: Vec<u32>, v: S) {
        assert_eq!(anti.len(), self.k, "antisymmetric block must have k indices");
        debug_assert!(sym.iter().chain(&anti).all(|&i| (i as usize) < self.n_sites));
        if v.is_zero() {
            return;
        }
        let Some((idx, sign)) = SlotIndex::canonical(sym, anti) else { return };
        let v = if sign < 0 { -v } else { v };
        self.add_canonical(idx, v);
    }

    pub(crate) fn add_canonical(&mut self, idx: SlotIndex, v: S) {
        if v.is_zero() {
            return;
        }
        let d = idx.sym.len();
        let term = self.terms.entry(d).or_default();
        match term.get_mut(&idx) {
            Some(cur) => {
                let sum = cur.clone() + v;
                if sum.is_zero() {
                    term.remove(&idx);
                    if term.is_empty() {
                        self.terms.remove(&d);
                    }
                } else {
                    *cur = sum;
                }
            }
            None => {
                term.insert(idx, v);
            }
        }
    }

    /// Full tensor entry at an arbitrary index.
    pub fn coefficient(&self, sym: &[u32], anti: &[u32]) -> S {
        let Some((idx, sign)) = SlotIndex::canonical(sym.to_vec(), anti.to_vec()) else {
            return S::zero();
        };
        let v = self.terms.get(&sym.len()).and_then(|t| t.get(&idx)).cloned().unwrap_or_else(S::zero);
        if sign < 0 {
            -v
        } else {
            v
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.k, self.n_sites);
        for (_, idx, v) in self.entries() {
            out.add_canonical(idx.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, FunctionalError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (_, idx, v) in other.entries() {
            out.add_canonical(idx.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FunctionalError> {
        self.add(&other.scale(&-S::one()))
    }

    fn check_compatible(&self, other: &Self) -> Result<(), FunctionalError> {
        if self.k != other.k {
            return Err(FunctionalError::DegreeMismatch(self.k, other.k));
        }
        if self.n_sites != other.n_sites {
            return Err(FunctionalError::ShapeMismatch { expected: self.n_sites, got: other.n_sites });
        }
        Ok(())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> MultiVectorField<T> {
        let mut out = MultiVectorField::zero(self.k, self.n_sites);
        for (_, idx, v) in self.entries() {
            out.add_canonical(idx.clone(), f(v));
        }
        out
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries().map(|(_, _, v)| v.magnitude()).fold(0.0, f64::max)
    }

    fn check_vec(&self, v: &[S]) -> Result<(), FunctionalError> {
        if v.len() != self.n_sites {
            return Err(FunctionalError::ShapeMismatch { expected: self.n_sites, got: v.len() });
        }
        Ok(())
    }

    /// `X(φ){h₁..h_k}`.
    pub fn evaluate(&self, phi: &[S], hs: &[&[S]]) -> Result<S, FunctionalError> {
        if hs.len() != self.k {
            return Err(FunctionalError::SlotCount { expected: self.k, got: hs.len() });
        }
        self.check_vec(phi)?;
        for h in hs {
            self.check_vec(h)?;
        }
        let mut total = S::zero();
        for (_, idx, v) in self.entries() {
            let m = monomial(&idx.sym, phi);
            if m.is_zero() {
                continue;
            }
            let det = anti_det(&idx.anti, hs);
            if det.is_zero() {
                continue;
            }
            total = total + v.clone() * S::from_i64(orderings(&idx.sym)) * m * det;
        }
        Ok(total)
    }

    /// `X^(n)(φ)` as a tensor symmetric in `n` slots and antisymmetric in `k`.
    /// No `1/n!`: `F(φ+εu) = Σ εⁿ/n! ⟨F^(n)(φ), u^⊗n⟩`.
    pub fn eval_derivative(&self, phi: &[S], n: usize) -> Result<SymAntiTensor<S>, FunctionalError> {
        self.check_vec(phi)?;
        let mut out = SymAntiTensor::zero(n, self.k);
        for (&d, term) in self.terms.range(n..) {
            let falling = S::from_i64(factorial(d) / factorial(d - n));
            for (idx, v) in term {
                for (s, r) in sub_multisets(&idx.sym, n) {
                    let m = monomial(&r, phi);
                    if m.is_zero() {
                        continue;
                    }
                    let add = falling.clone() * v.clone() * S::from_i64(orderings(&r)) * m;
                    let key = SlotIndex { sym: s, anti: idx.anti.clone() };
                    let e = out.entries.entry(key).or_insert_with(S::zero);
                    *e = e.clone() + add;
                }
            }
        }
        out.entries.retain(|_, v| !v.is_zero());
        Ok(out)
    }

    /// Pullback along a linear map of configurations: `(L*X)(φ) = X(Lφ)`,
    /// acting on the symmetric slots only.
    pub fn pullback_linear(&self, l: &DenseMatrix<S>) -> Result<Self, FunctionalError> {
        if l.rows() != self.n_sites || l.cols() != self.n_sites {
            return Err(FunctionalError::ShapeMismatch { expected: self.n_sites, got: l.rows() });
        }
        let rows = l.sparse_rows();
        let poly = self.pull_through(&[&rows]);
        Ok(poly.into_iter().next().unwrap_or_else(|| Self::zero(self.k, self.n_sites)))
    }

    /// Pullback along the pencil `A + λB`, kept symbolic in λ.
    pub fn pullback_pencil(&self, a: &DenseMatrix<S>, b: &DenseMatrix<S>) -> Result<LambdaPoly<S>, FunctionalError> {
        for m in [a, b] {
            if m.rows() != self.n_sites || m.cols() != self.n_sites {
                return Err(FunctionalError::ShapeMismatch { expected: self.n_sites, got: m.rows() });
            }
        }
        let (ra, rb) = (a.sparse_rows(), b.sparse_rows());
        Ok(LambdaPoly::new(self.pull_through(&[&ra, &rb])))
    }

    /// Returns one field per power of the second matrix.
    fn pull_through(&self, mats: &[&[Vec<(u32, S)>]]) -> Vec<Self> {
        let top = self.max_degree().unwrap_or(0);
        let n_out = if mats.len() > 1 { top + 1 } else { 1 };
        let mut out = vec![Self::zero(self.k, self.n_sites); n_out];
        for (_, idx, v) in self.entries() {
            let mut ord = idx.sym.clone();
            loop {
                let mut cur = Vec::with_capacity(ord.len());
                expand_sorted(&ord, mats, 0, 0, v.clone(), 0, &mut cur, &mut |sites, power, val| {
                    out[power].add_canonical(SlotIndex { sym: sites.to_vec(), anti: idx.anti.clone() }, val);
                });
                if !next_permutation(&mut ord) {
                    break;
                }
            }
        }
        while out.len() > 1 && out.last().is_some_and(|f| f.is_zero()) {
            out.pop();
        }
        out
    }

    /// Sites appearing in any index of any nonzero coefficient.
    pub fn spacetime_support(&self) -> BTreeSet<usize> {
        self.entries().flat_map(|(_, idx, _)| idx.sites().map(|s| s as usize).collect::<Vec<_>>()).collect()
    }

    /// Wedge product; for `k = 0` on both sides it is the pointwise product.
    pub fn wedge(&self, other: &Self) -> Result<Self, FunctionalError> {
        if self.n_sites != other.n_sites {
            return Err(FunctionalError::ShapeMismatch { expected: self.n_sites, got: other.n_sites });
        }
        let mut out = Self::zero(self.k + other.k, self.n_sites);
        for (_, ia, va) in self.entries() {
            let oa = orderings(&ia.sym);
            for (_, ib, vb) in other.entries() {
                if ia.anti.iter().any(|j| ib.anti.contains(j)) {
                    continue;
                }
                let sign = shuffle_sign(&ia.anti, &ib.anti);
                let mut sym = ia.sym.clone();
                sym.extend_from_slice(&ib.sym);
                sym.sort_unstable();
                let mut anti = ia.anti.clone();
                anti.extend_from_slice(&ib.anti);
                anti.sort_unstable();
                let w = S::from_ratio(oa * orderings(&ib.sym), orderings(&sym));
                let v = va.clone() * vb.clone() * w;
                out.add_canonical(SlotIndex { sym, anti }, if sign < 0 { -v } else { v });
            }
        }
        Ok(out)
    }

    /// `{k, terms: [{degree, entries: [[indices…], value]…}]}` with the
    /// symmetric indices first.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(d, t)| {
                let entries: Vec<Value> = t
                    .iter()
                    .map(|(idx, v)| json!([idx.sites().collect::<Vec<u32>>(), v.to_json()]))
                    .collect();
                json!({"degree": d, "entries": entries})
            })
            .collect();
        json!({"k": self.k, "n_sites": self.n_sites, "terms": terms})
    }

    pub fn from_json(v: &Value) -> Result<Self, FunctionalError> {
        let bad = |m: &str| FunctionalError::Json(m.to_string());
        let obj = v.as_object().ok_or_else(|| bad("expected an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "k" | "n_sites" | "terms") {
                return Err(FunctionalError::Json(format!("unknown key {key:?}")));
            }
        }
        let k = obj.get("k").and_then(Value::as_u64).ok_or_else(|| bad("missing k"))? as usize;
        let n_sites = obj.get("n_sites").and_then(Value::as_u64).ok_or_else(|| bad("missing n_sites"))? as usize;
        let mut out = Self::zero(k, n_sites);
        for term in obj.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))? {
            let d = term.get("degree").and_then(Value::as_u64).ok_or_else(|| bad("term without degree"))? as usize;
            let entries = term.get("entries").and_then(Value::as_array).ok_or_else(|| bad("term without entries"))?;
            for e in entries {
                let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("entry must be [indices, value]"))?;
                let idx: Vec<u32> = pair[0]
                    .as_array()
                    .ok_or_else(|| bad("indices must be an array"))?
                    .iter()
                    .map(|i| i.as_u64().map(|i| i as u32))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad("index must be a nonnegative integer"))?;
                if idx.len() != d + k {
                    return Err(FunctionalError::Json(format!("entry has {} indices, expected {}", idx.len(), d + k)));
                }
                if let Some(&i) = idx.iter().find(|&&i| i as usize >= n_sites) {
                    return Err(FunctionalError::IndexOutOfRange { index: i, n_sites });
                }
                let val = S::from_json(&pair[1]).ok_or_else(|| bad("unreadable coefficient"))?;
                out.add_entry(idx[..d].to_vec(), idx[d..].to_vec(), val);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn square_at(n: usize, a: u32) -> MultiVectorField<f64> {
        let mut f = MultiVectorField::zero(0, n);
        f.add_entry(vec![a, a], vec![], 1.0);
        f
    }

    #[test]
    fn evaluation_examples() {
        let c = MultiVectorField::constant(4, 2.5);
        assert_eq!(c.evaluate(&[1.0, 2.0, 3.0, 4.0], &[]).unwrap(), 2.5);
        let f = square_at(4, 2);
        assert_eq!(f.evaluate(&[0.0, 0.0, 3.0, 0.0], &[]).unwrap(), 9.0);
        let mut x = MultiVectorField::zero(2, 3);
        x.add_entry(vec![0], vec![1, 2], 1.5);
        let h = [0.3, -1.0, 2.0];
        assert_eq!(x.evaluate(&[1.0, 0.0, 0.0], &[&h, &h]).unwrap(), 0.0);
        assert!(matches!(x.evaluate(&[1.0, 0.0, 0.0], &[&h]), Err(FunctionalError::SlotCount { .. })));
    }

    #[test]
    fn mixed_monomial_counts_orderings() {
        // c[0,1] = c[1,0] = 1/2 represents φ₀φ₁.
        let mut f = MultiVectorField::zero(0, 2);
        f.add_entry(vec![1, 0], vec![], 0.5);
        assert_eq!(f.evaluate(&[3.0, 5.0], &[]).unwrap(), 15.0);
    }

    #[test]
    fn derivative_examples() {
        let f = square_at(4, 1);
        let d1 = f.eval_derivative(&[0.0, 3.0, 0.0, 0.0], 1).unwrap();
        assert_eq!(d1.get(&SlotIndex { sym: vec![1], anti: vec![] }), 6.0);
        let d2 = f.eval_derivative(&[0.0, 3.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(d2.get(&SlotIndex { sym: vec![1, 1], anti: vec![] }), 2.0);
        let d0 = f.eval_derivative(&[0.0, 3.0, 0.0, 0.0], 0).unwrap();
        assert_eq!(d0.contract(&[], &[]).unwrap(), 9.0);
        assert!(f.eval_derivative(&[0.0; 4], 3).unwrap().entries.is_empty());
        let lin = MultiVectorField::linear(&[1.0, -2.0, 0.5]);
        let d = lin.eval_derivative(&[4.0, 4.0, 4.0], 1).unwrap();
        assert_eq!(d.contract(&[&[0.0, 1.0, 0.0]], &[]).unwrap(), -2.0);
    }

    #[test]
    fn sub_multiset_enumeration() {
        let subs = sub_multisets(&[1, 1, 2], 2);
        assert_eq!(subs, vec![(vec![1, 2], vec![1]), (vec![1, 1], vec![2])]);
        assert_eq!(sub_multisets(&[3], 0), vec![(vec![], vec![3])]);
    }

    #[test]
    fn pullback_by_identity_and_pencil() {
        let f = square_at(3, 0);
        let id = DenseMatrix::<f64>::identity(3);
        assert_eq!(f.pullback_linear(&id).unwrap(), f);
        let a = DenseMatrix::from_vec(3, 3, vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DenseMatrix::from_vec(3, 3, vec![0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let q = f.pullback_pencil(&a, &b).unwrap();
        assert_eq!(q.degree(), 2);
        let phi = [0.5f64, -1.0, 2.0];
        for lam in [0.0f64, 0.5, 1.0] {
            let direct = (phi[0] + phi[1] + lam * 2.0 * phi[2]).powi(2);
            assert!((q.at(&lam).evaluate(&phi, &[]).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn wedge_of_vectors_is_antisymmetric() {
        let x = MultiVectorField::constant_vector(1, 3, [(vec![0], 1.0), (vec![1], 2.0)]);
        let y = MultiVectorField::constant_vector(1, 3, [(vec![1], 1.0), (vec![2], -1.0)]);
        let xy = x.wedge(&y).unwrap();
        let yx = y.wedge(&x).unwrap();
        assert_eq!(xy.add(&yx).unwrap(), MultiVectorField::zero(2, 3));
        let h1 = [1.0, 0.5, 0.0];
        let h2 = [0.0, 1.0, 3.0];
        let lhs = xy.evaluate(&[0.0; 3], &[&h1, &h2]).unwrap();
        let e = |f: &MultiVectorField<f64>, h: &[f64]| f.evaluate(&[0.0; 3], &[h]).unwrap();
        let rhs = e(&x, &h1) * e(&y, &h2) - e(&x, &h2) * e(&y, &h1);
        assert!((lhs - rhs).abs() < 1e-12);
        assert!(x.wedge(&x).unwrap().is_zero());
    }

    #[test]
    fn product_of_functionals_is_pointwise() {
        let f = MultiVectorField::linear(&[1.0, 2.0]);
        let mut g = square_at(2, 1);
        g.add_entry(vec![0, 1], vec![], 0.25);
        let fg = f.wedge(&g).unwrap();
        let phi = [0.7, -1.3];
        let lhs = fg.evaluate(&phi, &[]).unwrap();
        let rhs = f.evaluate(&phi, &[]).unwrap() * g.evaluate(&phi, &[]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn support_examples() {
        assert!(MultiVectorField::constant(4, 1.0).spacetime_support().is_empty());
        let mut f = MultiVectorField::zero(0, 5);
        f.add_entry(vec![3, 1], vec![], 1.0);
        assert_eq!(f.spacetime_support(), BTreeSet::from([1, 3]));
    }

    #[test]
    fn json_round_trip_rational() {
        let mut x = MultiVectorField::<Rational>::zero(1, 6);
        x.add_entry(vec![2, 0], vec![5], Rational::from_ratio(-3, 7));
        x.add_entry(vec![], vec![4], Rational::from_ratio(1, 3));
        let back = MultiVectorField::<Rational>::from_json(&x.to_json()).unwrap();
        assert_eq!(back, x);
        let mut bad = x.to_json();
        bad["extra"] = json!(0);
        assert!(MultiVectorField::<Rational>::from_json(&bad).is_err());
    }
}
