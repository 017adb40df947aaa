//! Direction cones on the cotangent circle of 1+1D spacetime and products
//! of them over several points.
//!
//! Angles are exact rationals measured in turns (one full turn = 1), so
//! 90° is `1/4`. A tuple component is either the zero covector (`None`) or
//! a direction (`Some(angle)`); magnitudes never affect cone membership.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use num::rational::Rational64;
use num::{One, ToPrimitive, Zero};

use crate::quantize::{sigma_permutation, SlotPermutation};

pub type Angle = Rational64;
/// `None` is the zero covector.
pub type Component = Option<Angle>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("degenerate cone: {0}")]
    Degenerate(String),
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("sample count must be positive")]
    NoSamples,
}

pub fn degrees(d: i64) -> Angle {
    Rational64::new(d, 360)
}

pub fn to_degrees(a: &Angle) -> f64 {
    a.to_f64().unwrap_or(f64::NAN) * 360.0
}

fn wrap(a: Angle) -> Angle {
    let f = a - a.floor();
    if f < Rational64::zero() {
        f + Rational64::one()
    } else {
        f
    }
}

/// Closed (or open) arcs `[a, b]` with `0 ≤ a ≤ b ≤ 1`; arcs crossing angle
/// zero are stored as two pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionCone {
    sectors: Vec<(Angle, Angle)>,
    open: bool,
}

impl DirectionCone {
    pub fn empty() -> Self {
        Self { sectors: Vec::new(), open: false }
    }

    /// Arc from `a` counter-clockwise to `b`. `b < a` wraps through zero;
    /// `a == b` is a single direction.
    pub fn arc(a: Angle, b: Angle) -> Self {
        Self::from_arcs(&[(a, b)], false)
    }

    pub fn from_degrees(a: i64, b: i64) -> Self {
        Self::arc(degrees(a), degrees(b))
    }

    pub fn from_arcs(arcs: &[(Angle, Angle)], open: bool) -> Self {
        let mut pieces = Vec::new();
        for &(a, b) in arcs {
            let span = b - a;
            if span >= Rational64::one() {
                pieces.push((Rational64::zero(), Rational64::one()));
                continue;
            }
            let (a, b) = (wrap(a), wrap(b));
            if a <= b {
                pieces.push((a, b));
            } else {
                pieces.push((a, Rational64::one()));
                pieces.push((Rational64::zero(), b));
            }
        }
        Self::normalize(pieces, open)
    }

    fn normalize(mut pieces: Vec<(Angle, Angle)>, open: bool) -> Self {
        pieces.sort();
        let mut out: Vec<(Angle, Angle)> = Vec::new();
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if a < last.1 || (!open && a == last.1) => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { sectors: out, open }
    }

    pub fn sectors(&self) -> &[(Angle, Angle)] {
        &self.sectors
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn with_open(&self, open: bool) -> Self {
        Self::normalize(self.sectors.clone(), open)
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    /// Total angular measure in turns.
    pub fn opening(&self) -> Angle {
        self.sectors.iter().fold(Rational64::zero(), |acc, (a, b)| acc + (*b - *a))
    }

    pub fn contains(&self, angle: &Angle) -> bool {
        let t = wrap(*angle);
        self.sectors.iter().any(|(a, b)| {
            let hit = |x: Angle| if self.open { *a < x && x < *b } else { *a <= x && x <= *b };
            hit(t) || (t.is_zero() && hit(Rational64::one()))
        })
    }

    /// Membership of a float angle (turns), with endpoints widened by `tol`
    /// for closed cones and narrowed by `tol` for open ones.
    pub fn contains_f64(&self, turns: f64, tol: f64) -> bool {
        let t = turns.rem_euclid(1.0);
        self.sectors.iter().any(|(a, b)| {
            let (a, b) = (a.to_f64().unwrap(), b.to_f64().unwrap());
            let hit = |x: f64| if self.open { a + tol < x && x < b - tol } else { a - tol <= x && x <= b + tol };
            hit(t) || hit(t + 1.0) || hit(t - 1.0)
        })
    }

    pub fn negate(&self) -> Self {
        let half = Rational64::new(1, 2);
        let arcs: Vec<_> = self.sectors.iter().map(|(a, b)| (*a + half, *b + half)).collect();
        let mut out = Self::from_arcs(&[], self.open);
        for (a, b) in arcs {
            let piece = Self::from_arcs(&[(a, b)], self.open);
            out = out.union(&piece);
        }
        out
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut pieces = self.sectors.clone();
        pieces.extend_from_slice(&other.sectors);
        Self::normalize(pieces, self.open && other.open)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let open = self.open || other.open;
        let mut pieces = Vec::new();
        for (a1, b1) in &self.sectors {
            for (a2, b2) in &other.sectors {
                let (a, b) = ((*a1).max(*a2), (*b1).min(*b2));
                if a < b || (!open && a == b) {
                    pieces.push((a, b));
                }
            }
        }
        Self::normalize(pieces, open)
    }

    /// Closure of the complement.
    pub fn complement_closure(&self) -> Self {
        let mut gaps = Vec::new();
        let mut cursor = Rational64::zero();
        for (a, b) in &self.sectors {
            if *a > cursor {
                gaps.push((cursor, *a));
            }
            cursor = cursor.max(*b);
        }
        if cursor < Rational64::one() {
            gaps.push((cursor, Rational64::one()));
        }
        Self::normalize(gaps, false)
    }

    pub fn disjoint(&self, other: &Self) -> bool {
        self.intersect(other).is_empty()
    }

    /// Checks the conditions placed on the physical cone: nonempty, opening
    /// below half a turn and disjoint from its negative.
    pub fn validate_physical(&self) -> Result<(), ConeError> {
        if self.is_empty() {
            return Err(ConeError::Degenerate("empty cone".into()));
        }
        if self.opening() >= Rational64::new(1, 2) {
            return Err(ConeError::Degenerate(format!(
                "opening {}° is not below 180°",
                to_degrees(&self.opening())
            )));
        }
        if !self.with_open(false).disjoint(&self.negate().with_open(false)) {
            return Err(ConeError::Degenerate("cone meets its negative".into()));
        }
        Ok(())
    }

    /// Uniform sample from the cone on a grid of `grid + 1` points per
    /// sector, endpoints included for closed cones.
    pub fn sample<R: Rng>(&self, rng: &mut R, grid: i64) -> Option<Angle> {
        if self.sectors.is_empty() {
            return None;
        }
        let (a, b) = self.sectors[rng.gen_range(0..self.sectors.len())];
        let (lo, hi) = if self.open { (1, grid - 1) } else { (0, grid) };
        let j = rng.gen_range(lo..=hi.max(lo));
        Some(wrap(a + (b - a) * Rational64::new(j, grid)))
    }

    pub fn to_json(&self) -> Value {
        let arcs: Vec<Value> =
            self.sectors.iter().map(|(a, b)| json!([to_degrees(a), to_degrees(b)])).collect();
        json!({"sectors_deg": arcs, "open": self.open})
    }
}

/// One slot of a product pattern.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Zero,
    In(DirectionCone),
    ZeroOr(DirectionCone),
}

impl Slot {
    fn admits(&self, c: &Component) -> bool {
        match (self, c) {
            (Slot::Zero, None) => true,
            (Slot::Zero, Some(_)) => false,
            (Slot::In(_), None) => false,
            (Slot::In(cone), Some(a)) => cone.contains(a),
            (Slot::ZeroOr(_), None) => true,
            (Slot::ZeroOr(cone), Some(a)) => cone.contains(a),
        }
    }
}

/// Union of patterns over `n` points; the all-zero tuple is never a member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductCone {
    points: usize,
    patterns: Vec<Vec<Slot>>,
}

impl ProductCone {
    pub fn new(points: usize, patterns: Vec<Vec<Slot>>) -> Self {
        assert!(patterns.iter().all(|p| p.len() == points), "pattern length must match point count");
        Self { points, patterns }
    }

    /// Every slot in `cone ∪ {0}`: the n-fold dotted power of a cone.
    pub fn dotted_power(cone: &DirectionCone, n: usize) -> Self {
        Self::new(n, vec![vec![Slot::ZeroOr(cone.clone()); n]])
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn patterns(&self) -> &[Vec<Slot>] {
        &self.patterns
    }

    pub fn contains(&self, tuple: &[Component]) -> bool {
        tuple.len() == self.points
            && tuple.iter().any(|c| c.is_some())
            && self.patterns.iter().any(|p| p.iter().zip(tuple).all(|(s, c)| s.admits(c)))
    }

    pub fn union(&self, other: &Self) -> Self {
        assert_eq!(self.points, other.points);
        let mut patterns = self.patterns.clone();
        patterns.extend(other.patterns.iter().cloned());
        Self::new(self.points, patterns)
    }

    pub fn negate(&self) -> Self {
        let patterns = self
            .patterns
            .iter()
            .map(|p| {
                p.iter()
                    .map(|s| match s {
                        Slot::Zero => Slot::Zero,
                        Slot::In(c) => Slot::In(c.negate()),
                        Slot::ZeroOr(c) => Slot::ZeroOr(c.negate()),
                    })
                    .collect()
            })
            .collect();
        Self::new(self.points, patterns)
    }

    /// Draws a member: a random pattern, then each slot independently.
    pub fn sample<R: Rng>(&self, rng: &mut R, grid: i64) -> Option<(usize, Vec<Component>)> {
        if self.patterns.is_empty() {
            return None;
        }
        for _ in 0..1000 {
            let pi = rng.gen_range(0..self.patterns.len());
            let tuple: Vec<Component> = self.patterns[pi]
                .iter()
                .map(|s| match s {
                    Slot::Zero => None,
                    Slot::In(c) => c.sample(rng, grid),
                    Slot::ZeroOr(c) => {
                        if rng.gen_bool(0.5) {
                            None
                        } else {
                            c.sample(rng, grid)
                        }
                    }
                })
                .collect();
            if tuple.iter().any(|c| c.is_some()) && self.patterns[pi].iter().zip(&tuple).all(|(s, c)| s.admits(c)) {
                return Some((pi, tuple));
            }
        }
        None
    }
}

/// `A ×̇ B = [A×B] ∪ [0×B] ∪ [A×0]`.
pub fn dotted_product(a: &ProductCone, b: &ProductCone) -> ProductCone {
    let mut patterns = Vec::new();
    for pa in &a.patterns {
        for pb in &b.patterns {
            patterns.push(pa.iter().chain(pb).cloned().collect());
        }
    }
    for pb in &b.patterns {
        patterns.push(std::iter::repeat(Slot::Zero).take(a.points).chain(pb.iter().cloned()).collect());
    }
    for pa in &a.patterns {
        patterns.push(pa.iter().cloned().chain(std::iter::repeat(Slot::Zero).take(b.points)).collect());
    }
    ProductCone::new(a.points + b.points, patterns)
}

/// `Γₙ = 𝒱^×̇ⁿ ∪ (−𝒱)^×̇ⁿ` for a physical cone.
pub fn gamma_n(v: &DirectionCone, n: usize) -> Result<ProductCone, ConeError> {
    v.validate_physical()?;
    Ok(gamma_n_unchecked(v, n))
}

/// `Γₙ` without validating the cone; used for negative controls.
pub fn gamma_n_unchecked(v: &DirectionCone, n: usize) -> ProductCone {
    ProductCone::dotted_power(v, n).union(&ProductCone::dotted_power(&v.negate(), n))
}

/// `WF((u)^⊗n)` for a two-point distribution with `WF(u) ⊂ ⋃ A×B` over the
/// given pairs: the n-fold dotted product.
pub fn tensor_power_wavefront(pairs: &[(DirectionCone, DirectionCone)], n: usize) -> ProductCone {
    let single = ProductCone::new(2, pairs.iter().map(|(a, b)| vec![Slot::In(a.clone()), Slot::In(b.clone())]).collect());
    (1..n).fold(if n == 0 { ProductCone::new(0, vec![]) } else { single.clone() }, |acc, _| dotted_product(&acc, &single))
}

/// Set expressions whose membership is decided tuple by tuple.
#[derive(Clone, Debug)]
pub enum ConeExpr {
    Product(ProductCone),
    /// Nonzero tuples not in the inner set.
    Complement(Box<ConeExpr>, usize),
    /// `A ×̇ B`, splitting the tuple after `left_points`.
    Dotted(Box<ConeExpr>, Box<ConeExpr>, usize),
    /// `σ(S) = {σ(v) : v ∈ S}`.
    Permuted(SlotPermutation, Box<ConeExpr>),
}

impl ConeExpr {
    pub fn contains(&self, tuple: &[Component]) -> bool {
        if tuple.iter().all(|c| c.is_none()) {
            return false;
        }
        match self {
            ConeExpr::Product(p) => p.contains(tuple),
            ConeExpr::Complement(inner, n) => tuple.len() == *n && !inner.contains(tuple),
            ConeExpr::Dotted(a, b, split) => {
                let (l, r) = tuple.split_at(*split);
                let lz = l.iter().all(|c| c.is_none());
                let rz = r.iter().all(|c| c.is_none());
                (a.contains(l) || lz) && (b.contains(r) || rz)
            }
            ConeExpr::Permuted(sigma, inner) => inner.contains(&sigma.apply_inverse(tuple)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeReport {
    pub lemma: String,
    pub params: Value,
    pub samples: usize,
    pub violations: usize,
    pub seed: u64,
    /// Samples drawn per left-hand pattern.
    pub coverage: Vec<usize>,
    /// Up to three violating tuples, angles in degrees (`null` = zero).
    pub violation_examples: Vec<Vec<Option<f64>>>,
    /// Up to three samples where exactly one factor of the right-hand side
    /// was satisfied.
    pub examples_of_nearest_misses: Vec<Vec<Option<f64>>>,
    pub pass: bool,
}

fn tuple_degrees(t: &[Component]) -> Vec<Option<f64>> {
    t.iter().map(|c| c.map(|a| to_degrees(&a))).collect()
}

const SHARDS: u64 = 8;
const GRID: i64 = 720;

struct ShardResult {
    violations: usize,
    coverage: Vec<usize>,
    examples: Vec<Vec<Component>>,
    near: Vec<Vec<Component>>,
}

fn run_shards(
    samples: usize,
    seed: u64,
    n_patterns: usize,
    draw: impl Fn(&mut ChaCha8Rng) -> Option<(usize, Vec<Component>)> + Sync,
    judge: impl Fn(&[Component]) -> (bool, bool) + Sync,
) -> ShardResult {
    let results: Vec<ShardResult> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = samples / SHARDS as usize + usize::from((shard as usize) < samples % SHARDS as usize);
            let mut r = ShardResult { violations: 0, coverage: vec![0; n_patterns], examples: vec![], near: vec![] };
            for _ in 0..count {
                let Some((pi, tuple)) = draw(&mut rng) else { continue };
                r.coverage[pi] += 1;
                let (violated, near) = judge(&tuple);
                if violated {
                    r.violations += 1;
                    if r.examples.len() < 3 {
                        r.examples.push(tuple);
                    }
                } else if near && r.near.len() < 3 {
                    r.near.push(tuple);
                }
            }
            r
        })
        .collect();
    results.into_iter().fold(
        ShardResult { violations: 0, coverage: vec![0; n_patterns], examples: vec![], near: vec![] },
        |mut acc, r| {
            acc.violations += r.violations;
            for (a, b) in acc.coverage.iter_mut().zip(r.coverage) {
                *a += b;
            }
            acc.examples.extend(r.examples);
            acc.examples.truncate(3);
            acc.near.extend(r.near);
            acc.near.truncate(3);
            acc
        },
    )
}

/// Which two-point wavefront model enters the left-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TwoPointModel {
    /// `WF ⊂ 𝒱 × −𝒱` (Hadamard two-point function).
    Hadamard,
    /// `WF ⊂ (𝒱 × −𝒱) ∪ (−𝒱 × 𝒱)` (the commutator function).
    Commutator,
}

pub struct LemmaSetup {
    pub sigma: SlotPermutation,
    pub left: ProductCone,
    pub right: ConeExpr,
}

/// Left side `WF((Δ⁺)^⊗n) ×̇ Γ_{m+k}` and right side
/// `Γᶜ_{n+m} ×̇ Γᶜ_{n+k}` of the cone lemma.
pub fn lemma_sets(v: &DirectionCone, n: usize, m: usize, k: usize, model: TwoPointModel) -> LemmaSetup {
    let mut pairs = vec![(v.clone(), v.negate())];
    if model == TwoPointModel::Commutator {
        pairs.push((v.negate(), v.clone()));
    }
    let wf = tensor_power_wavefront(&pairs, n);
    let left = match (n, m + k) {
        (0, _) => gamma_n_unchecked(v, m + k),
        (_, 0) => wf,
        _ => dotted_product(&wf, &gamma_n_unchecked(v, m + k)),
    };
    let comp = |p: usize| ConeExpr::Complement(Box::new(ConeExpr::Product(gamma_n_unchecked(v, p))), p);
    let right = ConeExpr::Dotted(Box::new(comp(n + m)), Box::new(comp(n + k)), n + m);
    LemmaSetup { sigma: sigma_permutation(n, m, k), left, right }
}

/// Samples the left-hand cone, applies `σ_{n,m,k}` and counts samples that
/// land in the right-hand set.
pub fn verify_cone_lemma(
    v: &DirectionCone,
    n: usize,
    m: usize,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<ConeReport, ConeError> {
    v.validate_physical()?;
    Ok(cone_lemma_unchecked(v, n, m, k, samples, seed, TwoPointModel::Hadamard))
}

/// As [`verify_cone_lemma`] without validating `v`, and with a choice of
/// two-point model; for negative controls.
pub fn cone_lemma_unchecked(
    v: &DirectionCone,
    n: usize,
    m: usize,
    k: usize,
    samples: usize,
    seed: u64,
    model: TwoPointModel,
) -> ConeReport {
    let setup = lemma_sets(v, n, m, k, model);
    let (ConeExpr::Dotted(ref a, ref b, split), ref sigma) = (&setup.right, &setup.sigma) else { unreachable!() };
    let res = if 2 * n + m + k == 0 {
        ShardResult { violations: 0, coverage: vec![], examples: vec![], near: vec![] }
    } else {
        run_shards(
            samples,
            seed,
            setup.left.patterns().len(),
            |rng| setup.left.sample(rng, GRID),
            |t| {
                let moved = sigma.apply(t);
                let violated = setup.right.contains(&moved);
                let (l, r) = moved.split_at(*split);
                let near = a.contains(l) != b.contains(r);
                (violated, near)
            },
        )
    };
    ConeReport {
        lemma: "cone_lemma".into(),
        params: json!({"V": v.to_json(), "n": n, "m": m, "k": k, "two_point_model": model}),
        samples,
        violations: res.violations,
        seed,
        coverage: res.coverage,
        violation_examples: res.examples.iter().map(|t| tuple_degrees(t)).collect(),
        examples_of_nearest_misses: res.near.iter().map(|t| tuple_degrees(t)).collect(),
        pass: res.violations == 0,
    }
}

fn direction_of(x: f64, y: f64) -> Option<f64> {
    let norm = x.hypot(y);
    if norm < 1e-12 {
        None
    } else {
        Some(y.atan2(x) / std::f64::consts::TAU)
    }
}

/// Samples tuples `(ξ₁, …, ξₙ)` with `Σξᵢ = 0` and counts those in `Γₙ`.
/// Half the samples draw `ξ₁..ξ_{n−1}` from `±𝒱 ∪ {0}` (the only way to
/// land in `Γₙ`), half uniformly from the circle. Membership of the last,
/// computed component is tested on its float angle.
pub fn conormal_check(v: &DirectionCone, n: usize, samples: usize, seed: u64) -> Result<ConeReport, ConeError> {
    v.validate_physical()?;
    conormal_check_unchecked(v, n, samples, seed)
}

pub fn conormal_check_unchecked(v: &DirectionCone, n: usize, samples: usize, seed: u64) -> Result<ConeReport, ConeError> {
    if n < 2 {
        return Err(ConeError::TooFewPoints { min: 2, got: n });
    }
    if samples == 0 {
        return Err(ConeError::NoSamples);
    }
    let cones = [v.clone(), v.negate()];
    let circle = DirectionCone::arc(Rational64::zero(), Rational64::one());
    const TOL: f64 = 1e-9;
    let member = |tuple: &[Option<f64>]| {
        tuple.iter().any(|c| c.is_some())
            && cones.iter().any(|c| tuple.iter().all(|t| t.map_or(true, |a| c.contains_f64(a, TOL))))
    };
    let draw = |rng: &mut ChaCha8Rng| -> Option<(usize, Vec<Option<f64>>)> {
        let targeted = rng.gen_bool(0.5);
        let source = if targeted { &cones[rng.gen_range(0..2)] } else { &circle };
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut tuple = Vec::with_capacity(n);
        for _ in 0..n - 1 {
            if targeted && rng.gen_bool(0.3) {
                tuple.push(None);
                continue;
            }
            let a = source.sample(rng, GRID)?;
            let mag: f64 = rng.gen_range(0.25..4.0);
            let t = a.to_f64().unwrap() * std::f64::consts::TAU;
            sx += mag * t.cos();
            sy += mag * t.sin();
            tuple.push(Some(a.to_f64().unwrap()));
        }
        tuple.push(direction_of(-sx, -sy));
        if tuple.iter().all(|c| c.is_none()) {
            return None;
        }
        Some((usize::from(targeted), tuple))
    };
    let results: Vec<(usize, [usize; 2], Vec<Vec<Option<f64>>>)> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = samples / SHARDS as usize + usize::from((shard as usize) < samples % SHARDS as usize);
            let mut violations = 0;
            let mut coverage = [0usize; 2];
            let mut examples = Vec::new();
            for _ in 0..count {
                let Some((kind, tuple)) = draw(&mut rng) else { continue };
                coverage[kind] += 1;
                if member(&tuple) {
                    violations += 1;
                    if examples.len() < 3 {
                        examples.push(tuple.iter().map(|c| c.map(|a| a * 360.0)).collect());
                    }
                }
            }
            (violations, coverage, examples)
        })
        .collect();
    let mut violations = 0;
    let mut coverage = vec![0usize; 2];
    let mut examples: Vec<Vec<Option<f64>>> = Vec::new();
    for (vi, c, e) in results {
        violations += vi;
        coverage[0] += c[0];
        coverage[1] += c[1];
        examples.extend(e);
    }
    examples.truncate(3);
    Ok(ConeReport {
        lemma: "conormal_disjointness".into(),
        params: json!({"V": v.to_json(), "n": n, "angle_tolerance_turns": TOL}),
        samples,
        violations,
        seed,
        coverage,
        violation_examples: examples,
        examples_of_nearest_misses: vec![],
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v() -> DirectionCone {
        DirectionCone::from_degrees(40, 50)
    }

    #[test]
    fn negation_and_set_algebra() {
        let nv = v().negate();
        assert_eq!(nv, DirectionCone::from_degrees(220, 230));
        assert_eq!(nv.negate(), v());
        assert!(v().disjoint(&nv));
        let u = DirectionCone::from_degrees(10, 20).union(&DirectionCone::from_degrees(15, 30));
        assert_eq!(u, DirectionCone::from_degrees(10, 30));
        let w = DirectionCone::from_degrees(350, 10);
        assert_eq!(w.sectors().len(), 2);
        assert!(w.contains(&degrees(0)));
        assert!(w.contains(&degrees(355)));
        assert_eq!(w.negate().negate(), w);
        assert_eq!(w.opening(), degrees(20));
        let c = v().complement_closure();
        assert!(c.contains(&degrees(40)) && c.contains(&degrees(100)) && !c.contains(&degrees(45)));
        assert!(v().validate_physical().is_ok());
        assert!(DirectionCone::from_degrees(0, 200).validate_physical().is_err());
        let open = v().with_open(true);
        assert!(!open.contains(&degrees(40)) && open.contains(&degrees(45)));
    }

    #[test]
    fn gamma_examples() {
        let g1 = gamma_n(&v(), 1).unwrap();
        assert!(g1.contains(&[Some(degrees(45))]) && g1.contains(&[Some(degrees(225))]));
        assert!(!g1.contains(&[Some(degrees(90))]) && !g1.contains(&[None]));
        let g2 = gamma_n(&v(), 2).unwrap();
        assert!(g2.contains(&[Some(degrees(45)), Some(degrees(42))]));
        assert!(g2.contains(&[Some(degrees(45)), None]));
        assert!(!g2.contains(&[Some(degrees(45)), Some(degrees(225))]));
        assert!(gamma_n(&DirectionCone::from_degrees(0, 180), 2).is_err());
    }

    #[test]
    fn dotted_product_structure() {
        let a = ProductCone::new(1, vec![vec![Slot::In(v())]]);
        let d = dotted_product(&a, &a);
        assert!(d.contains(&[None, Some(degrees(45))]));
        assert!(d.contains(&[Some(degrees(45)), None]));
        assert!(!d.contains(&[None, None]));
        assert!(!d.contains(&[Some(degrees(90)), Some(degrees(45))]));
    }

    #[test]
    fn lemma_with_no_contractions() {
        let r = verify_cone_lemma(&v(), 0, 2, 2, 2000, 1).unwrap();
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn commutator_model_breaks_the_lemma() {
        let r = cone_lemma_unchecked(&v(), 2, 0, 0, 4000, 3, TwoPointModel::Commutator);
        assert!(r.violations > 0);
    }

    #[test]
    fn conormal_examples() {
        let r = conormal_check(&v(), 3, 4000, 5).unwrap();
        assert_eq!(r.violations, 0);
        let half = DirectionCone::from_degrees(0, 180);
        let r = conormal_check_unchecked(&half, 2, 4000, 5).unwrap();
        assert!(r.violations > 0);
        assert!(conormal_check(&v(), 1, 10, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = verify_cone_lemma(&v(), 1, 1, 1, 3000, 9).unwrap();
        let b = verify_cone_lemma(&v(), 1, 1, 1, 3000, 9).unwrap();
        assert_eq!(a, b);
    }
}
