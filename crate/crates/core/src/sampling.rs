//! Seeded random functionals, fields and test sections for sweeps and
//! tests. Coefficients are small rationals so the same draw is exact in
//! rational mode.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::functionals::MultiVectorField;
use crate::lattice::LatticeSpacetime;
use crate::scalar::Scalar;

/// Nonzero rational `p/q` with `|p| ≤ 6`, `1 ≤ q ≤ 4`.
pub fn small_rational<S: Scalar, R: Rng>(rng: &mut R) -> S {
    let mut p = 0;
    while p == 0 {
        p = rng.gen_range(-6..=6);
    }
    S::from_ratio(p, rng.gen_range(1..=4))
}

/// Values `p/4` with `|p| ≤ 8` at every site.
pub fn random_field<S: Scalar, R: Rng>(rng: &mut R, n_sites: usize) -> Vec<S> {
    (0..n_sites).map(|_| S::from_ratio(rng.gen_range(-8..=8), 4)).collect()
}

/// Random field vanishing on the boundary rows.
pub fn random_interior_field<S: Scalar, R: Rng>(rng: &mut R, lat: &LatticeSpacetime) -> Vec<S> {
    (0..lat.n_sites())
        .map(|s| if lat.is_interior_site(s) { S::from_ratio(rng.gen_range(-8..=8), 4) } else { S::zero() })
        .collect()
}

/// Shape of a random multivector field.
#[derive(Clone, Debug)]
pub struct FieldShape<'a> {
    pub k: usize,
    pub max_degree: usize,
    pub terms: usize,
    /// Sites the field slots may use.
    pub sym_sites: &'a [usize],
    /// Sites the vector slots may use; must hold at least `k` sites.
    pub anti_sites: &'a [usize],
}

/// Random `k`-vector field with polynomial degree at most `max_degree`.
/// Always contains a term of the top degree.
pub fn random_multivector<S: Scalar, R: Rng>(rng: &mut R, n_sites: usize, shape: &FieldShape) -> MultiVectorField<S> {
    assert!(shape.anti_sites.len() >= shape.k, "not enough vector-slot sites");
    let mut x = MultiVectorField::zero(shape.k, n_sites);
    for t in 0..shape.terms.max(1) {
        let d = if t == 0 { shape.max_degree } else { rng.gen_range(0..=shape.max_degree) };
        let sym: Vec<u32> = (0..d).map(|_| *shape.sym_sites.choose(rng).unwrap() as u32).collect();
        let anti: Vec<u32> = shape.anti_sites.choose_multiple(rng, shape.k).map(|s| *s as u32).collect();
        x.add_entry(sym, anti, small_rational(rng));
    }
    x
}

/// Random functional (`k = 0`).
pub fn random_functional<S: Scalar, R: Rng>(
    rng: &mut R,
    n_sites: usize,
    max_degree: usize,
    terms: usize,
    sites: &[usize],
) -> MultiVectorField<S> {
    random_multivector(rng, n_sites, &FieldShape { k: 0, max_degree, terms, sym_sites: sites, anti_sites: &[] })
}
