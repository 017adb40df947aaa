//! Discrete 1+1D spacetime, the leapfrog Klein–Gordon operator and its
//! Green functions, the switching function and the retraction maps built
//! from them.
//!
//! Sites are indexed row-major, `site = t * nx + x`, with periodic space and
//! a finite time interval. Rows `t = 0` and `t = nt - 1` are boundary rows:
//! the wave operator is not evaluated there and every identity involving it
//! is asserted on interior rows only. All pairings use unit site weight.

mod io;
mod propagators;
mod switching;

use std::collections::BTreeSet;
use std::ops::{Deref, DerefMut};

use num::rational::Rational64;
use num::Signed;
use thiserror::Error;

use crate::scalar::Scalar;

pub use io::{KernelCache, LatticeDocument, DOCUMENT_VERSION};
pub use propagators::{
    advanced_by_reflection, causal_propagators, compute_propagators, leapfrog_evolve,
    two_point_defects, two_point_mode_sum, CausalPropagators, PropagatorSet, TwoPointDefects,
};
pub use switching::{make_switching, Retraction, SwitchingFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LatticeError {
    #[error("nt too small: need at least 4 time rows, got {0}")]
    TooFewTimeRows(usize),
    #[error("nx too small: need at least 2 spatial sites, got {0}")]
    TooFewSites(usize),
    #[error("lattice spacings must be positive (dt = {dt}, dx = {dx})")]
    NonpositiveSpacing { dt: String, dx: String },
    #[error("mass must be nonnegative, got {0}")]
    NegativeMass(String),
    #[error("acausal lattice: dt/dx = {0} exceeds 1")]
    Acausal(String),
    #[error("field has {got} entries, lattice has {expected} sites")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dispersion relation unsolvable for spatial mode {mode}: sin^2(omega dt/2) = {value}")]
    DispersionUnsolvable { mode: usize, value: f64 },
    #[error("massless zero mode has no frequency splitting")]
    ZeroMode,
    #[error("switching window invalid: need 1 <= t_minus < t_plus <= nt-2, got ({t_minus}, {t_plus}) with nt = {nt}")]
    InvalidSwitching { t_minus: usize, t_plus: usize, nt: usize },
    #[error("one-sided inverse property unavailable at boundary: input supported on boundary site {0}")]
    BoundarySupport(usize),
    #[error("lattice document: {0}")]
    Document(String),
}

/// Finite periodic 1+1D lattice with rational spacings.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatticeSpacetime {
    nt: usize,
    nx: usize,
    dt: Rational64,
    dx: Rational64,
    mass: Rational64,
}

impl LatticeSpacetime {
    pub fn new(
        nt: usize,
        nx: usize,
        dt: Rational64,
        dx: Rational64,
        mass: Rational64,
    ) -> Result<Self, LatticeError> {
        if nt < 4 {
            return Err(LatticeError::TooFewTimeRows(nt));
        }
        if nx < 2 {
            return Err(LatticeError::TooFewSites(nx));
        }
        if !dt.is_positive() || !dx.is_positive() {
            return Err(LatticeError::NonpositiveSpacing {
                dt: crate::scalar::format_rational64(&dt),
                dx: crate::scalar::format_rational64(&dx),
            });
        }
        if mass.is_negative() {
            return Err(LatticeError::NegativeMass(crate::scalar::format_rational64(&mass)));
        }
        let cfl = dt / dx;
        if cfl > Rational64::from_integer(1) {
            return Err(LatticeError::Acausal(crate::scalar::format_rational64(&cfl)));
        }
        Ok(Self { nt, nx, dt, dx, mass })
    }

    pub fn nt(&self) -> usize {
        self.nt
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn dt(&self) -> Rational64 {
        self.dt
    }
    pub fn dx(&self) -> Rational64 {
        self.dx
    }
    pub fn mass(&self) -> Rational64 {
        self.mass
    }
    pub fn cfl(&self) -> Rational64 {
        self.dt / self.dx
    }
    pub fn n_sites(&self) -> usize {
        self.nt * self.nx
    }

    #[inline]
    pub fn site(&self, t: usize, x: usize) -> usize {
        debug_assert!(t < self.nt && x < self.nx);
        t * self.nx + x
    }

    #[inline]
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site / self.nx, site % self.nx)
    }

    pub fn is_interior_row(&self, t: usize) -> bool {
        t >= 1 && t + 1 < self.nt
    }

    pub fn is_interior_site(&self, site: usize) -> bool {
        self.is_interior_row(self.coords(site).0)
    }

    pub fn interior_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (self.nx..self.n_sites() - self.nx).into_iter()
    }

    pub fn periodic_distance(&self, x1: usize, x2: usize) -> usize {
        let d = x1.abs_diff(x2);
        d.min(self.nx - d)
    }

    pub fn wrap_x(&self, x: isize) -> usize {
        x.rem_euclid(self.nx as isize) as usize
    }

    /// `a` lies in the discrete causal cone of `b`: the leapfrog stencil
    /// reaches one spatial site per time step, so the cone is
    /// `|Δx| ≤ |Δt|` in index units.
    pub fn causally_related(&self, a: usize, b: usize) -> bool {
        let (ta, xa) = self.coords(a);
        let (tb, xb) = self.coords(b);
        self.periodic_distance(xa, xb) <= ta.abs_diff(tb)
    }

    pub fn in_causal_future(&self, a: usize, b: usize) -> bool {
        self.coords(a).0 >= self.coords(b).0 && self.causally_related(a, b)
    }

    pub fn check_len(&self, len: usize) -> Result<(), LatticeError> {
        if len != self.n_sites() {
            return Err(LatticeError::ShapeMismatch { expected: self.n_sites(), got: len });
        }
        Ok(())
    }

    /// Largest `sin²(ω dt/2)` over the spatial modes; leapfrog modes are
    /// oscillatory only when this is below one.
    pub fn max_dispersion_argument(&self) -> (usize, f64) {
        let dt = f64::from_rational64(&self.dt);
        let dx = f64::from_rational64(&self.dx);
        let m = f64::from_rational64(&self.mass);
        (0..self.nx)
            .map(|j| (j, dispersion_argument(j, self.nx, dt, dx, m)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

pub(crate) fn dispersion_argument(j: usize, nx: usize, dt: f64, dx: f64, m: f64) -> f64 {
    let k = 2.0 * std::f64::consts::PI * j as f64 / (nx as f64 * dx);
    let s = (k * dx / 2.0).sin();
    dt * dt / 4.0 * (m * m + 4.0 / (dx * dx) * s * s)
}

/// A field configuration (or test section) over all lattice sites.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldConfig<S> {
    values: Vec<S>,
}

impl<S: Scalar> FieldConfig<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn zeros(lat: &LatticeSpacetime) -> Self {
        Self { values: vec![S::zero(); lat.n_sites()] }
    }

    pub fn delta(lat: &LatticeSpacetime, site: usize) -> Self {
        let mut f = Self::zeros(lat);
        f.values[site] = S::one();
        f
    }

    pub fn from_fn(lat: &LatticeSpacetime, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let values = (0..lat.n_sites())
            .map(|s| {
                let (t, x) = lat.coords(s);
                f(t, x)
            })
            .collect();
        Self { values }
    }

    pub fn into_vec(self) -> Vec<S> {
        self.values
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.values.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, _)| i).collect()
    }
}

impl<S> Deref for FieldConfig<S> {
    type Target = [S];
    fn deref(&self) -> &[S] {
        &self.values
    }
}

impl<S> DerefMut for FieldConfig<S> {
    fn deref_mut(&mut self) -> &mut [S] {
        &mut self.values
    }
}

/// Sparse rows of the wave operator: entry `(s, P[j, s])` for output site
/// `j`. Boundary rows are empty.
pub fn wave_operator_rows<S: Scalar>(lat: &LatticeSpacetime) -> Vec<Vec<(u32, S)>> {
    let inv_dt2 = S::from_rational64(&(lat.dt * lat.dt).recip());
    let inv_dx2 = S::from_rational64(&(lat.dx * lat.dx).recip());
    let m2 = S::from_rational64(&(lat.mass * lat.mass));
    let two = S::from_i64(2);
    let center = -(two.clone() * inv_dt2.clone()) + two * inv_dx2.clone() + m2;
    (0..lat.n_sites())
        .map(|j| {
            let (t, x) = lat.coords(j);
            if !lat.is_interior_row(t) {
                return Vec::new();
            }
            let mut row: Vec<(u32, S)> = Vec::with_capacity(5);
            let mut push = |s: usize, v: S| {
                if let Some(e) = row.iter_mut().find(|(c, _)| *c as usize == s) {
                    e.1 = e.1.clone() + v;
                } else {
                    row.push((s as u32, v));
                }
            };
            push(lat.site(t + 1, x), inv_dt2.clone());
            push(lat.site(t - 1, x), inv_dt2.clone());
            push(j, center.clone());
            push(lat.site(t, lat.wrap_x(x as isize + 1)), -inv_dx2.clone());
            push(lat.site(t, lat.wrap_x(x as isize - 1)), -inv_dx2.clone());
            row.retain(|(_, v)| !v.is_zero());
            row.sort_by_key(|(c, _)| *c);
            row
        })
        .collect()
}

/// `(Pφ)` with boundary rows set to zero.
pub fn apply_wave_operator<S: Scalar>(
    lat: &LatticeSpacetime,
    phi: &[S],
) -> Result<FieldConfig<S>, LatticeError> {
    lat.check_len(phi.len())?;
    Ok(FieldConfig::new(apply_rows(&wave_operator_rows(lat), phi)))
}

pub(crate) fn apply_rows<S: Scalar>(rows: &[Vec<(u32, S)>], v: &[S]) -> Vec<S> {
    rows.iter()
        .map(|row| {
            row.iter().fold(S::zero(), |acc, (c, p)| {
                let x = &v[*c as usize];
                if x.is_zero() {
                    acc
                } else {
                    acc + p.clone() * x.clone()
                }
            })
        })
        .collect()
}

/// `J(sites)`: every site in the discrete causal past or future of some
/// site of the set.
pub fn causal_hull(lat: &LatticeSpacetime, sites: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..lat.n_sites()).filter(|&a| sites.iter().any(|&b| lat.causally_related(a, b))).collect()
}

/// `J⁺(sites)`.
pub fn causal_future(lat: &LatticeSpacetime, sites: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..lat.n_sites()).filter(|&a| sites.iter().any(|&b| lat.in_causal_future(a, b))).collect()
}

/// `J⁻(sites)`.
pub fn causal_past(lat: &LatticeSpacetime, sites: &BTreeSet<usize>) -> BTreeSet<usize> {
    (0..lat.n_sites()).filter(|&a| sites.iter().any(|&b| lat.in_causal_future(b, a))).collect()
}

/// Rows touched by a site set.
pub fn rows_of(lat: &LatticeSpacetime, sites: &BTreeSet<usize>) -> BTreeSet<usize> {
    sites.iter().map(|&s| lat.coords(s).0).collect()
}

#[cfg(test)]
fn rational(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}
