use std::f64::consts::PI;

use crate::linalg::DenseMatrix;
use crate::scalar::{Scalar, C64};

use super::{dispersion_argument, LatticeError, LatticeSpacetime};

/// Retarded, advanced and commutator kernels, indexed `[a][b]` with `a` the
/// field point and `b` the source.
#[derive(Clone, Debug, PartialEq)]
pub struct CausalPropagators<S> {
    pub retarded: DenseMatrix<S>,
    pub advanced: DenseMatrix<S>,
    pub commutator: DenseMatrix<S>,
}

/// Float kernels together with the two-point function.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorSet {
    pub causal: CausalPropagators<f64>,
    pub two_point: DenseMatrix<C64>,
}

impl PropagatorSet {
    pub fn retarded(&self) -> &DenseMatrix<f64> {
        &self.causal.retarded
    }
    pub fn advanced(&self) -> &DenseMatrix<f64> {
        &self.causal.advanced
    }
    pub fn commutator(&self) -> &DenseMatrix<f64> {
        &self.causal.commutator
    }
}

struct Stepper<S> {
    r2: S,
    m2dt2: S,
    two: S,
}

impl<S: Scalar> Stepper<S> {
    fn new(lat: &LatticeSpacetime) -> Self {
        Self {
            r2: S::from_rational64(&(lat.cfl() * lat.cfl())),
            m2dt2: S::from_rational64(&(lat.mass() * lat.mass() * lat.dt() * lat.dt())),
            two: S::from_i64(2),
        }
    }

    /// Given rows `cur` and `other`, returns the row on the far side of
    /// `cur` solving the homogeneous stencil at `cur`. Time reversal is the
    /// same formula with the roles of past and future swapped.
    fn step(&self, cur: &[S], other: &[S]) -> Vec<S> {
        let nx = cur.len();
        (0..nx)
            .map(|x| {
                let left = &cur[(x + nx - 1) % nx];
                let right = &cur[(x + 1) % nx];
                let lap = left.clone() + right.clone() - self.two.clone() * cur[x].clone();
                self.two.clone() * cur[x].clone() - other[x].clone() + self.r2.clone() * lap
                    - self.m2dt2.clone() * cur[x].clone()
            })
            .collect()
    }
}

/// Leapfrog evolution of Cauchy data on rows 0 and 1 across the lattice.
pub fn leapfrog_evolve<S: Scalar>(lat: &LatticeSpacetime, row0: &[S], row1: &[S]) -> Vec<S> {
    assert_eq!(row0.len(), lat.nx());
    assert_eq!(row1.len(), lat.nx());
    let stepper = Stepper::new(lat);
    let mut rows: Vec<Vec<S>> = vec![row0.to_vec(), row1.to_vec()];
    for t in 1..lat.nt() - 1 {
        let next = stepper.step(&rows[t], &rows[t - 1]);
        rows.push(next);
    }
    rows.into_iter().flatten().collect()
}

/// Column `b` of the retarded kernel: zero up to and including the source
/// row, `dt²` at the source position one row later, homogeneous evolution
/// afterwards.
fn retarded_column<S: Scalar>(lat: &LatticeSpacetime, stepper: &Stepper<S>, b: usize) -> Vec<S> {
    let (tb, xb) = lat.coords(b);
    let nx = lat.nx();
    let mut out = vec![S::zero(); lat.n_sites()];
    if tb + 1 >= lat.nt() {
        return out;
    }
    let mut prev = vec![S::zero(); nx];
    let mut cur = vec![S::zero(); nx];
    cur[xb] = S::from_rational64(&(lat.dt() * lat.dt()));
    out[lat.site(tb + 1, xb)] = cur[xb].clone();
    for t in tb + 1..lat.nt() - 1 {
        let next = stepper.step(&cur, &prev);
        for (x, v) in next.iter().enumerate() {
            out[lat.site(t + 1, x)] = v.clone();
        }
        prev = cur;
        cur = next;
    }
    out
}

/// Column `b` of the advanced kernel by backward stepping.
fn advanced_column<S: Scalar>(lat: &LatticeSpacetime, stepper: &Stepper<S>, b: usize) -> Vec<S> {
    let (tb, xb) = lat.coords(b);
    let nx = lat.nx();
    let mut out = vec![S::zero(); lat.n_sites()];
    if tb == 0 {
        return out;
    }
    let mut prev = vec![S::zero(); nx];
    let mut cur = vec![S::zero(); nx];
    cur[xb] = S::from_rational64(&(lat.dt() * lat.dt()));
    out[lat.site(tb - 1, xb)] = cur[xb].clone();
    for t in (1..tb).rev() {
        let next = stepper.step(&cur, &prev);
        for (x, v) in next.iter().enumerate() {
            out[lat.site(t - 1, x)] = v.clone();
        }
        prev = cur;
        cur = next;
    }
    out
}

fn columns_to_matrix<S: Scalar>(n: usize, cols: Vec<Vec<S>>) -> DenseMatrix<S> {
    let mut m = DenseMatrix::zeros(n, n);
    for (b, col) in cols.into_iter().enumerate() {
        for (a, v) in col.into_iter().enumerate() {
            if !v.is_zero() {
                m.set(a, b, v);
            }
        }
    }
    m
}

/// Retarded kernel by forward stepping, advanced kernel as its transpose,
/// commutator as their difference. Exact in rational mode.
pub fn causal_propagators<S: Scalar>(lat: &LatticeSpacetime) -> CausalPropagators<S> {
    let stepper = Stepper::new(lat);
    let n = lat.n_sites();
    let cols = (0..n).map(|b| retarded_column(lat, &stepper, b)).collect();
    let retarded = columns_to_matrix(n, cols);
    let advanced = retarded.transpose();
    let commutator = retarded.sub(&advanced);
    CausalPropagators { retarded, advanced, commutator }
}

/// Advanced kernel built independently by backward time stepping.
pub fn advanced_by_reflection<S: Scalar>(lat: &LatticeSpacetime) -> DenseMatrix<S> {
    let stepper = Stepper::new(lat);
    let n = lat.n_sites();
    let cols = (0..n).map(|b| advanced_column(lat, &stepper, b)).collect();
    columns_to_matrix(n, cols)
}

fn mode_frequencies(lat: &LatticeSpacetime) -> Result<Vec<f64>, LatticeError> {
    let dt = f64::from_rational64(&lat.dt());
    let dx = f64::from_rational64(&lat.dx());
    let m = f64::from_rational64(&lat.mass());
    (0..lat.nx())
        .map(|j| {
            let s = dispersion_argument(j, lat.nx(), dt, dx, m);
            if s >= 1.0 {
                return Err(LatticeError::DispersionUnsolvable { mode: j, value: s });
            }
            if s <= 0.0 {
                return Err(LatticeError::ZeroMode);
            }
            // ω dt
            Ok(2.0 * s.sqrt().asin())
        })
        .collect()
}

/// Two-point function from the spatial mode sum alone:
/// `Δ⁺ = (1/nx) Σ_k e^{ik(x-x')dx} · dt²/(2 sin ω_k dt) · e^{+iω_k (t-t') dt}`.
/// Its antisymmetric part reproduces `(i/2)Δ` up to round-off.
pub fn two_point_mode_sum(lat: &LatticeSpacetime) -> Result<DenseMatrix<C64>, LatticeError> {
    let omega_dt = mode_frequencies(lat)?;
    let dt = f64::from_rational64(&lat.dt());
    let nx = lat.nx();
    let nt = lat.nt();
    let norm: Vec<f64> = omega_dt.iter().map(|w| dt * dt / (2.0 * w.sin())).collect();
    // kernel depends on (t - t', x - x') only
    let mut table = vec![C64::new(0.0, 0.0); (2 * nt - 1) * nx];
    for tau in -(nt as isize - 1)..nt as isize {
        for dxi in 0..nx {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..nx {
                let kphase = 2.0 * PI * (j * dxi) as f64 / nx as f64;
                let phase = kphase + omega_dt[j] * tau as f64;
                acc += C64::from_polar(norm[j], phase);
            }
            table[(tau + nt as isize - 1) as usize * nx + dxi] = acc / nx as f64;
        }
    }
    let n = lat.n_sites();
    let mut m = DenseMatrix::zeros(n, n);
    for a in 0..n {
        let (ta, xa) = lat.coords(a);
        for b in 0..n {
            let (tb, xb) = lat.coords(b);
            let tau = ta as isize - tb as isize;
            let dxi = (xa + nx - xb) % nx;
            m.set(a, b, table[(tau + nt as isize - 1) as usize * nx + dxi]);
        }
    }
    Ok(m)
}

/// Float kernels and the two-point function. The real part of `Δ⁺` comes
/// from the symmetrised mode sum, the imaginary part is `Δ/2` taken from
/// the stepped commutator, so `Δ⁺ - Δ⁺ᵀ = iΔ` holds exactly.
pub fn compute_propagators(lat: &LatticeSpacetime) -> Result<PropagatorSet, LatticeError> {
    let causal = causal_propagators::<f64>(lat);
    let modes = two_point_mode_sum(lat)?;
    let n = lat.n_sites();
    let mut two_point = DenseMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let re = 0.5 * (modes.get(a, b).re + modes.get(b, a).re);
            let im = 0.5 * causal.commutator.get(a, b);
            two_point.set(a, b, C64::new(re, im));
        }
    }
    Ok(PropagatorSet { causal, two_point })
}

/// Defects of the two-point function on a lattice.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct TwoPointDefects {
    /// `max |(Δ⁺ − Δ⁺ᵀ) − iΔ|`.
    pub antisymmetry: f64,
    /// `max |(P⊗1)Δ⁺|` over interior rows of the first argument.
    pub left_bisolution: f64,
    /// `max |(1⊗P)Δ⁺|` over interior rows of the second argument.
    pub right_bisolution: f64,
}

pub fn two_point_defects(lat: &LatticeSpacetime, props: &PropagatorSet) -> TwoPointDefects {
    let n = lat.n_sites();
    let delta = props.commutator();
    let w = &props.two_point;
    let mut antisymmetry: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let d = *w.get(a, b) - *w.get(b, a) - C64::new(0.0, *delta.get(a, b));
            antisymmetry = antisymmetry.max(d.norm());
        }
    }
    let rows = super::wave_operator_rows::<f64>(lat);
    let mut left_bisolution: f64 = 0.0;
    let mut right_bisolution: f64 = 0.0;
    for a in lat.interior_sites() {
        for b in 0..n {
            let l: C64 = rows[a].iter().map(|(j, p)| *w.get(*j as usize, b) * *p).sum();
            let r: C64 = rows[a].iter().map(|(j, p)| *w.get(b, *j as usize) * *p).sum();
            left_bisolution = left_bisolution.max(l.norm());
            right_bisolution = right_bisolution.max(r.norm());
        }
    }
    TwoPointDefects { antisymmetry, left_bisolution, right_bisolution }
}

#[cfg(test)]
mod tests {
    use super::super::{apply_rows, wave_operator_rows, LatticeSpacetime};
    use super::*;
    use crate::scalar::Rational;
    use num::rational::Rational64;

    fn lattice() -> LatticeSpacetime {
        LatticeSpacetime::new(8, 8, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
            .unwrap()
    }

    #[test]
    fn retarded_support_is_causal_future() {
        let lat = lattice();
        let props = causal_propagators::<f64>(&lat);
        for a in 0..lat.n_sites() {
            for b in 0..lat.n_sites() {
                let v = *props.retarded.get(a, b);
                if lat.coords(a).0 <= lat.coords(b).0 {
                    assert_eq!(v, 0.0);
                }
                if v != 0.0 {
                    assert!(lat.in_causal_future(a, b), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn retarded_inverts_wave_operator_exactly() {
        let lat = lattice();
        let props = causal_propagators::<Rational>(&lat);
        let rows = wave_operator_rows::<Rational>(&lat);
        for b in lat.interior_sites() {
            let col: Vec<Rational> = (0..lat.n_sites()).map(|a| props.retarded.get(a, b).clone()).collect();
            let p = apply_rows(&rows, &col);
            for (a, v) in p.iter().enumerate() {
                let expected = if a == b { Rational::from_i64(1) } else { Rational::from_i64(0) };
                if lat.is_interior_site(a) {
                    assert_eq!(*v, expected, "site {a} source {b}");
                }
            }
        }
    }

    #[test]
    fn two_point_is_a_bisolution() {
        let lat = lattice();
        let d = two_point_defects(&lat, &compute_propagators(&lat).unwrap());
        assert!(d.antisymmetry <= 1e-12, "{d:?}");
        assert!(d.left_bisolution <= 1e-9 && d.right_bisolution <= 1e-9, "{d:?}");
    }

    #[test]
    fn advanced_by_reflection_matches_transpose() {
        let lat = lattice();
        let props = causal_propagators::<Rational>(&lat);
        assert_eq!(advanced_by_reflection::<Rational>(&lat), props.advanced);
    }

    #[test]
    fn mode_sum_antisymmetric_part_matches_stepped_commutator() {
        let lat = lattice();
        let props = causal_propagators::<f64>(&lat);
        let modes = two_point_mode_sum(&lat).unwrap();
        let n = lat.n_sites();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let anti = *modes.get(a, b) - *modes.get(b, a);
                let target = C64::new(0.0, *props.commutator.get(a, b));
                worst = worst.max((anti - target).norm());
            }
        }
        assert!(worst <= 1e-12, "worst {worst}");
    }

    #[test]
    fn unstable_and_massless_lattices_are_rejected() {
        let unstable = LatticeSpacetime::new(
            8,
            8,
            Rational64::from_integer(1),
            Rational64::from_integer(1),
            Rational64::from_integer(1),
        )
        .unwrap();
        assert!(matches!(compute_propagators(&unstable), Err(LatticeError::DispersionUnsolvable { .. })));
        let massless = LatticeSpacetime::new(
            8,
            8,
            Rational64::new(1, 2),
            Rational64::from_integer(1),
            Rational64::from_integer(0),
        )
        .unwrap();
        assert_eq!(compute_propagators(&massless), Err(LatticeError::ZeroMode));
    }

    #[test]
    fn leapfrog_solution_is_annihilated() {
        let lat = lattice();
        let r0: Vec<f64> = (0..8).map(|x| (x as f64).sin()).collect();
        let r1: Vec<f64> = (0..8).map(|x| (x as f64 * 0.3).cos()).collect();
        let phi = leapfrog_evolve(&lat, &r0, &r1);
        let p = apply_rows(&wave_operator_rows::<f64>(&lat), &phi);
        assert!(p.iter().all(|v| v.abs() < 1e-12));
    }
}
