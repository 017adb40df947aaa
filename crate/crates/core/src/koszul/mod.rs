//! The Koszul differential `δX(φ) = X(φ){Pφ, ·}`, the homotopy `H` built
//! from `α` and the retractions `γ_λ`, the pullback `γ₀*`, on-shell
//! restriction, and the identity checks tying them together.
//!
//! `H` is available in two forms. [`homotopy_eval`] evaluates it at a
//! configuration and test sections, integrating the λ-polynomial integrand
//! exactly. [`homotopy_operator`] builds the coefficient tensors of `HX`;
//! it agrees with the pointwise form whenever the test sections avoid the
//! boundary rows, which is the domain on which `α` inverts `P`.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::functionals::{expand_sorted, FunctionalError, MultiVectorField, SlotIndex};
use crate::lattice::{leapfrog_evolve, LatticeError, LatticeSpacetime, Retraction};
use crate::linalg::next_permutation;
use crate::scalar::{orderings, Mode, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KoszulError {
    #[error("the Koszul differential needs a k-vector field with k >= 1")]
    ZeroDegree,
    #[error("not a Cauchy neighbourhood: region {lo}..={hi} must be interior rows of a lattice with {nt} rows")]
    NotCauchyNeighborhood { lo: usize, hi: usize, nt: usize },
    #[error("switching window {t_minus}..={t_plus} is not contained in region {lo}..={hi}")]
    WindowOutsideRegion { t_minus: usize, t_plus: usize, lo: usize, hi: usize },
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Field values on time rows 0 and 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyData<S> {
    pub phi0: Vec<S>,
    pub phi1: Vec<S>,
}

impl<S: Scalar> CauchyData<S> {
    pub fn new(lat: &LatticeSpacetime, phi0: Vec<S>, phi1: Vec<S>) -> Result<Self, LatticeError> {
        for row in [&phi0, &phi1] {
            if row.len() != lat.nx() {
                return Err(LatticeError::ShapeMismatch { expected: lat.nx(), got: row.len() });
            }
        }
        Ok(Self { phi0, phi1 })
    }

    /// The solution `ι(φ₀, φ₁)` on the whole lattice.
    pub fn evolve(&self, lat: &LatticeSpacetime) -> Vec<S> {
        leapfrog_evolve(lat, &self.phi0, &self.phi1)
    }
}

/// `δX`: contracts the first vector slot of `X` with `Pφ`.
pub fn koszul_differential<S: Scalar>(
    x: &MultiVectorField<S>,
    wave_rows: &[Vec<(u32, S)>],
) -> Result<MultiVectorField<S>, KoszulError> {
    if x.k() == 0 {
        return Err(KoszulError::ZeroDegree);
    }
    if wave_rows.len() != x.n_sites() {
        return Err(FunctionalError::ShapeMismatch { expected: x.n_sites(), got: wave_rows.len() }.into());
    }
    let mut out = MultiVectorField::zero(x.k() - 1, x.n_sites());
    for (d, idx, v) in x.entries() {
        let inv = S::from_ratio(1, (d + 1) as i64);
        for (p, &j) in idx.anti.iter().enumerate() {
            let mut rest = idx.anti.clone();
            rest.remove(p);
            let signed = if p % 2 == 0 { v.clone() } else { -v.clone() };
            for (s, pv) in &wave_rows[j as usize] {
                let mut sym = idx.sym.clone();
                let at = sym.partition_point(|&i| i < *s);
                sym.insert(at, *s);
                let mult = sym.iter().filter(|&&i| i == *s).count() as i64;
                let val = signed.clone() * pv.clone() * S::from_i64(mult) * inv.clone();
                out.add_canonical(SlotIndex { sym, anti: rest.clone() }, val);
            }
        }
    }
    Ok(out)
}

/// `δY(φ){h₂..} = Y(φ){Pφ, h₂..}` evaluated directly.
pub fn koszul_eval<S: Scalar>(
    y: &MultiVectorField<S>,
    ret: &Retraction<S>,
    phi: &[S],
    hs: &[&[S]],
) -> Result<S, KoszulError> {
    let p_phi = ret.apply_wave(phi);
    let mut args: Vec<&[S]> = vec![&p_phi];
    args.extend_from_slice(hs);
    Ok(y.evaluate(phi, &args)?)
}

fn poly_mul<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].clone() + x.clone() * y.clone();
        }
    }
    out
}

/// `∫₀¹ λˡ X^(1)(a + λb){u; hs} dλ`.
fn line_derivative_integral<S: Scalar>(
    x: &MultiVectorField<S>,
    a: &[S],
    b: &[S],
    u: &[S],
    hs: &[&[S]],
    l: usize,
) -> Result<S, KoszulError> {
    let mut total = S::zero();
    for (d, idx, v) in x.entries() {
        if d == 0 {
            continue;
        }
        let det = {
            let m: Vec<Vec<S>> = hs.iter().map(|h| idx.anti.iter().map(|&j| h[j as usize].clone()).collect()).collect();
            crate::linalg::small_determinant(&m)
        };
        if det.is_zero() {
            continue;
        }
        let mut poly = vec![S::zero(); d];
        for r in 0..d {
            let ur = u[idx.sym[r] as usize].clone();
            if ur.is_zero() {
                continue;
            }
            let mut prod = vec![ur];
            for (r2, &i) in idx.sym.iter().enumerate() {
                if r2 != r {
                    prod = poly_mul(&prod, &[a[i as usize].clone(), b[i as usize].clone()]);
                }
            }
            for (p, c) in prod.into_iter().enumerate() {
                poly[p] = poly[p].clone() + c;
            }
        }
        let integral = poly
            .into_iter()
            .enumerate()
            .fold(S::zero(), |acc, (p, c)| acc + c * S::from_ratio(1, (p + l + 1) as i64));
        total = total + v.clone() * S::from_i64(orderings(&idx.sym)) * det * integral;
    }
    Ok(total)
}

/// `(H_l X)(φ){h₁..h_{l+1}} = Σᵢ (−1)^{i−1} ∫₀¹ X^(1)(γ_λφ){αhᵢ; …ĥᵢ…} λˡ dλ`.
pub fn homotopy_eval<S: Scalar>(
    x: &MultiVectorField<S>,
    ret: &Retraction<S>,
    phi: &[S],
    hs: &[&[S]],
) -> Result<S, KoszulError> {
    let l = x.k();
    if hs.len() != l + 1 {
        return Err(FunctionalError::SlotCount { expected: l + 1, got: hs.len() }.into());
    }
    ret.lattice().check_len(phi.len())?;
    let (a, b) = ret.line(phi);
    let mut total = S::zero();
    for i in 0..hs.len() {
        let u = ret.alpha_apply(hs[i])?;
        let others: Vec<&[S]> = hs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, h)| *h).collect();
        let term = line_derivative_integral(x, &a, &b, &u, &others, l)?;
        total = if i % 2 == 0 { total + term } else { total - term };
    }
    Ok(total)
}

/// Coefficient tensors of `H_l X`, with the λ-integral done exactly.
pub fn homotopy_operator<S: Scalar>(x: &MultiVectorField<S>, ret: &Retraction<S>) -> MultiVectorField<S> {
    let l = x.k();
    let n = x.n_sites();
    let gamma0 = ret.gamma0_matrix().sparse_rows();
    let alpha_p = ret.alpha_p_matrix().sparse_rows();
    let alpha = ret.alpha_matrix().sparse_rows();
    let mats: [&[Vec<(u32, S)>]; 2] = [&gamma0, &alpha_p];
    let weights: Vec<S> = (0..=x.max_degree().unwrap_or(0)).map(|j| S::from_ratio(1, (j + l + 1) as i64)).collect();
    let mut out = MultiVectorField::zero(l + 1, n);
    for (d, idx, v) in x.entries() {
        if d == 0 {
            continue;
        }
        let dv = v.clone() * S::from_i64(d as i64);
        let mut last = None;
        for r in 0..d {
            let s = idx.sym[r];
            if last == Some(s) {
                continue;
            }
            last = Some(s);
            let mut rest = idx.sym.clone();
            rest.remove(r);
            let mut ord = rest.clone();
            loop {
                let mut cur = Vec::with_capacity(ord.len());
                expand_sorted(&ord, &mats, 0, 0, dv.clone(), 0, &mut cur, &mut |sites, power, val| {
                    let val = val * weights[power].clone();
                    for (t, av) in &alpha[s as usize] {
                        if idx.anti.contains(t) {
                            continue;
                        }
                        let p = idx.anti.partition_point(|j| j < t);
                        let mut anti = idx.anti.clone();
                        anti.insert(p, *t);
                        let w = val.clone() * av.clone();
                        let w = if p % 2 == 0 { w } else { -w };
                        out.add_canonical(SlotIndex { sym: sites.to_vec(), anti }, w);
                    }
                });
                if !next_permutation(&mut ord) {
                    break;
                }
            }
        }
    }
    out
}

/// `γ₀*X`: for functionals the pullback through `γ₀`; for `k ≥ 1` the
/// quasi-inverse used in the time-slice argument is zero.
pub fn gamma0_pullback<S: Scalar>(
    x: &MultiVectorField<S>,
    ret: &Retraction<S>,
) -> Result<MultiVectorField<S>, KoszulError> {
    if x.k() > 0 {
        return Ok(MultiVectorField::zero(x.k(), x.n_sites()));
    }
    Ok(x.pullback_linear(&ret.gamma0_matrix())?)
}

/// `ι*F`: `F` evaluated on the solution with the given Cauchy data.
pub fn on_shell_restrict<S: Scalar>(
    f: &MultiVectorField<S>,
    lat: &LatticeSpacetime,
    cauchy: &CauchyData<S>,
) -> Result<S, KoszulError> {
    Ok(f.evaluate(&cauchy.evolve(lat), &[])?)
}

/// A configuration and `k` test sections at which an identity is probed.
#[derive(Clone, Debug, PartialEq)]
pub struct Probe<S> {
    pub phi: Vec<S>,
    pub hs: Vec<Vec<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub degree: usize,
    pub poly_degree: usize,
    pub mode: Mode,
    pub residual_sup: f64,
    /// Every residual was exactly zero (only meaningful in rational mode).
    pub exact_zero: bool,
    pub probes: usize,
    pub pass: bool,
}

/// Defect of `𝟙 = δH + Hδ` (`k ≥ 1`) or `𝟙 = δH + γ₀*` (`k = 0`) over the
/// probes. Test sections must avoid the boundary rows.
pub fn verify_homotopy_identity<S: Scalar>(
    x: &MultiVectorField<S>,
    ret: &Retraction<S>,
    probes: &[Probe<S>],
    tolerance: f64,
) -> Result<HomotopyReport, KoszulError> {
    let k = x.k();
    let delta_x = if k > 0 { Some(koszul_differential(x, ret.wave_rows())?) } else { None };
    let mut sup: f64 = 0.0;
    let mut exact_zero = true;
    for probe in probes {
        let hs: Vec<&[S]> = probe.hs.iter().map(|h| h.as_slice()).collect();
        let lhs = x.evaluate(&probe.phi, &hs)?;
        let p_phi = ret.apply_wave(&probe.phi);
        let mut with_p: Vec<&[S]> = vec![&p_phi];
        with_p.extend_from_slice(&hs);
        let dh = homotopy_eval(x, ret, &probe.phi, &with_p)?;
        let other = match &delta_x {
            Some(dx) => homotopy_eval(dx, ret, &probe.phi, &hs)?,
            None => {
                let g0 = ret.gamma(&S::zero(), &probe.phi)?;
                x.evaluate(&g0, &[])?
            }
        };
        let r = lhs - dh - other;
        exact_zero &= r.is_zero();
        sup = sup.max(r.magnitude());
    }
    let mode = if S::EXACT { Mode::Rational } else { Mode::Float };
    let pass = if S::EXACT { exact_zero } else { sup <= tolerance };
    Ok(HomotopyReport {
        degree: k,
        poly_degree: x.max_degree().unwrap_or(0),
        mode,
        residual_sup: sup,
        exact_zero,
        probes: probes.len(),
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeSliceReport {
    pub region: (usize, usize),
    pub support_outside: Vec<usize>,
    pub support_inclusion: bool,
    pub homology_residual: f64,
    pub on_shell_residual: f64,
    pub cauchy_samples: usize,
    pub pass: bool,
}

/// Checks that `γ₀*F` is supported in the row region `N`, that
/// `F − γ₀*F = δHF` on coefficients, and that `ι*F = ι*γ₀*F`.
pub fn time_slice_check<S: Scalar>(
    f: &MultiVectorField<S>,
    region: RangeInclusive<usize>,
    ret: &Retraction<S>,
    cauchy: &[CauchyData<S>],
    tolerance: f64,
) -> Result<TimeSliceReport, KoszulError> {
    let lat = ret.lattice();
    let (lo, hi) = (*region.start(), *region.end());
    if lo > hi || !lat.is_interior_row(lo) || !lat.is_interior_row(hi) {
        return Err(KoszulError::NotCauchyNeighborhood { lo, hi, nt: lat.nt() });
    }
    let sw = ret.switching();
    if sw.t_minus() < lo || sw.t_plus() > hi {
        return Err(KoszulError::WindowOutsideRegion { t_minus: sw.t_minus(), t_plus: sw.t_plus(), lo, hi });
    }
    let pulled = gamma0_pullback(f, ret)?;
    let support_outside: Vec<usize> =
        pulled.spacetime_support().into_iter().filter(|&s| !region.contains(&lat.coords(s).0)).collect();
    let hf = homotopy_operator(f, ret);
    let dhf = koszul_differential(&hf, ret.wave_rows())?;
    let defect = f.sub(&pulled)?.sub(&dhf)?;
    let homology_residual = defect.max_abs();
    let mut on_shell_residual: f64 = 0.0;
    for c in cauchy {
        let a = on_shell_restrict(f, lat, c)?;
        let b = on_shell_restrict(&pulled, lat, c)?;
        on_shell_residual = on_shell_residual.max((a - b).magnitude());
    }
    let support_inclusion = support_outside.is_empty();
    let pass = support_inclusion && homology_residual <= tolerance && on_shell_residual <= tolerance;
    Ok(TimeSliceReport {
        region: (lo, hi),
        support_outside,
        support_inclusion,
        homology_residual,
        on_shell_residual,
        cauchy_samples: cauchy.len(),
        pass,
    })
}

/// Sites of the lattice lying in the given rows.
pub fn region_sites(lat: &LatticeSpacetime, rows: RangeInclusive<usize>) -> BTreeSet<usize> {
    rows.flat_map(|t| (0..lat.nx()).map(move |x| lat.site(t, x))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{causal_propagators, make_switching, wave_operator_rows};
    use crate::scalar::Rational;
    use num::rational::Rational64;
    use num::Zero;

    fn small() -> LatticeSpacetime {
        LatticeSpacetime::new(6, 3, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
            .unwrap()
    }

    fn retraction<S: Scalar>(lat: &LatticeSpacetime) -> Retraction<S> {
        Retraction::new(lat, &causal_propagators::<S>(lat), make_switching(lat, 2, 3).unwrap())
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn delta_of_constant_vector_is_pairing_with_p() {
        let lat = small();
        let rows = wave_operator_rows::<Rational>(&lat);
        let u: Vec<Rational> = (0..lat.n_sites()).map(|i| r(i as i64 % 5 - 2, 3)).collect();
        let x = MultiVectorField::constant_vector(1, lat.n_sites(), u.iter().enumerate().map(|(i, v)| (vec![i as u32], v.clone())));
        let dx = koszul_differential(&x, &rows).unwrap();
        assert_eq!(dx.k(), 0);
        assert_eq!(dx.max_degree(), Some(1));
        let phi: Vec<Rational> = (0..lat.n_sites()).map(|i| r(i as i64 * 7 % 11, 4)).collect();
        let p_phi = crate::lattice::apply_wave_operator(&lat, &phi).unwrap();
        let expected = crate::linalg::dot(&u, &p_phi);
        assert_eq!(dx.evaluate(&phi, &[]).unwrap(), expected);
        assert_eq!(koszul_differential(&dx, &rows).unwrap_err(), KoszulError::ZeroDegree);
    }

    #[test]
    fn delta_squares_to_zero() {
        let lat = small();
        let rows = wave_operator_rows::<Rational>(&lat);
        let mut x = MultiVectorField::zero(2, lat.n_sites());
        x.add_entry(vec![4], vec![5, 9], r(2, 3));
        x.add_entry(vec![], vec![3, 4], r(-1, 2));
        x.add_entry(vec![4, 7], vec![8, 10], r(1, 5));
        let dd = koszul_differential(&koszul_differential(&x, &rows).unwrap(), &rows).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn homotopy_of_constant_is_zero_and_linear_closed_form() {
        let lat = small();
        let ret = retraction::<Rational>(&lat);
        let c = MultiVectorField::constant(lat.n_sites(), r(3, 1));
        assert!(homotopy_operator(&c, &ret).is_zero());
        let u: Vec<Rational> = (0..lat.n_sites()).map(|i| r(i as i64 % 3, 2)).collect();
        let f = MultiVectorField::linear(&u);
        let hf = homotopy_operator(&f, &ret);
        assert_eq!(hf.max_degree(), Some(0));
        // HF{h} = ⟨αᵀu, h⟩
        let atu = ret.alpha_matrix().tmul_vec(&u);
        for s in 0..lat.n_sites() {
            assert_eq!(hf.coefficient(&[], &[s as u32]), atu[s]);
        }
    }

    #[test]
    fn coefficient_and_pointwise_homotopy_agree() {
        let lat = small();
        let ret = retraction::<Rational>(&lat);
        let mut x = MultiVectorField::zero(1, lat.n_sites());
        x.add_entry(vec![4, 7], vec![8], r(2, 3));
        x.add_entry(vec![10], vec![5], r(-1, 4));
        let hx = homotopy_operator(&x, &ret);
        let phi: Vec<Rational> = (0..lat.n_sites()).map(|i| r((i as i64 * 5) % 7 - 3, 2)).collect();
        let h1: Vec<Rational> =
            (0..lat.n_sites()).map(|i| if lat.is_interior_site(i) { r(i as i64 % 4, 3) } else { r(0, 1) }).collect();
        let h2: Vec<Rational> =
            (0..lat.n_sites()).map(|i| if lat.is_interior_site(i) { r(1 - i as i64 % 3, 1) } else { r(0, 1) }).collect();
        let direct = hx.evaluate(&phi, &[&h1, &h2]).unwrap();
        let pointwise = homotopy_eval(&x, &ret, &phi, &[&h1, &h2]).unwrap();
        assert_eq!(direct, pointwise);
    }

    #[test]
    fn degree_zero_identity_at_coefficient_level() {
        let lat = small();
        let ret = retraction::<Rational>(&lat);
        let mut f = MultiVectorField::zero(0, lat.n_sites());
        f.add_entry(vec![1, 1], vec![], r(1, 1));
        f.add_entry(vec![4, 13], vec![], r(-2, 3));
        f.add_entry(vec![7], vec![], r(5, 2));
        let g0 = gamma0_pullback(&f, &ret).unwrap();
        let dh = koszul_differential(&homotopy_operator(&f, &ret), ret.wave_rows()).unwrap();
        assert!(f.sub(&g0).unwrap().sub(&dh).unwrap().is_zero());
    }

    #[test]
    fn gamma0_kills_on_shell_ideal() {
        let lat = small();
        let ret = retraction::<Rational>(&lat);
        let u: Vec<Rational> = (0..lat.n_sites()).map(|i| r(i as i64 % 4 - 1, 5)).collect();
        let x = MultiVectorField::constant_vector(1, lat.n_sites(), u.iter().enumerate().map(|(i, v)| (vec![i as u32], v.clone())));
        let f = koszul_differential(&x, ret.wave_rows()).unwrap();
        assert!(gamma0_pullback(&f, &ret).unwrap().is_zero());
        assert!(gamma0_pullback(&x, &ret).unwrap().is_zero());
        let cd = CauchyData::new(&lat, vec![r(1, 2), r(0, 1), r(-1, 1)], vec![r(2, 1), r(1, 3), r(0, 1)]).unwrap();
        assert!(on_shell_restrict(&f, &lat, &cd).unwrap().is_zero());
        let c = MultiVectorField::constant(lat.n_sites(), r(7, 3));
        assert_eq!(on_shell_restrict(&c, &lat, &cd).unwrap(), r(7, 3));
    }

    #[test]
    fn time_slice_moves_support_into_region() {
        let lat = small();
        let ret = retraction::<Rational>(&lat);
        let mut f = MultiVectorField::zero(0, lat.n_sites());
        f.add_entry(vec![lat.site(5, 1) as u32, lat.site(5, 1) as u32], vec![], r(1, 1));
        f.add_entry(vec![lat.site(1, 0) as u32], vec![], r(2, 1));
        let cd = vec![
            CauchyData::new(&lat, vec![r(1, 2), r(0, 1), r(-1, 1)], vec![r(2, 1), r(1, 3), r(0, 1)]).unwrap(),
            CauchyData::new(&lat, vec![r(0, 1), r(1, 1), r(1, 1)], vec![r(-1, 1), r(0, 1), r(1, 4)]).unwrap(),
        ];
        let rep = time_slice_check(&f, 2..=3, &ret, &cd, 0.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(matches!(time_slice_check(&f, 0..=3, &ret, &cd, 0.0), Err(KoszulError::NotCauchyNeighborhood { .. })));
        assert!(matches!(time_slice_check(&f, 3..=4, &ret, &cd, 0.0), Err(KoszulError::WindowOutsideRegion { .. })));
    }
}
