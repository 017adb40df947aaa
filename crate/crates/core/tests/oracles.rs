//! Independent oracles: brute-force pointwise derivatives for the bracket
//! and ⋆-product, closed forms for the counterexample, and worked examples.

use num::rational::Rational64;
use num::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqft_core::functionals::MultiVectorField;
use pqft_core::lattice::{causal_propagators, make_switching, LatticeSpacetime, Retraction};
use pqft_core::linalg::DenseMatrix;
use pqft_core::probe::{counterexample_scan, oscillatory_family, Axis, SampledDistribution, TwoPointKernel};
use pqft_core::quantize::{poisson_bracket, sigma_permutation, star_product};
use pqft_core::sampling::{random_field, random_functional};
use pqft_core::scalar::{Rational, Scalar};
use pqft_core::suite::search_exponents;

fn r(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn shifted(phi: &[Rational], moves: &[(usize, i64)]) -> Vec<Rational> {
    let mut out = phi.to_vec();
    for &(s, d) in moves {
        out[s] = out[s].clone() + r(d, 1);
    }
    out
}

/// Central differences; exact for polynomials of degree ≤ 2.
fn gradient(f: &MultiVectorField<Rational>, phi: &[Rational]) -> Vec<Rational> {
    (0..phi.len())
        .map(|a| {
            let p = f.evaluate(&shifted(phi, &[(a, 1)]), &[]).unwrap();
            let m = f.evaluate(&shifted(phi, &[(a, -1)]), &[]).unwrap();
            (p - m) * r(1, 2)
        })
        .collect()
}

fn hessian(f: &MultiVectorField<Rational>, phi: &[Rational]) -> Vec<Vec<Rational>> {
    let n = phi.len();
    let e = |moves: &[(usize, i64)]| f.evaluate(&shifted(phi, moves), &[]).unwrap();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let v = e(&[(a, 1), (b, 1)]) - e(&[(a, 1), (b, -1)]) - e(&[(a, -1), (b, 1)]) + e(&[(a, -1), (b, -1)]);
                    v * r(1, 4)
                })
                .collect()
        })
        .collect()
}

fn random_kernel(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix<Rational> {
    DenseMatrix::from_vec(n, n, (0..n * n).map(|_| r(rng.gen_range(-5..=5), rng.gen_range(1..=3))).collect())
}

#[test]
fn star_product_matches_brute_force_derivatives() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 4;
    let sites: Vec<usize> = (0..n).collect();
    for _ in 0..8 {
        let f: MultiVectorField<Rational> = random_functional(&mut rng, n, 2, 4, &sites);
        let g: MultiVectorField<Rational> = random_functional(&mut rng, n, 2, 4, &sites);
        let k = random_kernel(&mut rng, n);
        let series = star_product(&f, &g, &k).unwrap();
        let phi: Vec<Rational> = random_field(&mut rng, n);
        let (df, dg) = (gradient(&f, &phi), gradient(&g, &phi));
        let (hf, hg) = (hessian(&f, &phi), hessian(&g, &phi));
        let mut b1 = Rational::zero();
        let mut b2 = Rational::zero();
        for a in 0..n {
            for c in 0..n {
                b1 = b1 + df[a].clone() * k.get(a, c).clone() * dg[c].clone();
                for b in 0..n {
                    for d in 0..n {
                        b2 = b2
                            + hf[a][b].clone() * k.get(a, c).clone() * k.get(b, d).clone() * hg[c][d].clone();
                    }
                }
            }
        }
        let at = |m: usize| series.coefficient(m).evaluate(&phi, &[]).unwrap();
        assert_eq!(at(0), f.evaluate(&phi, &[]).unwrap() * g.evaluate(&phi, &[]).unwrap());
        assert_eq!(at(1), b1);
        assert_eq!(at(2), b2 * r(1, 2));
        assert!(at(3).is_zero());
    }
}

#[test]
fn poisson_bracket_matches_gradient_pairing() {
    let lat = LatticeSpacetime::new(5, 3, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
        .unwrap();
    let delta = causal_propagators::<Rational>(&lat).commutator;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = lat.n_sites();
    let sites: Vec<usize> = (0..n).collect();
    for _ in 0..5 {
        let f: MultiVectorField<Rational> = random_functional(&mut rng, n, 2, 3, &sites);
        let g: MultiVectorField<Rational> = random_functional(&mut rng, n, 2, 3, &sites);
        let pb = poisson_bracket(&f, &g, &delta).unwrap();
        let phi: Vec<Rational> = random_field(&mut rng, n);
        let (df, dg) = (gradient(&f, &phi), gradient(&g, &phi));
        let expected = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .fold(Rational::zero(), |acc, (a, b)| acc + df[a].clone() * delta.get(a, b).clone() * dg[b].clone());
        assert_eq!(pb.evaluate(&phi, &[]).unwrap(), expected);
    }
}

#[test]
fn gamma0_pullback_of_linear_functional_is_composition() {
    let lat = LatticeSpacetime::new(8, 4, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
        .unwrap();
    let ret = Retraction::new(&lat, &causal_propagators::<Rational>(&lat), make_switching(&lat, 2, 5).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u: Vec<Rational> = random_field(&mut rng, lat.n_sites());
    let f = MultiVectorField::linear(&u);
    let pulled = pqft_core::koszul::gamma0_pullback(&f, &ret).unwrap();
    let phi: Vec<Rational> = random_field(&mut rng, lat.n_sites());
    let g0 = ret.gamma(&Rational::zero(), &phi).unwrap();
    assert_eq!(pulled.evaluate(&phi, &[]).unwrap(), f.evaluate(&g0, &[]).unwrap());
}

#[test]
fn switching_midpoint_value() {
    let lat = LatticeSpacetime::new(8, 8, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
        .unwrap();
    let sw = make_switching(&lat, 2, 5).unwrap();
    // s = 1/3: 3s² − 2s³ = 7/27
    assert_eq!(sw.at(3), Rational64::new(7, 27));
    assert_eq!(sw.at(4), Rational64::new(20, 27));
}

#[test]
fn sigma_reorders_contraction_slots() {
    let s = sigma_permutation(2, 1, 1);
    assert_eq!(s.apply(&["x1", "y1", "x2", "y2", "m", "k"]), ["x1", "x2", "m", "y1", "y2", "k"]);
    assert_eq!(s.apply_inverse(&s.apply(&[1, 2, 3, 4, 5, 6])), vec![1, 2, 3, 4, 5, 6]);
}

fn family_grid(points: usize) -> SampledDistribution {
    SampledDistribution::bump_1d(Axis::new(-2.0, 2.0, points).unwrap(), 0.0, 1.0).unwrap()
}

#[test]
fn diagonal_bracket_has_closed_form_on_the_antidiagonal_path() {
    let chi = family_grid(32769);
    let overlap = chi.pair(&chi).unwrap().re;
    let a = oscillatory_family(chi.clone(), 1).unwrap();
    let path: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|x| (*x, -*x)).collect();
    let t = counterexample_scan(&TwoPointKernel::Diagonal, &a, &a, &path, "minus").unwrap();
    for row in &t.rows {
        let predicted = overlap / (row.xi1 * row.xi1);
        assert!((row.abs_value - predicted).abs() <= 1e-9 * predicted, "{row:?}");
    }
    assert!((t.fitted_slope + 2.0).abs() < 1e-9);
}

#[test]
fn higher_exponents_steepen_the_growth() {
    let chi = family_grid(4097);
    let a = oscillatory_family(chi.clone(), 2).unwrap();
    let b = oscillatory_family(chi.clone(), 1).unwrap();
    let path: Vec<(f64, f64)> = [1e-1, 1e-2].iter().map(|x| (*x, -*x)).collect();
    let t = counterexample_scan(&TwoPointKernel::Diagonal, &a, &b, &path, "minus").unwrap();
    assert!((t.fitted_slope + 3.0).abs() < 1e-9);
}

#[test]
fn exponent_search_separates_the_two_shipped_kernels() {
    let chi = family_grid(4097);
    let found = search_exponents(&TwoPointKernel::Diagonal, &chi, 2, 10.0).unwrap();
    assert_eq!(found.map(|(k, l, _)| (k, l)), Some((1, 1)));
    let none = search_exponents(&TwoPointKernel::Gaussian { width: 0.2 }, &chi, 2, 10.0).unwrap();
    assert!(none.is_none());
}

#[test]
fn gaussian_kernel_pairing_matches_direct_quadrature() {
    let axis = Axis::new(-2.0, 2.0, 401).unwrap();
    let chi = SampledDistribution::bump_1d(axis, 0.0, 1.0).unwrap();
    let fam = oscillatory_family(chi, 1).unwrap();
    let (f, g) = (fam.at(0.4).unwrap(), fam.at(-0.7).unwrap());
    let width = 0.2;
    let kernel = SampledDistribution::from_fn_2d(axis, axis, |x, y| {
        let d = x - y;
        num::complex::Complex64::new((-d * d / (2.0 * width * width)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * width), 0.0)
    })
    .unwrap();
    let direct = TwoPointKernel::Sampled(kernel).pair(&f, &g).unwrap();
    let fft = TwoPointKernel::Gaussian { width }.pair(&f, &g).unwrap();
    // the bump vanishes at the grid edges, so trapezoid and plain sums agree
    assert!((direct - fft).norm() <= 1e-10 * direct.norm().max(1.0), "{direct} {fft}");
}

#[test]
fn audit_of_wick_monomial_over_a_retraction_segment() {
    use pqft_core::functionals::{wick_polynomial, WickKernel};
    use pqft_core::probe::{equicontinuity_audit, AuditTest};

    let lat = LatticeSpacetime::new(6, 3, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1))
        .unwrap();
    let ret = Retraction::new(&lat, &causal_propagators::<f64>(&lat), make_switching(&lat, 2, 3).unwrap());
    let n = lat.n_sites();
    let kernel = WickKernel::new(2, (0..n as u32).map(|s| (vec![s, (s + 1) % n as u32], 0.5)).collect());
    let f = wick_polynomial(n, &[kernel]).unwrap().functional;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let phi: Vec<f64> = random_field(&mut rng, n);
    let family: Vec<Vec<f64>> = (0..=16).map(|i| ret.gamma(&(i as f64 / 16.0), &phi).unwrap().into_vec()).collect();
    let tests = vec![
        AuditTest { label: "spike".into(), nominal_direction_deg: None, vector: (0..n).map(|s| if s == 7 { 1.0 } else { 0.0 }).collect() },
        AuditTest { label: "plane wave".into(), nominal_direction_deg: Some(0.0), vector: (0..n).map(|s| (s as f64).cos()).collect() },
    ];
    let second = equicontinuity_audit(&f, &family, "gamma segment", &tests, 2).unwrap();
    assert!(second.heuristic);
    for row in &second.rows {
        assert!(row.ratio.is_finite() && row.ratio >= 0.0);
        assert!(row.sup_by_refinement.windows(2).all(|w| w[0] <= w[1]));
    }
    // a second derivative of a quadratic does not depend on φ
    assert!(second.rows.iter().all(|r| (r.growth - 1.0).abs() < 1e-12));
    let third = equicontinuity_audit(&f, &family, "gamma segment", &tests, 3).unwrap();
    assert!(third.rows.iter().all(|r| r.sup_by_refinement.iter().all(|v| *v == 0.0)));
}
