use num::rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pqft_core::cones::{degrees, gamma_n, DirectionCone};
use pqft_core::functionals::MultiVectorField;
use pqft_core::koszul::koszul_differential;
use pqft_core::lattice::{causal_propagators, make_switching, LatticeSpacetime, Retraction};
use pqft_core::linalg::max_abs;
use pqft_core::probe::{fixtures, wavefront_probe, ProbeSettings};
use pqft_core::quantize::{leibniz_residual, poisson_bracket, sigma_permutation, star_product};
use pqft_core::sampling::{random_field, random_functional, random_interior_field, random_multivector, FieldShape};
use pqft_core::scalar::Rational;

fn lattice(nt: usize, nx: usize) -> LatticeSpacetime {
    LatticeSpacetime::new(nt, nx, Rational64::new(1, 2), Rational64::from_integer(1), Rational64::from_integer(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn delta_squares_to_zero(seed in any::<u64>(), k in 2usize..=3, deg in 0usize..=2) {
        let lat = lattice(6, 3);
        let rows = pqft_core::lattice::wave_operator_rows::<Rational>(&lat);
        let sites: Vec<usize> = (0..lat.n_sites()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = FieldShape { k, max_degree: deg, terms: 3, sym_sites: &sites, anti_sites: &sites };
        let x: MultiVectorField<Rational> = random_multivector(&mut rng, lat.n_sites(), &shape);
        let dd = koszul_differential(&koszul_differential(&x, &rows).unwrap(), &rows).unwrap();
        prop_assert!(dd.is_zero());
    }

    #[test]
    fn gamma_zero_projects_onto_solutions(seed in any::<u64>(), lo in 1usize..3, width in 1usize..3) {
        let lat = lattice(7, 4);
        let ret = Retraction::new(&lat, &causal_propagators::<Rational>(&lat), make_switching(&lat, lo, lo + width).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi: Vec<Rational> = random_field(&mut rng, lat.n_sites());
        let g0 = ret.gamma(&Rational::from_integer(0.into()), &phi).unwrap();
        prop_assert!(ret.apply_wave(&g0).iter().all(|v| *v == Rational::from_integer(0.into())));
        prop_assert_eq!(ret.gamma(&Rational::from_integer(0.into()), &g0).unwrap(), g0);
        let h: Vec<Rational> = random_interior_field(&mut rng, &lat);
        let pah = ret.apply_wave(&ret.alpha_apply(&h).unwrap());
        prop_assert_eq!(pah, h);
    }

    #[test]
    fn bracket_is_antisymmetric_and_leibniz(seed in any::<u64>()) {
        let lat = lattice(5, 3);
        let delta = causal_propagators::<f64>(&lat).commutator;
        let sites: Vec<usize> = (0..lat.n_sites()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: MultiVectorField<f64> = random_functional(&mut rng, lat.n_sites(), 2, 3, &sites);
        let g: MultiVectorField<f64> = random_functional(&mut rng, lat.n_sites(), 2, 3, &sites);
        let h: MultiVectorField<f64> = random_functional(&mut rng, lat.n_sites(), 1, 2, &sites);
        let fg = poisson_bracket(&f, &g, &delta).unwrap();
        let gf = poisson_bracket(&g, &f, &delta).unwrap();
        prop_assert!(fg.add(&gf).unwrap().max_abs() <= 1e-12);
        prop_assert!(leibniz_residual(&f, &g, &h, &delta).unwrap() <= 1e-10);
    }

    #[test]
    fn star_with_constants_is_scaling(seed in any::<u64>(), c in -5i64..=5) {
        let lat = lattice(5, 3);
        let two = causal_propagators::<Rational>(&lat).retarded;
        let sites: Vec<usize> = (0..lat.n_sites()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: MultiVectorField<Rational> = random_functional(&mut rng, lat.n_sites(), 2, 3, &sites);
        let one = MultiVectorField::constant(lat.n_sites(), Rational::from_integer(c.into()));
        let s = star_product(&one, &f, &two).unwrap();
        prop_assert_eq!(s.order(), 0);
        prop_assert_eq!(s.coefficient(0), f.scale(&Rational::from_integer(c.into())));
    }

    #[test]
    fn functional_json_round_trips(seed in any::<u64>(), k in 0usize..=2) {
        let sites: Vec<usize> = (0..9).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = FieldShape { k, max_degree: 2, terms: 4, sym_sites: &sites, anti_sites: &sites };
        let x: MultiVectorField<Rational> = random_multivector(&mut rng, 9, &shape);
        let back = MultiVectorField::<Rational>::from_json(&x.to_json()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn sigma_is_a_bijection(n in 0usize..4, m in 0usize..3, k in 0usize..3) {
        let s = sigma_permutation(n, m, k);
        prop_assert_eq!(s.len(), 2 * n + m + k);
        prop_assert!(s.is_bijection());
        let v: Vec<usize> = (0..s.len()).collect();
        prop_assert_eq!(s.apply_inverse(&s.apply(&v)), v);
    }

    #[test]
    fn cone_negation_is_an_involution(a in 0i64..360, w in 1i64..170) {
        let v = DirectionCone::from_degrees(a, a + w);
        prop_assert_eq!(v.negate().negate(), v.clone());
        prop_assert_eq!(v.negate().opening(), v.opening());
        for d in [a, a + w / 2, a + w] {
            prop_assert!(v.contains(&degrees(d)));
            prop_assert!(v.negate().contains(&degrees(d + 180)));
        }
    }

    #[test]
    fn closure_of_complement_covers_the_circle(a in 0i64..360, w in 1i64..300, d in 0i64..720) {
        let v = DirectionCone::from_degrees(a, a + w);
        let c = v.complement_closure();
        let angle = Rational64::new(d, 720);
        prop_assert!(v.contains(&angle) || c.contains(&angle));
        prop_assert_eq!(v.opening() + c.opening(), Rational64::from_integer(1));
    }

    #[test]
    fn gamma_is_symmetric_under_negation(a in 0i64..180, w in 1i64..90, x in 0i64..360, y in 0i64..360) {
        let v = DirectionCone::from_degrees(a, a + w);
        let g = gamma_n(&v, 2).unwrap();
        let t = [Some(degrees(x)), Some(degrees(y))];
        let nt = [Some(degrees(x + 180)), Some(degrees(y + 180))];
        prop_assert_eq!(g.contains(&t), g.contains(&nt));
    }
}

#[test]
fn probe_is_deterministic() {
    let u = fixtures::ridge(2.0, 64).unwrap();
    let a = wavefront_probe(&u, (0.0, 0.0), 1.8, ProbeSettings::default()).unwrap();
    let b = wavefront_probe(&u, (0.0, 0.0), 1.8, ProbeSettings::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.bins.iter().all(|bin| bin.slope.is_finite()));
    assert!(max_abs(&a.shell_edges) > 0.0);
}
