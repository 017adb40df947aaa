//! Seeded verification sweeps shared by the command-line runner and the
//! acceptance tests. Every sweep returns a serializable report with a
//! `pass` field; tolerances are arguments so callers pin them.

use num::rational::Rational64;
use num::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::cones::{
    cone_lemma_unchecked, conormal_check, conormal_check_unchecked, verify_cone_lemma, ConeError, ConeReport,
    DirectionCone, TwoPointModel,
};
use crate::functionals::{FunctionalError, MultiVectorField};
use crate::koszul::{
    koszul_differential, time_slice_check, verify_homotopy_identity, CauchyData, HomotopyReport, KoszulError, Probe,
};
use crate::lattice::{
    causal_propagators, compute_propagators, make_switching, two_point_defects, LatticeError, LatticeSpacetime,
    Retraction, TwoPointDefects,
};
use crate::linalg::max_abs;
use crate::probe::{
    counterexample_scan, diagonal_path, fixtures, oscillatory_family, wavefront_probe, Axis, ProbeError,
    ProbeReport, ProbeSettings, SampledDistribution, ScanTable, TwoPointKernel,
};
use crate::quantize::{
    check_associativity, check_first_order_commutator, jacobi_residual, star_product, QuantizeError,
};
use crate::sampling::{random_field, random_functional, random_interior_field, random_multivector, FieldShape};
use crate::scalar::{Rational, Scalar, C64};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Koszul(#[from] KoszulError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

/// Lattice and switching window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeParams {
    pub nt: usize,
    pub nx: usize,
    #[serde(serialize_with = "ser_rational")]
    pub dt: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub dx: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub mass: Rational64,
    pub theta_lo: usize,
    pub theta_hi: usize,
}

fn ser_rational<Sr: serde::Serializer>(r: &Rational64, s: Sr) -> Result<Sr::Ok, Sr::Error> {
    s.serialize_str(&crate::scalar::format_rational64(r))
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            nt: 8,
            nx: 8,
            dt: Rational64::new(1, 2),
            dx: Rational64::from_integer(1),
            mass: Rational64::from_integer(1),
            theta_lo: 2,
            theta_hi: 5,
        }
    }
}

impl LatticeParams {
    pub fn lattice(&self) -> Result<LatticeSpacetime, LatticeError> {
        LatticeSpacetime::new(self.nt, self.nx, self.dt, self.dx, self.mass)
    }

    pub fn retraction<S: Scalar>(&self) -> Result<Retraction<S>, LatticeError> {
        let lat = self.lattice()?;
        let sw = make_switching(&lat, self.theta_lo, self.theta_hi)?;
        Ok(Retraction::new(&lat, &causal_propagators::<S>(&lat), sw))
    }
}

fn all_sites(lat: &LatticeSpacetime) -> Vec<usize> {
    (0..lat.n_sites()).collect()
}

fn probes_for<S: Scalar>(rng: &mut ChaCha8Rng, lat: &LatticeSpacetime, k: usize, count: usize) -> Vec<Probe<S>> {
    (0..count)
        .map(|_| Probe {
            phi: random_field(rng, lat.n_sites()),
            hs: (0..k).map(|_| random_interior_field(rng, lat)).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotopySweep {
    pub instances: usize,
    pub residual_sup: f64,
    pub reports: Vec<HomotopyReport>,
    pub pass: bool,
}

/// Random `k`-vector fields, `k` cycling through `degrees`, of polynomial
/// degree at most `max_poly`, each checked against `probes` random probes.
/// The same draws are reused in either arithmetic mode.
pub fn homotopy_sweep<S: Scalar>(
    params: &LatticeParams,
    degrees: &[usize],
    max_poly: usize,
    instances: usize,
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> Result<HomotopySweep, SuiteError> {
    let ret = params.retraction::<S>()?;
    let lat = ret.lattice().clone();
    let sites = all_sites(&lat);
    let reports = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let k = degrees[i % degrees.len()];
            let shape = FieldShape { k, max_degree: max_poly, terms: 3, sym_sites: &sites, anti_sites: &sites };
            let x: MultiVectorField<S> = random_multivector(&mut rng, lat.n_sites(), &shape);
            let pr = probes_for(&mut rng, &lat, k, probes);
            verify_homotopy_identity(&x, &ret, &pr, tolerance)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let residual_sup = reports.iter().map(|r| r.residual_sup).fold(0.0, f64::max);
    let pass = reports.iter().all(|r| r.pass);
    Ok(HomotopySweep { instances, residual_sup, reports, pass })
}

/// Homotopy check of user-supplied fields with random probes.
pub fn homotopy_for_fields<S: Scalar>(
    params: &LatticeParams,
    fields: &[MultiVectorField<S>],
    probes: usize,
    seed: u64,
    tolerance: f64,
) -> Result<Vec<HomotopyReport>, SuiteError> {
    let ret = params.retraction::<S>()?;
    let lat = ret.lattice().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fields
        .iter()
        .map(|x| {
            if x.n_sites() != lat.n_sites() {
                return Err(FunctionalError::ShapeMismatch { expected: lat.n_sites(), got: x.n_sites() }.into());
            }
            let pr = probes_for(&mut rng, &lat, x.k(), probes);
            Ok(verify_homotopy_identity(x, &ret, &pr, tolerance)?)
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSquaredReport {
    pub instances: usize,
    pub degrees: Vec<usize>,
    pub nonzero: usize,
    pub pass: bool,
}

/// `δ² = 0` in exact arithmetic.
pub fn delta_squared_sweep(
    params: &LatticeParams,
    degrees: &[usize],
    max_poly: usize,
    instances: usize,
    seed: u64,
) -> Result<DeltaSquaredReport, SuiteError> {
    let ret = params.retraction::<Rational>()?;
    let lat = ret.lattice();
    let sites = all_sites(lat);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nonzero = 0;
    for i in 0..instances {
        let k = degrees[i % degrees.len()];
        let shape = FieldShape { k, max_degree: max_poly, terms: 4, sym_sites: &sites, anti_sites: &sites };
        let x: MultiVectorField<Rational> = random_multivector(&mut rng, lat.n_sites(), &shape);
        let dd = koszul_differential(&koszul_differential(&x, ret.wave_rows())?, ret.wave_rows())?;
        if !dd.is_zero() {
            nonzero += 1;
        }
    }
    Ok(DeltaSquaredReport { instances, degrees: degrees.to_vec(), nonzero, pass: nonzero == 0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub samples: usize,
    /// `max ‖Pαh − h‖∞` over interior `h`.
    pub alpha_defect: f64,
    /// `max ‖Pγ₀φ‖∞`.
    pub gamma0_defect: f64,
    pub pass: bool,
}

pub fn projection_checks(params: &LatticeParams, samples: usize, seed: u64, tolerance: f64) -> Result<ProjectionReport, SuiteError> {
    let ret = params.retraction::<f64>()?;
    let lat = ret.lattice().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut alpha_defect: f64 = 0.0;
    let mut gamma0_defect: f64 = 0.0;
    for _ in 0..samples {
        let h: Vec<f64> = (0..lat.n_sites())
            .map(|s| if lat.is_interior_site(s) { rng.gen_range(-1.0..1.0) } else { 0.0 })
            .collect();
        let pah = ret.apply_wave(&ret.alpha_apply(&h)?);
        alpha_defect = alpha_defect.max(pah.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let phi: Vec<f64> = (0..lat.n_sites()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g0 = ret.gamma(&0.0, &phi)?;
        gamma0_defect = gamma0_defect.max(max_abs(&ret.apply_wave(&g0)));
    }
    let pass = alpha_defect <= tolerance && gamma0_defect <= tolerance;
    Ok(ProjectionReport { samples, alpha_defect, gamma0_defect, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeSliceSweep {
    pub region: (usize, usize),
    pub instances: usize,
    pub cauchy_samples: usize,
    pub support_violations: usize,
    pub homology_residual: f64,
    pub on_shell_residual: f64,
    pub pass: bool,
}

/// Random functionals supported on rows outside `region`, in exact
/// arithmetic; the region defaults to the switching window.
pub fn time_slice_sweep(
    params: &LatticeParams,
    region: Option<(usize, usize)>,
    instances: usize,
    cauchy_samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<TimeSliceSweep, SuiteError> {
    let ret = params.retraction::<Rational>()?;
    let lat = ret.lattice().clone();
    let (lo, hi) = region.unwrap_or((params.theta_lo, params.theta_hi));
    let outside: Vec<usize> = (0..lat.n_sites()).filter(|&s| !(lo..=hi).contains(&lat.coords(s).0)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cauchy: Vec<CauchyData<Rational>> = (0..cauchy_samples)
        .map(|_| CauchyData::new(&lat, random_field(&mut rng, lat.nx()), random_field(&mut rng, lat.nx())))
        .collect::<Result<_, _>>()?;
    let fs: Vec<MultiVectorField<Rational>> =
        (0..instances).map(|_| random_functional(&mut rng, lat.n_sites(), 2, 3, &outside)).collect();
    let reports = fs
        .par_iter()
        .map(|f| time_slice_check(f, lo..=hi, &ret, &cauchy, tolerance))
        .collect::<Result<Vec<_>, _>>()?;
    let support_violations = reports.iter().filter(|r| !r.support_inclusion).count();
    let homology_residual = reports.iter().map(|r| r.homology_residual).fold(0.0, f64::max);
    let on_shell_residual = reports.iter().map(|r| r.on_shell_residual).fold(0.0, f64::max);
    Ok(TimeSliceSweep {
        region: (lo, hi),
        instances,
        cauchy_samples,
        support_violations,
        homology_residual,
        on_shell_residual,
        pass: reports.iter().all(|r| r.pass),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HadamardReport {
    pub defects: TwoPointDefects,
    pub pass: bool,
}

pub fn hadamard_check(params: &LatticeParams, antisym_tol: f64, bisolution_tol: f64) -> Result<HadamardReport, SuiteError> {
    let lat = params.lattice()?;
    let defects = two_point_defects(&lat, &compute_propagators(&lat)?);
    let pass = defects.antisymmetry <= antisym_tol && defects.left_bisolution <= bisolution_tol;
    Ok(HadamardReport { defects, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    pub instances: usize,
    pub commutator_defect: f64,
    pub associativity_defect: f64,
    pub classical_limit_exact: bool,
    pub jacobi_defect: f64,
    /// Per-power coefficient norms of the first `F ⋆ G`.
    pub sample_norms: Vec<f64>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct StarTolerances {
    pub commutator: f64,
    pub associativity: f64,
    pub jacobi: f64,
}

/// ⋆-algebra checks on random quadratic functionals.
pub fn star_checks(params: &LatticeParams, instances: usize, seed: u64, tol: StarTolerances) -> Result<StarReport, SuiteError> {
    let lat = params.lattice()?;
    let props = compute_propagators(&lat)?;
    let exact = causal_propagators::<Rational>(&lat);
    let sites = all_sites(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[MultiVectorField<Rational>; 3]> = (0..instances)
        .map(|_| std::array::from_fn(|_| random_functional(&mut rng, lat.n_sites(), 2, 3, &sites)))
        .collect();
    let results = triples
        .par_iter()
        .map(|[f, g, h]| -> Result<(f64, f64, bool, f64, Vec<f64>), SuiteError> {
            let to_f = |x: &MultiVectorField<Rational>| x.map(|v| v.to_f64().unwrap_or(f64::NAN));
            let (ff, gf, hf) = (to_f(f), to_f(g), to_f(h));
            let comm = check_first_order_commutator(&ff, &gf, &props)?;
            let cx = |x: &MultiVectorField<f64>| x.map(|v| C64::new(*v, 0.0));
            let assoc = check_associativity(&cx(&ff), &cx(&gf), &cx(&hf), &props.two_point)?;
            let classical = star_product(f, g, &exact.commutator)?.coefficient(0) == f.wedge(g)?;
            let jac = jacobi_residual(&ff, &gf, &hf, props.commutator())?;
            let norms = star_product(&cx(&ff), &cx(&gf), &props.two_point)?.norms();
            Ok((comm, assoc, classical, jac, norms))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let commutator_defect = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let associativity_defect = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let classical_limit_exact = results.iter().all(|r| r.2);
    let jacobi_defect = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let sample_norms = results.first().map(|r| r.4.clone()).unwrap_or_default();
    let pass = commutator_defect <= tol.commutator
        && associativity_defect <= tol.associativity
        && classical_limit_exact
        && jacobi_defect <= tol.jacobi;
    Ok(StarReport {
        instances,
        commutator_defect,
        associativity_defect,
        classical_limit_exact,
        jacobi_defect,
        sample_norms,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeSweep {
    pub max_total: usize,
    pub samples: usize,
    pub total_violations: usize,
    pub reports: Vec<ConeReport>,
    /// Lemma rerun with a cone of opening above half a turn. The sampled
    /// inclusion holds for every cone, so this control is reported but
    /// does not enter `pass`.
    pub wide_cone_control: ConeReport,
    /// Lemma rerun with the commutator wavefront model in place of the
    /// Hadamard one.
    pub commutator_control: ConeReport,
    pub conormal: Vec<ConeReport>,
    pub half_circle_control: Vec<ConeReport>,
    pub lemma_pass: bool,
    pub conormal_pass: bool,
    /// The commutator-model and half-circle controls both found violations.
    pub controls_detect: bool,
    pub pass: bool,
}

/// Cone lemma for all `n+m+k ≤ max_total` and conormal disjointness for
/// `2 ≤ n ≤ max_conormal`, with their negative controls.
pub fn cone_sweep(
    v: &DirectionCone,
    max_total: usize,
    max_conormal: usize,
    samples: usize,
    seed: u64,
) -> Result<ConeSweep, SuiteError> {
    let mut reports = Vec::new();
    for n in 0..=max_total {
        for m in 0..=max_total - n {
            for k in 0..=max_total - n - m {
                if n + m + k == 0 {
                    continue;
                }
                reports.push(verify_cone_lemma(v, n, m, k, samples, seed)?);
            }
        }
    }
    let total_violations = reports.iter().map(|r| r.violations).sum();
    let wide = DirectionCone::from_degrees(0, 200);
    let wide_cone_control = cone_lemma_unchecked(&wide, 2, 1, 1, samples, seed, TwoPointModel::Hadamard);
    let commutator_control = cone_lemma_unchecked(v, 2, 0, 0, samples, seed, TwoPointModel::Commutator);
    let conormal =
        (2..=max_conormal).map(|n| conormal_check(v, n, samples, seed)).collect::<Result<Vec<_>, _>>()?;
    let half = DirectionCone::from_degrees(0, 180);
    let half_circle_control = (2..=max_conormal)
        .map(|n| conormal_check_unchecked(&half, n, samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let lemma_pass = total_violations == 0;
    let conormal_pass = conormal.iter().all(|r| r.violations == 0);
    let controls_detect = commutator_control.violations > 0 && half_circle_control.iter().any(|r| r.violations > 0);
    Ok(ConeSweep {
        max_total,
        samples,
        total_violations,
        reports,
        wide_cone_control,
        commutator_control,
        conormal,
        half_circle_control,
        lemma_pass,
        conormal_pass,
        controls_detect,
        pass: lemma_pass && conormal_pass && controls_detect,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub grid_points: usize,
    pub exponents: (i32, i32),
    /// `δ(x−y)` at `|ξ| ∈ {10⁻¹, 10⁻², 10⁻³}` on `ξ₂ = −ξ₁`.
    pub decades: ScanTable,
    pub diagonal_minus: ScanTable,
    pub diagonal_plus: ScanTable,
    pub gaussian_minus: ScanTable,
    pub gaussian_plus: ScanTable,
    /// `∫χ²`, the predicted prefactor of `|ξ|⁻²`.
    pub bump_overlap: f64,
    pub slope_ok: bool,
    pub plus_bounded: bool,
    pub gaussian_bounded: bool,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct CounterexampleSettings {
    pub grid_points: usize,
    pub half_width: f64,
    pub gaussian_width: f64,
    pub path_points: usize,
    pub slope_tolerance: f64,
    /// Growth over the starting value tolerated by "bounded".
    pub bounded_factor: f64,
}

impl Default for CounterexampleSettings {
    fn default() -> Self {
        Self {
            grid_points: 32769,
            half_width: 2.0,
            gaussian_width: 0.2,
            path_points: 13,
            slope_tolerance: 0.1,
            bounded_factor: 10.0,
        }
    }
}

/// The unbounded bracket of two regular maps, `K = L = 1`.
pub fn counterexample(s: CounterexampleSettings) -> Result<CounterexampleReport, SuiteError> {
    let axis = Axis::new(-s.half_width, s.half_width, s.grid_points)?;
    let chi = SampledDistribution::bump_1d(axis, 0.0, 1.0)?;
    let bump_overlap = chi.pair(&chi)?.re;
    let a = oscillatory_family(chi.clone(), 1)?;
    let b = oscillatory_family(chi, 1)?;
    let delta = TwoPointKernel::Diagonal;
    let gauss = TwoPointKernel::Gaussian { width: s.gaussian_width };
    let decade_path: Vec<(f64, f64)> = [1e-1, 1e-2, 1e-3].iter().map(|x| (*x, -*x)).collect();
    let minus = diagonal_path(1e-1, 1e-3, s.path_points, -1.0);
    let plus = diagonal_path(1e-1, 1e-3, s.path_points, 1.0);
    let decades = counterexample_scan(&delta, &a, &b, &decade_path, "xi2=-xi1 decades")?;
    let diagonal_minus = counterexample_scan(&delta, &a, &b, &minus, "xi2=-xi1")?;
    let diagonal_plus = counterexample_scan(&delta, &a, &b, &plus, "xi2=+xi1")?;
    let gaussian_minus = counterexample_scan(&gauss, &a, &b, &minus, "xi2=-xi1")?;
    let gaussian_plus = counterexample_scan(&gauss, &a, &b, &plus, "xi2=+xi1")?;
    let slope_ok = (decades.fitted_slope + 2.0).abs() <= s.slope_tolerance;
    let plus_bounded = diagonal_plus.is_bounded(s.bounded_factor);
    let gaussian_bounded = gaussian_minus.is_bounded(s.bounded_factor) && gaussian_plus.is_bounded(s.bounded_factor);
    Ok(CounterexampleReport {
        grid_points: s.grid_points,
        exponents: (1, 1),
        decades,
        diagonal_minus,
        diagonal_plus,
        gaussian_minus,
        gaussian_plus,
        bump_overlap,
        slope_ok,
        plus_bounded,
        gaussian_bounded,
        pass: slope_ok && plus_bounded && gaussian_bounded,
    })
}

/// Smallest `(K, L)` with `K, L ≤ max` for which the kernel's bracket grows
/// by more than `factor` along `ξ₂ = −ξ₁`, or `None`.
pub fn search_exponents(
    w: &TwoPointKernel,
    chi: &SampledDistribution,
    max: i32,
    factor: f64,
) -> Result<Option<(i32, i32, ScanTable)>, SuiteError> {
    let path = diagonal_path(1e-1, 1e-2, 7, -1.0);
    for total in 2..=2 * max {
        for k in 1..=max.min(total - 1) {
            let l = total - k;
            if l > max {
                continue;
            }
            let t = counterexample_scan(
                w,
                &oscillatory_family(chi.clone(), k)?,
                &oscillatory_family(chi.clone(), l)?,
                &path,
                "xi2=-xi1",
            )?;
            if !t.is_bounded(factor) {
                return Ok(Some((k, l, t)));
            }
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub gaussian: ProbeReport,
    pub spike: ProbeReport,
    pub ridge: ProbeReport,
    /// Bins nearest the conormal directions 135° and 315°.
    pub conormal_bins: Vec<usize>,
    pub gaussian_clean: bool,
    pub spike_all_flagged: bool,
    pub ridge_localized: bool,
    pub pass: bool,
}

fn circular_distance(a: usize, b: usize, n: usize) -> usize {
    let d = a.abs_diff(b) % n;
    d.min(n - d)
}

/// Gaussian, spike and diagonal-ridge fixtures on `[−2, 2]²`.
pub fn probe_fixtures(grid: usize, settings: ProbeSettings) -> Result<FixtureReport, SuiteError> {
    let half = 2.0;
    let radius = 1.8;
    let gaussian = wavefront_probe(&fixtures::gaussian(half, grid, 0.3)?, (0.0, 0.0), radius, settings)?;
    let spike = wavefront_probe(&fixtures::spike(half, grid)?, (0.0, 0.0), radius, settings)?;
    let ridge = wavefront_probe(&fixtures::ridge(half, grid)?, (0.0, 0.0), radius, settings)?;
    let n = settings.n_bins;
    let conormal_bins: Vec<usize> = [135.0f64, 315.0]
        .iter()
        .map(|d| crate::probe::bin_of(d.to_radians(), n))
        .collect();
    let gaussian_clean = gaussian.flagged_bins().is_empty();
    let spike_all_flagged = spike.flagged_bins().len() == n;
    let flagged = ridge.flagged_bins();
    let ridge_localized = !flagged.is_empty()
        && flagged.iter().all(|b| conormal_bins.iter().any(|c| circular_distance(*b, *c, n) <= 1));
    Ok(FixtureReport {
        gaussian,
        spike,
        ridge,
        conormal_bins,
        gaussian_clean,
        spike_all_flagged,
        ridge_localized,
        pass: gaussian_clean && spike_all_flagged && ridge_localized,
    })
}
