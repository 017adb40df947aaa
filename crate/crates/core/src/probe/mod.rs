//! Numerical microlocal probe on continuum grids: windowed-FFT decay
//! estimation, the oscillatory families that make the bracket of regular
//! functionals blow up, and a finite-sample equicontinuity audit.
//!
//! Continuum quantities live on ℝ (one point variable per slot) or ℝ², on a
//! uniform grid independent of the field lattice.

use std::f64::consts::PI;

use num::complex::Complex64 as C64;
use num::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::functionals::{FunctionalError, PolyFunctional};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("grid spacing must be positive and finite")]
    BadSpacing,
    #[error("grid has {got} values but shape needs {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("non-finite sample value")]
    NonFinite,
    #[error("expected a {want}D distribution")]
    Dimension { want: usize },
    #[error("need at least 3 shells for a decay fit, got {0}")]
    TooFewShells(usize),
    #[error("need at least one angular bin")]
    NoBins,
    #[error("window of radius {radius} at {center:?} does not fit the grid")]
    WindowOutside { center: (f64, f64), radius: f64 },
    #[error("exponent must be at least 1, got {0}")]
    Exponent(i32),
    #[error("frequency {freq} unresolved at spacing {spacing}: need freq·h ≤ π/4")]
    Unresolved { freq: f64, spacing: f64 },
    #[error("grids of the two factors differ")]
    GridMismatch,
    #[error("path needs at least two nonzero points")]
    ShortPath,
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Uniform grid axis: points `lo + i·h`, `i < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub lo: f64,
    pub h: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self, ProbeError> {
        let h = (hi - lo) / (n.max(2) - 1) as f64;
        if !(h.is_finite() && h > 0.0) {
            return Err(ProbeError::BadSpacing);
        }
        Ok(Self { lo, h, n })
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + self.h * i as f64
    }

    pub fn hi(&self) -> f64 {
        self.point(self.n - 1)
    }
}

/// Complex samples on a uniform 1D or 2D grid; 2D values are row-major
/// with the first axis slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDistribution {
    axes: Vec<Axis>,
    values: Vec<C64>,
}

impl SampledDistribution {
    pub fn new(axes: Vec<Axis>, values: Vec<C64>) -> Result<Self, ProbeError> {
        if axes.iter().any(|a| !(a.h.is_finite() && a.h > 0.0)) {
            return Err(ProbeError::BadSpacing);
        }
        let want: usize = axes.iter().map(|a| a.n).product();
        if values.len() != want {
            return Err(ProbeError::ShapeMismatch { got: values.len(), want });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(ProbeError::NonFinite);
        }
        Ok(Self { axes, values })
    }

    pub fn from_fn_1d(axis: Axis, f: impl Fn(f64) -> C64) -> Result<Self, ProbeError> {
        let values = (0..axis.n).map(|i| f(axis.point(i))).collect();
        Self::new(vec![axis], values)
    }

    pub fn from_fn_2d(ax: Axis, ay: Axis, f: impl Fn(f64, f64) -> C64) -> Result<Self, ProbeError> {
        let mut values = Vec::with_capacity(ax.n * ay.n);
        for i in 0..ax.n {
            for j in 0..ay.n {
                values.push(f(ax.point(i), ay.point(j)));
            }
        }
        Self::new(vec![ax, ay], values)
    }

    /// Bump `exp(1 − 1/(1−r²))` with `r = |x−c|/radius`.
    pub fn bump_1d(axis: Axis, center: f64, radius: f64) -> Result<Self, ProbeError> {
        Self::from_fn_1d(axis, |x| C64::new(bump((x - center) / radius), 0.0))
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }
    pub fn values(&self) -> &[C64] {
        &self.values
    }
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Quadrature weight: product of spacings.
    pub fn weight(&self) -> f64 {
        self.axes.iter().map(|a| a.h).product()
    }

    /// Trapezoid pairing `∫ u f` against another sample on the same grid.
    pub fn pair(&self, f: &SampledDistribution) -> Result<C64, ProbeError> {
        if self.axes != f.axes {
            return Err(ProbeError::GridMismatch);
        }
        let w = self.weight();
        let edge = |i: usize, a: &Axis| if i == 0 || i + 1 == a.n { 0.5 } else { 1.0 };
        let sum: C64 = match self.axes.as_slice() {
            [a] => (0..a.n).map(|i| self.values[i] * f.values[i] * edge(i, a)).sum(),
            [a, b] => (0..a.n)
                .flat_map(|i| (0..b.n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let k = i * b.n + j;
                    self.values[k] * f.values[k] * edge(i, a) * edge(j, b)
                })
                .sum(),
            _ => return Err(ProbeError::Dimension { want: 1 }),
        };
        Ok(sum * w)
    }
}

/// `exp(1 − 1/(1−r²))` for `|r| < 1`, zero outside.
pub fn bump(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// `A(ξ) = |ξ|^{−K} χ·e_{ξ/|ξ|²}`, `e_η(x) = exp(−iηx)`, `A(0) = 0`.
#[derive(Clone, Debug)]
pub struct OscillatoryFamily {
    exponent: i32,
    chi: SampledDistribution,
}

pub fn oscillatory_family(chi: SampledDistribution, k: i32) -> Result<OscillatoryFamily, ProbeError> {
    if k < 1 {
        return Err(ProbeError::Exponent(k));
    }
    if chi.dim() != 1 {
        return Err(ProbeError::Dimension { want: 1 });
    }
    Ok(OscillatoryFamily { exponent: k, chi })
}

/// Largest frequency resolved at spacing `h`.
pub fn resolution_limit(h: f64) -> f64 {
    PI / (4.0 * h)
}

fn guard(freq: f64, h: f64) -> Result<(), ProbeError> {
    if freq.abs() * h > PI / 4.0 {
        Err(ProbeError::Unresolved { freq: freq.abs(), spacing: h })
    } else {
        Ok(())
    }
}

impl OscillatoryFamily {
    pub fn exponent(&self) -> i32 {
        self.exponent
    }
    pub fn bump(&self) -> &SampledDistribution {
        &self.chi
    }

    /// Samples `A(ξ)` on the bump's grid.
    pub fn at(&self, xi: f64) -> Result<SampledDistribution, ProbeError> {
        let axis = self.chi.axes[0];
        if xi == 0.0 {
            return SampledDistribution::new(vec![axis], vec![C64::zero(); axis.n]);
        }
        let freq = 1.0 / xi;
        guard(freq, axis.h)?;
        let amp = xi.abs().powi(-self.exponent);
        let values = (0..axis.n)
            .map(|i| self.chi.values[i] * amp * C64::from_polar(1.0, -freq * axis.point(i)))
            .collect();
        SampledDistribution::new(vec![axis], values)
    }

    /// `A(ξ)(f) = ∫ A(ξ) f`.
    pub fn apply(&self, xi: f64, f: &SampledDistribution) -> Result<C64, ProbeError> {
        self.at(xi)?.pair(f)
    }
}

/// Two-point kernels `W` paired with `A(ξ₁) ⊗ B(ξ₂)`.
#[derive(Clone, Debug)]
pub enum TwoPointKernel {
    /// `δ(x−y)`.
    Diagonal,
    /// `exp(−(x−y)²/2s²)/(√(2π)s)`.
    Gaussian { width: f64 },
    /// General kernel sampled on the product of the families' grid.
    Sampled(SampledDistribution),
}

impl TwoPointKernel {
    pub fn label(&self) -> String {
        match self {
            TwoPointKernel::Diagonal => "delta(x-y)".into(),
            TwoPointKernel::Gaussian { width } => format!("gaussian(width={width})"),
            TwoPointKernel::Sampled(_) => "sampled".into(),
        }
    }

    /// `W(f ⊗ g)`.
    pub fn pair(&self, f: &SampledDistribution, g: &SampledDistribution) -> Result<C64, ProbeError> {
        if f.axes != g.axes || f.dim() != 1 {
            return Err(ProbeError::GridMismatch);
        }
        match self {
            TwoPointKernel::Diagonal => f.pair(g),
            TwoPointKernel::Gaussian { width } => {
                let axis = f.axes[0];
                let conv = gaussian_convolve(g.values(), axis.h, *width);
                f.pair(&SampledDistribution { axes: f.axes.clone(), values: conv })
            }
            TwoPointKernel::Sampled(w) => {
                if w.axes.len() != 2 || w.axes[0] != f.axes[0] || w.axes[1] != f.axes[0] {
                    return Err(ProbeError::GridMismatch);
                }
                let prod: Vec<C64> = f
                    .values
                    .iter()
                    .flat_map(|a| g.values.iter().map(move |b| a * b))
                    .collect();
                w.pair(&SampledDistribution { axes: w.axes.clone(), values: prod })
            }
        }
    }
}

/// `(W_s * g)(x) = h Σ_j W_s(x−y_j) g_j` through a zero-padded FFT.
fn gaussian_convolve(g: &[C64], h: f64, width: f64) -> Vec<C64> {
    let n = g.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let norm = 1.0 / ((2.0 * PI).sqrt() * width);
    let mut kern = vec![C64::zero(); len];
    for (i, slot) in kern.iter_mut().enumerate() {
        let offset = if i < len / 2 { i as f64 } else { i as f64 - len as f64 };
        let d = offset * h;
        *slot = C64::new(norm * (-d * d / (2.0 * width * width)).exp() * h, 0.0);
    }
    let mut buf = vec![C64::zero(); len];
    buf[..n].copy_from_slice(g);
    fwd.process(&mut buf);
    fwd.process(&mut kern);
    for (b, k) in buf.iter_mut().zip(&kern) {
        *b *= k;
    }
    inv.process(&mut buf);
    buf.truncate(n);
    buf.iter().map(|v| v / len as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub xi1: f64,
    pub xi2: f64,
    pub value: (f64, f64),
    pub abs_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanTable {
    pub kernel: String,
    pub path: String,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log|W(A⊗B)|` against `log|ξ₁|`.
    pub fitted_slope: f64,
    /// Largest `|W(A⊗B)|` on the path divided by the value at the first point.
    pub growth_ratio: f64,
}

impl ScanTable {
    /// No growth beyond `factor` times the value at the path's start.
    pub fn is_bounded(&self, factor: f64) -> bool {
        self.growth_ratio <= factor
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi1_re,xi1_im,xi2_re,xi2_im,abs_value\n");
        for r in &self.rows {
            out.push_str(&format!("{:e},0,{:e},0,{:e}\n", r.xi1, r.xi2, r.abs_value));
        }
        out
    }
}

/// Log-spaced path `|ξ₁|` from `start` down to `end` with `ξ₂ = sign·ξ₁`.
pub fn diagonal_path(start: f64, end: f64, points: usize, sign: f64) -> Vec<(f64, f64)> {
    let (ls, le) = (start.ln(), end.ln());
    (0..points)
        .map(|i| {
            let t = if points == 1 { 0.0 } else { i as f64 / (points - 1) as f64 };
            let x = (ls + (le - ls) * t).exp();
            (x, sign * x)
        })
        .collect()
}

pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

/// Evaluates `W(A(ξ₁) ⊗ B(ξ₂))` along a path.
pub fn counterexample_scan(
    w: &TwoPointKernel,
    a: &OscillatoryFamily,
    b: &OscillatoryFamily,
    path: &[(f64, f64)],
    path_label: &str,
) -> Result<ScanTable, ProbeError> {
    if path.iter().filter(|(x, _)| *x != 0.0).count() < 2 {
        return Err(ProbeError::ShortPath);
    }
    for &(x1, x2) in path {
        for (fam, x) in [(a, x1), (b, x2)] {
            if x != 0.0 {
                guard(1.0 / x, fam.chi.axes[0].h)?;
            }
        }
    }
    let rows: Vec<ScanRow> = path
        .par_iter()
        .map(|&(x1, x2)| {
            let v = w.pair(&a.at(x1)?, &b.at(x2)?)?;
            Ok(ScanRow { xi1: x1, xi2: x2, value: (v.re, v.im), abs_value: v.norm() })
        })
        .collect::<Result<_, ProbeError>>()?;
    let floor = f64::MIN_POSITIVE;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.xi1 != 0.0)
        .map(|r| (r.xi1.abs().ln(), r.abs_value.max(floor).ln()))
        .unzip();
    let first = rows[0].abs_value.max(floor);
    let growth_ratio = rows.iter().map(|r| r.abs_value).fold(0.0, f64::max) / first;
    Ok(ScanTable {
        kernel: w.label(),
        path: path_label.into(),
        rows,
        fitted_slope: fit_slope(&xs, &ys),
        growth_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinEstimate {
    pub bin_center_deg: f64,
    pub shell_sup: Vec<f64>,
    pub slope: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub window_center: (f64, f64),
    pub window_radius: f64,
    pub shell_edges: Vec<f64>,
    pub slope_threshold: f64,
    pub noise_floor: f64,
    pub bins: Vec<BinEstimate>,
}

impl ProbeReport {
    pub fn flagged_bins(&self) -> Vec<usize> {
        self.bins.iter().enumerate().filter(|(_, b)| b.flagged).map(|(i, _)| i).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center_deg,slope,flagged\n");
        for b in &self.bins {
            out.push_str(&format!("{},{},{}\n", b.bin_center_deg, b.slope, b.flagged));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSettings {
    pub n_bins: usize,
    pub shells: usize,
    pub slope_threshold: f64,
    /// Relative floor below which spectral values count as round-off.
    pub relative_floor: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { n_bins: 16, shells: 5, slope_threshold: 3.0, relative_floor: 1e-13 }
    }
}

/// Bin index whose center `i·360/n_bins` is nearest the angle.
pub fn bin_of(angle_rad: f64, n_bins: usize) -> usize {
    let turns = (angle_rad / (2.0 * PI)).rem_euclid(1.0);
    ((turns * n_bins as f64).round() as usize) % n_bins
}

/// Localizes `u` with a bump of the given radius, takes its 2D FFT and
/// fits a decay slope per angular bin over dyadic frequency shells ending
/// at the Nyquist frequency.
pub fn wavefront_probe(
    u: &SampledDistribution,
    window_center: (f64, f64),
    window_radius: f64,
    settings: ProbeSettings,
) -> Result<ProbeReport, ProbeError> {
    if u.dim() != 2 {
        return Err(ProbeError::Dimension { want: 2 });
    }
    if settings.shells < 3 {
        return Err(ProbeError::TooFewShells(settings.shells));
    }
    if settings.n_bins == 0 {
        return Err(ProbeError::NoBins);
    }
    let (ax, ay) = (u.axes[0], u.axes[1]);
    let (cx, cy) = window_center;
    if cx - window_radius < ax.lo || cx + window_radius > ax.hi() || cy - window_radius < ay.lo || cy + window_radius > ay.hi() {
        return Err(ProbeError::WindowOutside { center: window_center, radius: window_radius });
    }
    let (nx, ny) = (ax.n, ay.n);
    let mut data: Vec<C64> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k / ny, k % ny);
            let (x, y) = (ax.point(i) - cx, ay.point(j) - cy);
            u.values[k] * bump((x * x + y * y).sqrt() / window_radius)
        })
        .collect();
    fft_2d(&mut data, nx, ny);
    let scale = u.weight();
    let mags: Vec<f64> = data.iter().map(|v| v.norm() * scale).collect();
    let global = mags.iter().cloned().fold(0.0, f64::max);
    let floor = (global * settings.relative_floor).max(f64::MIN_POSITIVE);

    let kx = |i: usize| 2.0 * PI * signed_index(i, nx) / (nx as f64 * ax.h);
    let ky = |j: usize| 2.0 * PI * signed_index(j, ny) / (ny as f64 * ay.h);
    let nyquist = (PI / ax.h).min(PI / ay.h);
    let k0 = nyquist / 2f64.powi(settings.shells as i32);
    let shell_edges: Vec<f64> = (0..=settings.shells).map(|s| k0 * 2f64.powi(s as i32)).collect();

    let mut sup = vec![vec![0.0f64; settings.shells]; settings.n_bins];
    for i in 0..nx {
        for j in 0..ny {
            let (a, b) = (kx(i), ky(j));
            let r = a.hypot(b);
            if r < k0 || r >= nyquist {
                continue;
            }
            let shell = ((r / k0).log2().floor() as usize).min(settings.shells - 1);
            let bin = bin_of(b.atan2(a), settings.n_bins);
            let m = mags[i * ny + j];
            if m > sup[bin][shell] {
                sup[bin][shell] = m;
            }
        }
    }
    let centers: Vec<f64> = shell_edges.windows(2).map(|w| (w[0] * w[1]).sqrt().ln()).collect();
    let bins = sup
        .into_iter()
        .enumerate()
        .map(|(i, shell_sup)| {
            let clamped: Vec<f64> = shell_sup.iter().map(|v| v.max(floor)).collect();
            let logs: Vec<f64> = clamped.iter().map(|v| v.ln()).collect();
            let slope = fit_slope(&centers, &logs);
            let signal = clamped[0] > floor;
            BinEstimate {
                bin_center_deg: 360.0 * i as f64 / settings.n_bins as f64,
                shell_sup: clamped,
                slope,
                flagged: signal && slope >= -settings.slope_threshold,
            }
        })
        .collect();
    Ok(ProbeReport {
        window_center,
        window_radius,
        shell_edges,
        slope_threshold: settings.slope_threshold,
        noise_floor: floor,
        bins,
    })
}

fn signed_index(i: usize, n: usize) -> f64 {
    if i < n.div_ceil(2) {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

fn fft_2d(data: &mut [C64], nx: usize, ny: usize) {
    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_forward(ny);
    data.par_chunks_mut(ny).for_each(|r| row.process(r));
    let col = planner.plan_fft_forward(nx);
    let mut buf = vec![C64::zero(); nx];
    for j in 0..ny {
        for i in 0..nx {
            buf[i] = data[i * ny + j];
        }
        col.process(&mut buf);
        for i in 0..nx {
            data[i * ny + j] = buf[i];
        }
    }
}

/// Test fixtures on a square grid over `[−half, half]²`.
pub mod fixtures {
    use super::*;

    pub fn square_axes(half: f64, n: usize) -> Result<(Axis, Axis), ProbeError> {
        let h = 2.0 * half / n as f64;
        let a = Axis { lo: -half, h, n };
        if !(h.is_finite() && h > 0.0) {
            return Err(ProbeError::BadSpacing);
        }
        Ok((a, a))
    }

    pub fn gaussian(half: f64, n: usize, width: f64) -> Result<SampledDistribution, ProbeError> {
        let (ax, ay) = square_axes(half, n)?;
        SampledDistribution::from_fn_2d(ax, ay, |x, y| C64::new((-(x * x + y * y) / (2.0 * width * width)).exp(), 0.0))
    }

    /// Unit mass at the grid point nearest the origin.
    pub fn spike(half: f64, n: usize) -> Result<SampledDistribution, ProbeError> {
        let (ax, ay) = square_axes(half, n)?;
        let mass = 1.0 / (ax.h * ay.h);
        SampledDistribution::from_fn_2d(ax, ay, |x, y| {
            if x.abs() < ax.h / 2.0 && y.abs() < ay.h / 2.0 {
                C64::new(mass, 0.0)
            } else {
                C64::zero()
            }
        })
    }

    /// `δ(x−y)` sampled as `1/h` on the grid diagonal.
    pub fn ridge(half: f64, n: usize) -> Result<SampledDistribution, ProbeError> {
        let (ax, ay) = square_axes(half, n)?;
        let mut values = vec![C64::zero(); n * n];
        for i in 0..n {
            values[i * n + i] = C64::new(1.0 / ax.h, 0.0);
        }
        SampledDistribution::new(vec![ax, ay], values)
    }
}

/// Lattice test vector with the direction it is meant to probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditTest {
    pub label: String,
    pub nominal_direction_deg: Option<f64>,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub label: String,
    pub nominal_direction_deg: Option<f64>,
    /// `sup_s |F⁽ⁿ⁾(φ_s){Z,…,Z}|` over nested subfamilies: every fourth
    /// member, every second member, all members.
    pub sup_by_refinement: Vec<f64>,
    pub proxy_seminorm: f64,
    pub ratio: f64,
    /// `sup(all) / sup(coarsest)`; 1 means refinement found nothing larger.
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub heuristic: bool,
    pub note: String,
    pub family: String,
    pub family_size: usize,
    pub order: usize,
    pub rows: Vec<AuditRow>,
}

/// Finite-sample proxy for equicontinuity: sup of `|F⁽ⁿ⁾(φ_s){Z_j^{⊗n}}|`
/// over the family, against `p(Z) = ‖Z‖_∞ⁿ`. It cannot certify the
/// infinite-dimensional property.
pub fn equicontinuity_audit(
    f: &PolyFunctional<f64>,
    family: &[Vec<f64>],
    family_label: &str,
    tests: &[AuditTest],
    n: usize,
) -> Result<AuditReport, ProbeError> {
    let derivs = family
        .par_iter()
        .map(|phi| f.eval_derivative(phi, n))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = tests
        .iter()
        .map(|t| {
            let zs: Vec<&[f64]> = vec![&t.vector[..]; n];
            let vals = derivs
                .iter()
                .map(|d| d.contract(&zs, &[]).map(|v| v.abs()))
                .collect::<Result<Vec<f64>, _>>()?;
            let sup_step = |step: usize| vals.iter().step_by(step).cloned().fold(0.0, f64::max);
            let sups = vec![sup_step(4), sup_step(2), sup_step(1)];
            let p = t.vector.iter().fold(0.0f64, |m, v| m.max(v.abs())).powi(n as i32);
            let all = sups[2];
            Ok(AuditRow {
                label: t.label.clone(),
                nominal_direction_deg: t.nominal_direction_deg,
                ratio: if p > 0.0 { all / p } else { 0.0 },
                growth: if sups[0] > 0.0 { all / sups[0] } else if all > 0.0 { f64::INFINITY } else { 1.0 },
                proxy_seminorm: p,
                sup_by_refinement: sups,
            })
        })
        .collect::<Result<Vec<_>, ProbeError>>()?;
    Ok(AuditReport {
        heuristic: true,
        note: "finite-sample proxy; bounded ratios are evidence, not a certificate of equicontinuity".into(),
        family: family_label.into(),
        family_size: family.len(),
        order: n,
        rows,
    })
}

pub fn report_json<T: Serialize>(r: &T) -> Value {
    serde_json::to_value(r).unwrap_or(Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chi(n: usize) -> SampledDistribution {
        SampledDistribution::bump_1d(Axis::new(-2.0, 2.0, n).unwrap(), 0.0, 1.0).unwrap()
    }

    #[test]
    fn family_basics() {
        let fam = oscillatory_family(chi(4097), 1).unwrap();
        assert!(fam.at(0.0).unwrap().values().iter().all(|v| v.is_zero()));
        let a = fam.at(0.3).unwrap();
        for (v, c) in a.values().iter().zip(chi(4097).values()) {
            if c.is_zero() {
                assert!(v.is_zero());
            }
        }
        assert!(oscillatory_family(chi(11), 0).is_err());
        let f = SampledDistribution::from_fn_1d(Axis::new(-2.0, 2.0, 4097).unwrap(), |x| C64::new((-x * x).exp(), 0.0)).unwrap();
        let vals: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|x| fam.apply(*x, &f).unwrap().norm()).collect();
        assert!(vals[0] > vals[1] && vals[1] > vals[2], "{vals:?}");
    }

    #[test]
    fn resolution_guard() {
        let fam = oscillatory_family(chi(101), 1).unwrap();
        assert!(matches!(fam.at(1e-3), Err(ProbeError::Unresolved { .. })));
    }

    #[test]
    fn slope_fit_is_exact_on_power_laws() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = [1.0f64, 0.25, 0.0625].iter().map(|v| v.ln()).collect();
        assert!((fit_slope(&xs, &ys) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bins_are_centred() {
        assert_eq!(bin_of(0.0, 16), 0);
        assert_eq!(bin_of(3.0 * PI / 4.0, 16), 6);
        assert_eq!(bin_of(-PI / 4.0, 16), 14);
        assert_eq!(bin_of(-0.01, 16), 0);
    }

    #[test]
    fn probe_rejects_bad_setup() {
        let g = fixtures::gaussian(2.0, 32, 0.3).unwrap();
        let s = ProbeSettings { shells: 2, ..Default::default() };
        assert_eq!(wavefront_probe(&g, (0.0, 0.0), 1.5, s).unwrap_err(), ProbeError::TooFewShells(2));
        assert!(matches!(
            wavefront_probe(&g, (1.5, 0.0), 1.5, ProbeSettings::default()),
            Err(ProbeError::WindowOutside { .. })
        ));
    }

    #[test]
    fn sampled_kernel_matches_diagonal_on_small_grid() {
        let axis = Axis::new(-2.0, 2.0, 81).unwrap();
        let c = SampledDistribution::bump_1d(axis, 0.0, 1.0).unwrap();
        let fam = oscillatory_family(c, 1).unwrap();
        let h = axis.h;
        let w = SampledDistribution::from_fn_2d(axis, axis, |x, y| {
            C64::new(if (x - y).abs() < h / 2.0 { 1.0 / h } else { 0.0 }, 0.0)
        })
        .unwrap();
        let (a, b) = (fam.at(0.5).unwrap(), fam.at(-0.5).unwrap());
        let d = TwoPointKernel::Diagonal.pair(&a, &b).unwrap();
        let s = TwoPointKernel::Sampled(w).pair(&a, &b).unwrap();
        assert!((d - s).norm() < 1e-3 * d.norm());
    }
}
