use std::ops::RangeInclusive;

use num::rational::Rational64;
use num::{One, Zero};

use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

use super::{apply_rows, wave_operator_rows, CausalPropagators, FieldConfig, LatticeError, LatticeSpacetime};

/// Time-only switching function: 0 up to `t_minus`, 1 from `t_plus`,
/// smoothstep `3s² - 2s³` in between. Values are exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchingFunction {
    t_minus: usize,
    t_plus: usize,
    theta: Vec<Rational64>,
}

pub fn make_switching(
    lat: &LatticeSpacetime,
    t_minus: usize,
    t_plus: usize,
) -> Result<SwitchingFunction, LatticeError> {
    let nt = lat.nt();
    if t_minus < 1 || t_minus >= t_plus || t_plus + 2 > nt {
        return Err(LatticeError::InvalidSwitching { t_minus, t_plus, nt });
    }
    let width = (t_plus - t_minus) as i64;
    let theta = (0..nt)
        .map(|t| {
            if t <= t_minus {
                Rational64::zero()
            } else if t >= t_plus {
                Rational64::one()
            } else {
                let s = Rational64::new((t - t_minus) as i64, width);
                Rational64::from_integer(3) * s * s - Rational64::from_integer(2) * s * s * s
            }
        })
        .collect();
    Ok(SwitchingFunction { t_minus, t_plus, theta })
}

impl SwitchingFunction {
    pub fn t_minus(&self) -> usize {
        self.t_minus
    }
    pub fn t_plus(&self) -> usize {
        self.t_plus
    }
    pub fn values(&self) -> &[Rational64] {
        &self.theta
    }
    pub fn at(&self, t: usize) -> Rational64 {
        self.theta[t]
    }

    /// Backward difference `θ(t) - θ(t-1)`.
    pub fn difference(&self, t: usize) -> Rational64 {
        if t == 0 {
            Rational64::zero()
        } else {
            self.theta[t] - self.theta[t - 1]
        }
    }

    /// Rows where the backward difference is nonzero: `(t_minus, t_plus]`.
    pub fn difference_support(&self) -> Vec<usize> {
        (0..self.theta.len()).filter(|&t| !self.difference(t).is_zero()).collect()
    }

    /// Rows on which θ is not constant across the three rows reached by the
    /// wave stencil. This is the lattice stand-in for `supp dθ` in support
    /// statements: `t_minus..=t_plus`.
    pub fn transition_rows(&self) -> RangeInclusive<usize> {
        self.t_minus..=self.t_plus
    }
}

/// The one-sided inverse `α = Δ^A(1-θ) + Δ^R θ` and the line of
/// retractions `γ_λ = 𝟙 + (λ-1) αP`.
#[derive(Clone, Debug)]
pub struct Retraction<S> {
    lattice: LatticeSpacetime,
    switching: SwitchingFunction,
    wave: Vec<Vec<(u32, S)>>,
    alpha: DenseMatrix<S>,
    alpha_p: DenseMatrix<S>,
}

impl<S: Scalar> Retraction<S> {
    pub fn new(lat: &LatticeSpacetime, props: &CausalPropagators<S>, switching: SwitchingFunction) -> Self {
        let n = lat.n_sites();
        let mut alpha = DenseMatrix::zeros(n, n);
        for b in lat.interior_sites() {
            let th = S::from_rational64(&switching.at(lat.coords(b).0));
            let one_minus = S::one() - th.clone();
            for a in 0..n {
                let v = props.advanced.get(a, b).clone() * one_minus.clone()
                    + props.retarded.get(a, b).clone() * th.clone();
                if !v.is_zero() {
                    alpha.set(a, b, v);
                }
            }
        }
        let wave = wave_operator_rows::<S>(lat);
        // (αP)[a][s] = Σ_j α[a][j] P[j][s]
        let mut alpha_p = DenseMatrix::<S>::zeros(n, n);
        for (j, row) in wave.iter().enumerate() {
            for (s, p) in row {
                for a in 0..n {
                    let al = alpha.get(a, j);
                    if al.is_zero() {
                        continue;
                    }
                    let cur = alpha_p.get(a, *s as usize).clone();
                    alpha_p.set(a, *s as usize, cur + al.clone() * p.clone());
                }
            }
        }
        Self { lattice: lat.clone(), switching, wave, alpha, alpha_p }
    }

    pub fn lattice(&self) -> &LatticeSpacetime {
        &self.lattice
    }
    pub fn switching(&self) -> &SwitchingFunction {
        &self.switching
    }
    pub fn wave_rows(&self) -> &[Vec<(u32, S)>] {
        &self.wave
    }
    /// Matrix of `α`; columns of boundary sites are zero.
    pub fn alpha_matrix(&self) -> &DenseMatrix<S> {
        &self.alpha
    }
    pub fn alpha_p_matrix(&self) -> &DenseMatrix<S> {
        &self.alpha_p
    }

    pub fn apply_wave(&self, phi: &[S]) -> Vec<S> {
        apply_rows(&self.wave, phi)
    }

    pub fn alpha_apply(&self, h: &[S]) -> Result<FieldConfig<S>, LatticeError> {
        self.lattice.check_len(h.len())?;
        if let Some(s) = h.iter().enumerate().find(|(s, v)| !v.is_zero() && !self.lattice.is_interior_site(*s)) {
            return Err(LatticeError::BoundarySupport(s.0));
        }
        Ok(FieldConfig::new(self.alpha.mul_vec(h)))
    }

    /// `γ_λ φ = φ + (λ-1) αPφ`.
    pub fn gamma(&self, lambda: &S, phi: &[S]) -> Result<FieldConfig<S>, LatticeError> {
        self.lattice.check_len(phi.len())?;
        let apf = self.alpha_p.mul_vec(phi);
        let c = lambda.clone() - S::one();
        Ok(FieldConfig::new(phi.iter().zip(apf).map(|(p, a)| p.clone() + c.clone() * a).collect()))
    }

    /// `(γ₀φ, αPφ)`, so that `γ_λφ = γ₀φ + λ·αPφ`.
    pub fn line(&self, phi: &[S]) -> (Vec<S>, Vec<S>) {
        let apf = self.alpha_p.mul_vec(phi);
        let base = phi.iter().zip(&apf).map(|(p, a)| p.clone() - a.clone()).collect();
        (base, apf)
    }

    /// Matrix of `γ₀ = 𝟙 - αP`.
    pub fn gamma0_matrix(&self) -> DenseMatrix<S> {
        DenseMatrix::identity(self.lattice.n_sites()).sub(&self.alpha_p)
    }
}
