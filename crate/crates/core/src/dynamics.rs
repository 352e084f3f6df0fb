//! Closed-form Rabi dynamics of the driven two-level system.
//!
//! The system starts in the excited state (`c1(0) = 1`, `c0(0) = 0`) and is
//! driven by a field of strength `b0` gyrating at `omega` under angle
//! `theta`. All rates are dimensionless with the gate time set to one, so
//! "evaluate at t = 1" is the default everywhere.

use crate::error::{Error, Result};
use crate::numerics::{self, Bracket, Tolerance};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Dimensionless drive parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldConfig {
    /// Drive (gyration) frequency; negative values reverse the rotation.
    pub omega: f64,
    /// Coupling `gamma * B0`, strictly positive.
    pub b0: f64,
    /// Gyration angle in radians, inside `(0, pi)`.
    pub theta: f64,
}

impl FieldConfig {
    pub fn new(omega: f64, b0: f64, theta: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::InvalidConfig(format!("omega must be finite (got {omega})")));
        }
        if !(b0 > 0.0 && b0.is_finite()) {
            return Err(Error::InvalidConfig(format!("b0 must be positive (got {b0})")));
        }
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::InvalidConfig(format!("theta must lie in (0, pi) (got {theta})")));
        }
        Ok(Self { omega, b0, theta })
    }

    /// `cos(theta)`, exactly zero at `theta = pi/2`.
    pub fn cos_theta(&self) -> f64 {
        (std::f64::consts::FRAC_PI_2 - self.theta).sin()
    }

    /// Transverse coupling `b0 sin(theta)`.
    pub fn transverse(&self) -> f64 {
        self.b0 * self.theta.sin()
    }

    /// Transition frequency at which the effective detuning vanishes.
    pub fn resonance(&self) -> f64 {
        self.omega - 2.0 * self.b0 * self.cos_theta()
    }
}

/// Independent entries of the (pure) density matrix at the end of the gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityState {
    pub rho00: f64,
    pub rho01: Complex64,
}

/// Shared intermediate quantities for one `(cfg, omega0)` pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rabi {
    /// `omega0 - omega + 2 b0 cos(theta)`
    pub delta: f64,
    /// `b0 sin(theta)`
    pub b: f64,
    /// generalized Rabi frequency
    pub q: f64,
}

impl Rabi {
    pub(crate) fn new(cfg: &FieldConfig, omega0: f64) -> Self {
        let delta = omega0 - cfg.omega + 2.0 * cfg.b0 * cfg.cos_theta();
        let b = cfg.transverse();
        let q = delta.hypot(2.0 * b);
        Self { delta, b, q }
    }
}

/// Generalized Rabi frequency `q`.
///
/// Evaluated as `hypot(delta, 2 b)`, which equals the expanded quadratic in
/// `omega0 - omega` and is strictly positive for a valid configuration.
pub fn q_factor(cfg: &FieldConfig, omega0: f64) -> f64 {
    Rabi::new(cfg, omega0).q
}

/// Amplitudes `(c0, c1)` at the end of the unit gate.
pub fn amplitudes(cfg: &FieldConfig, omega0: f64) -> (Complex64, Complex64) {
    amplitudes_at(cfg, omega0, 1.0)
}

/// Amplitudes `(c0, c1)` at time `t` (in gate units).
pub fn amplitudes_at(cfg: &FieldConfig, omega0: f64, t: f64) -> (Complex64, Complex64) {
    let r = Rabi::new(cfg, omega0);
    let (s, c) = (0.5 * r.q * t).sin_cos();
    let half = Complex64::from_polar(1.0, -0.5 * cfg.omega * t);
    let c0 = Complex64::new(0.0, -2.0 * r.b / r.q * s) * half;
    let c1 = Complex64::new(c, r.delta / r.q * s) * half.conj();
    (c0, c1)
}

/// Density-matrix entries `rho00 = |c0|^2`, `rho01 = c0 c1*`.
pub fn density_state(cfg: &FieldConfig, omega0: f64) -> DensityState {
    let r = Rabi::new(cfg, omega0);
    let (sq, cq) = r.q.sin_cos();
    let u = r.b / r.q;
    let phase = Complex64::from_polar(1.0, -cfg.omega);
    let rho01 = phase * Complex64::new(-u * r.delta / r.q * (1.0 - cq), -u * sq);
    DensityState { rho00: prob_detect(cfg, omega0), rho01 }
}

/// Probability of registering a photon in one gate window.
pub fn prob_detect(cfg: &FieldConfig, omega0: f64) -> f64 {
    let r = Rabi::new(cfg, omega0);
    let a = r.b * numerics::sinc(0.5 * r.q);
    (a * a).min(1.0)
}

/// Detection probability after time `t` (in gate units).
pub fn prob_detect_at(cfg: &FieldConfig, omega0: f64, t: f64) -> f64 {
    let r = Rabi::new(cfg, omega0);
    let a = 2.0 * r.b / r.q * (0.5 * r.q * t).sin();
    (a * a).min(1.0)
}

/// Closed-form derivative of [`prob_detect`] with respect to `omega0`.
pub fn dprob_domega0(cfg: &FieldConfig, omega0: f64) -> f64 {
    let r = Rabi::new(cfg, omega0);
    let (s, c) = (0.5 * r.q).sin_cos();
    -8.0 * r.b * r.b * s * (s - 0.5 * r.q * c) * r.delta / r.q.powi(4)
}

/// Closed-form derivative of `rho01` with respect to `omega0`.
pub fn drho01_domega0(cfg: &FieldConfig, omega0: f64) -> Complex64 {
    let r = Rabi::new(cfg, omega0);
    let (sq, cq) = r.q.sin_cos();
    let (q, d, b) = (r.q, r.delta, r.b);
    let q2 = q * q;
    let re = -b * ((1.0 - cq) / q2 + d * d * sq / (q2 * q) - 2.0 * d * d * (1.0 - cq) / (q2 * q2));
    let im = -b * d * (q * cq - sq) / (q2 * q);
    Complex64::from_polar(1.0, -cfg.omega) * Complex64::new(re, im)
}

/// Residuals of the two coupled amplitude equations at time `t`, with the
/// time derivatives taken by central differences of the closed form.
///
/// Only meaningful as a check of the closed-form solution.
pub fn ode_residual(cfg: &FieldConfig, omega0: f64, t: f64) -> (Complex64, Complex64) {
    const H: f64 = 1e-6;
    let (c0p, c1p) = amplitudes_at(cfg, omega0, t + H);
    let (c0m, c1m) = amplitudes_at(cfg, omega0, t - H);
    let dc0 = (c0p - c0m) / (2.0 * H);
    let dc1 = (c1p - c1m) / (2.0 * H);
    let (c0, c1) = amplitudes_at(cfg, omega0, t);
    let a = 0.5 * omega0 + cfg.b0 * cfg.cos_theta();
    let b = cfg.transverse();
    let i = Complex64::i();
    let rot = Complex64::from_polar(1.0, -cfg.omega * t);
    let r0 = dc0 - (-i * a * c0 - i * b * rot * c1);
    let r1 = dc1 - (i * a * c1 - i * b * rot.conj() * c0);
    (r0, r1)
}

/// Values of `q/2` in `(0, x_max]` where `tan(x) = x`; there the detection
/// probability is stationary away from resonance.
fn tan_fixed_points(x_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut m = 1.0;
    while m * PI <= x_max {
        let br = Bracket { lo: m * PI, hi: m * PI + 0.5 * PI - 1e-12 };
        if let Ok(x) = numerics::find_root_bracketed(|x: f64| x * x.cos() - x.sin(), br, Tolerance::root()) {
            if x <= x_max {
                out.push(x);
            }
        }
        m += 1.0;
    }
    out
}

/// Transition frequencies inside `(lo, hi)` where the detection probability
/// has a zero, a stationary point, or the resonance, sorted ascending.
///
/// Integrands built from the Fisher information or the likelihood have kinks
/// or narrow features at exactly these points, so they serve as quadrature
/// breakpoints.
pub fn feature_points(cfg: &FieldConfig, lo: f64, hi: f64) -> Vec<f64> {
    let center = cfg.resonance();
    let b = cfg.transverse();
    let q_max = q_factor(cfg, lo).max(q_factor(cfg, hi));
    let mut qs: Vec<f64> = Vec::new();
    let mut m = 1.0;
    while 2.0 * PI * m <= q_max {
        qs.push(2.0 * PI * m);
        m += 1.0;
    }
    qs.extend(tan_fixed_points(0.5 * q_max).into_iter().map(|x| 2.0 * x));
    let mut pts = vec![center];
    for q in qs {
        let d2 = q * q - 4.0 * b * b;
        if d2 > 0.0 {
            let d = d2.sqrt();
            pts.push(center - d);
            pts.push(center + d);
        }
    }
    pts.retain(|&x| x > lo && x < hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}
