//! Classical and quantum Fisher information for `omega0`.
//!
//! Raw values are per single measurement in gate-time units. The
//! drive-frequency scaling used for landscape plots is a separate transform
//! ([`omega_scaled`]) because it degenerates at `omega = 0`.

use crate::dynamics::{self, FieldConfig, Rabi};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Guard band on `rho00` for the definitional (ratio) form of the CFI.
pub const PROB_GUARD: f64 = 1e-12;

/// Fisher information at one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherPoint {
    pub cfi: f64,
    pub qfi: f64,
    /// `qfi - cfi`
    pub gap: f64,
}

/// Hermitian 2x2 complex matrix, row-major.
pub type Matrix2c = [[Complex64; 2]; 2];

/// Classical Fisher information of the photon/no-photon measurement.
///
/// Uses the closed form with the `rho00 (1 - rho00)` factor cancelled
/// analytically; its denominator `delta^2 + 4 b^2 cos^2(q/2)` is evaluated
/// without subtraction so the value stays accurate where `rho00` is within
/// rounding of 0 or 1. On resonance the `delta^2` factor makes the value 0,
/// including the `rho00 = 1` point, although there the limit along `omega0`
/// is `16 b^2 / q^4` rather than 0.
pub fn cfi(cfg: &FieldConfig, omega0: f64) -> Result<f64> {
    if !omega0.is_finite() {
        return Err(Error::Domain(format!("omega0 must be finite (got {omega0})")));
    }
    let r = Rabi::new(cfg, omega0);
    let (s, c) = (0.5 * r.q).sin_cos();
    let k = s - 0.5 * r.q * c;
    let num = 16.0 * r.b * r.b * r.delta * r.delta * k * k / r.q.powi(4);
    let den = r.delta * r.delta + 4.0 * r.b * r.b * c * c;
    if den <= f64::MIN_POSITIVE {
        if num <= f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        return Err(Error::DegenerateProbability { omega0 });
    }
    Ok(num / den)
}

/// CFI as `(d rho00)^2 / (rho00 (1 - rho00))`, refusing points inside the guard band.
pub fn cfi_definitional(cfg: &FieldConfig, omega0: f64) -> Result<f64> {
    let p = dynamics::prob_detect(cfg, omega0);
    if p < PROB_GUARD || 1.0 - p < PROB_GUARD {
        return Err(Error::DegenerateProbability { omega0 });
    }
    let dp = dynamics::dprob_domega0(cfg, omega0);
    Ok(dp * dp / (p * (1.0 - p)))
}

/// Quantum Fisher information of the pure state at the end of the gate.
pub fn qfi(cfg: &FieldConfig, omega0: f64) -> f64 {
    let r = Rabi::new(cfg, omega0);
    let (q, d, b) = (r.q, r.delta, r.b);
    let (sq, cq) = q.sin_cos();
    let d2 = d * d;
    let b2 = b * b;
    let first = 4.0 * b2 / (q * q) * d2 * (2.0 - 2.0 * cq - q * sq).powi(2);
    let second = ((q * q - 2.0 * d2) * (1.0 - cq) / q + d2 * sq).powi(2);
    let third = d2 * (q * cq - sq).powi(2);
    4.0 * b2 / q.powi(6) * (first + second + third)
}

/// CFI, QFI and their gap.
pub fn fisher_gap(cfg: &FieldConfig, omega0: f64) -> Result<FisherPoint> {
    let cfi = cfi(cfg, omega0)?;
    let qfi = qfi(cfg, omega0);
    Ok(FisherPoint { cfi, qfi, gap: qfi - cfi })
}

/// Symmetric logarithmic derivative `L = 2 d(rho)/d(omega0)` of the pure state.
pub fn sld_matrix(cfg: &FieldConfig, omega0: f64) -> Matrix2c {
    let dp = dynamics::dprob_domega0(cfg, omega0);
    let d01 = dynamics::drho01_domega0(cfg, omega0);
    [
        [Complex64::new(2.0 * dp, 0.0), 2.0 * d01],
        [2.0 * d01.conj(), Complex64::new(-2.0 * dp, 0.0)],
    ]
}

/// Number of IID measurements needed for variance `accuracy` given the scaled CFI.
pub fn required_samples(cfi_scaled: f64, accuracy: f64) -> Result<f64> {
    if !(cfi_scaled > 0.0) || !(accuracy > 0.0) {
        return Err(Error::Domain(format!(
            "required_samples needs positive arguments (cfi {cfi_scaled}, accuracy {accuracy})"
        )));
    }
    Ok(1.0 / (accuracy * cfi_scaled))
}

/// Multiplies a raw Fisher value by `omega^2`.
pub fn omega_scaled(value: f64, cfg: &FieldConfig) -> f64 {
    value * cfg.omega * cfg.omega
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{density_state, prob_detect};
    use crate::numerics::central_diff;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cfg(omega: f64, b0: f64, theta: f64) -> FieldConfig {
        FieldConfig::new(omega, b0, theta).unwrap()
    }

    // Definitional CFI with a finite-difference derivative.
    fn cfi_fd(c: &FieldConfig, w0: f64) -> f64 {
        let p = prob_detect(c, w0);
        let dp = central_diff(|w| prob_detect(c, w), w0, 1e-6);
        dp * dp / (p * (1.0 - p))
    }

    fn qfi_fd(c: &FieldConfig, w0: f64) -> f64 {
        let h = 1e-6;
        let dp = central_diff(|w| prob_detect(c, w), w0, h);
        let d01 = (density_state(c, w0 + h).rho01 - density_state(c, w0 - h).rho01) / (2.0 * h);
        4.0 * (dp * dp + d01.norm_sqr())
    }

    #[test]
    fn cfi_examples() {
        assert_eq!(cfi(&cfg(1.0, 1.0, FRAC_PI_2), 1.0).unwrap(), 0.0);
        for (c, w0) in [(cfg(1.0, 1.0, FRAC_PI_2), 2.0), (cfg(-25.0, 8.0, FRAC_PI_2), 1.0)] {
            let a = cfi(&c, w0).unwrap();
            let o = cfi_fd(&c, w0);
            assert!((a - o).abs() <= 1e-6 * o, "{a} vs {o}");
            assert!((a - cfi_definitional(&c, w0).unwrap()).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn cfi_expectation_identity() {
        let c = cfg(0.7, 1.9, 1.2);
        for w0 in [0.5, 2.0, 3.3, 7.1] {
            let p = prob_detect(&c, w0);
            let dp = dynamics::dprob_domega0(&c, w0);
            let e = p * (dp / p).powi(2) + (1.0 - p) * (dp / (1.0 - p)).powi(2);
            let a = cfi(&c, w0).unwrap();
            assert!((e - a).abs() <= 1e-9 * a);
        }
    }

    #[test]
    fn cfi_at_full_inversion_point() {
        // resonance with theta = pi/2 and b0 = pi/2 gives rho00 = 1
        let c = cfg(1.0, FRAC_PI_2, FRAC_PI_2);
        assert_eq!(cfi(&c, 1.0).unwrap(), 0.0);
        assert!((cfi(&c, 1.0 + 1e-5).unwrap() - 4.0 / (PI * PI)).abs() < 1e-8);
        assert!(matches!(cfi_definitional(&c, 1.0), Err(Error::DegenerateProbability { .. })));
        // zero of rho00 (q = 2 pi): the closed form is the finite limit
        let c = cfg(1.0, 1.0, FRAC_PI_2);
        let w0 = 1.0 + (4.0 * PI * PI - 4.0).sqrt();
        let v = cfi(&c, w0).unwrap();
        let near = cfi(&c, w0 + 1e-4).unwrap();
        assert!(v > 0.0 && (v - near).abs() < 1e-3 * v);
    }

    #[test]
    fn qfi_examples() {
        for b0 in [0.3, 1.0, 2.7] {
            let v = qfi(&cfg(1.0, b0, FRAC_PI_2), 1.0);
            assert!((v - b0.sin().powi(4) / (b0 * b0)).abs() < 1e-14);
        }
        let v = qfi(&cfg(1.0, FRAC_PI_2, FRAC_PI_2), 1.0);
        assert!((v - 4.0 / (PI * PI)).abs() < 1e-15);
        let c = cfg(1.0, 1.0, FRAC_PI_2);
        let (a, o) = (qfi(&c, 2.0), qfi_fd(&c, 2.0));
        assert!((a - o).abs() <= 1e-6 * o);
    }

    #[test]
    fn gap_examples() {
        let c = cfg(1.0, 1.3, FRAC_PI_2);
        let f = fisher_gap(&c, 1.0).unwrap();
        assert_eq!(f.cfi, 0.0);
        assert_eq!(f.gap, f.qfi);
        let f = fisher_gap(&cfg(1.0, 1.0, FRAC_PI_2), 2.0).unwrap();
        assert!(f.gap >= 0.0);
        assert!((f.gap - (qfi_fd(&cfg(1.0, 1.0, FRAC_PI_2), 2.0) - cfi_fd(&cfg(1.0, 1.0, FRAC_PI_2), 2.0))).abs() < 1e-6);
    }

    #[test]
    fn sld_properties() {
        let c = cfg(1.0, 1.0, FRAC_PI_2);
        let l = sld_matrix(&c, 1.0);
        assert_eq!(l[0][0].norm(), 0.0);
        assert_eq!(l[1][1].norm(), 0.0);
        assert!(l[0][1].norm() > 0.0);

        let c = cfg(-3.0, 2.2, 0.7);
        let w0 = 1.6;
        let l = sld_matrix(&c, w0);
        assert!((l[0][1] - l[1][0].conj()).norm() < 1e-15);
        assert_eq!(l[0][0].im, 0.0);
        // L^2 is proportional to the identity
        let l2_00 = l[0][0] * l[0][0] + l[0][1] * l[1][0];
        let l2_01 = l[0][0] * l[0][1] + l[0][1] * l[1][1];
        assert!(l2_01.norm() < 1e-12);
        assert!((l2_00.re - qfi(&c, w0)).abs() <= 1e-9 * qfi(&c, w0));
    }

    #[test]
    fn required_samples_examples() {
        assert!((required_samples(40.0, 0.001).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(required_samples(1.0, 1.0).unwrap(), 1.0);
        assert!((required_samples(0.001, 0.001).unwrap() - 1e6).abs() < 1e-6);
        assert!(required_samples(0.0, 1.0).is_err());
        assert!(required_samples(1.0, -1.0).is_err());
    }

    #[test]
    fn scaling_examples() {
        assert_eq!(omega_scaled(1.0, &cfg(2.0, 1.0, 1.0)), 4.0);
        assert_eq!(omega_scaled(5.0, &cfg(0.0, 1.0, 1.0)), 0.0);
        let c = cfg(1.0, 1.0, FRAC_PI_2);
        let v = cfi(&c, 2.0).unwrap();
        assert_eq!(omega_scaled(v, &c), v);
    }
}
