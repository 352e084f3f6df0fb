//! Frequentist layer: the sample-mean estimator of the detection probability
//! and maximum-likelihood inversion for the transition frequency.

use crate::dynamics::{self, FieldConfig};
use crate::error::{Error, Result};
use crate::numerics;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Photon counts `k` out of `n` gate windows.
///
/// `n = 0` (no data) is allowed so a posterior can reduce to its prior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dataset {
    pub n: u64,
    pub k: u64,
}

impl Dataset {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if k > n {
            return Err(Error::InvalidConfig(format!("photon count k = {k} exceeds trials n = {n}")));
        }
        Ok(Self { n, k })
    }

    /// Builds the sufficient statistic from a binary record.
    pub fn from_outcomes(outcomes: &[bool]) -> Self {
        let k = outcomes.iter().filter(|&&x| x).count() as u64;
        Self { n: outcomes.len() as u64, k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootStatus {
    Accepted,
    RejectedNegative,
    /// The root sits on `omega0 = 0`, the edge of the physical range.
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ambiguity {
    Unambiguous,
    Ambiguous,
    NoRealRoot,
    SincDomainViolated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    pub status: RootStatus,
}

/// Outcome of [`ml_estimate`]: both candidate roots and how to read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub roots: Vec<Root>,
    pub ambiguity: Ambiguity,
}

impl EstimateResult {
    pub fn accepted(&self) -> impl Iterator<Item = f64> + '_ {
        self.roots.iter().filter(|r| r.status == RootStatus::Accepted).map(|r| r.value)
    }

    /// The single accepted root, if there is exactly one.
    pub fn unique(&self) -> Option<f64> {
        let mut it = self.accepted();
        match (it.next(), it.next()) {
            (Some(v), None) => Some(v),
            _ => None,
        }
    }
}

/// Invertibility of the sinc relation for a given sample mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub sinc_ok: bool,
    pub real_distinct: bool,
    /// `inv_sinc(sqrt(xbar) / b)`; NaN when `sinc_ok` is false.
    pub s_value: f64,
    /// `S^2 - b^2`, NaN when `sinc_ok` is false.
    pub discriminant: f64,
    pub ratio: f64,
}

/// Sample mean `k / n`, the minimum-variance unbiased estimator of the
/// detection probability.
pub fn mvu_p1(data: &Dataset) -> Result<f64> {
    if data.n == 0 {
        return Err(Error::Domain("mvu_p1 needs at least one trial".into()));
    }
    Ok(data.k as f64 / data.n as f64)
}

pub fn validity(xbar: f64, cfg: &FieldConfig) -> ValidityReport {
    let b = cfg.transverse().abs();
    let ratio = xbar.sqrt() / b;
    let sinc_ok = ratio <= 1.0;
    if !sinc_ok {
        return ValidityReport { sinc_ok, real_distinct: false, s_value: f64::NAN, discriminant: f64::NAN, ratio };
    }
    let s = numerics::inv_sinc(ratio).unwrap_or(f64::NAN);
    let discriminant = (s - b) * (s + b);
    ValidityReport { sinc_ok, real_distinct: discriminant > 0.0, s_value: s, discriminant, ratio }
}

/// Maximum-likelihood estimate of `omega0` from the sample mean.
///
/// Inverts `xbar = b^2 sinc^2(q/2)` on the first lobe, `q = 2S`, and solves
/// the quadratic `(omega0 - omega + 2 b0 cos(theta))^2 = 4 (S^2 - b^2)`.
/// Validity is checked before the degenerate-data test, so `xbar = 1` with a
/// saturating coupling reports [`Error::NoRealRoot`].
pub fn ml_estimate(xbar: f64, cfg: &FieldConfig) -> Result<EstimateResult> {
    if !(0.0..=1.0).contains(&xbar) {
        return Err(Error::Domain(format!("xbar must lie in [0, 1] (got {xbar})")));
    }
    let v = validity(xbar, cfg);
    if !v.sinc_ok {
        return Err(Error::SincDomainViolated { ratio: v.ratio });
    }
    if !v.real_distinct {
        return Err(Error::NoRealRoot { discriminant: v.discriminant });
    }
    if xbar == 0.0 || xbar == 1.0 {
        return Err(Error::DegenerateData { xbar });
    }
    let centre = cfg.resonance();
    let half = 2.0 * v.discriminant.sqrt();
    let scale = centre.abs().max(half).max(1.0);
    let roots: Vec<Root> = [centre + half, centre - half]
        .into_iter()
        .map(|value| {
            let status = if value.abs() <= 1e-12 * scale {
                RootStatus::Boundary
            } else if value < 0.0 {
                RootStatus::RejectedNegative
            } else {
                RootStatus::Accepted
            };
            Root { value, status }
        })
        .collect();
    let accepted = roots.iter().filter(|r| r.status == RootStatus::Accepted).count();
    let ambiguity = if accepted == 2 { Ambiguity::Ambiguous } else { Ambiguity::Unambiguous };
    Ok(EstimateResult { roots, ambiguity })
}

/// `k ln p + (n - k) ln(1 - p)` with zero-count terms dropped, so a certain
/// outcome that agrees with the data contributes 0 rather than NaN.
pub(crate) fn bernoulli_log_lik(n: f64, k: f64, p: f64) -> f64 {
    let mut ll = 0.0;
    if k > 0.0 {
        ll += k * p.ln();
    }
    if n - k > 0.0 {
        ll += (n - k) * (-p).ln_1p();
    }
    ll
}

/// Binomial log-likelihood of the counts at `omega0`, including `ln C(n, k)`.
pub fn log_likelihood(data: &Dataset, cfg: &FieldConfig, omega0: f64) -> f64 {
    let (n, k) = (data.n as f64, data.k as f64);
    let log_binom = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
    log_binom + bernoulli_log_lik(n, k, dynamics::prob_detect(cfg, omega0))
}

/// Second derivative of the log-likelihood in `omega0`:
/// `k (p''/p - p'^2/p^2) - (n-k) (p''/(1-p) + p'^2/(1-p)^2)`.
///
/// `p'` is closed form; `p''` is its central difference.
pub fn log_likelihood_curvature(data: &Dataset, cfg: &FieldConfig, omega0: f64) -> f64 {
    let (n, k) = (data.n as f64, data.k as f64);
    let p = dynamics::prob_detect(cfg, omega0);
    let d1 = dynamics::dprob_domega0(cfg, omega0);
    let h = numerics::default_step(omega0);
    let d2 = numerics::central_diff(|w| dynamics::dprob_domega0(cfg, w), omega0, h);
    let q = 1.0 - p;
    k * (d2 / p - d1 * d1 / (p * p)) - (n - k) * (d2 / q + d1 * d1 / (q * q))
}

/// Score of the binomial record with respect to `P1`: `n (xbar - P1) / (P1 (1 - P1))`.
pub fn score_p1(data: &Dataset, p1: f64) -> f64 {
    let (n, k) = (data.n as f64, data.k as f64);
    (k - n * p1) / (p1 * (1.0 - p1))
}
