//! Priors over the transition frequency: uniform, Jeffreys and Gaussian.
//!
//! A [`Prior`] is immutable once built. The Jeffreys prior depends on the
//! drive, so it carries its [`FieldConfig`] and caches the normalizer of
//! `sqrt(CFI)` over the support window at construction.

use crate::dynamics::{self, FieldConfig};
use crate::error::{Error, Result};
use crate::fisher::{self, PROB_GUARD};
use crate::numerics::{self, Tolerance};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Support `[lower, upper]` of the transition frequency, `0 < lower < upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportWindow {
    pub lower: f64,
    pub upper: f64,
}

impl SupportWindow {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower < upper && upper.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "support window needs 0 < lower < upper < inf (got [{lower}, {upper}])"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Uniform,
    Jeffreys,
    Gaussian,
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PriorKind::Uniform => "uniform",
            PriorKind::Jeffreys => "jeffreys",
            PriorKind::Gaussian => "gaussian",
        })
    }
}

impl std::str::FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(PriorKind::Uniform),
            "jeffreys" => Ok(PriorKind::Jeffreys),
            "gaussian" => Ok(PriorKind::Gaussian),
            other => Err(Error::InvalidConfig(format!("unknown prior kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Uniform,
    Jeffreys {
        field: FieldConfig,
        normalizer: f64,
        /// Cumulative distribution tabulated on a uniform grid, for sampling.
        cdf: Vec<f64>,
    },
    Gaussian {
        mean: f64,
        sigma: f64,
        /// Probability mass of the untruncated Gaussian inside the window.
        mass: f64,
    },
}

/// A prior density over `omega0` with its support window.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    window: SupportWindow,
    repr: Repr,
}

const JEFFREYS_CDF_POINTS: usize = 8193;
/// Mean of `sqrt(CFI)` over the window below which the Jeffreys prior is
/// treated as having no support.
const DEGENERATE_MEAN: f64 = 1e-8;

impl Prior {
    pub fn uniform(window: SupportWindow) -> Self {
        Self { window, repr: Repr::Uniform }
    }

    pub fn gaussian(window: SupportWindow, mean: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) || !mean.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "gaussian prior needs finite mean and sigma > 0 (got {mean}, {sigma})"
            )));
        }
        let mass = normal_mass(mean, sigma, window.lower, window.upper);
        if !(mass > 0.0) {
            return Err(Error::DegenerateSupport { normalizer: mass, lower: window.lower, upper: window.upper });
        }
        Ok(Self { window, repr: Repr::Gaussian { mean, sigma, mass } })
    }

    pub fn jeffreys(field: FieldConfig, window: SupportWindow) -> Result<Self> {
        let normalizer = jeffreys_normalizer(&field, &window)?;
        let cdf = tabulate_cdf(&field, &window);
        Ok(Self { window, repr: Repr::Jeffreys { field, normalizer, cdf } })
    }

    /// The same prior for a different drive; only the Jeffreys prior changes.
    pub fn with_field(&self, field: FieldConfig) -> Result<Self> {
        match &self.repr {
            Repr::Jeffreys { .. } => Self::jeffreys(field, self.window),
            _ => Ok(self.clone()),
        }
    }

    pub fn kind(&self) -> PriorKind {
        match self.repr {
            Repr::Uniform => PriorKind::Uniform,
            Repr::Jeffreys { .. } => PriorKind::Jeffreys,
            Repr::Gaussian { .. } => PriorKind::Gaussian,
        }
    }

    pub fn window(&self) -> SupportWindow {
        self.window
    }

    pub fn mean(&self) -> Option<f64> {
        match self.repr {
            Repr::Gaussian { mean, .. } => Some(mean),
            _ => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self.repr {
            Repr::Gaussian { sigma, .. } => Some(sigma),
            _ => None,
        }
    }

    pub fn field(&self) -> Option<FieldConfig> {
        match self.repr {
            Repr::Jeffreys { field, .. } => Some(field),
            _ => None,
        }
    }

    /// Cached `integral of sqrt(CFI)` over the window (Jeffreys only).
    pub fn normalizer(&self) -> Option<f64> {
        match self.repr {
            Repr::Jeffreys { normalizer, .. } => Some(normalizer),
            _ => None,
        }
    }

    /// Natural log of the prior density.
    ///
    /// Uniform and Jeffreys are `-inf` outside the window. The Gaussian is the
    /// untruncated density on the whole line; see [`Prior::log_window_density`]
    /// for the version renormalized to the window.
    pub fn log_density(&self, omega0: f64) -> f64 {
        match &self.repr {
            Repr::Uniform => {
                if self.window.contains(omega0) {
                    -self.window.width().ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Repr::Jeffreys { field, normalizer, .. } => {
                if !self.window.contains(omega0) {
                    return f64::NEG_INFINITY;
                }
                match fisher::cfi(field, omega0) {
                    Ok(f) => 0.5 * f.ln() - normalizer.ln(),
                    Err(_) => f64::NEG_INFINITY,
                }
            }
            Repr::Gaussian { mean, sigma, .. } => {
                let z = (omega0 - mean) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
            }
        }
    }

    /// Log density of the prior restricted to its window and renormalized there.
    pub fn log_window_density(&self, omega0: f64) -> f64 {
        if !self.window.contains(omega0) {
            return f64::NEG_INFINITY;
        }
        match &self.repr {
            Repr::Gaussian { mass, .. } => self.log_density(omega0) - mass.ln(),
            _ => self.log_density(omega0),
        }
    }

    /// Derivative of [`Prior::log_density`] with respect to `omega0`.
    ///
    /// Closed form for uniform and Gaussian; a central difference of the log
    /// density for Jeffreys.
    pub fn dlog_density(&self, omega0: f64) -> Result<f64> {
        let w = self.window;
        if !(omega0 > w.lower && omega0 < w.upper) {
            return Err(Error::Domain(format!(
                "dlog_density needs omega0 strictly inside [{}, {}] (got {omega0})",
                w.lower, w.upper
            )));
        }
        Ok(match &self.repr {
            Repr::Uniform => 0.0,
            Repr::Gaussian { mean, sigma, .. } => -(omega0 - mean) / (sigma * sigma),
            Repr::Jeffreys { .. } => {
                let room = (omega0 - w.lower).min(w.upper - omega0);
                let h = numerics::default_step(omega0).min(0.5 * room);
                numerics::central_diff(|x| self.log_density(x), omega0, h)
            }
        })
    }

    /// Fisher information of the prior itself.
    ///
    /// Uniform gives 0 and the Gaussian its untruncated `1/sigma^2`. For the
    /// Jeffreys prior the integrand behaves like `1/|x|` next to every
    /// interior zero of the CFI, so the information is `+inf` whenever the
    /// window contains one; otherwise it is computed by quadrature.
    pub fn prior_fisher(&self) -> Result<f64> {
        match &self.repr {
            Repr::Uniform => Ok(0.0),
            Repr::Gaussian { sigma, .. } => Ok(1.0 / (sigma * sigma)),
            Repr::Jeffreys { field, .. } => {
                let w = self.window;
                let interior_zero = dynamics::feature_points(field, w.lower, w.upper)
                    .into_iter()
                    .any(|x| {
                        let p = dynamics::prob_detect(field, x);
                        p > PROB_GUARD && 1.0 - p > PROB_GUARD
                    });
                if interior_zero {
                    return Ok(f64::INFINITY);
                }
                let breaks = panel_breaks(field, w.lower, w.upper, 32);
                let tol = Tolerance { abs_tol: 1e-9, rel_tol: 1e-8, ..Tolerance::quadrature() };
                numerics::integrate_panels(
                    |x| {
                        let inner = x.clamp(w.lower + 1e-9, w.upper - 1e-9);
                        let d = self.dlog_density(inner).unwrap_or(0.0);
                        d * d * self.log_density(x).exp()
                    },
                    &breaks,
                    tol,
                )
            }
        }
    }

    /// Draws `omega0` from the window-restricted prior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = self.window;
        match &self.repr {
            Repr::Uniform => w.lower + rng.random::<f64>() * w.width(),
            Repr::Gaussian { mean, sigma, mass } => {
                if *mass > 1e-3 {
                    let normal = Normal::new(*mean, *sigma).expect("sigma validated at construction");
                    loop {
                        let x = normal.sample(rng);
                        if w.contains(x) {
                            return x;
                        }
                    }
                }
                // tiny in-window mass: inverse CDF by bisection
                let u: f64 = rng.random();
                let (mut lo, mut hi) = (w.lower, w.upper);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    let f = normal_mass(*mean, *sigma, w.lower, mid) / mass;
                    if f < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
            Repr::Jeffreys { cdf, .. } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c < u).clamp(1, cdf.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let step = w.width() / (cdf.len() - 1) as f64;
                let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                w.lower + step * ((i - 1) as f64 + frac)
            }
        }
    }
}

/// Mass of `N(mean, sigma^2)` on `[a, b]`, taken from the tail nearer the
/// interval so it does not cancel.
fn normal_mass(mean: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let za = (a - mean) / (sigma * SQRT_2);
    let zb = (b - mean) / (sigma * SQRT_2);
    if za >= 0.0 {
        0.5 * (erfc(za) - erfc(zb))
    } else if zb <= 0.0 {
        0.5 * (erfc(-zb) - erfc(-za))
    } else {
        1.0 - 0.5 * (erfc(-za) + erfc(zb))
    }
}

/// Panel breakpoints over `[lo, hi]`: the endpoints, the interior feature
/// points of the detection probability, and a uniform split into at least
/// `min_panels` pieces.
pub(crate) fn panel_breaks(field: &FieldConfig, lo: f64, hi: f64, min_panels: usize) -> Vec<f64> {
    let mut breaks = numerics::linspace(lo, hi, min_panels.max(1) + 1);
    breaks.extend(dynamics::feature_points(field, lo, hi));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));
    breaks
}

/// Integral of `sqrt(CFI)` over the window.
pub fn jeffreys_normalizer(field: &FieldConfig, window: &SupportWindow) -> Result<f64> {
    let breaks = panel_breaks(field, window.lower, window.upper, 32);
    let z = numerics::integrate_panels(
        |x| fisher::cfi(field, x).map(f64::sqrt).unwrap_or(0.0),
        &breaks,
        Tolerance::quadrature(),
    )?;
    if !(z / window.width() > DEGENERATE_MEAN) {
        return Err(Error::DegenerateSupport { normalizer: z, lower: window.lower, upper: window.upper });
    }
    Ok(z)
}

fn tabulate_cdf(field: &FieldConfig, window: &SupportWindow) -> Vec<f64> {
    let xs = numerics::linspace(window.lower, window.upper, JEFFREYS_CDF_POINTS);
    let ys: Vec<f64> = xs.iter().map(|&x| fisher::cfi(field, x).map(f64::sqrt).unwrap_or(0.0)).collect();
    let mut cdf = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    cdf.push(0.0);
    for i in 1..xs.len() {
        acc += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
        cdf.push(acc);
    }
    let total = acc.max(f64::MIN_POSITIVE);
    cdf.iter_mut().for_each(|c| *c /= total);
    cdf
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn unit_drive() -> FieldConfig {
        FieldConfig::new(1.0, 1.0, FRAC_PI_2).unwrap()
    }

    #[test]
    fn window_validation() {
        assert!(SupportWindow::new(0.0, 1.0).is_err());
        assert!(SupportWindow::new(2.0, 1.0).is_err());
        assert!(SupportWindow::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn uniform_log_density() {
        let p = Prior::uniform(SupportWindow::new(1.5, 5.0).unwrap());
        assert!((p.log_density(3.0) - (1.0f64 / 3.5).ln()).abs() < 1e-15);
        assert_eq!(p.log_density(6.0), f64::NEG_INFINITY);
        for x in [1.6, 3.0, 4.9] {
            assert_eq!(p.dlog_density(x).unwrap(), 0.0);
        }
        assert!(p.dlog_density(1.5).is_err());
        assert_eq!(p.prior_fisher().unwrap(), 0.0);
    }

    #[test]
    fn gaussian_log_density_and_fisher() {
        let w = SupportWindow::new(0.1, 100.0).unwrap();
        let p = Prior::gaussian(w, 10.0, 2.0).unwrap();
        assert_eq!(p.dlog_density(10.0).unwrap(), 0.0);
        assert!((p.dlog_density(12.0).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(p.prior_fisher().unwrap(), 0.25);
        assert!(Prior::gaussian(w, 10.0, 0.0).is_err());
        // window mass of N(10, 2) on [0.1, 100] is 1 to double precision
        let m = numerics::integrate(|x| p.log_window_density(x).exp(), 0.1, 100.0, Tolerance::quadrature()).unwrap();
        assert!((m - 1.0).abs() < 1e-8);
    }

    #[test]
    fn jeffreys_density_matches_cfi() {
        let w = SupportWindow::new(0.1, 100.0).unwrap();
        let f = unit_drive();
        let p = Prior::jeffreys(f, w).unwrap();
        let z = p.normalizer().unwrap();
        let expected = 0.5 * fisher::cfi(&f, 2.0).unwrap().ln() - z.ln();
        assert!((p.log_density(2.0) - expected).abs() < 1e-14);
        assert_eq!(p.log_density(200.0), f64::NEG_INFINITY);
        let mass = numerics::integrate_panels(
            |x| p.log_density(x).exp(),
            &panel_breaks(&f, 0.1, 100.0, 32),
            Tolerance::quadrature(),
        )
        .unwrap();
        assert!((mass - 1.0).abs() < 1e-8);
    }

    #[test]
    fn jeffreys_degenerate_window() {
        let w = SupportWindow::new(1.0 - 1e-9, 1.0 + 1e-9).unwrap();
        assert!(matches!(Prior::jeffreys(unit_drive(), w), Err(Error::DegenerateSupport { .. })));
    }

    #[test]
    fn jeffreys_normalizer_monotone_in_window() {
        let f = unit_drive();
        let mut prev = 0.0;
        for upper in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let z = jeffreys_normalizer(&f, &SupportWindow::new(0.5, upper).unwrap()).unwrap();
            assert!(z >= prev);
            prev = z;
        }
    }

    #[test]
    fn jeffreys_prior_fisher_diverges_across_cfi_zero() {
        let p = Prior::jeffreys(unit_drive(), SupportWindow::new(0.1, 100.0).unwrap()).unwrap();
        assert_eq!(p.prior_fisher().unwrap(), f64::INFINITY);
        let p = Prior::jeffreys(unit_drive(), SupportWindow::new(1.5, 5.0).unwrap()).unwrap();
        let i = p.prior_fisher().unwrap();
        assert!(i.is_finite() && i > 0.0);
    }

    #[test]
    fn samples_stay_in_window() {
        let w = SupportWindow::new(1.5, 5.0).unwrap();
        let priors = [
            Prior::uniform(w),
            Prior::gaussian(w, 3.0, 1.0).unwrap(),
            Prior::gaussian(w, 9.0, 1.0).unwrap(),
            Prior::jeffreys(unit_drive(), w).unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in &priors {
            let xs: Vec<f64> = (0..2000).map(|_| p.sample(&mut rng)).collect();
            assert!(xs.iter().all(|&x| w.contains(x)), "{:?}", p.kind());
        }
        let mean: f64 = (0..20000).map(|_| priors[0].sample(&mut rng)).sum::<f64>() / 20000.0;
        assert!((mean - 3.25).abs() < 0.03);
    }

    #[test]
    fn kind_round_trip() {
        for k in [PriorKind::Uniform, PriorKind::Jeffreys, PriorKind::Gaussian] {
            assert_eq!(k.to_string().parse::<PriorKind>().unwrap(), k);
        }
        assert!("beta".parse::<PriorKind>().is_err());
    }
}
