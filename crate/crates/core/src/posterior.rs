//! Bayesian layer: posterior over `omega0`, MMSE and MAP estimates, and the
//! prior-averaged Fisher information.
//!
//! Every integral runs over the prior's support window with the integrand
//! shifted by the largest log value found on a dense grid, so large counts do
//! not underflow. Panel breakpoints are placed at the features of the
//! detection probability and around each posterior peak.

use crate::dynamics::{self, FieldConfig};
use crate::error::{Error, Result};
use crate::fisher;
use crate::frequentist::{bernoulli_log_lik, Dataset};
use crate::numerics::{self, Bracket, Tolerance};
use crate::priors::{panel_breaks, Prior};
use serde::{Deserialize, Serialize};

/// Photon counts allowing a real-valued `k`, so curves can be traced at
/// `k = n * xbar` for any `xbar`. `n = 0` means no data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub n: f64,
    pub k: f64,
}

impl Counts {
    pub fn new(n: f64, k: f64) -> Result<Self> {
        if !(n >= 0.0 && n.is_finite() && k >= 0.0 && k <= n) {
            return Err(Error::InvalidConfig(format!("counts need 0 <= k <= n < inf (got n = {n}, k = {k})")));
        }
        Ok(Self { n, k })
    }

    pub fn from_xbar(n: f64, xbar: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xbar) {
            return Err(Error::Domain(format!("xbar must lie in [0, 1] (got {xbar})")));
        }
        Self::new(n, n * xbar)
    }

    /// `k / n`, NaN without data.
    pub fn xbar(&self) -> f64 {
        if self.n > 0.0 {
            self.k / self.n
        } else {
            f64::NAN
        }
    }
}

impl From<Dataset> for Counts {
    fn from(d: Dataset) -> Self {
        Self { n: d.n as f64, k: d.k as f64 }
    }
}

/// Everything that defines a posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSpec {
    pub data: Counts,
    pub cfg: FieldConfig,
    pub prior: Prior,
    pub quad_tol: Tolerance,
}

impl PosteriorSpec {
    pub fn new(data: impl Into<Counts>, cfg: FieldConfig, prior: Prior) -> Self {
        let quad_tol = Tolerance { abs_tol: 1e-10, rel_tol: 1e-10, ..Tolerance::quadrature() };
        Self { data: data.into(), cfg, prior, quad_tol }
    }

    /// Log-likelihood (without the binomial constant) plus the log of the
    /// window-renormalized prior.
    pub fn log_unnormalized(&self, omega0: f64) -> f64 {
        let lp = self.prior.log_window_density(omega0);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        let p = dynamics::prob_detect(&self.cfg, omega0);
        bernoulli_log_lik(self.data.n, self.data.k, p) + lp
    }

    /// Derivative of [`PosteriorSpec::log_unnormalized`] at an interior point.
    pub fn dlog_unnormalized(&self, omega0: f64) -> Result<f64> {
        let dp = dynamics::dprob_domega0(&self.cfg, omega0);
        let p = dynamics::prob_detect(&self.cfg, omega0);
        let Counts { n, k } = self.data;
        let mut lik = 0.0;
        if k > 0.0 {
            lik += k / p;
        }
        if n - k > 0.0 {
            lik -= (n - k) / (1.0 - p);
        }
        Ok(dp * lik + self.prior.dlog_density(omega0)?)
    }
}

const PRE_GRID: usize = 4001;
/// Grid nodes whose shifted log integrand is above this contribute breakpoints.
const SIGNIFICANT: f64 = -60.0;

/// A posterior with its log evidence computed once.
#[derive(Debug, Clone)]
pub struct Posterior {
    spec: PosteriorSpec,
    shift: f64,
    breaks: Vec<f64>,
    /// Breakpoints where `p` is 0 or 1: the likelihood has a cusp there for fractional counts.
    singular: Vec<f64>,
    log_evidence: f64,
}

impl Posterior {
    pub fn new(spec: PosteriorSpec) -> Result<Self> {
        let w = spec.prior.window();
        let f = |x: f64| spec.log_unnormalized(x);
        let grid = numerics::linspace(w.lower, w.upper, PRE_GRID);
        let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        let mut shift = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut breaks = panel_breaks(&spec.cfg, w.lower, w.upper, 64);
        // peaks narrower than the grid: refine each and bracket it by its width
        let peaks = numerics::local_maxima(f, w.lower, w.upper, PRE_GRID, Tolerance::maximize())?;
        for m in peaks.iter().filter(|m| m.value.is_finite()) {
            shift = shift.max(m.value);
            let h = 1e-4 * m.x.abs().max(1.0);
            let curv = (f(m.x + h) - 2.0 * m.value + f(m.x - h)) / (h * h);
            if curv < 0.0 && curv.is_finite() {
                let sd = (-1.0 / curv).sqrt();
                breaks.extend((-12..=12).map(|j| m.x + j as f64 * sd));
            }
            breaks.push(m.x);
        }
        if !shift.is_finite() {
            return Err(Error::EvidenceUnderflow);
        }
        let step = grid[1] - grid[0];
        for (i, &v) in vals.iter().enumerate() {
            if v - shift > SIGNIFICANT {
                breaks.push(grid[i] - 0.5 * step);
                breaks.push(grid[i] + 0.5 * step);
            }
        }
        breaks.retain(|x| *x >= w.lower && *x <= w.upper);
        breaks.push(w.lower);
        breaks.push(w.upper);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1.0));

        let singular = breaks
            .iter()
            .copied()
            .filter(|&x| {
                let p = dynamics::prob_detect(&spec.cfg, x);
                p < 1e-20 || 1.0 - p < 1e-12
            })
            .collect();
        let mut post = Self { spec, shift, breaks, singular, log_evidence: 0.0 };
        let z = post.integrate_shifted(|_| 1.0)?;
        if !(z > 0.0) {
            return Err(Error::EvidenceUnderflow);
        }
        post.log_evidence = shift + z.ln();
        Ok(post)
    }

    pub fn spec(&self) -> &PosteriorSpec {
        &self.spec
    }

    /// Log of the evidence (without the binomial constant).
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    pub fn log_density(&self, omega0: f64) -> f64 {
        self.spec.log_unnormalized(omega0) - self.log_evidence
    }

    /// `integral of g(omega0) * exp(log_unnormalized - shift)` over the window.
    fn integrate_shifted<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let shift = self.shift;
        numerics::integrate_panels_graded(
            |x| {
                let l = self.spec.log_unnormalized(x);
                if l == f64::NEG_INFINITY {
                    0.0
                } else {
                    g(x) * (l - shift).exp()
                }
            },
            &self.breaks,
            &self.singular,
            self.spec.quad_tol,
        )
    }

    /// Posterior expectation of `g`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let z = (self.log_evidence - self.shift).exp();
        Ok(self.integrate_shifted(g)? / z)
    }

    /// Posterior mean.
    pub fn mean(&self) -> Result<f64> {
        let w = self.spec.prior.window();
        Ok(self.expect(|x| x)?.clamp(w.lower, w.upper))
    }

    /// Posterior expected squared loss of the point estimate `a`.
    pub fn expected_loss(&self, a: f64) -> Result<f64> {
        self.expect(|x| (x - a) * (x - a))
    }
}

/// Log posterior density at `omega0`.
pub fn posterior_log_density(spec: &PosteriorSpec, omega0: f64) -> Result<f64> {
    let w = spec.prior.window();
    if !w.contains(omega0) {
        return Err(Error::Domain(format!("omega0 = {omega0} outside [{}, {}]", w.lower, w.upper)));
    }
    Ok(Posterior::new(spec.clone())?.log_density(omega0))
}

/// Minimum mean-square-error estimate: the posterior mean.
pub fn mmse(spec: &PosteriorSpec) -> Result<f64> {
    Posterior::new(spec.clone())?.mean()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapMaximum {
    pub value: f64,
    pub log_posterior: f64,
    /// Central second difference of the log posterior; NaN on the boundary.
    pub second_derivative: f64,
    pub boundary: bool,
    /// `|g(value) - xbar|` for the stationarity form `g`; NaN when undefined.
    pub stationarity_residual: f64,
    /// `|second_derivative| < 1e-8`: the second-order test cannot decide.
    pub inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub maxima: Vec<MapMaximum>,
}

impl MapResult {
    pub fn interior(&self) -> impl Iterator<Item = &MapMaximum> {
        self.maxima.iter().filter(|m| !m.boundary)
    }

    /// Highest maximum.
    pub fn global(&self) -> Option<&MapMaximum> {
        self.maxima.iter().max_by(|a, b| a.log_posterior.total_cmp(&b.log_posterior))
    }
}

/// Left side of the MAP stationarity equation written as `g(omega0) = xbar`:
/// `g = p - (1/n) dlog_prior p (1 - p) / p'`.
///
/// NaN where `p' = 0`, without data, or outside the open window.
pub fn stationarity_lhs(cfg: &FieldConfig, prior: &Prior, n: f64, omega0: f64) -> f64 {
    let p = dynamics::prob_detect(cfg, omega0);
    let dp = dynamics::dprob_domega0(cfg, omega0);
    if dp == 0.0 || !(n > 0.0) {
        return f64::NAN;
    }
    let Ok(dl) = prior.dlog_density(omega0) else { return f64::NAN };
    p - dl * p * (1.0 - p) / (n * dp)
}

/// All local maxima of the posterior on its window.
pub fn map(spec: &PosteriorSpec, grid_points: usize) -> Result<MapResult> {
    if grid_points < 101 {
        return Err(Error::Domain(format!("map needs at least 101 grid points (got {grid_points})")));
    }
    let w = spec.prior.window();
    let f = |x: f64| spec.log_unnormalized(x);
    let found = numerics::local_maxima(f, w.lower, w.upper, grid_points, Tolerance::maximize())?;
    let log_evidence = Posterior::new(spec.clone())?.log_evidence();
    let cell = w.width() / (grid_points - 1) as f64;

    let mut maxima = Vec::with_capacity(found.len());
    for m in found {
        if !m.value.is_finite() {
            continue;
        }
        if m.boundary {
            maxima.push(MapMaximum {
                value: m.x,
                log_posterior: m.value - log_evidence,
                second_derivative: f64::NAN,
                boundary: true,
                stationarity_residual: f64::NAN,
                inconclusive: false,
            });
            continue;
        }
        let x = polish_stationary(spec, m.x, cell).filter(|&r| f(r) >= m.value - 1e-12 * m.value.abs().max(1.0));
        let x = x.unwrap_or(m.x);
        let h = 1e-4 * x.abs().max(1.0);
        let (lo, hi) = (x - h, x + h);
        let second = if lo > w.lower && hi < w.upper {
            (f(hi) - 2.0 * f(x) + f(lo)) / (h * h)
        } else {
            f64::NAN
        };
        let xbar = spec.data.xbar();
        let residual = (stationarity_lhs(&spec.cfg, &spec.prior, spec.data.n, x) - xbar).abs();
        maxima.push(MapMaximum {
            value: x,
            log_posterior: f(x) - log_evidence,
            second_derivative: second,
            boundary: false,
            stationarity_residual: residual,
            inconclusive: second.abs() < 1e-8,
        });
    }
    Ok(MapResult { maxima })
}

/// Root of the analytic log-posterior derivative next to `x`, searched in
/// brackets growing from `1e-9 * scale` up to one grid cell.
fn polish_stationary(spec: &PosteriorSpec, x: f64, cell: f64) -> Option<f64> {
    let w = spec.prior.window();
    let d = |t: f64| spec.dlog_unnormalized(t).unwrap_or(f64::NAN);
    let mut half = 1e-9 * x.abs().max(1.0);
    while half <= cell {
        let (a, b) = ((x - half).max(w.lower), (x + half).min(w.upper));
        let (da, db) = (d(a), d(b));
        if da > 0.0 && db < 0.0 {
            let br = Bracket::new(a, b).ok()?;
            return numerics::find_root_bracketed(d, br, Tolerance::root()).ok();
        }
        if a <= w.lower || b >= w.upper {
            return None;
        }
        half *= 4.0;
    }
    None
}

/// Prior-averaged Fisher information for `n` measurements, each term per
/// measurement: `integral(F p) + I / n` and likewise for the QFI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFisher {
    pub bayes_cfi: f64,
    pub bayes_qfi: f64,
    pub bayes_gap: f64,
    /// Fisher information of the prior itself.
    pub prior_fisher: f64,
}

pub fn bayes_fisher(cfg: &FieldConfig, prior: &Prior, n: u64) -> Result<BayesFisher> {
    if n == 0 {
        return Err(Error::Domain("bayes_fisher needs n >= 1".into()));
    }
    let prior = prior.with_field(*cfg)?;
    let w = prior.window();
    let breaks = panel_breaks(cfg, w.lower, w.upper, 64);
    let tol = Tolerance { abs_tol: 1e-12, rel_tol: 1e-10, ..Tolerance::quadrature() };
    let dens = |x: f64| prior.log_window_density(x).exp();
    let avg_cfi = numerics::integrate_panels(|x| fisher::cfi(cfg, x).unwrap_or(0.0) * dens(x), &breaks, tol)?;
    let avg_qfi = numerics::integrate_panels(|x| fisher::qfi(cfg, x) * dens(x), &breaks, tol)?;
    let avg_gap = numerics::integrate_panels(
        |x| (fisher::qfi(cfg, x) - fisher::cfi(cfg, x).unwrap_or(0.0)) * dens(x),
        &breaks,
        tol,
    )?;
    let i = prior.prior_fisher()?;
    let n = n as f64;
    Ok(BayesFisher { bayes_cfi: avg_cfi + i / n, bayes_qfi: avg_qfi + i / n, bayes_gap: avg_gap, prior_fisher: i })
}

/// Van Trees lower bound on the Bayesian mean-square error for `n`
/// measurements: `1 / (n integral(F p) + I)`.
pub fn van_trees_bound(cfg: &FieldConfig, prior: &Prior, n: u64) -> Result<f64> {
    let bf = bayes_fisher(cfg, prior, n)?;
    Ok(1.0 / (n as f64 * bf.bayes_cfi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequentist::ml_estimate;
    use crate::priors::SupportWindow;
    use std::f64::consts::FRAC_PI_2;

    fn unit_drive() -> FieldConfig {
        FieldConfig::new(1.0, 1.0, FRAC_PI_2).unwrap()
    }

    fn wide() -> SupportWindow {
        SupportWindow::new(0.1, 100.0).unwrap()
    }

    #[test]
    fn no_data_posterior_is_prior() {
        let w = SupportWindow::new(1.5, 5.0).unwrap();
        let spec = PosteriorSpec::new(Counts::new(0.0, 0.0).unwrap(), unit_drive(), Prior::uniform(w));
        let post = Posterior::new(spec).unwrap();
        assert!((post.log_density(2.0) - (1.0f64 / 3.5).ln()).abs() < 1e-9);
        assert!((post.mean().unwrap() - 3.25).abs() < 1e-9);
    }

    #[test]
    fn normalization_unit_drive() {
        let spec = PosteriorSpec::new(Dataset::new(8, 4).unwrap(), unit_drive(), Prior::uniform(wide()));
        let post = Posterior::new(spec).unwrap();
        let total = post.expect(|_| 1.0).unwrap();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn single_photon_flat_prior_is_likelihood() {
        let w = SupportWindow::new(1.5, 5.0).unwrap();
        let spec = PosteriorSpec::new(Dataset::new(1, 1).unwrap(), unit_drive(), Prior::uniform(w));
        let post = Posterior::new(spec).unwrap();
        let ratio = post.log_density(2.0) - post.log_density(3.0);
        let p = |x| dynamics::prob_detect(&unit_drive(), x);
        assert!((ratio - (p(2.0) / p(3.0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_no_data_mean() {
        let prior = Prior::gaussian(wide(), 10.0, 2.0).unwrap();
        let spec = PosteriorSpec::new(Counts::new(0.0, 0.0).unwrap(), unit_drive(), prior);
        assert!((mmse(&spec).unwrap() - 10.0).abs() < 1e-3);
    }

    #[test]
    fn gaussian_zero_counts_near_prior_mean() {
        let prior = Prior::gaussian(wide(), 10.0, 2.0).unwrap();
        let spec = PosteriorSpec::new(Dataset::new(8, 0).unwrap(), unit_drive(), prior);
        let m = mmse(&spec).unwrap();
        assert!((m - 10.0).abs() <= 1.0, "{m}");
    }

    #[test]
    fn sharp_posterior_is_normalized() {
        let cfg = unit_drive();
        let p = dynamics::prob_detect(&cfg, 3.0);
        let spec = PosteriorSpec::new(Counts::from_xbar(1e5, p).unwrap(), cfg, Prior::gaussian(wide(), 10.0, 2.0).unwrap());
        let post = Posterior::new(spec).unwrap();
        assert!((post.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn map_uniform_matches_ml() {
        let cfg = unit_drive();
        let w = SupportWindow::new(0.1, 6.0).unwrap();
        let data = Dataset::new(20, 7).unwrap();
        let spec = PosteriorSpec::new(data, cfg, Prior::uniform(w));
        let res = map(&spec, 2001).unwrap();
        let ml: Vec<f64> = ml_estimate(0.35, &cfg).unwrap().accepted().filter(|x| w.contains(*x)).collect();
        let interior: Vec<f64> = res.interior().map(|m| m.value).collect();
        assert_eq!(interior.len(), ml.len(), "{interior:?} vs {ml:?}");
        for (a, b) in interior.iter().zip(&ml) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        for m in res.interior() {
            assert!(m.second_derivative < 0.0);
            assert!(m.stationarity_residual < 1e-9);
        }
    }

    #[test]
    fn map_gaussian_has_multiple_maxima() {
        let cfg = unit_drive();
        let prior = Prior::gaussian(wide(), 10.0, 2.0).unwrap();
        let spec = PosteriorSpec::new(Counts::from_xbar(8.0, 0.05).unwrap(), cfg, prior);
        let res = map(&spec, 2001).unwrap();
        assert!(res.interior().count() >= 2, "{:?}", res.maxima);
    }

    #[test]
    fn bayes_fisher_collapsed_window() {
        let cfg = unit_drive();
        let w = SupportWindow::new(2.0 - 5e-5, 2.0 + 5e-5).unwrap();
        let bf = bayes_fisher(&cfg, &Prior::uniform(w), 10).unwrap();
        let f = fisher::cfi(&cfg, 2.0).unwrap();
        assert!((bf.bayes_cfi - f).abs() < 1e-3 * f);
        assert!((bf.bayes_gap - (bf.bayes_qfi - bf.bayes_cfi)).abs() < 1e-9);
    }

    #[test]
    fn bayes_fisher_gaussian_prior_term() {
        let cfg = unit_drive();
        let prior = Prior::gaussian(wide(), 10.0, 2.0).unwrap();
        let a = bayes_fisher(&cfg, &prior, 100).unwrap();
        let b = bayes_fisher(&cfg, &prior, 1_000_000).unwrap();
        assert!((a.bayes_cfi - b.bayes_cfi - 0.25 * (1e-2 - 1e-6)).abs() < 1e-12);
    }

    #[test]
    fn stationarity_lhs_uniform_is_p() {
        let cfg = unit_drive();
        let w = SupportWindow::new(0.5, 6.0).unwrap();
        let g = stationarity_lhs(&cfg, &Prior::uniform(w), 10.0, 2.5);
        assert!((g - dynamics::prob_detect(&cfg, 2.5)).abs() < 1e-15);
    }
}
