//! Seeded simulation of photon-count records and estimator trials.
//!
//! Trial `i` draws from a ChaCha8 generator seeded with the run seed and
//! switched to stream `i`, so datasets do not depend on scheduling. Moments
//! are reduced by pairwise summation in trial-index order.

use crate::dynamics::{self, FieldConfig};
use crate::error::{Error, Result};
use crate::fisher;
use crate::frequentist::{self, Ambiguity, Dataset};
use crate::numerics::pairwise_sum;
use crate::posterior::{self, PosteriorSpec};
use crate::priors::Prior;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Name of the generator recorded in reports.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), seed_from_u64(seed), stream = trial index";

/// MAP grid used inside trials.
const MAP_GRID: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Ml,
    Mmse,
    Map,
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml" => Ok(Estimator::Ml),
            "mmse" => Ok(Estimator::Mmse),
            "map" => Ok(Estimator::Map),
            other => Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub cfg: FieldConfig,
    pub omega0_true: f64,
    /// Gate windows per dataset.
    pub n: u64,
    /// Number of datasets.
    pub trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Required for MMSE and MAP.
    pub prior: Option<Prior>,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig("n and trials must be at least 1".into()));
        }
        if !(self.omega0_true > 0.0 && self.omega0_true.is_finite()) {
            return Err(Error::InvalidConfig(format!("omega0_true must be positive (got {})", self.omega0_true)));
        }
        if self.estimator != Estimator::Ml && self.prior.is_none() {
            return Err(Error::InvalidConfig("MMSE and MAP trials need a prior".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub mean_estimate: f64,
    pub bias: f64,
    /// Sample variance (divisor `m - 1`) over the included trials.
    pub variance: f64,
    /// `1 / (n cfi(omega0_true))`.
    pub crb: f64,
    pub vantrees_bound: Option<f64>,
    pub included: usize,
    pub degenerate_count: usize,
    pub ambiguous_count: usize,
    /// Mean of `k / n` over every trial, included or not.
    pub mean_xbar: f64,
    pub rng: String,
}

/// Generator for one trial.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_counts<R: Rng + ?Sized>(p: f64, n: u64, rng: &mut R) -> Dataset {
    let k = (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
    Dataset { n, k }
}

/// `n` Bernoulli draws at the detection probability of `omega0_true`.
pub fn simulate_dataset(cfg: &FieldConfig, omega0_true: f64, n: u64, seed: u64, stream: u64) -> Dataset {
    simulate_dataset_at(cfg, omega0_true, 1.0, n, seed, stream)
}

/// As [`simulate_dataset`] for a gate of length `t`.
pub fn simulate_dataset_at(cfg: &FieldConfig, omega0_true: f64, t: f64, n: u64, seed: u64, stream: u64) -> Dataset {
    let p = dynamics::prob_detect_at(cfg, omega0_true, t);
    draw_counts(p, n, &mut trial_rng(seed, stream))
}

enum Outcome {
    Estimate(f64),
    Degenerate,
    Ambiguous,
}

fn estimate(tc: &TrialConfig, data: Dataset) -> Outcome {
    match tc.estimator {
        Estimator::Ml => {
            let xbar = data.k as f64 / data.n as f64;
            match frequentist::ml_estimate(xbar, &tc.cfg) {
                Ok(r) if r.ambiguity == Ambiguity::Ambiguous => Outcome::Ambiguous,
                Ok(r) => r.unique().map_or(Outcome::Degenerate, Outcome::Estimate),
                Err(_) => Outcome::Degenerate,
            }
        }
        Estimator::Mmse | Estimator::Map => {
            let prior = tc.prior.clone().expect("validated");
            let spec = PosteriorSpec::new(data, tc.cfg, prior);
            let value = if tc.estimator == Estimator::Mmse {
                posterior::mmse(&spec).ok()
            } else {
                posterior::map(&spec, MAP_GRID).ok().and_then(|m| m.global().map(|g| g.value))
            };
            value.map_or(Outcome::Degenerate, Outcome::Estimate)
        }
    }
}

fn sample_moments(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = pairwise_sum(values) / m;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if values.len() > 1 { pairwise_sum(&sq) / (m - 1.0) } else { 0.0 };
    (mean, var)
}

/// Repeats simulate-then-estimate at a fixed true frequency.
pub fn run_trials(tc: &TrialConfig) -> Result<TrialReport> {
    tc.validate()?;
    let results: Vec<(f64, Outcome)> = (0..tc.trials)
        .into_par_iter()
        .map(|i| {
            let data = simulate_dataset(&tc.cfg, tc.omega0_true, tc.n, tc.seed, i as u64);
            (data.k as f64 / data.n as f64, estimate(tc, data))
        })
        .collect();

    let xbars: Vec<f64> = results.iter().map(|r| r.0).collect();
    let estimates: Vec<f64> = results
        .iter()
        .filter_map(|r| if let Outcome::Estimate(v) = r.1 { Some(v) } else { None })
        .collect();
    let degenerate_count = results.iter().filter(|r| matches!(r.1, Outcome::Degenerate)).count();
    let ambiguous_count = results.iter().filter(|r| matches!(r.1, Outcome::Ambiguous)).count();
    if estimates.is_empty() {
        return Err(Error::AllTrialsDegenerate { trials: tc.trials });
    }
    let (mean, variance) = sample_moments(&estimates);
    let crb = fisher::cfi(&tc.cfg, tc.omega0_true).map_or(f64::INFINITY, |f| 1.0 / (tc.n as f64 * f));
    let vantrees_bound = match &tc.prior {
        Some(p) => Some(posterior::van_trees_bound(&tc.cfg, p, tc.n)?),
        None => None,
    };
    Ok(TrialReport {
        mean_estimate: mean,
        bias: mean - tc.omega0_true,
        variance,
        crb,
        vantrees_bound,
        included: estimates.len(),
        degenerate_count,
        ambiguous_count,
        mean_xbar: pairwise_sum(&xbars) / xbars.len() as f64,
        rng: RNG_ALGORITHM.into(),
    })
}

/// Bayesian risk of an estimator with the true frequency itself drawn from the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesRiskReport {
    /// Mean of `(estimate - omega0)^2` over included trials.
    pub mse: f64,
    pub vantrees_bound: f64,
    pub included: usize,
    pub degenerate_count: usize,
    pub ambiguous_count: usize,
    pub rng: String,
}

/// Trials where each dataset first draws `omega0` from `prior`, then the
/// counts, then applies the configured estimator (whose prior defaults to
/// `prior`).
pub fn run_prior_trials(tc: &TrialConfig, prior: &Prior) -> Result<BayesRiskReport> {
    let mut tc = tc.clone();
    tc.prior.get_or_insert_with(|| prior.clone());
    if tc.n == 0 || tc.trials == 0 {
        return Err(Error::InvalidConfig("n and trials must be at least 1".into()));
    }
    let prior = prior.with_field(tc.cfg)?;
    let results: Vec<(f64, Outcome)> = (0..tc.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(tc.seed, i as u64);
            let w0 = prior.sample(&mut rng);
            let data = draw_counts(dynamics::prob_detect(&tc.cfg, w0), tc.n, &mut rng);
            (w0, estimate(&tc, data))
        })
        .collect();
    let sq: Vec<f64> = results
        .iter()
        .filter_map(|(w0, o)| if let Outcome::Estimate(v) = o { Some((v - w0) * (v - w0)) } else { None })
        .collect();
    if sq.is_empty() {
        return Err(Error::AllTrialsDegenerate { trials: tc.trials });
    }
    Ok(BayesRiskReport {
        mse: pairwise_sum(&sq) / sq.len() as f64,
        vantrees_bound: posterior::van_trees_bound(&tc.cfg, &prior, tc.n)?,
        included: sq.len(),
        degenerate_count: results.iter().filter(|r| matches!(r.1, Outcome::Degenerate)).count(),
        ambiguous_count: results.iter().filter(|r| matches!(r.1, Outcome::Ambiguous)).count(),
        rng: RNG_ALGORITHM.into(),
    })
}
