//! Independent reference computations for tests and golden regeneration.
//!
//! Only the closed forms of `dynamics` are shared with the library; the
//! rest is plain composite Simpson sums, finite differences and exhaustive
//! enumeration.
#![allow(dead_code)]

use rabi_est::dynamics::{self, FieldConfig};

/// Composite Simpson rule with `intervals` (made even) sub-intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

pub fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

pub fn cfi_fd(cfg: &FieldConfig, w0: f64) -> f64 {
    let p = dynamics::prob_detect(cfg, w0);
    let dp = fd(|w| dynamics::prob_detect(cfg, w), w0, 1e-6);
    dp * dp / (p * (1.0 - p))
}

pub fn qfi_fd(cfg: &FieldConfig, w0: f64) -> f64 {
    let h = 1e-6;
    let dp = fd(|w| dynamics::prob_detect(cfg, w), w0, h);
    let d01 = (dynamics::density_state(cfg, w0 + h).rho01 - dynamics::density_state(cfg, w0 - h).rho01) / (2.0 * h);
    4.0 * (dp * dp + d01.norm_sqr())
}

/// `sqrt(CFI)` from the definitional ratio with the closed-form derivative;
/// zero where the ratio is undefined.
pub fn sqrt_fisher(cfg: &FieldConfig, w0: f64) -> f64 {
    let p = dynamics::prob_detect(cfg, w0);
    let dp = dynamics::dprob_domega0(cfg, w0);
    let d = p * (1.0 - p);
    if d <= 0.0 {
        0.0
    } else {
        dp.abs() / d.sqrt()
    }
}

#[derive(Clone, Copy, Debug)]
pub enum OraclePrior {
    Uniform,
    Jeffreys,
    /// mean, sigma; the normalizing constant cancels in every ratio used here
    Gaussian(f64, f64),
}

impl OraclePrior {
    pub fn weight(&self, cfg: &FieldConfig, w0: f64) -> f64 {
        match *self {
            OraclePrior::Uniform => 1.0,
            OraclePrior::Jeffreys => sqrt_fisher(cfg, w0),
            OraclePrior::Gaussian(m, s) => (-0.5 * ((w0 - m) / s).powi(2)).exp(),
        }
    }
}

/// `p^k (1-p)^(n-k)` with real-valued `k`; `0^0 = 1`.
pub fn likelihood(cfg: &FieldConfig, n: f64, k: f64, w0: f64) -> f64 {
    let p = dynamics::prob_detect(cfg, w0);
    let a = if k == 0.0 { 1.0 } else { p.powf(k) };
    let b = if n - k == 0.0 { 1.0 } else { (1.0 - p).powf(n - k) };
    a * b
}

/// Posterior mean over `[lo, hi]` by composite Simpson.
pub fn mmse(cfg: &FieldConfig, prior: OraclePrior, n: f64, k: f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let g = |w: f64| likelihood(cfg, n, k, w) * prior.weight(cfg, w);
    let z = simpson(g, lo, hi, intervals);
    simpson(|w| w * g(w), lo, hi, intervals) / z
}

/// Exact sums over all `2^n` records at `P1 = num / den`, in integers:
/// returns `(sum_k C(n,k) a^k b^(n-k) k, sum ... (den k - n num)^2, sum ... (den k - n num), den^n)`
/// with `a = num`, `b = den - num`.
pub fn enumerate_exact(n: u32, num: i128, den: i128) -> (i128, i128, i128, i128) {
    let (a, b) = (num, den - num);
    let (mut s1, mut s2, mut s3) = (0i128, 0i128, 0i128);
    for rec in 0u32..(1 << n) {
        let k = rec.count_ones() as i128;
        let w = a.pow(k as u32) * b.pow(n - k as u32);
        let dev = den * k - n as i128 * num;
        s1 += w * k;
        s2 += w * dev * dev;
        s3 += w * dev;
    }
    (s1, s2, s3, den.pow(n))
}

/// Floating-point moments over all `2^n` records: `(E[xbar], Var[xbar], E[score])`.
pub fn enumerate_float(n: u32, p1: f64) -> (f64, f64, f64) {
    let (mut m, mut m2, mut sc) = (0.0, 0.0, 0.0);
    for rec in 0u32..(1 << n) {
        let k = rec.count_ones() as f64;
        let nn = n as f64;
        let w = p1.powf(k) * (1.0 - p1).powf(nn - k);
        let xbar = k / nn;
        m += w * xbar;
        m2 += w * xbar * xbar;
        // d/dP1 of ln(P1^k (1-P1)^(n-k))
        sc += w * (k / p1 - (nn - k) / (1.0 - p1));
    }
    (m, m2 - m * m, sc)
}

/// Richardson-extrapolated central difference, error `O(h^4)`.
pub fn fd4<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d1 = fd(&f, x, h);
    let d2 = fd(&f, x, 2.0 * h);
    (4.0 * d1 - d2) / 3.0
}

/// `(cfg, omega0)` from the ranges used for the Fisher sweeps:
/// omega in [-30, 30], b0 in (0, 10], theta in (0.05, pi - 0.05), omega0 in (0, 10].
pub fn draw_point<R: rand::Rng>(rng: &mut R) -> (FieldConfig, f64) {
    let omega = rng.random_range(-30.0..=30.0);
    let b0 = rng.random_range(1e-3..=10.0);
    let theta = rng.random_range(0.05..std::f64::consts::PI - 0.05);
    let w0 = rng.random_range(1e-3..=10.0);
    (FieldConfig::new(omega, b0, theta).unwrap(), w0)
}

pub fn rel_close(a: f64, b: f64, rel: f64, floor: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + floor
}
