//! Self-contained one-dimensional numerical kernel.
//!
//! Everything here is a pure function of its arguments. The integrands and
//! objective functions used by the estimators are smooth except at isolated
//! kinks, which callers expose as panel breakpoints (see [`integrate_panels`]).

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Stopping criteria shared by the iterative routines.
///
/// For quadrature `max_iter` bounds the number of interval subdivisions; for
/// root finding and golden-section search it bounds the iteration count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol >= 0.0 && rel_tol >= 0.0) || !(abs_tol > 0.0 || rel_tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance needs abs_tol, rel_tol >= 0 with one of them positive (got {abs_tol}, {rel_tol})"
            )));
        }
        if max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(Self { abs_tol, rel_tol, max_iter })
    }

    /// Defaults for adaptive quadrature.
    pub const fn quadrature() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-10, max_iter: 2_000_000 }
    }

    /// Defaults for bracketed root finding.
    pub const fn root() -> Self {
        Self { abs_tol: 1e-15, rel_tol: 4.0 * f64::EPSILON, max_iter: 200 }
    }

    /// Defaults for golden-section refinement of maxima.
    pub const fn maximize() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-12, max_iter: 200 }
    }

    fn threshold(&self, scale: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * scale.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::quadrature()
    }
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!("bracket needs finite lo < hi (got [{lo}, {hi}])")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

const MAX_SIMPSON_DEPTH: u32 = 60;

struct Simpson<'a, F> {
    f: &'a F,
    splits: usize,
    budget: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((self.f)(lm), (self.f)(rm));
        let h = b - a;
        let left = h * (fa + 4.0 * flm + fm) / 12.0;
        let right = h * (fm + 4.0 * frm + fb) / 12.0;
        let delta = left + right - whole;
        if !delta.is_finite() {
            return Err(Error::Domain(format!("integrand is not finite near x = {m}")));
        }
        // Depth cap: accept the Richardson estimate once the cell is at the
        // resolution limit of double precision.
        if depth >= MAX_SIMPSON_DEPTH || delta.abs() <= 15.0 * eps || lm <= a || rm >= b {
            return Ok(left + right + delta / 15.0);
        }
        self.splits += 1;
        if self.splits > self.budget {
            return Err(Error::NonConvergence(format!(
                "adaptive Simpson exceeded {} subdivisions",
                self.budget
            )));
        }
        let l = self.refine(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1)?;
        let r = self.refine(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]`.
///
/// The requested accuracy is `max(abs_tol, rel_tol * |coarse estimate|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    integrate_counted(&f, lo, hi, tol, tol.max_iter).map(|(v, _)| v)
}

fn integrate_counted<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
    budget: usize,
) -> Result<(f64, usize)> {
    Bracket::new(lo, hi)?;
    let m = 0.5 * (lo + hi);
    let (fa, fm, fb) = (f(lo), f(m), f(hi));
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite()) {
        return Err(Error::Domain(format!("integrand is not finite on [{lo}, {hi}]")));
    }
    let whole = (hi - lo) * (fa + 4.0 * fm + fb) / 6.0;
    let eps = tol.threshold(whole);
    let mut s = Simpson { f, splits: 0, budget };
    let v = s.refine(lo, hi, fa, fm, fb, whole, eps, 0)?;
    Ok((v, s.splits))
}

/// Integrates over `[breaks[0], breaks[last]]` panel by panel.
///
/// `breaks` must be sorted ascending; duplicate points are skipped. Placing
/// breakpoints at kinks and narrow peaks keeps the adaptive rule from
/// sampling past them on its coarse levels. The absolute tolerance is shared
/// out evenly across panels and `max_iter` bounds the total subdivisions.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: Tolerance) -> Result<f64> {
    integrate_panels_graded(f, breaks, &[], tol)
}

/// As [`integrate_panels`], except that panels with an endpoint in
/// `singular` are mapped through `x = a + (b - a) phi(t)`,
/// `phi(t) = t^3 (10 - 15 t + 6 t^2)`.
///
/// `phi'` vanishes to second order at both ends, which turns integrable
/// endpoint singularities such as `|x - a|^alpha` with small `alpha > 0`
/// into smooth integrands in `t`.
pub fn integrate_panels_graded<F: Fn(f64) -> f64>(f: F, breaks: &[f64], singular: &[f64], tol: Tolerance) -> Result<f64> {
    if breaks.len() < 2 {
        return Err(Error::Domain("need at least two breakpoints".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("breakpoints must be sorted".into()));
    }
    let panels = breaks.windows(2).filter(|w| w[1] > w[0]).count().max(1);
    let per_panel = Tolerance { abs_tol: tol.abs_tol / panels as f64, ..tol };
    let mut total = 0.0;
    let mut used = 0usize;
    let hits = |x: f64| singular.iter().any(|s| (s - x).abs() <= 1e-12 * x.abs().max(1.0));
    for w in breaks.windows(2).filter(|w| w[1] > w[0]) {
        let budget = tol.max_iter.saturating_sub(used);
        if !hits(w[0]) && !hits(w[1]) {
            let (part, splits) = integrate_counted(&f, w[0], w[1], per_panel, budget)?;
            used += splits;
            total += part;
            continue;
        }
        let (a, h) = (w[0], w[1] - w[0]);
        let g = |t: f64| {
            let d = 30.0 * t * t * (1.0 - t) * (1.0 - t);
            if d == 0.0 {
                return 0.0;
            }
            let x = a + h * t * t * t * (10.0 + t * (6.0 * t - 15.0));
            f(x.min(w[1])) * h * d
        };
        let (part, splits) = integrate_counted(&g, 0.0, 1.0, per_panel, budget)?;
        used += splits;
        total += part;
    }
    Ok(total)
}

/// Brent's method on a sign-changing bracket.
///
/// Inverse quadratic interpolation and secant steps are accepted only while
/// they shrink the bracket fast enough; otherwise the step is a bisection, so
/// convergence is guaranteed.
pub fn find_root_bracketed<F: Fn(f64) -> f64>(f: F, b: Bracket, tol: Tolerance) -> Result<f64> {
    let (mut xa, mut xb) = (b.lo, b.hi);
    let (mut fa, mut fb) = (f(xa), f(xb));
    if fa == 0.0 {
        return Ok(xa);
    }
    if fb == 0.0 {
        return Ok(xb);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo: fa, hi: fb });
    }
    let (mut xc, mut fc) = (xa, fa);
    let mut d = xb - xa;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            xc = xa;
            fc = fa;
            d = xb - xa;
            e = d;
        }
        if fc.abs() < fb.abs() {
            xa = xb;
            xb = xc;
            xc = xa;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * xb.abs() + 0.5 * tol.threshold(xb);
        let xm = 0.5 * (xc - xb);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(xb);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if xa == xc {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (xb - xa) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        xa = xb;
        fa = fb;
        xb += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(xb);
        if fb.is_nan() {
            return Err(Error::Domain(format!("function is NaN at x = {xb}")));
        }
    }
    Err(Error::NonConvergence(format!(
        "bracketed root search exceeded {} iterations",
        tol.max_iter
    )))
}

/// Unnormalized sinc, `sin(x)/x` with the limit 1 at the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Derivative of [`sinc`].
pub fn sinc_prime(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Inverse of [`sinc`] on its monotone branch `[0, pi]`.
///
/// Twenty bisection steps seed a Newton iteration that is kept inside the
/// shrinking bracket; any step leaving it falls back to bisection.
pub fn inv_sinc(y: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::Domain(format!("inv_sinc needs 0 <= y <= 1 (got {y})")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    if y == 0.0 {
        return Ok(PI);
    }
    // g(x) = sinc(x) - y is decreasing on [0, pi]
    let (mut lo, mut hi) = (0.0, PI);
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if sinc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let g = sinc(x) - y;
        if g == 0.0 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dg = sinc_prime(x);
        let mut next = if dg != 0.0 { x - g / dg } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1e-300) || hi - lo <= f64::EPSILON {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Symmetric difference quotient `(f(x+h) - f(x-h)) / 2h`.
pub fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Step used when no explicit finite-difference step is given.
pub fn default_step(x: f64) -> f64 {
    1e-6_f64.max(1e-7 * x.abs())
}

/// A local maximum located by [`local_maxima`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalMax {
    pub x: f64,
    pub value: f64,
    /// Set when the maximum sits on an endpoint of the search interval.
    pub boundary: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: Tolerance) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..tol.max_iter {
        if (b - a).abs() <= tol.threshold(0.5 * (a + b)) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

/// Sharpens a golden-section estimate by locating the sign change of the
/// symmetric difference `f(x+h) - f(x-h)`, which is resolvable far below the
/// `sqrt(eps)` floor that value comparisons impose near a flat peak.
fn polish_peak<F: Fn(f64) -> f64>(f: &F, x: f64, lo: f64, hi: f64) -> f64 {
    let scale = x.abs().max(1.0);
    let h = 1e-5 * scale;
    let w = 1e-6 * scale;
    let (a, b) = (x - w, x + w);
    if a - h < lo || b + h > hi {
        return x;
    }
    let slope = |t: f64| f(t + h) - f(t - h);
    let (sa, sb) = (slope(a), slope(b));
    if !(sa > 0.0 && sb < 0.0) {
        return x;
    }
    let Ok(br) = Bracket::new(a, b) else { return x };
    match find_root_bracketed(slope, br, Tolerance::root()) {
        Ok(r) if f(r) >= f(x) - 1e-13 * f(x).abs().max(1.0) => r,
        _ => x,
    }
}

/// All local maxima of `f` on `[lo, hi]`, sorted ascending.
///
/// Candidates are detected on a uniform grid of `grid_points` nodes and each
/// interior candidate is refined by golden-section search restricted to one
/// grid cell on either side. An endpoint is reported (flagged `boundary`)
/// when `f` there exceeds its grid neighbour.
pub fn local_maxima<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    grid_points: usize,
    tol: Tolerance,
) -> Result<Vec<LocalMax>> {
    Bracket::new(lo, hi)?;
    if grid_points < 3 {
        return Err(Error::Domain(format!("local_maxima needs at least 3 grid points (got {grid_points})")));
    }
    let step = (hi - lo) / (grid_points - 1) as f64;
    let xs: Vec<f64> = (0..grid_points)
        .map(|i| if i + 1 == grid_points { hi } else { lo + step * i as f64 })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();

    let mut out = Vec::new();
    if ys[0] > ys[1] {
        out.push(LocalMax { x: lo, value: ys[0], boundary: true });
    }
    for i in 1..grid_points - 1 {
        if ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] {
            let (a, b) = (xs[i - 1], xs[i + 1]);
            let mut x = golden_section(&f, a, b, tol);
            x = polish_peak(&f, x, a, b);
            let value = f(x);
            let (x, value) = if value >= ys[i] { (x, value) } else { (xs[i], ys[i]) };
            if out.last().is_some_and(|m: &LocalMax| (m.x - x).abs() <= 1e-12 * x.abs().max(1.0)) {
                continue;
            }
            out.push(LocalMax { x, value, boundary: false });
        }
    }
    let n = grid_points - 1;
    if ys[n] > ys[n - 1] {
        out.push(LocalMax { x: hi, value: ys[n], boundary: true });
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(out)
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|i| if i + 1 == count { stop } else { start + step * i as f64 })
                .collect()
        }
    }
}

/// Pairwise summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
