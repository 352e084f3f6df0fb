//! Grid scans over drive parameters, sample means and transition frequencies.
//!
//! Cells are evaluated in parallel and stored in row-major order (first axis
//! outermost). A failing cell never aborts a scan: its values are NaN and its
//! `status` names the reason.

use crate::dynamics::{self, FieldConfig};
use crate::error::{Error, Result};
use crate::fisher;
use crate::frequentist::{self, RootStatus};
use crate::numerics::linspace;
use crate::posterior::{self, Counts, PosteriorSpec};
use crate::priors::Prior;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};

pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Omega,
    B0,
    Theta,
    Omega0,
    Xbar,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::Omega => "omega",
            AxisName::B0 => "b0",
            AxisName::Theta => "theta",
            AxisName::Omega0 => "omega0",
            AxisName::Xbar => "xbar",
        }
    }
}

impl std::str::FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(AxisName::Omega),
            "b0" => Ok(AxisName::B0),
            "theta" => Ok(AxisName::Theta),
            "omega0" => Ok(AxisName::Omega0),
            "xbar" => Ok(AxisName::Xbar),
            other => Err(Error::InvalidConfig(format!("unknown axis '{other}'"))),
        }
    }
}

/// Linearly spaced axis including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: AxisName, start: f64, stop: f64, count: usize) -> Result<Self> {
        if !(start < stop && start.is_finite() && stop.is_finite()) || count < 2 {
            return Err(Error::InvalidConfig(format!(
                "axis {} needs start < stop and count >= 2 (got {start}, {stop}, {count})",
                name.as_str()
            )));
        }
        Ok(Self { name, start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

/// Tabulated scan output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub axes: Vec<Axis>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub status: Vec<String>,
    /// Echo of the inputs that produced the table.
    pub metadata: BTreeMap<String, String>,
}

/// Formats a float with 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

impl GridTable {
    pub fn cells(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    /// Axis coordinates of cell `i`.
    pub fn coords(&self, i: usize) -> Vec<f64> {
        let mut rem = i;
        let mut out = vec![0.0; self.axes.len()];
        for (j, a) in self.axes.iter().enumerate().rev() {
            let idx = rem % a.count;
            rem /= a.count;
            out[j] = a.values()[idx];
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    pub fn to_csv(&self) -> String {
        let axis_values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        header.extend(self.columns.iter().map(|(n, _)| n.as_str()));
        header.push("status");
        let mut out = header.join(",");
        out.push('\n');
        for i in 0..self.cells() {
            let mut rem = i;
            let mut idx = vec![0; self.axes.len()];
            for (j, a) in self.axes.iter().enumerate().rev() {
                idx[j] = rem % a.count;
                rem /= a.count;
            }
            let mut fields: Vec<String> = idx.iter().enumerate().map(|(j, &k)| format_float(axis_values[j][k])).collect();
            fields.extend(self.columns.iter().map(|(_, v)| format_float(v[i])));
            fields.push(self.status[i].clone());
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

/// Evaluates `f` on every cell of a 1-D or 2-D grid; `f` returns one value
/// per column and a status.
fn build<F>(axes: Vec<Axis>, names: &[&str], metadata: BTreeMap<String, String>, f: F) -> GridTable
where
    F: Fn(&[f64]) -> (Vec<f64>, String) + Sync,
{
    let vals: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let cells: usize = axes.iter().map(|a| a.count).product();
    let rows: Vec<(Vec<f64>, String)> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut rem = i;
            let mut coords = vec![0.0; axes.len()];
            for j in (0..axes.len()).rev() {
                coords[j] = vals[j][rem % axes[j].count];
                rem /= axes[j].count;
            }
            f(&coords)
        })
        .collect();
    let mut columns: Vec<(String, Vec<f64>)> = names.iter().map(|n| (n.to_string(), Vec::with_capacity(cells))).collect();
    let mut status = Vec::with_capacity(cells);
    for (row, st) in rows {
        for (c, v) in columns.iter_mut().zip(row) {
            c.1.push(v);
        }
        status.push(st);
    }
    GridTable { axes, columns, status, metadata }
}

fn error_status(e: &Error) -> String {
    let s = format!("{e:?}");
    s.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("error").to_string()
}

fn field_with(base: &FieldConfig, axes: &[Axis], coords: &[f64]) -> Result<FieldConfig> {
    let (mut omega, mut b0, mut theta) = (base.omega, base.b0, base.theta);
    for (a, &v) in axes.iter().zip(coords) {
        match a.name {
            AxisName::Omega => omega = v,
            AxisName::B0 => b0 = v,
            AxisName::Theta => theta = v,
            _ => {}
        }
    }
    FieldConfig::new(omega, b0, theta)
}

fn field_axes(axes: &[Axis; 2]) -> Result<()> {
    let ok = |a: &Axis| matches!(a.name, AxisName::Omega | AxisName::B0 | AxisName::Theta);
    if !(ok(&axes[0]) && ok(&axes[1])) || axes[0].name == axes[1].name {
        return Err(Error::InvalidConfig("scan axes must be two distinct drive parameters (omega, b0, theta)".into()));
    }
    Ok(())
}

fn base_metadata(cfg: &FieldConfig) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("omega".to_string(), format_float(cfg.omega)),
        ("b0".to_string(), format_float(cfg.b0)),
        ("theta".to_string(), format_float(cfg.theta)),
    ])
}

/// CFI, QFI and gap (raw and `omega^2`-scaled) plus the samples needed for
/// `accuracy`, over two drive parameters at fixed `omega0`.
pub fn fisher_scan(fixed: &FieldConfig, omega0: f64, axes: [Axis; 2], accuracy: f64) -> Result<GridTable> {
    field_axes(&axes)?;
    if !(accuracy > 0.0) {
        return Err(Error::InvalidConfig(format!("accuracy must be positive (got {accuracy})")));
    }
    let names = ["cfi_raw", "qfi_raw", "gap_raw", "cfi_scaled", "qfi_scaled", "gap_scaled", "n_required"];
    let mut meta = base_metadata(fixed);
    meta.insert("omega0".into(), format_float(omega0));
    meta.insert("accuracy".into(), format_float(accuracy));
    let ax = axes.to_vec();
    Ok(build(axes.to_vec(), &names, meta, |c| {
        let nan = vec![f64::NAN; names.len()];
        let cfg = match field_with(fixed, &ax, c) {
            Ok(cfg) => cfg,
            Err(e) => return (nan, error_status(&e)),
        };
        let fp = match fisher::fisher_gap(&cfg, omega0) {
            Ok(fp) => fp,
            Err(e) => return (nan, error_status(&e)),
        };
        let s = |v| fisher::omega_scaled(v, &cfg);
        let (cs, status) = (s(fp.cfi), STATUS_OK.to_string());
        let n_req = fisher::required_samples(cs, accuracy).unwrap_or(f64::INFINITY);
        (vec![fp.cfi, fp.qfi, fp.gap, cs, s(fp.qfi), s(fp.gap), n_req], status)
    }))
}

/// Status of an ML cell.
pub mod ml_status {
    pub const COMPLEX: &str = "Complex";
    pub const NEGATIVE_REJECTED: &str = "NegativeRejected";
    pub const AMBIGUOUS: &str = "Ambiguous";
    pub const UNAMBIGUOUS: &str = "Unambiguous";
    pub const DEGENERATE: &str = "Degenerate";
}

/// Both quadratic-inversion roots over (`b0` or `omega`) x `xbar`, with the
/// validity boundary `b0 = sqrt(xbar) / |sin(theta)|`.
pub fn ml_root_scan(fixed: &FieldConfig, axes: [Axis; 2]) -> Result<GridTable> {
    if !matches!(axes[0].name, AxisName::B0 | AxisName::Omega) || axes[1].name != AxisName::Xbar {
        return Err(Error::InvalidConfig("ml_root_scan axes must be (b0 | omega) x xbar".into()));
    }
    if !(axes[1].start >= 0.0 && axes[1].stop <= 1.0) {
        return Err(Error::InvalidConfig("xbar axis must lie in [0, 1]".into()));
    }
    let names = ["root_plus", "root_minus", "boundary_b0"];
    let ax = axes.to_vec();
    Ok(build(axes.to_vec(), &names, base_metadata(fixed), |c| {
        let xbar = c[1];
        let boundary = xbar.sqrt() / fixed.theta.sin().abs();
        let cfg = match field_with(fixed, &ax[..1], &c[..1]) {
            Ok(cfg) => cfg,
            Err(e) => return (vec![f64::NAN, f64::NAN, boundary], error_status(&e)),
        };
        match frequentist::ml_estimate(xbar, &cfg) {
            Ok(r) => {
                let status = if r.roots.iter().any(|x| x.status == RootStatus::RejectedNegative) {
                    ml_status::NEGATIVE_REJECTED
                } else if r.ambiguity == frequentist::Ambiguity::Ambiguous {
                    ml_status::AMBIGUOUS
                } else {
                    ml_status::UNAMBIGUOUS
                };
                (vec![r.roots[0].value, r.roots[1].value, boundary], status.into())
            }
            Err(Error::SincDomainViolated { .. } | Error::NoRealRoot { .. }) => {
                (vec![f64::NAN, f64::NAN, boundary], ml_status::COMPLEX.into())
            }
            Err(_) => (vec![f64::NAN, f64::NAN, boundary], ml_status::DEGENERATE.into()),
        }
    }))
}

/// Prior-averaged CFI, QFI and gap for `n` measurements over two drive parameters.
pub fn bayes_scan(fixed: &FieldConfig, prior: &Prior, axes: [Axis; 2], n: u64) -> Result<GridTable> {
    field_axes(&axes)?;
    let names = ["bayes_cfi", "bayes_qfi", "bayes_gap", "prior_fisher"];
    let mut meta = base_metadata(fixed);
    meta.insert("n".into(), n.to_string());
    meta.insert("prior".into(), prior.kind().to_string());
    meta.insert("window".into(), format!("{},{}", format_float(prior.window().lower), format_float(prior.window().upper)));
    let ax = axes.to_vec();
    Ok(build(axes.to_vec(), &names, meta, |c| {
        let res = field_with(fixed, &ax, c).and_then(|cfg| posterior::bayes_fisher(&cfg, prior, n));
        match res {
            Ok(b) => (vec![b.bayes_cfi, b.bayes_qfi, b.bayes_gap, b.prior_fisher], STATUS_OK.into()),
            Err(e) => (vec![f64::NAN; 4], error_status(&e)),
        }
    }))
}

/// MMSE estimate against the sample mean, one column per prior. Counts are
/// `k = n * xbar`, not rounded.
pub fn mmse_curve(cfg: &FieldConfig, priors: &[Prior], n: f64, xbar_axis: Axis) -> Result<GridTable> {
    if xbar_axis.name != AxisName::Xbar || xbar_axis.start < 0.0 || xbar_axis.stop > 1.0 {
        return Err(Error::InvalidConfig("mmse_curve needs an xbar axis inside [0, 1]".into()));
    }
    if priors.is_empty() {
        return Err(Error::InvalidConfig("mmse_curve needs at least one prior".into()));
    }
    let priors: Vec<Prior> = priors.iter().map(|p| p.with_field(*cfg)).collect::<Result<_>>()?;
    let mut names: Vec<String> = Vec::new();
    for p in &priors {
        let base = format!("mmse_{}", p.kind());
        let name = if names.contains(&base) { format!("{base}_{}", names.len()) } else { base };
        names.push(name);
    }
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut meta = base_metadata(cfg);
    meta.insert("n".into(), format_float(n));
    Ok(build(vec![xbar_axis], &name_refs, meta, |c| {
        let mut status = STATUS_OK.to_string();
        let vals = priors
            .iter()
            .map(|p| {
                let r = Counts::from_xbar(n, c[0]).and_then(|d| posterior::mmse(&PosteriorSpec::new(d, *cfg, p.clone())));
                r.unwrap_or_else(|e| {
                    status = error_status(&e);
                    f64::NAN
                })
            })
            .collect();
        (vals, status)
    }))
}

/// The MAP stationarity curve `xbar = g(omega0)` for `n` measurements, and
/// its large-`n` limit `p(omega0)`.
pub fn map_curve(cfg: &FieldConfig, prior: &Prior, n: f64, omega0_axis: Axis) -> Result<GridTable> {
    if omega0_axis.name != AxisName::Omega0 {
        return Err(Error::InvalidConfig("map_curve needs an omega0 axis".into()));
    }
    if !(n > 0.0) {
        return Err(Error::InvalidConfig(format!("map_curve needs n > 0 (got {n})")));
    }
    let prior = prior.with_field(*cfg)?;
    let w = prior.window();
    let mut meta = base_metadata(cfg);
    meta.insert("n".into(), format_float(n));
    meta.insert("prior".into(), prior.kind().to_string());
    Ok(build(vec![omega0_axis], &["xbar", "xbar_limit"], meta, |c| {
        let x = c[0];
        let p = dynamics::prob_detect(cfg, x);
        if !(x > w.lower && x < w.upper) {
            return (vec![f64::NAN, p], "OutsideWindow".into());
        }
        if dynamics::dprob_domega0(cfg, x) == 0.0 {
            return (vec![f64::NAN, p], "StationaryProbability".into());
        }
        let g = posterior::stationarity_lhs(cfg, &prior, n, x);
        let st = if g.is_finite() { STATUS_OK } else { "NonFinite" };
        (vec![g, p], st.into())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::SupportWindow;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unit_drive() -> FieldConfig {
        FieldConfig::new(1.0, 1.0, FRAC_PI_2).unwrap()
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::new(AxisName::Omega, 1.0, 0.0, 5).is_err());
        assert!(Axis::new(AxisName::Omega, 0.0, 1.0, 1).is_err());
        assert_eq!(Axis::new(AxisName::B0, 0.0, 1.0, 3).unwrap().values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, PI] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn fisher_scan_layout_and_order() {
        let axes = [
            Axis::new(AxisName::Omega, -2.0, 2.0, 3).unwrap(),
            Axis::new(AxisName::B0, 0.0, 2.0, 3).unwrap(),
        ];
        let t = fisher_scan(&unit_drive(), 1.0, axes, 1e-3).unwrap();
        assert_eq!(t.cells(), 9);
        assert_eq!(t.coords(5), vec![0.0, 2.0]);
        // b0 = 0 is not a valid drive
        assert_eq!(t.status[0], "InvalidConfig");
        assert!(t.column("cfi_raw").unwrap()[0].is_nan());
        let csv = t.to_csv();
        assert!(csv.starts_with("omega,b0,cfi_raw,qfi_raw,gap_raw,cfi_scaled,qfi_scaled,gap_scaled,n_required,status\n"));
        assert_eq!(csv.lines().count(), 10);
    }

    #[test]
    fn ml_root_cell() {
        let x = 4.0 / (PI * PI);
        let axes = [Axis::new(AxisName::B0, 0.5, 1.0, 2).unwrap(), Axis::new(AxisName::Xbar, x, 0.9, 2).unwrap()];
        let t = ml_root_scan(&unit_drive(), axes).unwrap();
        let i = 2; // b0 = 1, xbar = 4/pi^2
        assert!((t.column("root_plus").unwrap()[i] - 3.42272).abs() < 1e-5);
        assert!((t.column("root_minus").unwrap()[i] + 1.42272).abs() < 1e-5);
        assert_eq!(t.status[i], ml_status::NEGATIVE_REJECTED);
        assert_eq!(t.status[1], ml_status::COMPLEX); // b0 = 0.5, xbar = 0.9
    }

    #[test]
    fn map_curve_limit_column_is_p() {
        let prior = Prior::gaussian(SupportWindow::new(0.1, 100.0).unwrap(), 10.0, 2.0).unwrap();
        let t = map_curve(&unit_drive(), &prior, 1e12, Axis::new(AxisName::Omega0, 1.5, 20.0, 50).unwrap()).unwrap();
        let g = t.column("xbar").unwrap();
        let p = t.column("xbar_limit").unwrap();
        for i in 0..50 {
            if t.status[i] == STATUS_OK {
                assert!((g[i] - p[i]).abs() < 1e-8);
            }
        }
    }
}
