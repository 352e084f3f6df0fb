use clap::{Args, Parser, Subcommand};
use rabi_est::montecarlo::{self, Estimator, TrialConfig};
use rabi_est::posterior::{self, PosteriorSpec};
use rabi_est::scan::{self, Axis, AxisName, GridTable};
use rabi_est::{frequentist, Dataset, Error, FieldConfig, Prior, PriorKind, SupportWindow, TOOL_VERSION};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;
use std::str::FromStr;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_DOMAIN: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "rabi-est", version, about = "Transition-frequency estimation for a driven two-level system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// CFI/QFI landscape over two drive parameters
    FisherScan(FisherScanArgs),
    /// Both ML inversion roots over (b0 | omega) x xbar
    MlRoots(MlRootsArgs),
    /// Prior-averaged Fisher information over two drive parameters
    BayesScan(BayesScanArgs),
    /// MMSE estimate against the sample mean for one or more priors
    MmseCurve(MmseCurveArgs),
    /// MAP stationarity curve xbar(omega0)
    MapCurve(MapCurveArgs),
    /// Point estimate from photon counts
    Estimate(EstimateArgs),
    /// Monte Carlo estimator trials
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// `key = value` file; flags override its entries
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output path, `-` for standard output
    #[arg(long, global = true)]
    out: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    b0: Option<f64>,
    /// Gyration angle in radians
    #[arg(long, global = true, conflicts_with = "theta_deg")]
    theta: Option<f64>,
    /// Gyration angle in degrees
    #[arg(long, global = true)]
    theta_deg: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct PriorArgs {
    /// uniform | jeffreys | gaussian
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct FisherScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    omega0: Option<f64>,
    /// First axis as name:start:stop:count
    #[arg(long, allow_hyphen_values = true)]
    x_axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y_axis: Option<String>,
    /// Target variance for the required-sample column
    #[arg(long)]
    accuracy: Option<f64>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct MlRootsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    axis: Option<String>,
    #[arg(long)]
    xbar_axis: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct BayesScanArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    x_axis: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    y_axis: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct MmseCurveArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated prior kinds
    #[arg(long)]
    priors: Option<String>,
    #[arg(long)]
    lower: Option<f64>,
    #[arg(long)]
    upper: Option<f64>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    xbar_axis: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct MapCurveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    omega0_axis: Option<String>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct EstimateArgs {
    /// ml | mmse | map
    kind: String,
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    grid_points: Option<usize>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long)]
    omega0_true: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// ml | mmse | map
    #[arg(long)]
    estimator: Option<String>,
}

enum Failure {
    Usage(String),
    Lib(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => Failure::Usage(m),
            e => Failure::Lib(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Usage(msg.into()))
}

/// Flag values resolved against the optional config file.
struct Settings {
    file: BTreeMap<String, String>,
    echo: BTreeMap<String, String>,
}

const CONFIG_KEYS: &[&str] = &[
    "out", "omega", "b0", "theta", "theta-deg", "omega0", "x-axis", "y-axis", "accuracy", "axis", "xbar-axis",
    "prior", "priors", "lower", "upper", "mean", "sigma", "n", "k", "grid-points", "omega0-axis", "omega0-true",
    "trials", "seed", "estimator",
];

impl Settings {
    fn load(path: Option<&str>) -> Res<Self> {
        let mut file = BTreeMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("--config {p}: {e}")))?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return usage(format!("--config {p}: line {} is not `key = value`", i + 1));
                };
                let key = k.trim().replace('_', "-");
                if !CONFIG_KEYS.contains(&key.as_str()) {
                    return usage(format!("--config {p}: unknown key '{key}' on line {}", i + 1));
                }
                file.insert(key, v.trim().to_string());
            }
        }
        Ok(Self { file, echo: BTreeMap::new() })
    }

    fn opt<T: FromStr + ToString + Clone>(&mut self, key: &str, flag: Option<T>) -> Res<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(s.parse::<T>().map_err(|_| Failure::Usage(format!("--{key}: cannot parse '{s}'")))?),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.echo.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    fn get<T: FromStr + ToString + Clone>(&mut self, key: &str, flag: Option<T>, default: T) -> Res<T> {
        let v = self.opt(key, flag)?.unwrap_or(default);
        self.echo.insert(key.to_string(), v.to_string());
        Ok(v)
    }

    fn require<T: FromStr + ToString + Clone>(&mut self, key: &str, flag: Option<T>) -> Res<T> {
        self.opt(key, flag)?.ok_or_else(|| Failure::Usage(format!("--{key} is required")))
    }

    fn positive(&mut self, key: &str, flag: Option<f64>, default: Option<f64>) -> Res<f64> {
        let v = match default {
            Some(d) => self.get(key, flag, d)?,
            None => self.require(key, flag)?,
        };
        if !(v > 0.0 && v.is_finite()) {
            return usage(format!("--{key} must be positive and finite (got {v})"));
        }
        Ok(v)
    }

    fn field(&mut self, c: &Common) -> Res<FieldConfig> {
        let omega = self.get("omega", c.omega, 1.0)?;
        if !omega.is_finite() {
            return usage(format!("--omega must be finite (got {omega})"));
        }
        let b0 = self.positive("b0", c.b0, Some(1.0))?;
        let theta = match (c.theta, c.theta_deg) {
            (Some(t), _) => self.get("theta", Some(t), 0.0)?,
            (None, Some(d)) => self.get("theta-deg", Some(d), 0.0)?.to_radians(),
            (None, None) => match self.opt::<f64>("theta-deg", None)? {
                Some(d) => d.to_radians(),
                None => self.get("theta", None, std::f64::consts::FRAC_PI_2)?,
            },
        };
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return usage(format!("--theta must lie in (0, pi) (got {theta})"));
        }
        Ok(FieldConfig::new(omega, b0, theta)?)
    }

    fn axis(&mut self, key: &str, flag: Option<String>, default: &str) -> Res<Axis> {
        let s = self.get(key, flag, default.to_string())?;
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 {
            return usage(format!("--{key} must be name:start:stop:count (got '{s}')"));
        }
        let bad = |_| Failure::Usage(format!("--{key}: cannot parse '{s}'"));
        let name = AxisName::from_str(parts[0]).map_err(|_| Failure::Usage(format!("--{key}: unknown axis '{}'", parts[0])))?;
        let start: f64 = parts[1].parse().map_err(bad)?;
        let stop: f64 = parts[2].parse().map_err(bad)?;
        let count: usize = parts[3].parse().map_err(|_| Failure::Usage(format!("--{key}: bad count in '{s}'")))?;
        Axis::new(name, start, stop, count).map_err(|e| Failure::Usage(format!("--{key}: {e}")))
    }

    fn window(&mut self, lower: Option<f64>, upper: Option<f64>) -> Res<SupportWindow> {
        let lo = self.positive("lower", lower, Some(0.1))?;
        let hi = self.positive("upper", upper, Some(100.0))?;
        SupportWindow::new(lo, hi).map_err(|e| Failure::Usage(format!("--lower/--upper: {e}")))
    }

    #[allow(clippy::too_many_arguments)]
    fn build_prior(
        &mut self,
        kind: PriorKind,
        cfg: &FieldConfig,
        lower: Option<f64>,
        upper: Option<f64>,
        mean: Option<f64>,
        sigma: Option<f64>,
    ) -> Res<Prior> {
        let w = self.window(lower, upper)?;
        Ok(match kind {
            PriorKind::Uniform => Prior::uniform(w),
            PriorKind::Jeffreys => Prior::jeffreys(*cfg, w)?,
            PriorKind::Gaussian => {
                let mean = self.get("mean", mean, 10.0)?;
                let sigma = self.positive("sigma", sigma, Some(2.0))?;
                Prior::gaussian(w, mean, sigma)?
            }
        })
    }

    fn prior(&mut self, p: &PriorArgs, cfg: &FieldConfig, default: PriorKind) -> Res<Prior> {
        let kind = self.get("prior", p.prior.clone(), default.to_string())?;
        let kind = PriorKind::from_str(&kind).map_err(|_| Failure::Usage(format!("--prior: unknown kind '{kind}'")))?;
        self.build_prior(kind, cfg, p.lower, p.upper, p.mean, p.sigma)
    }
}

#[derive(Serialize)]
struct Manifest {
    tool_version: &'static str,
    command_line: String,
    seed: Option<u64>,
    parameters: BTreeMap<String, String>,
}

fn manifest(settings: &Settings, seed: Option<u64>) -> Manifest {
    let args: Vec<String> = std::env::args().skip(1).collect();
    Manifest {
        tool_version: TOOL_VERSION,
        command_line: format!("rabi-est {}", args.join(" ")),
        seed,
        parameters: settings.echo.clone(),
    }
}

fn emit(out: &str, body: &[u8], m: &Manifest) -> Res<()> {
    if out == "-" {
        std::io::stdout().lock().write_all(body)?;
        return Ok(());
    }
    std::fs::write(out, body)?;
    // the sidecar carries the wall-clock time so the data file stays reproducible
    let mut side = serde_json::to_value(m).expect("manifest serializes");
    side["timestamp"] = Value::String(chrono::Utc::now().to_rfc3339());
    let text = serde_json::to_string_pretty(&side).expect("manifest serializes") + "\n";
    std::fs::write(format!("{out}.manifest.json"), text)?;
    Ok(())
}

fn emit_table(s: &mut Settings, c: &Common, t: &GridTable) -> Res<()> {
    let out = s.get("out", c.out.clone(), "-".to_string())?;
    emit(&out, t.to_csv().as_bytes(), &manifest(s, None))
}

fn emit_json(s: &mut Settings, c: &Common, mut v: Value, seed: Option<u64>) -> Res<()> {
    let out = s.get("out", c.out.clone(), "-".to_string())?;
    let m = manifest(s, seed);
    v["manifest"] = serde_json::to_value(&m).expect("manifest serializes");
    let text = serde_json::to_string_pretty(&v).expect("json serializes") + "\n";
    emit(&out, text.as_bytes(), &m)
}

fn config_json(cfg: &FieldConfig) -> Value {
    json!({ "omega": cfg.omega, "b0": cfg.b0, "theta": cfg.theta })
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::FisherScan(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let omega0 = s.positive("omega0", a.omega0, Some(1.0))?;
            let x = s.axis("x-axis", a.x_axis, "omega:-30:30:201")?;
            let y = s.axis("y-axis", a.y_axis, "b0:0:10:201")?;
            let acc = s.positive("accuracy", a.accuracy, Some(1e-3))?;
            let t = scan::fisher_scan(&cfg, omega0, [x, y], acc)?;
            emit_table(&mut s, &a.common, &t)
        }
        Command::MlRoots(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let x = s.axis("axis", a.axis, "b0:0.05:10:200")?;
            let y = s.axis("xbar-axis", a.xbar_axis, "xbar:0.005:0.995:199")?;
            let t = scan::ml_root_scan(&cfg, [x, y])?;
            emit_table(&mut s, &a.common, &t)
        }
        Command::BayesScan(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let mut p = a.prior.clone();
            p.lower = p.lower.or(s.opt("lower", None)?).or(Some(1.5));
            p.upper = p.upper.or(s.opt("upper", None)?).or(Some(5.0));
            let prior = s.prior(&p, &cfg, PriorKind::Uniform)?;
            let n = s.get("n", a.n, 1)?;
            if n == 0 {
                return usage("--n must be at least 1");
            }
            let x = s.axis("x-axis", a.x_axis, "omega:-30:30:201")?;
            let y = s.axis("y-axis", a.y_axis, "b0:0.05:10:200")?;
            let t = scan::bayes_scan(&cfg, &prior, [x, y], n)?;
            emit_table(&mut s, &a.common, &t)
        }
        Command::MmseCurve(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let kinds = s.get("priors", a.priors, "uniform,jeffreys,gaussian".to_string())?;
            let mut priors = Vec::new();
            for k in kinds.split(',').map(str::trim) {
                let kind = PriorKind::from_str(k).map_err(|_| Failure::Usage(format!("--priors: unknown kind '{k}'")))?;
                priors.push(s.build_prior(kind, &cfg, a.lower, a.upper, a.mean, a.sigma)?);
            }
            let n = s.positive("n", a.n, Some(8.0))?;
            let axis = s.axis("xbar-axis", a.xbar_axis, "xbar:0:1:401")?;
            let t = scan::mmse_curve(&cfg, &priors, n, axis)?;
            emit_table(&mut s, &a.common, &t)
        }
        Command::MapCurve(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let prior = s.prior(&a.prior, &cfg, PriorKind::Gaussian)?;
            let n = s.positive("n", a.n, Some(8.0))?;
            let axis = s.axis("omega0-axis", a.omega0_axis, "omega0:0.1:20:401")?;
            let t = scan::map_curve(&cfg, &prior, n, axis)?;
            emit_table(&mut s, &a.common, &t)
        }
        Command::Estimate(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let n: u64 = s.require("n", a.n)?;
            let k: u64 = s.require("k", a.k)?;
            if n == 0 {
                return usage("--n must be at least 1");
            }
            if k > n {
                return usage(format!("--k must not exceed --n (got k = {k}, n = {n})"));
            }
            let data = Dataset::new(n, k)?;
            let xbar = frequentist::mvu_p1(&data)?;
            match a.kind.as_str() {
                "ml" => {
                    // all-or-nothing counts are reported as such before any inversion
                    if k == 0 || k == n {
                        return Err(Error::DegenerateData { xbar }.into());
                    }
                    let r = frequentist::ml_estimate(xbar, &cfg)?;
                    let v = json!({ "roots": r.roots, "ambiguity": r.ambiguity, "xbar": xbar, "config": config_json(&cfg) });
                    emit_json(&mut s, &a.common, v, None)
                }
                "mmse" | "map" => {
                    let prior = s.prior(&a.prior, &cfg, PriorKind::Uniform)?;
                    let spec = PosteriorSpec::new(data, cfg, prior);
                    let mut v = json!({ "xbar": xbar, "n": n, "k": k, "config": config_json(&cfg) });
                    if a.kind == "mmse" {
                        v["estimate"] = json!(posterior::mmse(&spec)?);
                    } else {
                        let g = s.get("grid-points", a.grid_points, 2001)?;
                        if g < 101 {
                            return usage(format!("--grid-points must be at least 101 (got {g})"));
                        }
                        let r = posterior::map(&spec, g)?;
                        v["maxima"] = serde_json::to_value(&r.maxima).expect("json serializes");
                        v["estimate"] = json!(r.global().map(|m| m.value));
                    }
                    emit_json(&mut s, &a.common, v, None)
                }
                other => usage(format!("estimate kind must be ml, mmse or map (got '{other}')")),
            }
        }
        Command::Simulate(a) => {
            let mut s = Settings::load(a.common.config.as_deref())?;
            let cfg = s.field(&a.common)?;
            let omega0_true = s.positive("omega0-true", a.omega0_true, None)?;
            let n: u64 = s.require("n", a.n)?;
            let trials: usize = s.get("trials", a.trials, 100)?;
            let seed: u64 = s.get("seed", a.seed, 0)?;
            if n == 0 || trials == 0 {
                return usage("--n and --trials must be at least 1");
            }
            let est = s.get("estimator", a.estimator, "ml".to_string())?;
            let estimator =
                Estimator::from_str(&est).map_err(|_| Failure::Usage(format!("--estimator: unknown '{est}'")))?;
            let prior = if estimator == Estimator::Ml && a.prior.prior.is_none() && !s.file.contains_key("prior") {
                None
            } else {
                Some(s.prior(&a.prior, &cfg, PriorKind::Uniform)?)
            };
            let tc = TrialConfig { cfg, omega0_true, n, trials, seed, estimator, prior };
            let report = montecarlo::run_trials(&tc)?;
            let v = json!({ "report": report, "config": config_json(&cfg) });
            emit_json(&mut s, &a.common, v, Some(seed))
        }
    }
}

fn init_threads() -> Res<()> {
    if let Ok(v) = std::env::var("RABI_EST_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::Usage(format!("RABI_EST_THREADS must be a positive integer (got '{v}')")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("RABI_EST_THREADS: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match init_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e} ({e:?})");
            ExitCode::from(if e.is_domain() { EXIT_DOMAIN } else { EXIT_NUMERICAL })
        }
    }
}
