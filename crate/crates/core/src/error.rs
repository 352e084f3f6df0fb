use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("numerical procedure did not converge: {0}")]
    NonConvergence(String),
    #[error("function values at the bracket ends have the same sign ({lo} .. {hi})")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("argument outside its domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("detection probability is degenerate (0 or 1) at omega0 = {omega0}")]
    DegenerateProbability { omega0: f64 },
    #[error("prior support is degenerate: normalizer {normalizer:e} over [{lower}, {upper}]")]
    DegenerateSupport { normalizer: f64, lower: f64, upper: f64 },
    #[error("sinc inversion undefined: sqrt(xbar)/(b0 |sin theta|) = {ratio} exceeds 1")]
    SincDomainViolated { ratio: f64 },
    #[error("no real distinct roots: S^2 - b0^2 sin^2 theta = {discriminant} <= 0")]
    NoRealRoot { discriminant: f64 },
    #[error("degenerate data: xbar = {xbar} carries no information about omega0")]
    DegenerateData { xbar: f64 },
    #[error("posterior evidence underflowed to zero")]
    EvidenceUnderflow,
    #[error("all {trials} trials were excluded (degenerate or ambiguous)")]
    AllTrialsDegenerate { trials: usize },
    #[error("golden file missing: {0}")]
    MissingGolden(String),
    #[error("malformed golden data: {0}")]
    MalformedGolden(String),
}

impl Error {
    /// True for errors caused by arguments or data outside the model's domain,
    /// as opposed to numerical failures.
    pub fn is_domain(&self) -> bool {
        !matches!(self, Error::NonConvergence(_) | Error::EvidenceUnderflow)
    }
}
