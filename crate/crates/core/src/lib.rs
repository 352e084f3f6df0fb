//! Estimation of the transition frequency of a two-level system driven by a
//! gyrating magnetic field, from binary photon-count records.
//!
//! The crate is layered bottom-up:
//!
//! * [`numerics`]: quadrature, bracketed roots, inverse sinc, local maxima.
//! * [`dynamics`]: closed-form Rabi amplitudes and the detection probability.
//! * [`fisher`]: classical/quantum Fisher information and the SLD operator.
//! * [`priors`]: uniform, Jeffreys and Gaussian priors over the transition frequency.
//! * [`frequentist`]: MVU estimator of the detection probability and ML inversion.
//! * [`posterior`]: posterior quadrature, MMSE, MAP and Bayesian Fisher information.
//! * [`montecarlo`]: seeded simulation and estimator-performance trials.
//! * [`scan`]: grid scans emitting [`scan::GridTable`]s.
//! * [`golden`]: regression fixtures and their column-wise verification.
//!
//! All quantities are dimensionless with the detector gate time normalized to one.

pub mod dynamics;
pub mod error;
pub mod fisher;
pub mod frequentist;
pub mod golden;
pub mod montecarlo;
pub mod numerics;
pub mod posterior;
pub mod priors;
pub mod scan;

pub use dynamics::{DensityState, FieldConfig};
pub use error::{Error, Result};
pub use fisher::FisherPoint;
pub use frequentist::{Ambiguity, Dataset, EstimateResult, RootStatus, ValidityReport};
pub use numerics::{Bracket, Tolerance};
pub use posterior::{Counts, MapResult, PosteriorSpec};
pub use priors::{Prior, PriorKind, SupportWindow};

/// Version string embedded in run manifests.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
