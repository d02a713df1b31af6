use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid probability vector: {0}")]
    InvalidPmf(String),

    #[error("invalid joint distribution: {0}")]
    InvalidJoint(String),

    #[error("invalid channel matrix: {0}")]
    InvalidChannel(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("invalid input ensemble: {0}")]
    InvalidEnsemble(String),

    #[error(
        "iteration did not converge after {iterations} steps: \
         best value {best_bits} bits, certified bracket [{lower_bits}, {upper_bits}] bits"
    )]
    NonConvergence {
        iterations: usize,
        best_bits: f64,
        lower_bits: f64,
        upper_bits: f64,
    },

    #[error(
        "capacity solver did not certify within {iterations} outer steps; \
         best solution reaches {best_bits} bits with max KKT violation {max_violation} bits"
    )]
    SolverNonConvergence {
        iterations: usize,
        best_bits: f64,
        max_violation: f64,
        best: Box<crate::solver::CapacitySolution>,
    },

    #[error("quadrature reached tolerance {achieved:.3e} but {requested:.3e} was requested")]
    QuadratureTolerance { requested: f64, achieved: f64 },

    #[error("count truncation exceeded the hard cap of {cap} at theta={theta} s, delta={delta} s")]
    TruncationCap { theta: f64, delta: f64, cap: usize },

    #[error("cdf inversion failed: density is flat on [{lo}, {hi}] around quantile {quantile}")]
    FlatDensityRegion { lo: f64, hi: f64, quantile: f64 },

    #[error("uncertified capacity solution: {0}")]
    Uncertified(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of an iterative numerical method (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::SolverNonConvergence { .. }
                | Error::QuadratureTolerance { .. }
                | Error::TruncationCap { .. }
        )
    }
}
