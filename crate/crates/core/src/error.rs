use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("density value must be nonnegative, got {0}")]
    NegativeDensity(f64),

    #[error("invalid domain [{lower}, {upper}]")]
    InvalidDomain { lower: f64, upper: f64 },

    #[error("quadrature order must be at least 2, got {0}")]
    QuadratureOrder(usize),

    #[error("quadrature rule covers [{rule_lower}, {rule_upper}] but the density lives on [{lower}, {upper}]")]
    DomainMismatch {
        rule_lower: f64,
        rule_upper: f64,
        lower: f64,
        upper: f64,
    },

    #[error("root bracket [{lo}, {hi}] does not straddle zero (f(lo) = {f_lo}, f(hi) = {f_hi})")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("search interval is empty: lo = {lo} >= hi = {hi}")]
    EmptyInterval { lo: f64, hi: f64 },

    #[error("no density in the class satisfies the constraints at theta = {theta} (best floor {best_floor:e} < gamma {gamma:e})")]
    EmptyFeasibleSet {
        theta: f64,
        best_floor: f64,
        gamma: f64,
    },

    #[error("every point of the outer grid is infeasible")]
    AllInfeasible,

    #[error("sample point {x} lies outside the support [{lower}, {upper}]")]
    OutsideSupport { x: f64, lower: f64, upper: f64 },

    #[error("sample size must be positive")]
    EmptySample,

    #[error("{0}")]
    Config(String),

    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("estimation exceeded its time budget")]
    Timeout,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
