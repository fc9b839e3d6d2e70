use thiserror::Error;

/// Errors raised by the solvers, the ray tracer and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {coordinate} = {value} outside domain {domain}")]
    OutOfDomain {
        coordinate: String,
        value: f64,
        domain: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("solution diverged at t = {time}: {detail}")]
    Divergence { time: f64, detail: String },

    #[error("slice radius {radius} at t = {time} lies outside the r-grid [{r_min}, {r_max}]")]
    SliceOutsideGrid {
        time: f64,
        radius: f64,
        r_min: f64,
        r_max: f64,
    },

    #[error(
        "causal padding needs r_max >= {required_r_max} ({points} grid points > budget {budget})"
    )]
    PaddingUnsatisfiable {
        required_r_max: f64,
        points: usize,
        budget: usize,
    },

    #[error(
        "base field is not a heat solution: max residual {max_residual:e} exceeds {tolerance:e}"
    )]
    NotHeatSolution { max_residual: f64, tolerance: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("unknown experiment `{0}` (see `ricciwave list`)")]
    UnknownExperiment(String),

    #[error("experiment {experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn diverged(time: f64, detail: impl Into<String>) -> Self {
        Error::Divergence {
            time,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Divergence { .. } | Error::NotHeatSolution { .. } => true,
            Error::Experiment { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
