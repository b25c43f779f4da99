use thiserror::Error;

pub type Result<T> = std::result::Result<T, InlsError>;

#[derive(Debug, Error)]
pub enum InlsError {
    #[error("dimension {0} unsupported: {1}")]
    DimensionUnsupported(u32, &'static str),

    #[error("{module}: {message}")]
    Range { module: &'static str, message: String },

    #[error("degenerate parameters: {0}")]
    Parameter(String),

    #[error("rescaled field leaves the box (lost L2 fraction {lost_fraction:.3e})")]
    Truncation { lost_fraction: f64 },

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds {tolerance:.1e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("energy {energy} exceeds the ground-state energy {limit}")]
    ThresholdExceeded { energy: f64, limit: f64 },

    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("overflow guard tripped: sup|u| = {sup:.3e} at t = {time}")]
    BlowUpOverflow { sup: f64, time: f64 },

    #[error("non-finite samples at t = {0}")]
    NumericalFailure(f64),

    #[error("fields live on different grids")]
    MismatchedGrids,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("growth rate undefined for N*alpha = 4")]
    RateUndefined,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("operation not supported on this geometry: {0}")]
    Unsupported(&'static str),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl InlsError {
    pub(crate) fn range(module: &'static str, message: impl Into<String>) -> Self {
        InlsError::Range {
            module,
            message: message.into(),
        }
    }
}
