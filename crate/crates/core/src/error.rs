use thiserror::Error;

pub type Result<T, E = UpliftError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum UpliftError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Propensity outside the open interval (0, 1): every unit must have a
    /// non-zero chance of both treatment and control.
    #[error("unit {unit_id}: propensity {value} violates the overlap condition 0 < q < 1")]
    OverlapViolation { unit_id: u64, value: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range 1..={len}")]
    Bounds { index: usize, len: usize },

    #[error("x = {requested} lies beyond the curve extent {extent}")]
    BeyondExtent { requested: f64, extent: f64 },

    /// The local treated fraction hit 0 or 1, so one of the two IPS
    /// denominators vanishes. Widen the kernel.
    #[error("degenerate kernel window at k = {k}: local treated fraction is {treated_fraction}")]
    DegenerateWindow { k: usize, treated_fraction: f64 },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl UpliftError {
    /// Whether the error stems from bad input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, UpliftError::Io(_) | UpliftError::DegenerateWindow { .. })
    }
}
