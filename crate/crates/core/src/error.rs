use std::fmt;

/// Diagnostics attached to a quadrature that ran out of subdivisions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureFailure {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

impl fmt::Display for QuadratureFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "integral over [{:.6e}, {:.6e}] stalled at {:.9e} (error estimate {:.3e}) after {} intervals",
            self.lower, self.upper, self.estimate, self.error_estimate, self.intervals
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MacsError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("degenerate geometry: fan angle {phi:.3e} is too small to integrate over")]
    DegenerateGeometry { phi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(QuadratureFailure),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("no critical constants satisfy the target: {0}")]
    Unsolvable(String),

    #[error("solving {band} failed: {message}")]
    BandFailed { band: String, message: String },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("x = {x} lies outside the band interval [{lower}, {upper}]")]
    OutOfInterval { x: f64, lower: f64, upper: f64 },

    #[error("invalid data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MacsError>;
