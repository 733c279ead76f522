use thiserror::Error;

/// Errors raised by the geometry engine and the command-line front door.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HslError {
    /// A parameter tuple violates one of the constraint clauses of a family.
    #[error("bad parameter: {message} (violated clause \"{clause}\")")]
    BadParameter { clause: String, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("point ({x}, {y}) lies outside the non-periodic domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("lift constraint violated: |herm(z,z) - ({expected})| = {residual:e}")]
    BadLift { expected: f64, residual: f64 },

    #[error("degenerate immersion at ({x}, {y}): Gram determinant {det:e}")]
    DegenerateImmersion { x: f64, y: f64, det: f64 },

    #[error("grid too coarse: {nx}x{ny} (need at least {min} nodes per axis)")]
    GridTooCoarse { nx: usize, ny: usize, min: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl HslError {
    pub fn bad_parameter(clause: impl Into<String>, message: impl Into<String>) -> Self {
        HslError::BadParameter {
            clause: clause.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            HslError::BadParameter { .. }
            | HslError::Unsupported(_)
            | HslError::ContractViolation(_)
            | HslError::OutOfDomain { .. } => 2,
            HslError::BadLift { .. }
            | HslError::DegenerateImmersion { .. }
            | HslError::GridTooCoarse { .. } => 3,
            HslError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for HslError {
    fn from(e: std::io::Error) -> Self {
        HslError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HslError>;
