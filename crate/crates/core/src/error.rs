use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The information matrix is singular or indefinite; the geometry cannot
    /// localize the user.
    #[error("unlocalizable configuration: information matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("degenerate geometry: user lies {range:e} m from anchor {anchor}")]
    DegenerateGeometry { anchor: usize, range: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("port index {index} out of range for a layout with {len} ports")]
    IndexOutOfRange { index: usize, len: usize },

    /// Greedy start matrix is singular and no regularization was requested.
    #[error("base information matrix is singular (ToA-only geometry cannot localize)")]
    SingularBase,

    #[error("relaxed solver did not converge: duality gap {gap:e} after {iterations} iterations")]
    Nonconvergence { gap: f64, iterations: usize },

    #[error("exhaustive search over {count} subsets exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },

    #[error("parse error at line {line} ({field}): {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("audit failed: {0}")]
    Audit(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Validation(_) | Error::InvalidConfig(_) => 1,
            Error::Io(_) => 3,
            _ => 2,
        }
    }
}
