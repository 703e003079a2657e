use thiserror::Error;

/// Errors raised by state construction, measurement, and protocol execution.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("register label `{0}` appears in both operands")]
    LabelCollision(String),

    #[error("state norm {norm} deviates from 1 by more than {tolerance:e}")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not unitary: max |U\u{2020}U - I| = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not a valid density operator: {0}")]
    NotDensity(String),

    #[error("observable is degenerate: eigenvalues {0} and {1} are closer than 1e-9")]
    Degenerate(f64, f64),

    #[error("total dimension {0} exceeds the dense-storage cap of {max}", max = crate::state::MAX_TOTAL_DIM)]
    TooLarge(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
