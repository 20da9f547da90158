use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GyronError {
    #[error("l={l} and m={m} are not coprime")]
    NonCoprime { l: i64, m: i64 },

    #[error("{0} must be positive")]
    NonPositive(&'static str),

    #[error("invalid representation label: {0}")]
    InvalidLabel(String),

    #[error("matrix entry ({row}, {col}) overflows f64")]
    Overflow { row: usize, col: usize },

    #[error("Fock cutoff {got} too small, need at least {needed}")]
    CutoffTooSmall { needed: u32, got: u32 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNotConverged(String),

    #[error("classical form density is singular at the pole x=0 when l>1")]
    SingularAtPole,

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("symbol has {minima} local minima and {maxima} local maxima; level sets are not connected")]
    MultiWell { minima: usize, maxima: usize },

    #[error("could not bracket a root for area target {target}")]
    RootBracketFailure { target: f64 },

    #[error("normal ordering supports at most {max} ladder factors, got {got}")]
    TooManyFactors { max: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, GyronError>;
