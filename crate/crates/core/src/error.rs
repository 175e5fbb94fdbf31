use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("rank mismatch: {0}")]
    Rank(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("coefficients are not Hermitian symmetric (defect {defect:e} relative)")]
    SymmetryViolation { defect: f64 },

    #[error("grid too coarse: only {shells} dyadic shells resolvable, need at least 4")]
    InsufficientResolution { shells: usize },

    #[error("dyadic index {j} outside resolvable range [{min}, {max}]")]
    ShellIndex { j: i32, min: i32, max: i32 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("vacuum: minimum density {min_density:e} at grid index {index} is below floor {floor:e}")]
    Vacuum {
        min_density: f64,
        index: usize,
        floor: f64,
    },

    #[error("norm {norm:e} exceeds the smallness threshold {threshold:e}")]
    OutOfRegime { norm: f64, threshold: f64 },

    #[error("config line {line}: key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
