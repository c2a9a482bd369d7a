use thiserror::Error;

/// Errors raised by the simulation and reconstruction pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QptError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("degenerate basis overlap {magnitude:.3e} at index {index:?}")]
    DegenerateOverlap { index: [usize; 4], magnitude: f64 },

    #[error("unknown channel `{0}`")]
    UnknownChannel(String),

    #[error("parameter `{name}` = {value} outside [{lo}, {hi}]")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("singular inversion: {0}")]
    SingularInversion(String),

    #[error("post-selection starved: p_f = {p_f:.3e}")]
    PostSelectionStarved { p_f: f64 },

    #[error("Fock truncation too small: n_max = {n_max}, need at least {min}")]
    Truncation { n_max: usize, min: usize },

    #[error("joint dimension {dim} exceeds cap {cap}")]
    ResourceCap { dim: usize, cap: usize },

    #[error("invalid ancilla amplitudes: {0}")]
    InvalidGamma(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("ill-conditioned system (condition number {cond:.3e}): {context}")]
    IllConditioned { cond: f64, context: String },
}

pub type Result<T> = std::result::Result<T, QptError>;
