use thiserror::Error;

/// Errors raised by grid operations, functionals and constructions.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain tag mismatch: expected {expected}, found {found}")]
    DomainTag { expected: String, found: String },

    #[error("truncation: {overflow_mass:.3e} of the mass falls outside the grid box ({context})")]
    Truncation { overflow_mass: f64, context: String },

    #[error("function is not normalized: norm = {norm}")]
    Unnormalized { norm: f64 },

    #[error("system is not orthonormal: max |Gram - I| = {deviation:.3e} exceeds {tolerance:.1e}")]
    NotOrthonormal { deviation: f64, tolerance: f64 },

    #[error("dense budget exceeded: {size} > {limit}")]
    Budget { size: usize, limit: usize },

    #[error("epsilon {0} outside the admissible range")]
    EpsilonOutOfRange(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("support collision: {0}")]
    SupportCollision(String),

    #[error("admission rule violated: {0}")]
    AdmissionRuleViolated(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
