use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite matrix entries in {0}")]
    NonFinite(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("Hilbert dimension {dim} exceeds the budget of {budget}")]
    DimensionBudget { dim: usize, budget: usize },

    #[error("degenerate circuit: {0}")]
    DegenerateCircuit(String),

    #[error("resonant input: TLS '{label}' has zero detuning from {against}")]
    Resonant { label: String, against: String },

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("steady state is not unique: kernel dimension {0}")]
    NonUniqueSteadyState(usize),

    #[error("no steady state within tolerance (smallest singular value ratio {0:e})")]
    NoSteadyState(f64),

    #[error("effective detunings differ by {mismatch:e} rad/us; an echo sequence is required")]
    RequiresEcho { mismatch: f64 },

    #[error("unreachable rotation: {0}")]
    UnreachableRotation(String),

    #[error("operator is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
