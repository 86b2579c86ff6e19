use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("argument outside the objective domain: {0}")]
    Domain(String),
    #[error("stationary distribution is not unique: {classes} closed classes")]
    NonUniqueStationary { classes: usize },
    #[error("could not generate a communicating instance after {attempts} attempts")]
    GenerationFailure { attempts: usize },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("{what} did not converge within {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
