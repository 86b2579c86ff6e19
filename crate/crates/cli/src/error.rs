use std::path::PathBuf;

use modest_core::envs::EnvSpec;
use modest_core::learner::Algorithm;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] modest_core::Error),
    #[error("run {algo} on {env} with seed {seed} failed: {source}")]
    Run { env: EnvSpec, algo: Algorithm, seed: u64, source: modest_core::Error },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed results file: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Single-line error report written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: &'static str,
    pub message: String,
}

fn core_kind(e: &modest_core::Error) -> &'static str {
    use modest_core::Error::*;
    match e {
        InvalidSpec(_) => "invalid-spec",
        InvalidConfig(_) => "invalid-config",
        ShapeMismatch(_) => "shape-mismatch",
        Domain(_) => "domain",
        NonUniqueStationary { .. } => "non-unique-stationary",
        GenerationFailure { .. } => "generation-failure",
        Infeasible => "infeasible",
        Unbounded => "unbounded",
        NonConvergence { .. } => "non-convergence",
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) | CliError::Run { source: e, .. } => core_kind(e),
            CliError::Config(_) => "invalid-config",
            CliError::Malformed(_) | CliError::Csv(_) => "malformed-csv",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "invalid-json",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { error: self.kind(), message: self.to_string() }
    }
}
