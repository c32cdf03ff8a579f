use std::path::{Path, PathBuf};

use cgl_core::io::FormatError;
use cgl_core::solvers::SolverError;
use cgl_core::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: FormatError },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 0 ok, 2 usage/config, 3 IO/parse, 4 infeasible, 5 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Parse { .. } => 3,
            CliError::Infeasible(_) => 4,
            CliError::Numeric(_) => 5,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, source: FormatError) -> Self {
        CliError::Parse { path: path.to_path_buf(), source }
    }

    /// Short tag for per-cell failure records.
    pub fn tag(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Parse { .. } => "parse",
            CliError::Infeasible(_) => "infeasible",
            CliError::Numeric(_) => "numeric",
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Infeasible(_) | SolverError::NoFeasibleEpsilon { .. } => CliError::Infeasible(e.to_string()),
            SolverError::InvalidConfig(_) | SolverError::NotSquare { .. } => CliError::Config(e.to_string()),
            SolverError::Spectral(s) => s.into(),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::EmptyFilter | SpectralError::NonPositiveRate(_) | SpectralError::ZeroTime => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<cgl_core::graphs::GraphError> for CliError {
    fn from(e: cgl_core::graphs::GraphError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<cgl_core::dynamics::DynamicsError> for CliError {
    fn from(e: cgl_core::dynamics::DynamicsError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<cgl_core::metrics::MetricsError> for CliError {
    fn from(e: cgl_core::metrics::MetricsError) -> Self {
        CliError::Numeric(e.to_string())
    }
}
