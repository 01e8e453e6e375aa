//! Error classification and process exit codes.

use layerlab_core::cross_section::CrossSectionError;
use layerlab_core::discretization::DiscretizationError;
use layerlab_core::geometry::GeometryError;
use layerlab_core::spectral::SpectralError;
use layerlab_core::weyl::WeylError;
use thiserror::Error;

/// Process exit codes: 0 ok, 2 schema error, 3 solver failure,
/// 4 invariant/validation failure, 1 anything else.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Other = 1,
    Schema = 2,
    Solver = 3,
    Invariant = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("solver failure in {context}: {message}")]
    Solver { context: String, message: String },
    #[error("invariant failure in {context}: {message}")]
    Invariant { context: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Schema { .. } => ExitCode::Schema,
            CliError::Solver { .. } => ExitCode::Solver,
            CliError::Invariant { .. } => ExitCode::Invariant,
            CliError::Io(_) => ExitCode::Other,
        }
    }

    pub fn solver(context: &str, e: impl std::fmt::Display) -> Self {
        CliError::Solver { context: context.into(), message: e.to_string() }
    }

    pub fn invariant(context: &str, e: impl std::fmt::Display) -> Self {
        CliError::Invariant { context: context.into(), message: e.to_string() }
    }
}

/// Map core errors with scenario context attached.
pub fn from_spectral(context: &str, e: SpectralError) -> CliError {
    CliError::Solver { context: context.into(), message: e.to_string() }
}

pub fn from_geometry(context: &str, e: GeometryError) -> CliError {
    CliError::Invariant { context: context.into(), message: e.to_string() }
}

pub fn from_cross_section(context: &str, e: CrossSectionError) -> CliError {
    match e {
        CrossSectionError::Solver(s) => from_spectral(context, s),
        other => CliError::Invariant { context: context.into(), message: other.to_string() },
    }
}

pub fn from_discretization(context: &str, e: DiscretizationError) -> CliError {
    match e {
        DiscretizationError::Solver(s) => from_spectral(context, s),
        other => CliError::Invariant { context: context.into(), message: other.to_string() },
    }
}

pub fn from_weyl(context: &str, e: WeylError) -> CliError {
    match e {
        WeylError::Solver(s) => from_spectral(context, s),
        other => CliError::Invariant { context: context.into(), message: other.to_string() },
    }
}
