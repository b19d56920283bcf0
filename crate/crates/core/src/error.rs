//! Crate-wide error tagged with the module that raised it.

use thiserror::Error;

use crate::abstraction::AbstractionError;
use crate::evaluation::EvaluationError;
use crate::export::ExportError;
use crate::gridworld::{GraphError, ScenarioError};
use crate::model::ModelError;
use crate::solver::SolverError;
use crate::worldmodel::WorldError;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("gridworld: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("gridworld: {0}")]
    Graph(#[from] GraphError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("worldmodel: {0}")]
    World(#[from] WorldError),
    #[error("abstraction: {0}")]
    Abstraction(#[from] AbstractionError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("evaluation: {0}")]
    Evaluation(#[from] EvaluationError),
    #[error("export: {0}")]
    Export(#[from] ExportError),
    #[error("io: {path}: {message}")]
    Io { path: String, message: String },
    #[error("bench: {0}")]
    Bench(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: impl std::fmt::Display, e: std::io::Error) -> Error {
        Error::Io {
            path: path.to_string(),
            message: e.to_string(),
        }
    }

    /// Whether the error stems from the file system rather than the inputs
    /// or the computation.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Export(ExportError::Io { .. }))
    }

    /// Whether the error reports malformed or inconsistent user input.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::Scenario(_)
                | Error::Graph(_)
                | Error::Bench(_)
                | Error::Usage(_)
                | Error::Export(ExportError::Parse { .. })
                | Error::Abstraction(AbstractionError::Partition(_))
                | Error::Abstraction(AbstractionError::OpponentCount(_))
                | Error::Solver(SolverError::BadThreshold(_))
                | Error::Solver(SolverError::BadTolerance(_))
        )
    }
}
