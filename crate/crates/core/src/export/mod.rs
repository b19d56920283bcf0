//! Model interchange: the explicit text format, Graphviz, PRISM-language
//! emitters and strategy dumps.

mod dot;
mod dump;
mod explicit;
mod prism;

use std::path::Path;

use thiserror::Error;

pub use dot::{emit_dot, DEFAULT_MAX_STATES};
pub use dump::StrategyDump;
pub use explicit::{emit_explicit, parse_explicit};
pub use prism::{emit_prism_pg, emit_prism_pomdp};

use crate::model::ModelError;

#[derive(Debug, Error, PartialEq)]
pub enum ExportError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model has {states} states, more than the limit of {limit}")]
    TooLarge { states: usize, limit: usize },
    #[error("unsupported model shape: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_file(path: &Path, text: &str) -> Result<(), ExportError> {
    let io = |e: std::io::Error| ExportError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

/// Writes the explicit format of `model` to `path`.
pub fn emit_explicit_file(model: &crate::model::ExplicitModel, path: &Path) -> Result<(), ExportError> {
    write_file(path, &emit_explicit(model))
}
