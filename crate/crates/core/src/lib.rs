//! Kinematics, statics, stability, actuation-transmission and inverse-dynamics
//! models of a V-shaped two-link in-pipe robot with a separately actuated
//! spherical roll wheel, plus the parameter studies built on them.
//!
//! Lengths are millimetres and angles radians unless a name says otherwise;
//! configuration files and reports use degrees.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod config;
pub mod dynamics;
pub mod error;
pub mod explorer;
pub mod geometry;
pub mod report;
pub mod stability;
pub mod statics;
pub mod studies;
pub mod svg;
pub mod transmission;

pub use error::ModelError;

/// Top-level error for configuration, I/O and study execution.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(serde_json::Error),

    #[error("study {study}: {source}")]
    Study {
        study: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    /// The innermost model error, if any.
    pub fn model(&self) -> Option<&ModelError> {
        match self {
            Error::Model(e) => Some(e),
            Error::Study { source, .. } => source.model(),
            _ => None,
        }
    }

    /// Machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Json(_) => "io",
            Error::Model(e) => e.kind(),
            Error::Study { source, .. } => source.kind(),
        }
    }

    /// 1 for invalid input, 2 for numerical or model failures.
    pub fn exit_code(&self) -> i32 {
        match self.model() {
            Some(e) if !e.is_validation() => 2,
            _ => 1,
        }
    }
}
