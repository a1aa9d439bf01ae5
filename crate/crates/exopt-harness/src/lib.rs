//! Experiment harness: configured repetitions, aggregation, design selection and export.

pub mod aggregate;
pub mod catalog;
pub mod config;
pub mod export;
pub mod external;
pub mod plot;
pub mod problems;
pub mod runner;

use std::path::{Path, PathBuf};

use exopt::linkage::LinkageError;
use exopt::OptError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("external evaluator: {0}")]
    External(String),
    #[error("records come from different problems or algorithms")]
    MixedProblems,
    #[error("the non-dominated set is empty")]
    EmptySet,
    #[error(transparent)]
    Linkage(#[from] LinkageError),
    #[error(transparent)]
    Opt(#[from] OptError),
}

impl HarnessError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.as_ref().to_path_buf(), source }
    }
}
