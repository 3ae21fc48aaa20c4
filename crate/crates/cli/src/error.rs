use std::path::PathBuf;

use bellbench::relativity::{CorrelationSymbol, HypothesisSet};
use thiserror::Error;

use crate::config::ScenarioName;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{symbol} is {status} under {hypotheses}; scenario `{scenario}` needs its value")]
    Undefined {
        scenario: ScenarioName,
        symbol: CorrelationSymbol,
        status: &'static str,
        hypotheses: HypothesisSet,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] bellbench::Error),
}

impl CliError {
    /// 2 for bad configuration, 3 for a correlation the hypotheses leave
    /// undefined, 4 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 2,
            CliError::Undefined { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
