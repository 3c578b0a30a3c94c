use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}:{line}: unknown {kind} `{symbol}`", path.display())]
    UnknownSymbol {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        symbol: String,
    },

    #[error("unknown {kind} `{symbol}`{}", format_suggestions(suggestions))]
    UnknownName {
        kind: &'static str,
        symbol: String,
        suggestions: Vec<String>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint {}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },

    #[error("checkpoint matrix `{matrix}` has shape {found_rows}x{found_cols}, manifest says {rows}x{cols}")]
    DimensionMismatch {
        matrix: String,
        rows: usize,
        cols: usize,
        found_rows: usize,
        found_cols: usize,
    },

    #[error("non-finite {objective} loss at epoch {epoch}, batch {batch}")]
    NonFinite {
        objective: &'static str,
        epoch: usize,
        batch: usize,
    },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("sampling: {0}")]
    Sampling(String),
}

fn format_suggestions(suggestions: &[String]) -> String {
    if suggestions.is_empty() {
        String::new()
    } else {
        format!("; did you mean one of: {}", suggestions.join(", "))
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn checkpoint(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Checkpoint {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 1 usage/config, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 1,
            Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
