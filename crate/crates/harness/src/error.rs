use std::path::PathBuf;

use dbmlab_core::dbm::DbmError;
use dbmlab_core::freeconv::FreeConvError;
use dbmlab_core::linalg::LinalgError;
use dbmlab_core::stats::StatsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },
    #[error("invalid config field `{field}`{}: {reason}", line_suffix(*.line))]
    ConfigInvalid {
        field: String,
        line: Option<usize>,
        reason: String,
    },
    #[error("unknown experiment kind `{0}`")]
    UnknownKind(String),
    #[error("{kind}: {source}")]
    Experiment {
        kind: &'static str,
        #[source]
        source: Downstream,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("output name `{0}` would leave the output directory")]
    OutsideOutput(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

/// Errors of the numerical core, wrapped with the experiment kind.
#[derive(Debug, Error)]
pub enum Downstream {
    #[error(transparent)]
    FreeConv(#[from] FreeConvError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Dbm(#[from] DbmError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Attaches the experiment kind to core errors.
pub(crate) trait Context<T> {
    fn ctx(self, kind: &'static str) -> Result<T, HarnessError>;
}

impl<T, E: Into<Downstream>> Context<T> for Result<T, E> {
    fn ctx(self, kind: &'static str) -> Result<T, HarnessError> {
        self.map_err(|e| HarnessError::Experiment {
            kind,
            source: e.into(),
        })
    }
}
