use std::io;
use std::path::PathBuf;

use slsm::ParamError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] slsm::Error),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("invalid workload: {0}")]
    Workload(String),
    #[error("{path}:{line}: {reason}")]
    Grid {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
