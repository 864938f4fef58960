use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::ParamError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),

    #[error("empty range: lo > hi")]
    EmptyRange,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// The OS refused to open another file (EMFILE/ENFILE).
    #[error("out of file descriptors opening {path}")]
    FileDescriptors { path: PathBuf },

    #[error("corrupt run file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },

    #[error("unsorted input: {0}")]
    Unsorted(String),

    #[error("bad manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },

    #[error("merge thread panicked")]
    MergePanicked,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        let path = path.into();
        // EMFILE / ENFILE
        match source.raw_os_error() {
            Some(24) | Some(23) => Error::FileDescriptors { path },
            _ => Error::Io { path, source },
        }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::Corrupt {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
