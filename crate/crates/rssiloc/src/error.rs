use std::path::PathBuf;

use rssiloc_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    /// A core error pinned to a line of an input file.
    #[error("line {line}: {source}")]
    AtLine { line: u64, source: CoreError },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error("malformed report: {0}")]
    Report(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// The underlying core error, if there is one.
    pub fn core(&self) -> Option<&CoreError> {
        match self {
            Error::Core(e) | Error::AtLine { source: e, .. } => Some(e),
            _ => None,
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            _ => match self.core() {
                Some(CoreError::SolveFailure | CoreError::LambdaOverflow | CoreError::NonFinite(_)) => 3,
                _ => 2,
            },
        }
    }
}
