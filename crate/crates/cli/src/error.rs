use std::fmt;
use std::path::Path;

/// Command failure, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad input or configuration (exit code 1).
    Validation(String),
    /// Numerical or algorithmic failure (exit code 2).
    Runtime(String),
    /// File system failure (exit code 3).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    /// Attaches the offending file to a core error.
    pub(crate) fn in_file(path: &Path, err: kspin::Error) -> Self {
        match CliError::from(err) {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            CliError::Runtime(m) => CliError::Runtime(format!("{}: {m}", path.display())),
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<kspin::Error> for CliError {
    fn from(err: kspin::Error) -> Self {
        if let kspin::Error::Io(e) = &err {
            return CliError::Io(e.to_string());
        }
        // an over-sized request is the caller's to fix
        if err.is_validation() || matches!(err, kspin::Error::Capability(_)) {
            CliError::Validation(err.to_string())
        } else {
            CliError::Runtime(err.to_string())
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            CliError::Io(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            CliError::Io(err.to_string())
        } else {
            CliError::Validation(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
