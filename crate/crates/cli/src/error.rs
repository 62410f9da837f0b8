use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Lib(#[from] eqtest::Error),
}

impl CliError {
    /// 2 for usage and validation problems, 3 for degenerate data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(eqtest::Error::DegenerateData(_)) => 3,
            CliError::Lib(eqtest::Error::Singular { .. } | eqtest::Error::NoConvergence(_)) => 1,
            _ => 2,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
