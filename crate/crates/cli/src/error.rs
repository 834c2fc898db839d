use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(gaussian_tcl::Error),
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    /// Process exit code. Output failures use 1, outside the documented set.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<gaussian_tcl::Error> for CliError {
    fn from(e: gaussian_tcl::Error) -> Self {
        use gaussian_tcl::Error as E;
        match e {
            E::InvalidParams(msg) => CliError::Config(msg),
            E::Unsatisfiable(msg) => CliError::Config(format!("unsatisfiable: {msg}")),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
