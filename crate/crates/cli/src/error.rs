use latentscope_core::Error as CoreError;
use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

/// Stage failures, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// A missing or malformed input file, or an unwritable output.
    #[error("input error: {0}")]
    Input(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn config(key: &str, reason: impl std::fmt::Display) -> Self {
        CliError::Config(format!("invalid config `{key}`: {reason}"))
    }

    /// 2 for config and input errors, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config { .. } => CliError::Config(e.to_string()),
            CoreError::Numeric(_) => CliError::Numeric(e.to_string()),
            CoreError::Param(_) | CoreError::Shape(_) | CoreError::Format(_) | CoreError::Io(_) => {
                CliError::Input(e.to_string())
            }
        }
    }
}
