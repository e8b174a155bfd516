use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("oracle check failed: {0}")]
    Oracle(String),

    #[error(transparent)]
    Core(talbot_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(talbot_core::Error::Config(_)) => 2,
            CliError::Oracle(_) => 3,
            CliError::Core(talbot_core::Error::OracleFailure(_)) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<talbot_core::Error> for CliError {
    fn from(e: talbot_core::Error) -> Self {
        CliError::Core(e)
    }
}
