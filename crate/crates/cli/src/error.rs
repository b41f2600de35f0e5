use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] bilinear_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Exit code for a run that stopped with this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Core(bilinear_core::Error::Io(_)) => 1,
            _ => 2,
        }
    }
}
