use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(clap::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("computation error: {0}")]
    Compute(#[from] purify_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) => e.exit_code(),
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Output(_) => 3,
        }
    }
}
