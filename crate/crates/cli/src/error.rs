use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<spikeid::Error> for CliError {
    fn from(e: spikeid::Error) -> Self {
        use spikeid::Error as E;
        match e {
            E::NonFinite { .. } | E::Diverged { .. } | E::Degenerate(_) => CliError::Numerical(e.to_string()),
            E::Invalid(_) | E::Parse(_) | E::Json(_) | E::Shape { .. } => CliError::Config(e.to_string()),
            E::Io(io) => CliError::Io(io),
            other => CliError::Other(other.to_string()),
        }
    }
}
