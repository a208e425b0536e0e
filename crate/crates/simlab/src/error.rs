use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Model(#[from] macoff_core::Error),

    #[error(transparent)]
    Oracle(#[from] macoff_oracle::OracleError),
}

pub type Result<T> = std::result::Result<T, SimError>;
