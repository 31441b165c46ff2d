use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: u8 = 0;
/// Malformed model, config or arguments; also analyses the model cannot support.
pub const EXIT_INPUT: u8 = 2;
/// The problem exceeds an enumeration or memory cap.
pub const EXIT_CAPACITY: u8 = 3;
/// The report could not be written.
pub const EXIT_OUTPUT: u8 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error at {field}: {message}")]
    Schema { field: String, message: String },
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Input(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Output(_) => EXIT_OUTPUT,
        }
    }
}

impl From<shapnet::Error> for CliError {
    fn from(e: shapnet::Error) -> Self {
        match e {
            shapnet::Error::Capacity(m) => CliError::Capacity(m),
            other => CliError::Input(other.to_string()),
        }
    }
}
