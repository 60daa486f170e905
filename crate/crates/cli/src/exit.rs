use std::fmt;

use lidar_mot::Error;

/// Bad flags, unreadable or invalid configuration.
pub const EXIT_USAGE: u8 = 1;
/// Missing, unreadable or malformed input data.
pub const EXIT_DATA: u8 = 2;

/// An error paired with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Self {
        CliError {
            code: EXIT_DATA,
            error: error.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            CliError::data(e)
        } else {
            CliError::usage(e)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}
