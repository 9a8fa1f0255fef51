use std::fmt;

use horizon_core::Error;

pub const EXIT_IO: i32 = 1;
pub const EXIT_NO_DETECTION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    NoDetection(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::NoDetection(_) => EXIT_NO_DETECTION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::NoDetection(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NoEdges | Error::ImageTooSmall { .. } | Error::EmptyInput => CliError::NoDetection(msg),
            Error::InvalidParam { .. } | Error::Config(_) | Error::UnsupportedSource(_) => CliError::Usage(msg),
            _ => CliError::Io(msg),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
