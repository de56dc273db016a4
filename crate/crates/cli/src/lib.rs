//! Library half of the `doubling` binary: configuration, output writers,
//! and the command implementations. The binary itself is a thin flag parser
//! on top.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<doubling_core::Error> for CliError {
    fn from(e: doubling_core::Error) -> Self {
        match e {
            doubling_core::Error::Invalid { .. } => CliError::Validation(e.to_string()),
            doubling_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
