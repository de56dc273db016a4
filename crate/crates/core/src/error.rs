use thiserror::Error;

/// Errors produced by constructors and numerical routines.
///
/// `Invalid` covers contract violations (bad parameters, malformed input);
/// `Numerical` covers runtime failures of otherwise well-posed computations
/// (non-finite matrix entries, eigenvector iteration that will not converge).
/// The distinction matters to callers that map errors onto exit codes.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {message}")]
    Invalid { field: &'static str, message: String },

    #[error("numerical failure in {context}: {message}")]
    Numerical {
        context: &'static str,
        message: String,
    },
}

impl Error {
    pub fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            message: message.into(),
        }
    }

    pub fn numerical(context: &'static str, message: impl Into<String>) -> Self {
        Error::Numerical {
            context,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
