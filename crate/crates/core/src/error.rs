use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A sensor or offset-removed voltage fell outside its legal interval.
    #[error("{field} = {value} is outside [{min}, {max}]")]
    Range {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// An invalid parameter (mapping, circuit, channel or sweep setup).
    #[error("invalid parameter: {0}")]
    Param(String),

    /// A non-finite or otherwise unusable input value.
    #[error("invalid input: {0}")]
    Input(String),

    /// A malformed line in a BOM or configuration file.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }

    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Range { .. } | Error::Param(_) | Error::Input(_) | Error::Parse { .. }
        )
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            _ => false,
        }
    }
}
