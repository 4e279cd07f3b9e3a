use std::fmt;

use fpopt_core::Error;

/// Process exit codes.
pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const BAD_CONSTANT: u8 = 3;
    pub const VALIDATION: u8 = 4;
    pub const RATE_TOO_LARGE: u8 = 5;
    pub const MIXED_EQUILIBRIA: u8 = 6;
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(exit::PARSE, message)
    }

    /// Errors while turning a problem file into core objects: bad constants
    /// and analysis failures keep their own codes, anything else means the
    /// input itself is malformed.
    pub fn from_input(context: &str, err: Error) -> Self {
        match err {
            Error::InvalidConstant(_) | Error::RateTooLarge { .. } | Error::MixedEquilibria => err.into(),
            other => Self::parse(format!("{context}: {other}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidConstant(_) => exit::BAD_CONSTANT,
            Error::RateTooLarge { .. } => exit::RATE_TOO_LARGE,
            Error::MixedEquilibria => exit::MIXED_EQUILIBRIA,
            _ => exit::FAILURE,
        };
        Self::new(code, err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self::new(exit::FAILURE, err.to_string())
    }
}
