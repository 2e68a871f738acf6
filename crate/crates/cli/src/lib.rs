//! Front end for `qlab-core`: JSON inputs, sweeps, worked scenarios and
//! report emission.

pub mod commands;
pub mod examples;
pub mod input;
pub mod sweep;

use qlab_core::error::{Error, ErrorClass};
use serde_json::json;

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_HYPOTHESIS: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => EXIT_VALIDATION,
                ErrorClass::Hypothesis => EXIT_HYPOTHESIS,
                ErrorClass::Numerical => EXIT_NUMERICAL,
            },
        }
    }

    /// Machine-readable form written to stderr.
    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            CliError::Io(_) => "Io",
            CliError::Core(e) => e.kind(),
        };
        json!({ "error": kind, "exit_code": self.exit_code(), "message": self.to_string() })
    }
}
