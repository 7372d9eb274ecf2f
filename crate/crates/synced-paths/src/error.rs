//! Error type shared across the crate.

use std::fmt;
use std::io;
use std::path::PathBuf;

/// Everything that can go wrong while building or running a simulation.
#[derive(Debug)]
pub enum Error {
    /// A model, gate, or scenario definition is structurally invalid.
    Config(String),
    /// A scenario file or trace file failed to parse.
    Parse { line: usize, message: String },
    /// The simulation produced a non-finite value and was aborted.
    Numeric { t: f64, column: String },
    /// A file could not be read or written.
    Io { path: PathBuf, source: io::Error },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Numeric { t, column } => {
                write!(f, "non-finite value in column {column} at t = {t} s")
            }
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse { .. } => 2,
            Error::Numeric { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
