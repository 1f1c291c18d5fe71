//! Error channel with the exit-code split: usage and configuration
//! problems exit 1, runtime failures exit 2.

use std::fmt;

/// Deliberately not a `std::error::Error`: that keeps the blanket
/// conversion below coherent, the same trade anyhow makes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration.
    Usage(String),
    /// The pipeline itself failed.
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(anyhow::anyhow!(msg.into()))
    }

    pub fn is_usage(&self) -> bool {
        matches!(self, CliError::Usage(_))
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Runtime(err) => write!(f, "{err:#}"),
        }
    }
}

impl<E> From<E> for CliError
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn from(err: E) -> Self {
        CliError::Runtime(anyhow::Error::new(err))
    }
}
