//! Library side of the `proxyforge` binary: configuration, the artifact
//! store, and one module per subcommand. The binary is a thin clap wrapper
//! so everything here stays testable in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod store;

pub use config::{Overrides, PipelineConfig};
pub use error::CliError;
pub use store::RunDir;
