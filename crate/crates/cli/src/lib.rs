//! Command-line front end: model files, reports and subcommands.

pub mod commands;
pub mod error;
pub mod model_file;
pub mod report;

pub use commands::{execute, main_with_args, Cli};
pub use error::{CliError, CliResult};
pub use model_file::{parse_model, serialize_model, ModelFile, ParsedModel};
