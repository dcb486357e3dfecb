//! File formats, policy sources and the validation harness behind the
//! `rlsk` command line tool.

pub mod error;
pub mod formats;
pub mod sources;
pub mod validate;

pub use error::CliError;

pub type Result<T, E = CliError> = std::result::Result<T, E>;
