//! File formats and command implementations behind the `arpam` binary.

pub mod args;
pub mod commands;
pub mod error;
pub mod matrix_csv;
pub mod pav1;
pub mod pgm;
pub mod runconfig;

pub use error::{CliError, CliResult};
