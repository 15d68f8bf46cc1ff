//! Command-line front end: state files, measurement files, report rendering
//! and the subcommands behind the `tripneg` binary.

pub mod commands;
pub mod measurements;
pub mod render;
pub mod statefile;
pub mod table1;

pub use commands::{run, Cli, CliError, Output};

/// Shortest form that still carries 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}
