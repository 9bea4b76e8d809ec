//! IO, file formats and the command line for outage pattern analysis on top
//! of `protpat-core`.

pub mod commands;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod outages;
pub mod synth;

pub use error::{CliError, Result};
