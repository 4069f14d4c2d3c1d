//! File formats, parallel Monte Carlo and the command bodies behind the
//! `gwmaxdeg` binary.

pub mod check;
pub mod commands;
mod error;
pub mod family;
pub mod manifest;
pub mod output;
pub mod parallel;

pub use error::CliError;
