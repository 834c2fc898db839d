//! Scenario runner for the Gaussian moment solver: configuration, batch
//! execution, CSV/JSON emission and the validation commands.

pub mod benchmark;
pub mod check;
pub mod config;
pub mod convert;
pub mod error;
pub mod output;
pub mod simulate;

pub use error::{CliError, CliResult};
