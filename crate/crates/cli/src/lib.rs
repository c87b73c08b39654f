//! File formats, configuration and parallel drivers for `infoacq-core`.
//!
//! The `infoacq` binary is a thin shell over [`runner`]; everything it does is
//! callable from here as well.

pub mod config;
pub mod error;
pub mod output;
pub mod runner;
pub mod verify;

pub use config::{CostKind, RunConfig, Settings, SolverKind, SweepParam, SweepSpec};
pub use error::{CliError, CliResult};
