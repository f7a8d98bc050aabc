//! Configuration, subcommand drivers, the dichotomy sweep and CSV output.

pub mod commands;
pub mod config;
pub mod output;
pub mod sweep;

pub use commands::{criteria, kernel, kernel_checks, simulate, CriteriaRun, KernelReport};
pub use config::ExperimentConfig;
pub use sweep::{run_sweep, sweep, SweepReport, SweepRow};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit code for a failed subcommand.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => EXIT_INVALID_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}
