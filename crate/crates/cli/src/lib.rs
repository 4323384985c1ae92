//! Experiment harness for the `ttspec` eigensolvers: configuration, runs,
//! verification against reference spectra, parameter scans and result
//! files.

// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod output;
pub mod record;
pub mod scan;

pub use config::{ExperimentConfig, SolverKind, Tolerances, VerifyMode};
pub use experiment::{run, Outcome, Status};
pub use record::{ResultRecord, SCHEMA_VERSION};
pub use scan::{loglog_slope, scan, Axis, ScanRow};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERIFICATION: i32 = 3;

/// The published JSON schema of a result record.
pub const RESULT_SCHEMA: &str = include_str!("../result.schema.json");

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] ttspec::TtError),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            // numerical breakdown inside the solver counts as not converged
            Error::Solver(ttspec::TtError::NotConverged { .. } | ttspec::TtError::Linalg(_)) => EXIT_NOT_CONVERGED,
            Error::Solver(_) | Error::Usage(_) | Error::Io(_) => EXIT_USAGE,
        }
    }
}
