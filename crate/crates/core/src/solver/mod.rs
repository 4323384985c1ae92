//! Sweeping eigensolvers on block tensor trains.

mod config;
mod deflation;
mod eigb;
mod local;
mod result;

pub use config::{LocalSolver, SolverConfig};
pub use deflation::deflation_solve;
pub use eigb::{eigb, rayleigh_trace};
pub use local::{lobpcg, local_block_eig, DenseOperator, LocalEig, LocalOptions, Preconditioner, SymmetricOperator};
pub use result::{Method, SpectrumResult, SweepRecord};
