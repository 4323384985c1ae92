// Negated float comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod error;
pub mod hamiltonians;
pub mod linalg;
pub mod oracle;
pub mod solver;
pub mod tt;

pub use block::{block_split, BlockCore, BlockTt, Direction, GCore, Split};
pub use error::{Result, TtError};
pub use solver::{deflation_solve, eigb, rayleigh_trace, LocalSolver, Method, SolverConfig, SpectrumResult, SweepRecord};
pub use tt::*;

#[cfg(test)]
pub(crate) mod test_util;
