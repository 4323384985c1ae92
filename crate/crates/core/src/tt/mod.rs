//! Tensor-train vectors, matrices and the environment contractions used by
//! the sweeping solvers.

mod core;
mod env;
mod matrix;
mod vector;

pub use self::core::TtCore;
pub use env::{Environment, LocalOperator, Side};
pub use matrix::{ModeOp, OpBlock, OpCore, TtMatrix, DEFAULT_OPERATOR_DENSE_CAP, SYMMETRY_TOL};
pub use vector::{TtVector, DEFAULT_DENSE_CAP};

pub(crate) use vector::{random_cores, right_orthogonalize};
