use crate::block::BlockTt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Eigb,
    /// One-site sweeps computing the states one at a time, each constrained
    /// orthogonal to the previous ones.
    Deflation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Eigb => "eigb",
            Method::Deflation => "deflation",
        }
    }
}

/// Summary of one full sweep (left-to-right and back).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    /// 1-based sweep counter over the whole run.
    pub sweep: usize,
    pub eigenvalues: Vec<f64>,
    /// Largest residual `|H X - X (X^T H X)|_F` of the block entering a
    /// local solve during this sweep.
    pub max_local_residual: f64,
    pub wall_time_seconds: f64,
    pub max_rank: usize,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub method: Method,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// The returned states, block core at site 0.
    pub states: BlockTt,
    pub rank_profile: Vec<usize>,
    pub sweep_history: Vec<SweepRecord>,
    pub converged: bool,
    pub num_sweeps: usize,
    /// Number of states carried during the sweeps; can exceed the number
    /// requested (a single state is computed together with one extra).
    pub working_states: usize,
    /// Local solves that ended without reaching their tolerance.
    pub unconverged_local_solves: usize,
    pub wall_time_seconds: f64,
}
