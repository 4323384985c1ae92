use serde::Serialize;
use ttspec::{SpectrumResult, SweepRecord};

use crate::config::{ConfigEcho, VerifyMode};

/// Version of the result layout described by `result.schema.json`.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub sweep: usize,
    pub eigenvalues: Vec<f64>,
    pub max_local_residual: f64,
    pub wall_time_seconds: f64,
    pub max_rank: usize,
}

impl From<&SweepRecord> for SweepEntry {
    fn from(s: &SweepRecord) -> Self {
        Self {
            sweep: s.sweep,
            eigenvalues: s.eigenvalues.clone(),
            max_local_residual: s.max_local_residual,
            wall_time_seconds: s.wall_time_seconds,
            max_rank: s.max_rank,
        }
    }
}

/// One group of (nearly) equal reference eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    /// Index of the first state of the level.
    pub start: usize,
    pub multiplicity: usize,
    pub reference_value: f64,
    /// False when the level continues beyond the computed states.
    pub complete: bool,
    /// Largest computed minus smallest computed eigenvalue in the level.
    pub spread: f64,
    /// Largest principal angle between computed and reference subspaces
    /// (complete levels only).
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verification {
    pub mode: VerifyMode,
    pub reference: Vec<f64>,
    pub abs_errors: Vec<f64>,
    pub rel_errors: Vec<f64>,
    pub max_abs_error: f64,
    /// `|A x - lambda x| / |x|` per state (dense oracle).
    pub residuals: Option<Vec<f64>>,
    pub levels: Vec<LevelReport>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub library_version: String,
    pub config: ConfigEcho,
    pub method: String,
    pub eigenvalues: Vec<f64>,
    /// Sizes of the clusters of computed eigenvalues, ascending.
    pub level_multiplicities: Vec<usize>,
    pub converged: bool,
    pub num_sweeps: usize,
    pub working_states: usize,
    pub unconverged_local_solves: usize,
    pub rank_profile: Vec<usize>,
    pub max_rank: usize,
    pub sweep_history: Vec<SweepEntry>,
    /// Solver time only; verification and output are excluded.
    pub wall_time_seconds: f64,
    pub seed: u64,
    pub verification: Option<Verification>,
}

impl ResultRecord {
    pub fn new(config: ConfigEcho, result: &SpectrumResult, level_multiplicities: Vec<usize>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config,
            method: result.method.name().to_string(),
            eigenvalues: result.eigenvalues.clone(),
            level_multiplicities,
            converged: result.converged,
            num_sweeps: result.num_sweeps,
            working_states: result.working_states,
            unconverged_local_solves: result.unconverged_local_solves,
            rank_profile: result.rank_profile.clone(),
            max_rank: result.rank_profile.iter().copied().max().unwrap_or(1),
            sweep_history: result.sweep_history.iter().map(SweepEntry::from).collect(),
            wall_time_seconds: result.wall_time_seconds,
            verification: None,
        }
    }

    pub fn verified(&self) -> bool {
        !matches!(&self.verification, Some(v) if !v.passed)
    }
}
