//! Fixtures shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttspec::{BlockCore, Environment, TtMatrix, TtVector};

/// Block core with uniform random entries in `[-1, 1)`.
pub fn random_block_core(left_rank: usize, mode_size: usize, right_rank: usize, num_states: usize, seed: u64) -> BlockCore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = left_rank * mode_size * right_rank * num_states;
    let data = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
    BlockCore::new(left_rank, mode_size, right_rank, num_states, data).expect("consistent shape")
}

/// Random columns for a local problem of size `m`.
pub fn random_columns(m: usize, cols: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m * cols).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Environments around `site` for a random train of bond rank `rank`
/// centered there.
pub struct LocalFixture {
    pub op: TtMatrix,
    pub left: Environment,
    pub right: Environment,
    pub site: usize,
}

impl LocalFixture {
    pub fn new(op: TtMatrix, rank: usize, site: usize, seed: u64) -> Self {
        let x = TtVector::random(&op.mode_sizes(), rank, seed).unwrap().shift_center(site).unwrap();
        let cores = x.cores();
        let left = Environment::left_from_scratch(&op, cores, cores, site).unwrap();
        let right = Environment::right_from_scratch(&op, cores, cores, site + 1).unwrap();
        Self { op, left, right, site }
    }
}
