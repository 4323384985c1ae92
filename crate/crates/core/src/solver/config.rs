use crate::error::{Result, TtError};
use crate::tt::DEFAULT_OPERATOR_DENSE_CAP;

/// How local block eigenproblems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LocalSolver {
    /// Assemble the projected operator and diagonalize it.
    Dense,
    /// Warm-started LOBPCG on the operator applied through environments.
    Iterative,
    /// Dense up to `local_size_threshold` unknowns, iterative above.
    #[default]
    Auto,
}

/// Parameters of the sweeping eigensolvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub num_states: usize,
    /// Relative truncation accuracy of one sweep.
    pub eps: f64,
    pub rmax: usize,
    pub max_sweeps: usize,
    /// Stop when `|sum(lambda) - previous| / |sum(lambda)|` drops below this.
    /// `None` means `eps`.
    pub conv_tol: Option<f64>,
    pub local_solver: LocalSolver,
    pub local_size_threshold: usize,
    /// Residual tolerance of the iterative local solver, relative to the
    /// largest Ritz value magnitude.
    pub local_iter_tol: f64,
    pub local_max_iter: usize,
    /// Extra vectors carried by the iterative local solver; `None` picks
    /// `max(2, ceil(B / 4))`.
    pub local_guard_vectors: Option<usize>,
    /// Largest local problem that may fall back to a dense solve when the
    /// iterative solver stalls.
    pub dense_fallback_limit: usize,
    /// Rank of the random initial guess; `None` uses the block size.
    pub initial_rank: Option<usize>,
    pub seed: u64,
    pub densify_cap: usize,
}

impl SolverConfig {
    pub fn new(num_states: usize, eps: f64) -> Self {
        Self {
            num_states,
            eps,
            rmax: 1000,
            max_sweeps: 20,
            conv_tol: None,
            local_solver: LocalSolver::Auto,
            local_size_threshold: 256,
            local_iter_tol: 1e-9,
            local_max_iter: 300,
            local_guard_vectors: None,
            dense_fallback_limit: 4000,
            initial_rank: None,
            seed: 0,
            densify_cap: DEFAULT_OPERATOR_DENSE_CAP,
        }
    }

    pub fn with_rmax(mut self, rmax: usize) -> Self {
        self.rmax = rmax;
        self
    }

    pub fn with_max_sweeps(mut self, max_sweeps: usize) -> Self {
        self.max_sweeps = max_sweeps;
        self
    }

    pub fn with_conv_tol(mut self, conv_tol: f64) -> Self {
        self.conv_tol = Some(conv_tol);
        self
    }

    pub fn with_local_solver(mut self, local_solver: LocalSolver) -> Self {
        self.local_solver = local_solver;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn effective_conv_tol(&self) -> f64 {
        self.conv_tol.unwrap_or(self.eps)
    }

    pub fn guard_vectors(&self, num: usize) -> usize {
        self.local_guard_vectors.unwrap_or_else(|| 2.max(num.div_ceil(4)))
    }

    /// Checks the parameters, and that every site can host `num_states`
    /// independent local vectors under the rank cap.
    pub fn validate(&self, mode_sizes: &[usize]) -> Result<()> {
        let bad = |msg: String| Err(TtError::Config(msg));
        if self.num_states == 0 {
            return bad("number of states must be at least 1".into());
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return bad(format!("eps must be a non-negative number, got {}", self.eps));
        }
        if self.rmax == 0 {
            return bad("rmax must be at least 1".into());
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1".into());
        }
        if let Some(t) = self.conv_tol {
            if !(t >= 0.0) {
                return bad(format!("conv_tol must be non-negative, got {t}"));
            }
        }
        if !(self.local_iter_tol > 0.0) {
            return bad("local_iter_tol must be positive".into());
        }
        if mode_sizes.is_empty() || mode_sizes.contains(&0) {
            return bad("mode sizes must be non-empty and positive".into());
        }
        for p in 0..mode_sizes.len() {
            let dim = max_local_dim(mode_sizes, p, self.rmax);
            if dim < self.num_states as u128 {
                return bad(format!(
                    "rmax = {} is too small for {} states: site {p} admits at most {dim} local unknowns",
                    self.rmax, self.num_states
                ));
            }
        }
        Ok(())
    }
}

/// Largest local dimension at site `p` allowed by the mode sizes and `rmax`.
pub(crate) fn max_local_dim(mode_sizes: &[usize], p: usize, rmax: usize) -> u128 {
    let prod = |ns: &[usize]| ns.iter().fold(1u128, |a, &n| a.saturating_mul(n as u128));
    let left = prod(&mode_sizes[..p]).min(rmax as u128);
    let right = prod(&mode_sizes[p + 1..]).min(rmax as u128);
    left * mode_sizes[p] as u128 * right
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = SolverConfig::new(3, 1e-6);
        assert_eq!(c.rmax, 1000);
        assert_eq!(c.max_sweeps, 20);
        assert_eq!(c.effective_conv_tol(), 1e-6);
        assert_eq!(c.local_size_threshold, 256);
        assert_eq!(c.guard_vectors(30), 8);
        assert_eq!(c.guard_vectors(1), 2);
        assert!(c.validate(&[4, 4, 4]).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SolverConfig::new(0, 1e-6).validate(&[2, 2]).is_err());
        assert!(SolverConfig::new(1, -1.0).validate(&[2, 2]).is_err());
        assert!(SolverConfig::new(1, f64::NAN).validate(&[2, 2]).is_err());
        assert!(SolverConfig::new(1, 1e-6).with_rmax(0).validate(&[2, 2]).is_err());
    }

    #[test]
    fn rejects_rank_cap_too_small_for_block() {
        // rmax = 1 leaves two unknowns per spin site
        let err = SolverConfig::new(5, 1e-6).with_rmax(1).validate(&[2; 10]).unwrap_err();
        assert!(matches!(err, TtError::Config(_)));
        assert!(SolverConfig::new(5, 1e-6).with_rmax(2).validate(&[2; 10]).is_err());
        assert!(SolverConfig::new(5, 1e-6).with_rmax(3).validate(&[2; 10]).is_ok());
        // more states than the space holds
        assert!(SolverConfig::new(5, 1e-6).validate(&[2, 2]).is_err());
    }
}
