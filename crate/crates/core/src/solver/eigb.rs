use std::time::Instant;

use super::config::{max_local_dim, SolverConfig};
use super::local::{local_block_eig, LocalEig, LocalOptions};
use super::result::{Method, SpectrumResult, SweepRecord};
use crate::block::{block_split_bounded, BlockCore, BlockTt, Direction};
use crate::error::{invalid, Result};
use crate::tt::{Environment, LocalOperator, TtMatrix};

/// Outcome of one local update inside a sweep.
pub(crate) struct Update {
    /// New block core data, `m x B` column-major.
    pub block: Vec<f64>,
    pub values: Vec<f64>,
    pub warm_residual: f64,
    pub converged: bool,
}

pub(crate) type UpdateFn<'f> = dyn FnMut(&LocalOperator<'_>, &BlockCore) -> Result<Update> + 'f;

/// Sweep statistics of one full sweep.
pub(crate) struct SweepStats {
    pub values: Vec<f64>,
    pub max_warm_residual: f64,
    pub unconverged: usize,
}

/// Environments and the block train for alternating sweeps. `left[k]` is
/// valid for `k <= position`, `right[k]` for `k > position`.
pub(crate) struct Sweeper<'a> {
    a: &'a TtMatrix,
    pub x: BlockTt,
    left: Vec<Option<Environment>>,
    right: Vec<Option<Environment>>,
    eps: f64,
    rmax: usize,
}

impl<'a> Sweeper<'a> {
    /// `x` must have its block at site 0 and a right-orthogonal frame.
    pub fn new(a: &'a TtMatrix, x: BlockTt, eps: f64, rmax: usize) -> Result<Self> {
        let d = x.dim();
        if x.position() != 0 {
            return invalid("sweeps start with the block at site 0");
        }
        let mut left = vec![None; d + 1];
        let mut right = vec![None; d + 1];
        left[0] = Some(Environment::left_trivial());
        let mut env = Environment::right_trivial(d);
        for k in (1..d).rev() {
            let next = env.extend_right(a.core(k), x.core(k), x.core(k))?;
            right[k + 1] = Some(env);
            env = next;
        }
        right[1] = Some(env);
        Ok(Self { a, x, left, right, eps, rmax })
    }

    fn update(&mut self, f: &mut UpdateFn<'_>) -> Result<Update> {
        let p = self.x.position();
        let (l, r) = (self.left[p].as_ref().expect("left environment"), self.right[p + 1].as_ref().expect("right environment"));
        let h = LocalOperator::new(l, self.a.core(p), r)?;
        let up = f(&h, self.x.block())?;
        let b = self.x.block();
        let states = up.block.len() / b.local_dim();
        let block = BlockCore::new(b.left_rank(), b.mode_size(), b.right_rank(), states, up.block.clone())?;
        self.x.set_block(block)?;
        Ok(up)
    }

    fn move_right(&mut self) -> Result<()> {
        let p = self.x.position();
        let b = self.x.block();
        let next = self.x.core(p + 1);
        let rmin = b.num_states().div_ceil(next.mode_size() * next.right_rank());
        let split = block_split_bounded(b, Direction::Right, self.eps, rmin, self.rmax)?;
        self.x.apply_split(split)?;
        let env = self.left[p].as_ref().expect("left environment").extend_left(self.a.core(p), self.x.core(p), self.x.core(p))?;
        self.left[p + 1] = Some(env);
        self.right[p + 1] = None;
        Ok(())
    }

    fn move_left(&mut self) -> Result<()> {
        let p = self.x.position();
        let b = self.x.block();
        let prev = self.x.core(p - 1);
        let rmin = b.num_states().div_ceil(prev.left_rank() * prev.mode_size());
        let split = block_split_bounded(b, Direction::Left, self.eps, rmin, self.rmax)?;
        self.x.apply_split(split)?;
        let env = self.right[p + 1].as_ref().expect("right environment").extend_right(self.a.core(p), self.x.core(p), self.x.core(p))?;
        self.right[p] = Some(env);
        self.left[p] = None;
        Ok(())
    }

    /// Local update at site 0 without moving.
    pub fn solve_here(&mut self, f: &mut UpdateFn<'_>) -> Result<Update> {
        self.update(f)
    }

    /// One full sweep starting and ending at site 0. When `fresh` the block
    /// core at site 0 was just optimized and is not solved again before
    /// moving.
    pub fn sweep(&mut self, f: &mut UpdateFn<'_>, fresh: bool) -> Result<SweepStats> {
        let d = self.x.dim();
        let mut worst: f64 = 0.0;
        let mut unconverged = 0;
        let mut note = |u: &Update| {
            worst = worst.max(u.warm_residual);
            unconverged += usize::from(!u.converged);
        };
        for p in 0..d - 1 {
            if !(p == 0 && fresh) {
                let u = self.update(f)?;
                note(&u);
            }
            self.move_right()?;
        }
        for _ in (1..d).rev() {
            let u = self.update(f)?;
            note(&u);
            self.move_left()?;
        }
        let last = self.update(f)?;
        note(&last);
        Ok(SweepStats { values: last.values, max_warm_residual: worst, unconverged })
    }
}

pub(crate) fn local_options(cfg: &SolverConfig, num: usize, seed: u64) -> LocalOptions {
    LocalOptions {
        solver: cfg.local_solver,
        size_threshold: cfg.local_size_threshold,
        tol: cfg.local_iter_tol,
        max_iter: cfg.local_max_iter,
        guards: cfg.guard_vectors(num),
        dense_fallback_limit: cfg.dense_fallback_limit,
        seed,
    }
}

pub(crate) fn check_problem(a: &TtMatrix, cfg: &SolverConfig) -> Result<Vec<usize>> {
    if !a.is_symmetric() {
        return invalid(format!("operator is not symmetric (relative defect {:.3e})", a.symmetry_defect()));
    }
    let modes = a.mode_sizes();
    cfg.validate(&modes)?;
    Ok(modes)
}

pub(crate) fn relative_change(now: f64, before: f64) -> f64 {
    (now - before).abs() / now.abs().max(f64::MIN_POSITIVE)
}

/// Brings an arbitrary block train to site 0 with a right-orthogonal frame.
pub(crate) fn canonicalize(x: BlockTt) -> Result<BlockTt> {
    if x.position() == 0 && x.frame_defect() < 1e-10 {
        return Ok(x);
    }
    let d = x.dim();
    x.move_to(0, 0.0, usize::MAX)?.move_to(d - 1, 0.0, usize::MAX)?.move_to(0, 0.0, usize::MAX)
}

/// Block ALS minimization of the Rayleigh quotient `trace(X^T A X)` over
/// block trains with orthonormal states.
///
/// Each local problem is solved for the `B` lowest eigenpairs and the block
/// core is split with truncation accuracy `eps / sqrt(d - 1)` before moving
/// on. Reported eigenvalues are the Ritz values of the final local problem
/// at site 0, which are exact Rayleigh quotients of the returned states.
pub fn eigb(a: &TtMatrix, x0: Option<BlockTt>, cfg: &SolverConfig) -> Result<SpectrumResult> {
    let start = Instant::now();
    let modes = check_problem(a, cfg)?;
    let d = modes.len();
    let nb = cfg.num_states;

    let x = match x0 {
        Some(x) => {
            if x.mode_sizes() != modes {
                return invalid("initial guess and operator have different mode sizes");
            }
            if x.num_states() < nb {
                return invalid(format!("initial guess holds {} states, {nb} requested", x.num_states()));
            }
            canonicalize(x)?
        }
        None => {
            // a lone state cannot grow ranks in one-site sweeps, so it is
            // computed together with the next one
            let padded = nb == 1 && d > 1 && (0..d).all(|p| max_local_dim(&modes, p, cfg.rmax) >= 2);
            let work = if padded { 2 } else { nb };
            BlockTt::random(&modes, work, cfg.initial_rank.unwrap_or(work), cfg.seed)?
        }
    };
    let work = x.num_states();
    let eps = if d > 1 { cfg.eps / ((d - 1) as f64).sqrt() } else { cfg.eps };

    let mut counter = 0u64;
    let mut update = |h: &LocalOperator<'_>, block: &BlockCore| -> Result<Update> {
        counter += 1;
        let opts = local_options(cfg, work, cfg.seed.wrapping_add(counter));
        let LocalEig { values, vectors, warm_residual, converged, .. } = local_block_eig(h, work, Some(block.data()), None, &opts)?;
        Ok(Update { block: vectors, values, warm_residual, converged })
    };

    let mut sweeper = Sweeper::new(a, x, eps, cfg.rmax)?;
    let first = sweeper.solve_here(&mut update)?;
    let mut values = first.values;
    let mut unconverged = usize::from(!first.converged);
    let mut history = Vec::new();
    let mut converged = false;
    if d > 1 {
        let tol = cfg.effective_conv_tol();
        for sweep in 1..=cfg.max_sweeps {
            let t = Instant::now();
            let stats = sweeper.sweep(&mut update, true)?;
            unconverged += stats.unconverged;
            let change = relative_change(stats.values.iter().sum(), values.iter().sum());
            values = stats.values;
            history.push(SweepRecord {
                sweep,
                eigenvalues: values[..nb].to_vec(),
                max_local_residual: stats.max_warm_residual,
                wall_time_seconds: t.elapsed().as_secs_f64(),
                max_rank: sweeper.x.max_rank(),
            });
            log::debug!("sweep {sweep}: sum {:.15e}, change {change:.3e}, max rank {}", values.iter().sum::<f64>(), sweeper.x.max_rank());
            if change < tol {
                converged = true;
                break;
            }
        }
    } else {
        converged = true;
    }

    let states = if work > nb { sweeper.x.select_states(&(0..nb).collect::<Vec<_>>())? } else { sweeper.x };
    Ok(SpectrumResult {
        method: Method::Eigb,
        eigenvalues: values[..nb].to_vec(),
        rank_profile: states.rank_profile(),
        num_sweeps: history.len(),
        sweep_history: history,
        converged,
        working_states: work,
        unconverged_local_solves: unconverged,
        states,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// `trace(X^T A X)` of the states of `x`, contracted through environments.
pub fn rayleigh_trace(a: &TtMatrix, x: &BlockTt) -> Result<f64> {
    if a.mode_sizes() != x.mode_sizes() {
        return invalid("operator and block train have different mode sizes");
    }
    let (d, p) = (x.dim(), x.position());
    let mut left = Environment::left_trivial();
    for k in 0..p {
        left = left.extend_left(a.core(k), x.core(k), x.core(k))?;
    }
    let mut right = Environment::right_trivial(d);
    for k in (p + 1..d).rev() {
        right = right.extend_right(a.core(k), x.core(k), x.core(k))?;
    }
    let h = LocalOperator::new(&left, a.core(p), &right)?;
    let block = x.block();
    let hx = h.apply_block(block.data(), block.num_states());
    Ok(block.data().iter().zip(&hx).map(|(u, v)| u * v).sum())
}
