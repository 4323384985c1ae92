use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::SolverConfig;
use super::eigb::{check_problem, local_options, relative_change, Sweeper, Update};
use super::local::local_block_eig;
use super::result::{Method, SpectrumResult, SweepRecord};
use crate::block::{BlockCore, BlockTt};
use crate::error::{Result, TtError};
use crate::linalg::{self, view};
use crate::tt::{LocalOperator, TtMatrix};

/// Computes the lowest states one at a time.
///
/// State `j` is optimized by one-site sweeps over the same block train that
/// holds the states already found. Those stay fixed and enter every local
/// problem as orthogonality constraints, while the block split still carries
/// all columns so that ranks can grow. Each state gets at most `max_sweeps`
/// sweeps. Degenerate levels are not guaranteed to be resolved, and the
/// first state keeps the ranks of the initial guess (`initial_rank`,
/// default `max(B, 2)`).
pub fn deflation_solve(a: &TtMatrix, cfg: &SolverConfig) -> Result<SpectrumResult> {
    let start = Instant::now();
    let modes = check_problem(a, cfg)?;
    let d = modes.len();
    let nb = cfg.num_states;
    let eps = if d > 1 { cfg.eps / ((d - 1) as f64).sqrt() } else { cfg.eps };
    let tol = cfg.effective_conv_tol();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);

    let mut x = BlockTt::random(&modes, 1, cfg.initial_rank.unwrap_or(nb.max(2)), cfg.seed)?;
    let mut found: Vec<f64> = Vec::new();
    let mut history = Vec::new();
    let mut converged_all = true;
    let mut unconverged = 0;
    let mut counter = 0u64;

    for j in 0..nb {
        if j > 0 {
            while x.block().local_dim() < j + 1 {
                if !x.widen_right_bond(&mut rng) {
                    return Err(TtError::LocalDimension { dim: x.block().local_dim(), states: j + 1 });
                }
            }
            let column = fresh_column(x.block(), &mut rng);
            x.push_state(&column)?;
        }
        let mut update = |h: &LocalOperator<'_>, block: &BlockCore| -> Result<Update> {
            counter += 1;
            let m = block.local_dim();
            let fixed = &block.data()[..m * j];
            let q = if j > 0 { Some(linalg::thin_qr(view(fixed, m, j)).q) } else { None };
            let opts = local_options(cfg, 1, cfg.seed.wrapping_add(counter));
            let res = local_block_eig(h, 1, Some(block.state(j)), q.as_deref(), &opts)?;
            let mut data = fixed.to_vec();
            data.extend_from_slice(&res.vectors);
            Ok(Update { block: data, values: res.values, warm_residual: res.warm_residual, converged: res.converged })
        };

        let mut sweeper = Sweeper::new(a, x, eps, cfg.rmax)?;
        let first = sweeper.solve_here(&mut update)?;
        unconverged += usize::from(!first.converged);
        let mut value = first.values[0];
        let mut converged = d == 1;
        if d > 1 {
            for _ in 0..cfg.max_sweeps {
                let t = Instant::now();
                let stats = sweeper.sweep(&mut update, true)?;
                unconverged += stats.unconverged;
                let change = relative_change(stats.values[0], value);
                value = stats.values[0];
                let mut values = found.clone();
                values.push(value);
                history.push(SweepRecord {
                    sweep: history.len() + 1,
                    eigenvalues: values,
                    max_local_residual: stats.max_warm_residual,
                    wall_time_seconds: t.elapsed().as_secs_f64(),
                    max_rank: sweeper.x.max_rank(),
                });
                if change < tol {
                    converged = true;
                    break;
                }
            }
        }
        log::debug!("deflation state {j}: {value:.15e} after {} sweeps", history.len());
        converged_all &= converged;
        found.push(value);
        x = sweeper.x;
    }

    // final Rayleigh quotients of all states in one frame, ascending
    let mut sweeper = Sweeper::new(a, x, eps, cfg.rmax)?;
    let mut quotients = Vec::new();
    sweeper.solve_here(&mut |h: &LocalOperator<'_>, block: &BlockCore| {
        let m = block.local_dim();
        let hx = h.apply_block(block.data(), nb);
        quotients = (0..nb)
            .map(|s| {
                let xs = block.state(s);
                let num: f64 = xs.iter().zip(&hx[m * s..m * (s + 1)]).map(|(u, v)| u * v).sum();
                num / xs.iter().map(|u| u * u).sum::<f64>()
            })
            .collect();
        Ok(Update { block: block.data().to_vec(), values: quotients.clone(), warm_residual: 0.0, converged: true })
    })?;
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&i, &k| quotients[i].total_cmp(&quotients[k]));
    let states = sweeper.x.select_states(&order)?;
    Ok(SpectrumResult {
        method: Method::Deflation,
        eigenvalues: order.iter().map(|&i| quotients[i]).collect(),
        rank_profile: states.rank_profile(),
        num_sweeps: history.len(),
        sweep_history: history,
        converged: converged_all,
        working_states: nb,
        unconverged_local_solves: unconverged,
        states,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    })
}

/// A random unit column orthogonal to the existing state columns.
fn fresh_column(block: &BlockCore, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = block.local_dim();
    let existing = block.num_states();
    loop {
        let mut v: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for s in 0..existing {
                let c = block.state(s);
                let cc: f64 = c.iter().map(|u| u * u).sum();
                let dot: f64 = c.iter().zip(&v).map(|(u, w)| u * w).sum::<f64>() / cc;
                v.iter_mut().zip(c).for_each(|(w, u)| *w -= dot * u);
            }
        }
        let norm = linalg::frobenius(&v);
        if norm > 1e-8 {
            return v.into_iter().map(|w| w / norm).collect();
        }
    }
}
