//! Invariant checks shared by the property suite and the acceptance run.
//! Each check builds its own random instance and returns the measured
//! defect, so callers choose the tolerance.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttspec::{deflation_solve, BlockTt, Environment, LocalOperator, OpCore, SolverConfig, TtCore, TtMatrix, TtVector};

/// Random symmetric operator with internal ranks `rank`; every channel
/// block is symmetric.
pub fn random_symmetric_op(mode_sizes: &[usize], rank: usize, seed: u64) -> TtMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = mode_sizes.len();
    let cores = (0..d)
        .map(|k| {
            let n = mode_sizes[k];
            let gl = if k == 0 { 1 } else { rank };
            let gr = if k == d - 1 { 1 } else { rank };
            let mut data = vec![0.0; gl * n * n * gr];
            for g2 in 0..gr {
                for g in 0..gl {
                    for j in 0..n {
                        for i in 0..=j {
                            let v: f64 = rng.random_range(-1.0..1.0);
                            data[g + gl * (i + n * (j + n * g2))] = v;
                            data[g + gl * (j + n * (i + n * g2))] = v;
                        }
                    }
                }
            }
            OpCore::new(gl, n, gr, data).unwrap()
        })
        .collect();
    TtMatrix::new(cores).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `F^T G` for column-major `rows x ca` and `rows x cb` matrices.
fn cross(f: &[f64], g: &[f64], rows: usize, ca: usize, cb: usize) -> Vec<f64> {
    let mut out = vec![0.0; ca * cb];
    for j in 0..cb {
        for i in 0..ca {
            out[i + ca * j] = (0..rows).map(|r| f[r + rows * i] * g[r + rows * j]).sum();
        }
    }
    out
}

fn identity_defect(g: &[f64], k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for j in 0..k {
        for i in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[i + k * j] - target).abs());
        }
    }
    worst
}

/// Columns: the train with the core at `p` replaced by each unit core.
fn frame_of(others: &[TtCore], p: usize, ra: usize, n: usize, rb: usize) -> (Vec<f64>, usize, usize) {
    let m = ra * n * rb;
    let mut cols = Vec::new();
    let mut rows = 0;
    for idx in 0..m {
        let mut unit = vec![0.0; m];
        unit[idx] = 1.0;
        let mut cores = others.to_vec();
        cores.insert(p, TtCore::new(ra, n, rb, unit).unwrap());
        let dense = TtVector::new(cores).unwrap().to_dense().unwrap();
        rows = dense.len();
        cols.extend(dense);
    }
    (cols, rows, m)
}

/// After moving the center of a random train to `p`: the largest Gram
/// defect of the left- and right-orthogonal cores, and the relative change
/// of the represented vector.
pub fn shift_center_defect(modes: &[usize], rank: usize, p: usize, seed: u64) -> (f64, f64) {
    let x = TtVector::random(modes, rank, seed).unwrap();
    let y = x.shift_center(p).unwrap();
    let gram = (0..modes.len())
        .filter(|&k| k != p)
        .map(|k| {
            let c = y.core(k);
            if k < p {
                c.left_orthogonality_defect()
            } else {
                c.right_orthogonality_defect()
            }
        })
        .fold(0.0, f64::max);
    let (dx, dy) = (x.to_dense().unwrap(), y.to_dense().unwrap());
    (gram, max_abs_diff(&dx, &dy) / norm(&dx))
}

/// `|F^T F - I|` for the explicit frame matrix of a random block train
/// with the block moved to `p`.
pub fn frame_defect(modes: &[usize], b: usize, rank: usize, p: usize, seed: u64) -> f64 {
    let x = BlockTt::random(modes, b, rank, seed).unwrap().move_to(p, 0.0, usize::MAX).unwrap();
    let blk = x.block();
    let (f, rows, m) = frame_of(x.cores(), p, blk.left_rank(), blk.mode_size(), blk.right_rank());
    identity_defect(&cross(&f, &f, rows, m, m), m)
}

/// `|y - x| / (eps |x|)` for `y` the rounding of a random train; the bound
/// holds when this is at most 1.
pub fn round_ratio(modes: &[usize], rank: usize, eps: f64, seed: u64) -> f64 {
    let x = TtVector::random(modes, rank, seed).unwrap();
    let y = x.round(eps, usize::MAX).unwrap();
    let (dx, dy) = (x.to_dense().unwrap(), y.to_dense().unwrap());
    let diff: Vec<f64> = dx.iter().zip(&dy).map(|(a, b)| a - b).collect();
    norm(&diff) / (eps * norm(&dx))
}

/// Largest entry change of the dense states after moving the block of a
/// random train to `to` without truncation, relative to the largest entry.
pub fn block_move_defect(modes: &[usize], b: usize, rank: usize, to: usize, seed: u64) -> f64 {
    let x = BlockTt::random(modes, b, rank, seed).unwrap();
    let y = x.move_to(to, 0.0, usize::MAX).unwrap();
    let (sx, sy) = (x.to_dense_states().unwrap(), y.to_dense_states().unwrap());
    let scale = sx.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    sx.iter().zip(&sy).map(|(a, b)| max_abs_diff(a, b)).fold(0.0, f64::max) / scale
}

/// Relative difference between the projected operator applied through
/// environments and `F^T A F` assembled from the dense operator and frame.
pub fn local_matvec_defect(modes: &[usize], op_rank: usize, rank: usize, p: usize, seed: u64) -> f64 {
    let a = random_symmetric_op(modes, op_rank, seed);
    let x = TtVector::random(modes, rank, seed.wrapping_add(1)).unwrap().shift_center(p).unwrap();
    let cores = x.cores();
    let left = Environment::left_from_scratch(&a, cores, cores, p).unwrap();
    let right = Environment::right_from_scratch(&a, cores, cores, p + 1).unwrap();
    let local = LocalOperator::new(&left, a.core(p), &right).unwrap();
    let fast = local.to_dense();

    let c = &cores[p];
    let mut others = cores.to_vec();
    others.remove(p);
    let (f, big, m) = frame_of(&others, p, c.left_rank(), c.mode_size(), c.right_rank());
    let dense = a.to_dense(usize::MAX).unwrap();
    let mut af = vec![0.0; big * m];
    for j in 0..m {
        for k in 0..big {
            let fk = f[k + big * j];
            if fk != 0.0 {
                for i in 0..big {
                    af[i + big * j] += dense[i + big * k] * fk;
                }
            }
        }
    }
    let slow = cross(&f, &af, big, m, m);
    let scale = slow.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    max_abs_diff(&fast, &slow) / scale
}

/// Largest off-diagonal overlap (normalized) between the states returned
/// by deflation on a random symmetric operator.
pub fn deflation_overlap(modes: &[usize], b: usize, seed: u64) -> f64 {
    let a = random_symmetric_op(modes, 2, seed);
    let cfg = SolverConfig::new(b, 1e-10).with_max_sweeps(4).with_seed(seed);
    let res = deflation_solve(&a, &cfg).unwrap();
    let states: Vec<TtVector> = (0..b).map(|s| res.states.extract_state(s).unwrap()).collect();
    let mut worst: f64 = 0.0;
    for i in 0..b {
        for j in 0..i {
            let o = states[i].dot(&states[j]).unwrap() / (states[i].norm() * states[j].norm());
            worst = worst.max(o.abs());
        }
    }
    worst
}
