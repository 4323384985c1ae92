//! Shared fixtures for unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tt::{OpCore, TtCore, TtMatrix, TtVector};

/// Random operator with the given internal ranks. With `symmetric` every
/// channel block is a symmetric matrix, which makes the whole operator
/// symmetric.
pub fn random_op(mode_sizes: &[usize], rank: usize, symmetric: bool, seed: u64) -> TtMatrix {
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
                        for i in 0..n {
                            if symmetric && i > j {
                                continue;
                            }
                            let v: f64 = rng.random_range(-1.0..1.0);
                            data[g + gl * (i + n * (j + n * g2))] = v;
                            if symmetric {
                                data[g + gl * (j + n * (i + n * g2))] = v;
                            }
                        }
                    }
                }
            }
            OpCore::new(gl, n, gr, data).unwrap()
        })
        .collect();
    TtMatrix::new(cores).unwrap()
}

/// Dense `rows x cols` column-major product.
pub fn dense_mul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for j in 0..cols {
        for k in 0..inner {
            let bkj = b[k + inner * j];
            for i in 0..rows {
                out[i + rows * j] += a[i + rows * k] * bkj;
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for j in 0..cols {
        for i in 0..rows {
            out[j + cols * i] = a[i + rows * j];
        }
    }
    out
}

/// The frame matrix of `x` at site `p`: column `c` is the densified train
/// with core `p` replaced by the `c`-th unit core. Shape `N x m`.
pub fn frame_matrix(x: &TtVector, p: usize) -> (Vec<f64>, usize, usize) {
    let c = x.core(p);
    let (ra, n, rb) = (c.left_rank(), c.mode_size(), c.right_rank());
    let m = ra * n * rb;
    let mut cols = Vec::new();
    let mut rows = 0;
    for idx in 0..m {
        let mut unit = vec![0.0; m];
        unit[idx] = 1.0;
        let mut cores = x.cores().to_vec();
        cores[p] = TtCore::new(ra, n, rb, unit).unwrap();
        let dense = TtVector::new(cores).unwrap().to_dense().unwrap();
        rows = dense.len();
        cols.extend(dense);
    }
    (cols, rows, m)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
