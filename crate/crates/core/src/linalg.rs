//! Thin wrappers over the dense kernels (QR, SVD, symmetric eigensolver,
//! matrix products) used by the tensor-train code.
//!
//! All tensor data in this crate lives in contiguous column-major `Vec<f64>`
//! buffers; these helpers view such buffers as faer matrices and copy results
//! back into the same layout.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};

use crate::error::{Result, TtError};

/// Number of threads the dense kernels may use; 0 or 1 means sequential.
///
/// Without a call faer's default applies (all available cores). Changing it
/// affects every subsequent kernel call in the process.
pub fn set_dense_threads(threads: usize) {
    let par = if threads <= 1 { Par::Seq } else { Par::rayon(threads) };
    faer::set_global_parallelism(par);
}

#[inline]
pub(crate) fn par() -> Par {
    faer::get_global_parallelism()
}

#[inline]
pub(crate) fn view(data: &[f64], rows: usize, cols: usize) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(data, rows, cols)
}

#[inline]
pub(crate) fn view_mut(data: &mut [f64], rows: usize, cols: usize) -> MatMut<'_, f64> {
    MatMut::from_column_major_slice_mut(data, rows, cols)
}

/// `dst = a * b` (or `dst += a * b` when `accumulate`).
#[inline]
pub(crate) fn gemm(dst: MatMut<'_, f64>, accumulate: bool, a: MatRef<'_, f64>, b: MatRef<'_, f64>) {
    let beta = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, beta, a, b, 1.0, par());
}

/// Product of two column-major buffers returned as a new column-major buffer.
pub(crate) fn gemm_new(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows() * b.ncols()];
    gemm(view_mut(&mut out, a.nrows(), b.ncols()), false, a, b);
    out
}

/// Copies any faer matrix into a contiguous column-major buffer.
pub(crate) fn to_col_major(m: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        out.extend(m.col(j).iter().copied());
    }
    out
}

/// Singular values in descending order.
pub(crate) fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let s = a.singular_values().map_err(|e| TtError::Linalg(format!("singular values of {rows}x{cols} matrix failed: {e:?}")))?;
    Ok(s)
}

/// Thin QR factorization `a = q r` with `k = min(rows, cols)` columns in `q`.
pub(crate) struct ThinQr {
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub rank: usize,
}

pub(crate) fn thin_qr(a: MatRef<'_, f64>) -> ThinQr {
    let k = a.nrows().min(a.ncols());
    let qr = a.qr();
    let q = qr.compute_thin_Q();
    let r = qr.thin_R();
    debug_assert_eq!(q.ncols(), k);
    ThinQr { q: to_col_major(q.as_ref()), r: to_col_major(r), rank: k }
}

/// Chooses how many singular values to keep.
///
/// Returns the smallest rank `r >= 1` such that the norm of the discarded tail
/// `sigma[r..]` does not exceed `budget`, extended to keep any value equal to
/// the last kept one, and finally capped at `rmax`. `sigma` must be sorted in
/// non-increasing order.
pub fn truncation_rank(sigma: &[f64], budget: f64, rmax: usize) -> usize {
    if sigma.is_empty() {
        return 0;
    }
    let budget_sq = budget.max(0.0).powi(2);
    // tail[r] = sum of squares of sigma[r..]
    let mut rank = sigma.len();
    let mut tail = 0.0;
    for r in (1..sigma.len()).rev() {
        let next = tail + sigma[r] * sigma[r];
        if next > budget_sq {
            break;
        }
        tail = next;
        rank = r;
    }
    while rank < sigma.len() && sigma[rank] == sigma[rank - 1] {
        rank += 1;
    }
    rank.min(rmax.max(1))
}

/// Truncated SVD `a ~ u diag(s) vt`.
pub(crate) struct TruncatedSvd {
    /// `rows x rank`, orthonormal columns.
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    /// `rank x cols`, orthonormal rows.
    pub vt: Vec<f64>,
    pub rank: usize,
    /// Frobenius norm of the discarded part.
    pub discarded: f64,
}

/// SVD truncated so that the discarded Frobenius norm is at most `budget`
/// (absolute) and the rank at most `rmax`.
pub(crate) fn truncated_svd(a: MatRef<'_, f64>, budget: f64, rmax: usize) -> Result<TruncatedSvd> {
    truncated_svd_bounded(a, budget, 1, rmax)
}

/// As [`truncated_svd`], but keeps at least `rmin` singular values when
/// available (`rmin` wins over `rmax`).
pub(crate) fn truncated_svd_bounded(a: MatRef<'_, f64>, budget: f64, rmin: usize, rmax: usize) -> Result<TruncatedSvd> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let svd = a.thin_svd().map_err(|e| TtError::Linalg(format!("svd of {rows}x{cols} matrix failed: {e:?}")))?;
    let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let rank = truncation_rank(&sigma, budget, rmax).max(rmin).min(sigma.len());
    let discarded = sigma[rank..].iter().map(|s| s * s).sum::<f64>().sqrt();
    let u = to_col_major(svd.U().subcols(0, rank));
    let v = svd.V().subcols(0, rank);
    let mut vt = vec![0.0; rank * cols];
    for j in 0..cols {
        for r in 0..rank {
            vt[r + rank * j] = v[(j, r)];
        }
    }
    Ok(TruncatedSvd { u, s: sigma[..rank].to_vec(), vt, rank, discarded })
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
///
/// Only the lower triangle is read.
pub(crate) fn sym_eig(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| TtError::Linalg(format!("symmetric eigensolver failed on {n}x{n}: {e:?}")))?;
    let values = evd.S().column_vector().iter().copied().collect();
    Ok((values, evd.U().to_owned()))
}

/// Maximum absolute asymmetry `max |a_ij - a_ji|`.
pub(crate) fn asymmetry(a: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn frobenius(data: &[f64]) -> f64 {
    data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_keeps_everything_at_zero_budget() {
        assert_eq!(truncation_rank(&[3.0, 2.0, 1.0], 0.0, usize::MAX), 3);
    }

    #[test]
    fn truncation_drops_exact_zeros() {
        assert_eq!(truncation_rank(&[3.0, 0.0, 0.0], 0.0, usize::MAX), 1);
    }

    #[test]
    fn truncation_respects_budget() {
        // tail norms: after 1 -> sqrt(4+1)=2.236, after 2 -> 1
        let s = [3.0, 2.0, 1.0];
        assert_eq!(truncation_rank(&s, 1.0, usize::MAX), 2);
        assert_eq!(truncation_rank(&s, 0.999, usize::MAX), 3);
        assert_eq!(truncation_rank(&s, 2.3, usize::MAX), 1);
        assert_eq!(truncation_rank(&s, 100.0, usize::MAX), 1);
    }

    #[test]
    fn truncation_keeps_ties_at_boundary() {
        let s = [3.0, 1.0, 1.0];
        assert_eq!(truncation_rank(&s, 1.0, usize::MAX), 3);
    }

    #[test]
    fn truncation_rank_cap() {
        assert_eq!(truncation_rank(&[3.0, 2.0, 1.0], 0.0, 2), 2);
    }

    #[test]
    fn svd_reconstructs() {
        let a = Mat::<f64>::from_fn(5, 3, |i, j| (i * 3 + j) as f64 + 0.5 * (i as f64).sin());
        let t = truncated_svd(a.as_ref(), 0.0, usize::MAX).unwrap();
        let mut us = t.u.clone();
        for r in 0..t.rank {
            for i in 0..5 {
                us[i + 5 * r] *= t.s[r];
            }
        }
        let back = gemm_new(view(&us, 5, t.rank), view(&t.vt, t.rank, 3));
        let orig = to_col_major(a.as_ref());
        for (x, y) in back.iter().zip(&orig) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn qr_reconstructs_wide_and_tall() {
        for (r, c) in [(6, 3), (3, 6), (4, 4)] {
            let a = Mat::<f64>::from_fn(r, c, |i, j| ((i + 1) * (j + 2)) as f64 + (i as f64 - j as f64).cos());
            let qr = thin_qr(a.as_ref());
            let back = gemm_new(view(&qr.q, r, qr.rank), view(&qr.r, qr.rank, c));
            let orig = to_col_major(a.as_ref());
            for (x, y) in back.iter().zip(&orig) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
