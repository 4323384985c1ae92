//! Dense reference computations for small problems.

use std::ops::Range;

use crate::error::{invalid, Result};
use crate::linalg::{self, view};
use crate::tt::TtMatrix;

/// Tolerance for accepting a dense matrix as symmetric, relative to its
/// largest entry.
pub const DENSE_SYMMETRY_TOL: f64 = 1e-10;

/// The dense `N x N` matrix of `a` (column-major), refused above `cap`.
pub fn densify_operator(a: &TtMatrix, cap: usize) -> Result<Vec<f64>> {
    a.to_dense(cap)
}

/// Lowest eigenpairs of a dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum {
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    /// `dim x count`, column-major, orthonormal columns.
    pub eigenvectors: Vec<f64>,
}

impl DenseSpectrum {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        &self.eigenvectors[self.dim * k..self.dim * (k + 1)]
    }
}

/// The `count` smallest eigenpairs of the symmetric `n x n` matrix `m`.
pub fn dense_eig(m: &[f64], n: usize, count: usize) -> Result<DenseSpectrum> {
    if m.len() != n * n {
        return invalid(format!("matrix has {} entries, expected {n}x{n}", m.len()));
    }
    if count > n {
        return invalid(format!("{count} eigenpairs requested from a {n}x{n} matrix"));
    }
    let mat = view(m, n, n);
    let scale = m.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(f64::MIN_POSITIVE);
    let defect = linalg::asymmetry(mat);
    if defect > DENSE_SYMMETRY_TOL * scale {
        return invalid(format!("matrix is not symmetric (max defect {defect:.3e})"));
    }
    let (values, vectors) = linalg::sym_eig(mat)?;
    Ok(DenseSpectrum {
        dim: n,
        eigenvalues: values[..count].to_vec(),
        eigenvectors: linalg::to_col_major(vectors.as_ref().subcols(0, count)),
    })
}

/// Principal angle between two subspaces of equal dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubspaceAngle {
    /// Largest principal angle in radians.
    pub angle: f64,
    /// Set when an input block was not orthonormal and had to be
    /// orthonormalized first.
    pub orthonormalized: bool,
}

fn is_orthonormal(x: &[f64], rows: usize, cols: usize) -> bool {
    let g = linalg::gemm_new(view(x, rows, cols).transpose(), view(x, rows, cols));
    (0..cols).all(|j| (0..cols).all(|i| (g[i + cols * j] - f64::from(u8::from(i == j))).abs() < 1e-10))
}

/// Largest principal angle between the column spans of `x` and `y`, both
/// `rows x cols`: `arccos` of the smallest singular value of `x^T y`.
pub fn subspace_angle(x: &[f64], y: &[f64], rows: usize, cols: usize) -> Result<SubspaceAngle> {
    if x.len() != rows * cols || y.len() != rows * cols {
        return invalid(format!("blocks must both be {rows}x{cols}, got {} and {} entries", x.len(), y.len()));
    }
    if cols == 0 || cols > rows {
        return invalid(format!("cannot compare {cols}-dimensional subspaces of R^{rows}"));
    }
    let mut orthonormalized = false;
    let mut prepare = |b: &[f64]| {
        if is_orthonormal(b, rows, cols) {
            b.to_vec()
        } else {
            orthonormalized = true;
            linalg::thin_qr(view(b, rows, cols)).q
        }
    };
    let (qx, qy) = (prepare(x), prepare(y));
    let (vx, vy) = (view(&qx, rows, cols), view(&qy, rows, cols));
    let overlap = linalg::gemm_new(vx.transpose(), vy);
    let cos = smallest_singular_value(&overlap, cols)?.clamp(0.0, 1.0);
    // the sine from the residual y - x x^T y stays accurate for tiny angles
    let proj = linalg::gemm_new(vx, view(&overlap, cols, cols));
    let resid: Vec<f64> = qy.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let sin = linalg::singular_values(view(&resid, rows, cols))?[0].clamp(0.0, 1.0);
    Ok(SubspaceAngle { angle: sin.atan2(cos), orthonormalized })
}

fn smallest_singular_value(m: &[f64], k: usize) -> Result<f64> {
    Ok(linalg::singular_values(view(m, k, k))?.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Largest principal angle from the `k x k` overlap matrix `X^T Y` of two
/// orthonormal blocks. Angles below about `1e-8` are not resolved in this
/// form.
pub fn angle_from_overlap(overlap: &[f64], k: usize) -> Result<f64> {
    if overlap.len() != k * k || k == 0 {
        return invalid("overlap must be a non-empty square matrix");
    }
    let cos = smallest_singular_value(overlap, k)?.clamp(0.0, 1.0);
    Ok(cos.acos())
}

/// Splits an ascending list into runs of nearly equal values. Neighbours
/// belong to one level when they differ by at most `rel_gap` times the
/// spread of the list.
pub fn group_levels(values: &[f64], rel_gap: f64) -> Vec<Range<usize>> {
    if values.is_empty() {
        return Vec::new();
    }
    let span = values[values.len() - 1] - values[0];
    let scale = if span > 0.0 { span } else { values[0].abs().max(1.0) };
    let gap = rel_gap * scale;
    let mut levels = Vec::new();
    let mut start = 0;
    for i in 1..values.len() {
        if values[i] - values[i - 1] > gap {
            levels.push(start..i);
            start = i;
        }
    }
    levels.push(start..values.len());
    levels
}
