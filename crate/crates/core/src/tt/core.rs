use faer::MatRef;

use crate::error::{invalid, Result};
use crate::linalg::{self, view};

/// An order-3 TT core of shape `left_rank x mode_size x right_rank`.
///
/// Storage is column-major with the left rank index fastest, so entry
/// `(a, i, b)` lives at `a + left_rank * (i + mode_size * b)`. Both standard
/// unfoldings are therefore plain views of the buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct TtCore {
    left_rank: usize,
    mode_size: usize,
    right_rank: usize,
    data: Vec<f64>,
}

impl TtCore {
    pub fn new(left_rank: usize, mode_size: usize, right_rank: usize, data: Vec<f64>) -> Result<Self> {
        if left_rank == 0 || mode_size == 0 || right_rank == 0 {
            return invalid(format!("core dimensions must be positive, got {left_rank}x{mode_size}x{right_rank}"));
        }
        if data.len() != left_rank * mode_size * right_rank {
            return invalid(format!("core data has {} entries, expected {left_rank}*{mode_size}*{right_rank}", data.len()));
        }
        Ok(Self { left_rank, mode_size, right_rank, data })
    }

    pub(crate) fn from_parts(left_rank: usize, mode_size: usize, right_rank: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), left_rank * mode_size * right_rank);
        Self { left_rank, mode_size, right_rank, data }
    }

    pub fn zeros(left_rank: usize, mode_size: usize, right_rank: usize) -> Self {
        Self::from_parts(left_rank, mode_size, right_rank, vec![0.0; left_rank * mode_size * right_rank])
    }

    /// Builds a core from a closure over `(a, i, b)`.
    pub fn from_fn(left_rank: usize, mode_size: usize, right_rank: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(left_rank * mode_size * right_rank);
        for b in 0..right_rank {
            for i in 0..mode_size {
                for a in 0..left_rank {
                    data.push(f(a, i, b));
                }
            }
        }
        Self::from_parts(left_rank, mode_size, right_rank, data)
    }

    #[inline]
    pub fn left_rank(&self) -> usize {
        self.left_rank
    }

    #[inline]
    pub fn mode_size(&self) -> usize {
        self.mode_size
    }

    #[inline]
    pub fn right_rank(&self) -> usize {
        self.right_rank
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[a + self.left_rank * (i + self.mode_size * b)]
    }

    /// The `(left_rank * mode_size) x right_rank` unfolding.
    pub fn left_unfolding(&self) -> MatRef<'_, f64> {
        view(&self.data, self.left_rank * self.mode_size, self.right_rank)
    }

    /// The `left_rank x (mode_size * right_rank)` unfolding.
    pub fn right_unfolding(&self) -> MatRef<'_, f64> {
        view(&self.data, self.left_rank, self.mode_size * self.right_rank)
    }

    /// The `left_rank x right_rank` matrix `X(i)`.
    pub fn slice(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.left_rank * self.right_rank];
        for b in 0..self.right_rank {
            for a in 0..self.left_rank {
                out[a + self.left_rank * b] = self.get(a, i, b);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }

    /// Largest deviation of `sum_i X(i)^T X(i)` from the identity.
    pub fn left_orthogonality_defect(&self) -> f64 {
        let u = self.left_unfolding();
        gram_defect(u.transpose(), u)
    }

    /// Largest deviation of `sum_i X(i) X(i)^T` from the identity.
    pub fn right_orthogonality_defect(&self) -> f64 {
        let v = self.right_unfolding();
        gram_defect(v, v.transpose())
    }

    pub fn is_left_orthogonal(&self, tol: f64) -> bool {
        self.left_orthogonality_defect() <= tol
    }

    pub fn is_right_orthogonal(&self, tol: f64) -> bool {
        self.right_orthogonality_defect() <= tol
    }
}

fn gram_defect(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    let n = a.nrows();
    let g = linalg::gemm_new(a, b);
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[i + n * j] - target).abs());
        }
    }
    worst
}
