use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::core::TtCore;
use crate::error::{invalid, Result, TtError};
use crate::linalg::{self, gemm_new, view};

/// Default cap on the number of entries produced by densification.
pub const DEFAULT_DENSE_CAP: usize = 1 << 20;

/// A vector of length `n_1 * ... * n_d` stored in tensor-train format.
///
/// Entry `i = (i_1, ..., i_d)` is `X1(i_1) X2(i_2) ... Xd(i_d)`; the linear
/// index is big-endian (`i_1` varies slowest) everywhere in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct TtVector {
    cores: Vec<TtCore>,
    center: Option<usize>,
}

impl TtVector {
    /// Validates boundary and chaining rank conditions.
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        validate_chain(&cores)?;
        Ok(Self { cores, center: None })
    }

    pub(crate) fn from_parts(cores: Vec<TtCore>, center: Option<usize>) -> Self {
        debug_assert!(validate_chain(&cores).is_ok());
        Self { cores, center }
    }

    /// Rank-one vector `v_1 ⊗ v_2 ⊗ ... ⊗ v_d`.
    pub fn rank_one(factors: &[Vec<f64>]) -> Result<Self> {
        if factors.is_empty() {
            return invalid("rank-one vector needs at least one factor");
        }
        let cores = factors.iter().map(|f| TtCore::new(1, f.len(), 1, f.clone())).collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Random TT vector with internal ranks `min(rank, n_1..n_k, n_{k+1}..n_d)`.
    ///
    /// Entries are i.i.d. standard normal from a ChaCha8 stream seeded with
    /// `seed`; the result is right-orthogonalized with center at site 0.
    pub fn random(mode_sizes: &[usize], rank: usize, seed: u64) -> Result<Self> {
        if mode_sizes.is_empty() {
            return invalid("mode_sizes must not be empty");
        }
        if rank == 0 {
            return invalid("rank must be positive");
        }
        if mode_sizes.contains(&0) {
            return invalid("mode sizes must be positive");
        }
        let ranks = bounded_ranks(mode_sizes, rank);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cores = random_cores(mode_sizes, &ranks, &mut rng);
        Self::from_parts(cores, None).shift_center(0)
    }

    pub fn dim(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn into_cores(self) -> Vec<TtCore> {
        self.cores
    }

    pub fn core(&self, k: usize) -> &TtCore {
        &self.cores[k]
    }

    /// Site at which the vector is known to be orthogonalized, if any.
    pub fn orthogonality_center(&self) -> Option<usize> {
        self.center
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(TtCore::mode_size).collect()
    }

    /// The `d - 1` internal bond ranks.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(TtCore::right_rank).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Total number of entries `n_1 * ... * n_d` (saturating).
    pub fn len(&self) -> usize {
        self.cores.iter().fold(1usize, |acc, c| acc.saturating_mul(c.mode_size()))
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_dense(&self) -> Result<Vec<f64>> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    /// Full vector, big-endian linearization.
    pub fn to_dense_capped(&self, cap: usize) -> Result<Vec<f64>> {
        let size = self.len();
        if size > cap {
            return Err(TtError::SizeLimit { what: "dense vector", size, cap });
        }
        // acc is (prefix x rank), column-major
        let mut acc = vec![1.0];
        let mut prefix = 1usize;
        for core in &self.cores {
            let (ra, n, rb) = (core.left_rank(), core.mode_size(), core.right_rank());
            let t = gemm_new(view(&acc, prefix, ra), core.right_unfolding());
            // t(p, i + n*b) -> next(p*n + i, b)
            let rows = prefix * n;
            let mut next = vec![0.0; rows * rb];
            for b in 0..rb {
                for i in 0..n {
                    for p in 0..prefix {
                        next[p * n + i + rows * b] = t[p + prefix * (i + n * b)];
                    }
                }
            }
            acc = next;
            prefix = rows;
        }
        Ok(acc)
    }

    /// Exact Euclidean inner product by left-to-right contraction.
    pub fn dot(&self, other: &TtVector) -> Result<f64> {
        if self.mode_sizes() != other.mode_sizes() {
            return invalid(format!("mode sizes differ: {:?} vs {:?}", self.mode_sizes(), other.mode_sizes()));
        }
        let mut env = vec![1.0];
        for (x, y) in self.cores.iter().zip(&other.cores) {
            let (rx, n, ry) = (x.left_rank(), x.mode_size(), y.right_rank());
            let w = gemm_new(view(&env, rx, y.left_rank()), y.right_unfolding());
            env = gemm_new(x.left_unfolding().transpose(), view(&w, rx * n, ry));
        }
        Ok(env[0])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).expect("same shape").max(0.0).sqrt()
    }

    /// Norm computed through orthogonalization, accurate even when the
    /// vector is a near-cancelling combination.
    pub fn orthogonal_norm(&self) -> f64 {
        let y = self.shift_center(0).expect("site 0 exists");
        y.cores[0].frobenius_norm()
    }

    pub fn scale(&self, alpha: f64) -> TtVector {
        let mut cores = self.cores.clone();
        let k = self.center.unwrap_or(0);
        cores[k].data_mut().iter_mut().for_each(|x| *x *= alpha);
        Self::from_parts(cores, self.center)
    }

    /// Moves the orthogonality center to site `p` by successive thin QR
    /// factorizations. Cores before `p` become left-orthogonal, cores after
    /// `p` right-orthogonal; the represented vector is unchanged.
    pub fn shift_center(&self, p: usize) -> Result<TtVector> {
        let d = self.dim();
        if p >= d {
            return invalid(format!("center {p} out of range for {d} sites"));
        }
        let mut cores = self.cores.clone();
        let (left_from, right_from) = match self.center {
            Some(c) => (c.min(p), c.max(p)),
            None => (0, d - 1),
        };
        for k in left_from..p {
            left_orthogonalize(&mut cores, k);
        }
        for k in ((p + 1)..=right_from).rev() {
            right_orthogonalize(&mut cores, k);
        }
        Ok(Self::from_parts(cores, Some(p)))
    }

    /// TT-SVD rounding: the result `y` satisfies `|y - x| <= eps |x|` when
    /// no bond hits `rmax`. Each of the `d - 1` bonds receives the budget
    /// `eps |x| / sqrt(d - 1)`.
    pub fn round(&self, eps: f64, rmax: usize) -> Result<TtVector> {
        if rmax < 1 {
            return invalid("rmax must be at least 1");
        }
        if !(eps >= 0.0) {
            return invalid(format!("eps must be non-negative, got {eps}"));
        }
        let d = self.dim();
        let mut y = self.shift_center(0)?;
        if d == 1 {
            return Ok(y);
        }
        let norm = y.cores[0].frobenius_norm();
        let budget = eps * norm / ((d - 1) as f64).sqrt();
        for k in 0..d - 1 {
            let (ra, n) = (y.cores[k].left_rank(), y.cores[k].mode_size());
            let svd = linalg::truncated_svd(y.cores[k].left_unfolding(), budget, rmax)?;
            let rank = svd.rank;
            let mut svt = svd.vt;
            let cols = svt.len() / rank;
            for j in 0..cols {
                for r in 0..rank {
                    svt[r + rank * j] *= svd.s[r];
                }
            }
            let next = &y.cores[k + 1];
            let (n2, rb2) = (next.mode_size(), next.right_rank());
            let merged = gemm_new(view(&svt, rank, cols), next.right_unfolding());
            y.cores[k] = TtCore::from_parts(ra, n, rank, svd.u);
            y.cores[k + 1] = TtCore::from_parts(rank, n2, rb2, merged);
        }
        y.center = Some(d - 1);
        Ok(y)
    }
}

pub(crate) fn validate_chain(cores: &[TtCore]) -> Result<()> {
    let d = cores.len();
    if d == 0 {
        return invalid("a tensor train needs at least one core");
    }
    if cores[0].left_rank() != 1 || cores[d - 1].right_rank() != 1 {
        return invalid("boundary ranks must be 1");
    }
    for k in 0..d - 1 {
        if cores[k].right_rank() != cores[k + 1].left_rank() {
            return invalid(format!(
                "rank mismatch between cores {k} and {}: {} vs {}",
                k + 1,
                cores[k].right_rank(),
                cores[k + 1].left_rank()
            ));
        }
    }
    Ok(())
}

/// Bond ranks `min(rank, prod_{j<=k} n_j, prod_{j>k} n_j)`.
pub(crate) fn bounded_ranks(mode_sizes: &[usize], rank: usize) -> Vec<usize> {
    let d = mode_sizes.len();
    let mut ranks = vec![1usize; d + 1];
    let mut left = 1usize;
    for k in 1..d {
        left = left.saturating_mul(mode_sizes[k - 1]);
        let right = mode_sizes[k..].iter().fold(1usize, |a, &n| a.saturating_mul(n));
        ranks[k] = rank.min(left).min(right);
    }
    ranks
}

pub(crate) fn random_cores(mode_sizes: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng) -> Vec<TtCore> {
    mode_sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let len = ranks[k] * n * ranks[k + 1];
            let data = (0..len).map(|_| StandardNormal.sample(rng)).collect();
            TtCore::from_parts(ranks[k], n, ranks[k + 1], data)
        })
        .collect()
}

/// Makes core `k` left-orthogonal and pushes the triangular factor into
/// core `k + 1`.
pub(crate) fn left_orthogonalize(cores: &mut [TtCore], k: usize) {
    let (ra, n) = (cores[k].left_rank(), cores[k].mode_size());
    let qr = linalg::thin_qr(cores[k].left_unfolding());
    let rb_old = cores[k].right_rank();
    let next = &cores[k + 1];
    let (n2, rb2) = (next.mode_size(), next.right_rank());
    let merged = gemm_new(view(&qr.r, qr.rank, rb_old), next.right_unfolding());
    cores[k] = TtCore::from_parts(ra, n, qr.rank, qr.q);
    cores[k + 1] = TtCore::from_parts(qr.rank, n2, rb2, merged);
}

/// Makes core `k` right-orthogonal and pushes the triangular factor into
/// core `k - 1`.
pub(crate) fn right_orthogonalize(cores: &mut [TtCore], k: usize) {
    let (ra, n, rb) = (cores[k].left_rank(), cores[k].mode_size(), cores[k].right_rank());
    // right_unfolding = R^T Q^T with Q R the QR of its transpose
    let qr = linalg::thin_qr(cores[k].right_unfolding().transpose());
    let rank = qr.rank;
    let q = view(&qr.q, n * rb, rank);
    let qt = linalg::to_col_major(q.transpose());
    let prev = &cores[k - 1];
    let (ra0, n0) = (prev.left_rank(), prev.mode_size());
    let merged = gemm_new(prev.left_unfolding(), view(&qr.r, rank, ra).transpose());
    cores[k] = TtCore::from_parts(rank, n, rb, qt);
    cores[k - 1] = TtCore::from_parts(ra0, n0, rank, merged);
}
