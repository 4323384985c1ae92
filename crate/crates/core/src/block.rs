//! Block tensor trains: `B` vectors sharing one train, with the state index
//! carried by a single core that can travel along the chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result, TtError};
use crate::linalg::{self, gemm, gemm_new, view, view_mut};
use crate::tt::{random_cores, right_orthogonalize, TtCore, TtVector, DEFAULT_DENSE_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Left,
    Right,
}

/// The core carrying the state index, shape `left_rank x mode_size x
/// right_rank x num_states`.
///
/// Stored column-major with the state index slowest, so the data is an
/// `m x B` matrix whose column `s` is the vectorized core of state `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCore {
    left_rank: usize,
    mode_size: usize,
    right_rank: usize,
    num_states: usize,
    data: Vec<f64>,
}

impl BlockCore {
    pub fn new(left_rank: usize, mode_size: usize, right_rank: usize, num_states: usize, data: Vec<f64>) -> Result<Self> {
        if left_rank == 0 || mode_size == 0 || right_rank == 0 || num_states == 0 {
            return invalid("block core dimensions must be positive");
        }
        if data.len() != left_rank * mode_size * right_rank * num_states {
            return invalid(format!(
                "block core data has {} entries, expected {left_rank}*{mode_size}*{right_rank}*{num_states}",
                data.len()
            ));
        }
        Ok(Self { left_rank, mode_size, right_rank, num_states, data })
    }

    pub(crate) fn from_parts(left_rank: usize, mode_size: usize, right_rank: usize, num_states: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), left_rank * mode_size * right_rank * num_states);
        Self { left_rank, mode_size, right_rank, num_states, data }
    }

    pub fn left_rank(&self) -> usize {
        self.left_rank
    }

    pub fn mode_size(&self) -> usize {
        self.mode_size
    }

    pub fn right_rank(&self) -> usize {
        self.right_rank
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Local dimension `left_rank * mode_size * right_rank`.
    pub fn local_dim(&self) -> usize {
        self.left_rank * self.mode_size * self.right_rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, a: usize, i: usize, b: usize, s: usize) -> f64 {
        self.data[a + self.left_rank * (i + self.mode_size * (b + self.right_rank * s))]
    }

    /// The vectorized core of one state.
    pub fn state(&self, s: usize) -> &[f64] {
        let m = self.local_dim();
        &self.data[m * s..m * (s + 1)]
    }

    pub fn state_core(&self, s: usize) -> TtCore {
        TtCore::from_parts(self.left_rank, self.mode_size, self.right_rank, self.state(s).to_vec())
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(&self.data)
    }

    /// `B x B` Gram matrix of the state columns.
    pub fn gram(&self) -> Vec<f64> {
        let m = self.local_dim();
        let x = view(&self.data, m, self.num_states);
        gemm_new(x.transpose(), x)
    }
}

/// The factor `G(b)` left over by a block split, one matrix per state.
///
/// Stored as `num_states` contiguous column-major `rows x cols` matrices.
/// After a right split `rows` is the new bond rank and `cols` the old right
/// rank; after a left split `rows` is the old left rank and `cols` the new
/// bond rank.
#[derive(Debug, Clone, PartialEq)]
pub struct GCore {
    rows: usize,
    cols: usize,
    num_states: usize,
    data: Vec<f64>,
}

impl GCore {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matrix(&self, s: usize) -> &[f64] {
        let sz = self.rows * self.cols;
        &self.data[sz * s..sz * (s + 1)]
    }
}

/// Result of [`block_split`]: an orthogonal ordinary core and the factor
/// that still carries the state index.
#[derive(Debug, Clone)]
pub struct Split {
    pub direction: Direction,
    /// Left-orthogonal for [`Direction::Right`], right-orthogonal for
    /// [`Direction::Left`].
    pub core: TtCore,
    pub g: GCore,
    /// Frobenius norm of the discarded singular values.
    pub discarded: f64,
}

impl Split {
    pub fn rank(&self) -> usize {
        match self.direction {
            Direction::Right => self.core.right_rank(),
            Direction::Left => self.core.left_rank(),
        }
    }
}

/// Separates the state index from a block core by a truncated SVD.
///
/// [`Direction::Right`] groups the state index with the right bond,
/// `(r_l n) x (r_r B)`, and returns a left-orthogonal core; [`Direction::Left`]
/// groups it with the left bond, `(r_l B) x (n r_r)`, and returns a
/// right-orthogonal core. At most `eps * |core|_F` is discarded and at most
/// `rmax` singular values are kept.
pub fn block_split(core: &BlockCore, direction: Direction, eps: f64, rmax: usize) -> Result<Split> {
    block_split_bounded(core, direction, eps, 1, rmax)
}

/// [`block_split`] keeping at least `rmin` singular values when available.
pub(crate) fn block_split_bounded(core: &BlockCore, direction: Direction, eps: f64, rmin: usize, rmax: usize) -> Result<Split> {
    if rmax < 1 {
        return invalid("rmax must be at least 1");
    }
    if !(eps >= 0.0) {
        return invalid(format!("eps must be non-negative, got {eps}"));
    }
    let (rl, n, rr, nb) = (core.left_rank, core.mode_size, core.right_rank, core.num_states);
    let budget = eps * core.frobenius_norm();
    match direction {
        Direction::Right => {
            let svd = linalg::truncated_svd_bounded(view(&core.data, rl * n, rr * nb), budget, rmin, rmax)?;
            let r = svd.rank;
            let mut g = svd.vt;
            for col in 0..rr * nb {
                for a in 0..r {
                    g[a + r * col] *= svd.s[a];
                }
            }
            Ok(Split {
                direction,
                core: TtCore::from_parts(rl, n, r, svd.u),
                g: GCore { rows: r, cols: rr, num_states: nb, data: g },
                discarded: svd.discarded,
            })
        }
        Direction::Left => {
            // row a + rl*s, column i + n*b
            let (rows, cols) = (rl * nb, n * rr);
            let mut mat = vec![0.0; rows * cols];
            for s in 0..nb {
                let src = core.state(s);
                for c in 0..cols {
                    mat[rl * s + rows * c..rl * (s + 1) + rows * c].copy_from_slice(&src[rl * c..rl * (c + 1)]);
                }
            }
            let svd = linalg::truncated_svd_bounded(view(&mat, rows, cols), budget, rmin, rmax)?;
            let r = svd.rank;
            let mut g = vec![0.0; rl * r * nb];
            for s in 0..nb {
                for k in 0..r {
                    for a in 0..rl {
                        g[a + rl * (k + r * s)] = svd.u[a + rl * s + rows * k] * svd.s[k];
                    }
                }
            }
            Ok(Split {
                direction,
                core: TtCore::from_parts(r, n, rr, svd.vt),
                g: GCore { rows: rl, cols: r, num_states: nb, data: g },
                discarded: svd.discarded,
            })
        }
    }
}

/// Absorbs `G(b)` into the core to the right of a right split:
/// `G(b) X(i)` for every state.
pub fn merge_right(g: &GCore, next: &TtCore) -> Result<BlockCore> {
    if g.cols != next.left_rank() {
        return invalid(format!("cannot merge G with {} columns into core of left rank {}", g.cols, next.left_rank()));
    }
    let (r, n, rr, nb) = (g.rows, next.mode_size(), next.right_rank(), g.num_states);
    let m = r * n * rr;
    let mut data = vec![0.0; m * nb];
    for s in 0..nb {
        let dst = view_mut(&mut data[m * s..m * (s + 1)], r, n * rr);
        gemm(dst, false, view(g.matrix(s), r, g.cols), next.right_unfolding());
    }
    Ok(BlockCore::from_parts(r, n, rr, nb, data))
}

/// Absorbs `G(b)` into the core to the left of a left split:
/// `X(i) G(b)` for every state.
pub fn merge_left(prev: &TtCore, g: &GCore) -> Result<BlockCore> {
    if prev.right_rank() != g.rows {
        return invalid(format!("cannot merge G with {} rows into core of right rank {}", g.rows, prev.right_rank()));
    }
    let (rl, n, r, nb) = (prev.left_rank(), prev.mode_size(), g.cols, g.num_states);
    // [G(0) ... G(B-1)] is a rows x (r B) matrix in exactly the block layout
    let data = gemm_new(prev.left_unfolding(), view(&g.data, g.rows, r * nb));
    Ok(BlockCore::from_parts(rl, n, r, nb, data))
}

/// `B` vectors in block-TT format.
///
/// `cores` holds the `d - 1` ordinary cores in site order with the block
/// position skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTt {
    cores: Vec<TtCore>,
    block: BlockCore,
    position: usize,
}

impl BlockTt {
    pub fn new(cores: Vec<TtCore>, block: BlockCore, position: usize) -> Result<Self> {
        let d = cores.len() + 1;
        if position >= d {
            return invalid(format!("block position {position} out of range for {d} sites"));
        }
        let x = Self { cores, block, position };
        let mut left = 1;
        for k in 0..d {
            let (l, r) = x.site_ranks(k);
            if l != left {
                return invalid(format!("rank mismatch at site {k}: expected left rank {left}, found {l}"));
            }
            left = r;
        }
        if left != 1 {
            return invalid("last core must have right rank 1");
        }
        Ok(x)
    }

    /// Random initial guess with the block at site 0 and every other core
    /// right-orthogonal.
    ///
    /// Bond `k` gets rank `min(rank, B n_0 ... n_{k-1}, n_k ... n_{d-1})`;
    /// the block core has orthonormal state columns.
    pub fn random(mode_sizes: &[usize], num_states: usize, rank: usize, seed: u64) -> Result<Self> {
        let d = mode_sizes.len();
        if d == 0 {
            return invalid("mode_sizes must not be empty");
        }
        if mode_sizes.contains(&0) || rank == 0 || num_states == 0 {
            return invalid("mode sizes, rank and number of states must be positive");
        }
        let mut ranks = vec![1usize; d + 1];
        let mut left = num_states;
        for k in 1..d {
            left = left.saturating_mul(mode_sizes[k - 1]);
            let right = mode_sizes[k..].iter().fold(1usize, |a, &n| a.saturating_mul(n));
            ranks[k] = rank.min(left).min(right);
        }
        let m = mode_sizes[0] * ranks[1];
        if m < num_states {
            return Err(TtError::LocalDimension { dim: m, states: num_states });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cores = random_cores(mode_sizes, &ranks, &mut rng);
        for k in (1..d).rev() {
            right_orthogonalize(&mut cores, k);
        }
        let block_data: Vec<f64> = (0..m * num_states).map(|_| StandardNormal.sample(&mut rng)).collect();
        let q = linalg::thin_qr(view(&block_data, m, num_states));
        let block = BlockCore::from_parts(1, mode_sizes[0], ranks[1], num_states, q.q);
        cores.remove(0);
        Ok(Self { cores, block, position: 0 })
    }

    /// Wraps a plain TT vector as a single-state block TT with the block at
    /// its orthogonality center (site 0 if it has none).
    pub fn from_tt(x: &TtVector) -> Self {
        let p = x.orthogonality_center().unwrap_or(0);
        let mut cores = x.cores().to_vec();
        let c = cores.remove(p);
        let block = BlockCore::from_parts(c.left_rank(), c.mode_size(), c.right_rank(), 1, c.into_data());
        Self { cores, block, position: p }
    }

    pub fn dim(&self) -> usize {
        self.cores.len() + 1
    }

    pub fn num_states(&self) -> usize {
        self.block.num_states
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn block(&self) -> &BlockCore {
        &self.block
    }

    /// Ordinary cores in site order, block position skipped.
    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    /// Ordinary core at `site`. Panics at the block position.
    pub fn core(&self, site: usize) -> &TtCore {
        assert_ne!(site, self.position, "site {site} holds the block core");
        &self.cores[self.core_index(site)]
    }

    fn core_index(&self, site: usize) -> usize {
        if site < self.position {
            site
        } else {
            site - 1
        }
    }

    fn site_ranks(&self, site: usize) -> (usize, usize) {
        if site == self.position {
            (self.block.left_rank, self.block.right_rank)
        } else {
            let c = &self.cores[self.core_index(site)];
            (c.left_rank(), c.right_rank())
        }
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        (0..self.dim()).map(|k| if k == self.position { self.block.mode_size } else { self.core(k).mode_size() }).collect()
    }

    /// Bond ranks including the two boundary ones, length `d + 1`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend((0..self.dim()).map(|k| self.site_ranks(k).1));
        r
    }

    /// The `d - 1` internal bond ranks.
    pub fn rank_profile(&self) -> Vec<usize> {
        let r = self.ranks();
        r[1..r.len() - 1].to_vec()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Replaces the block core; its shape must stay the same up to the
    /// number of states.
    pub fn set_block(&mut self, block: BlockCore) -> Result<()> {
        let b = &self.block;
        if (block.left_rank, block.mode_size, block.right_rank) != (b.left_rank, b.mode_size, b.right_rank) {
            return invalid("replacement block core has a different shape");
        }
        self.block = block;
        Ok(())
    }

    /// Moves the state index to an adjacent site, truncating the split at
    /// relative accuracy `eps` and rank `rmax`.
    pub fn block_move(&self, to: usize, eps: f64, rmax: usize) -> Result<Self> {
        let mut x = self.clone();
        x.step(to, eps, rmax)?;
        Ok(x)
    }

    /// Moves the state index to `to` through a sequence of adjacent moves.
    pub fn move_to(&self, to: usize, eps: f64, rmax: usize) -> Result<Self> {
        if to >= self.dim() {
            return invalid(format!("target site {to} out of range for {} sites", self.dim()));
        }
        let mut x = self.clone();
        while x.position != to {
            let next = if to > x.position { x.position + 1 } else { x.position - 1 };
            x.step(next, eps, rmax)?;
        }
        Ok(x)
    }

    pub(crate) fn step(&mut self, to: usize, eps: f64, rmax: usize) -> Result<Split> {
        let p = self.position;
        if to >= self.dim() || (to + 1 != p && to != p + 1) {
            return invalid(format!("block can only move to an adjacent site, asked {p} -> {to}"));
        }
        let direction = if to > p { Direction::Right } else { Direction::Left };
        let split = block_split(&self.block, direction, eps, rmax)?;
        self.apply_split(split.clone())?;
        Ok(split)
    }

    /// Installs a split of the current block core and merges its `G` factor
    /// into the neighbour in the split direction.
    pub(crate) fn apply_split(&mut self, split: Split) -> Result<()> {
        let p = self.position;
        match split.direction {
            Direction::Right => {
                let block = merge_right(&split.g, &self.cores[p])?;
                self.cores[p] = split.core;
                self.block = block;
                self.position = p + 1;
            }
            Direction::Left => {
                let block = merge_left(&self.cores[p - 1], &split.g)?;
                self.cores[p - 1] = split.core;
                self.block = block;
                self.position = p - 1;
            }
        }
        Ok(())
    }

    /// Adds a state column to the block core.
    pub(crate) fn push_state(&mut self, column: &[f64]) -> Result<()> {
        let b = &self.block;
        if column.len() != b.local_dim() {
            return invalid("new state column has wrong length");
        }
        let mut data = b.data.clone();
        data.extend_from_slice(column);
        self.block = BlockCore::from_parts(b.left_rank, b.mode_size, b.right_rank, b.num_states + 1, data);
        Ok(())
    }

    /// Widens the bond to the right of the block by one direction orthogonal
    /// to the rows of the right-orthogonal neighbour, padding the block core
    /// with zeros. Returns `false` when the bond is already full.
    pub(crate) fn widen_right_bond(&mut self, rng: &mut ChaCha8Rng) -> bool {
        let p = self.position;
        if p + 1 >= self.dim() {
            return false;
        }
        let next = &self.cores[p];
        let (r, n, r2) = (next.left_rank(), next.mode_size(), next.right_rank());
        if r >= n * r2 {
            return false;
        }
        let cols = n * r2;
        let rows = next.right_unfolding();
        let mut v: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            for a in 0..r {
                let dot: f64 = (0..cols).map(|c| rows[(a, c)] * v[c]).sum();
                for c in 0..cols {
                    v[c] -= dot * rows[(a, c)];
                }
            }
        }
        let norm = linalg::frobenius(&v);
        if norm == 0.0 {
            return false;
        }
        let core = TtCore::from_fn(r + 1, n, r2, |a, i, b| if a < r { next.get(a, i, b) } else { v[i + n * b] / norm });
        let b = &self.block;
        let slab = b.left_rank * b.mode_size;
        let mut data = Vec::with_capacity(slab * (b.right_rank + 1) * b.num_states);
        for s in 0..b.num_states {
            data.extend_from_slice(b.state(s));
            data.resize(data.len() + slab, 0.0);
        }
        self.block = BlockCore::from_parts(b.left_rank, b.mode_size, b.right_rank + 1, b.num_states, data);
        self.cores[p] = core;
        true
    }

    /// The TT vector of state `b`.
    pub fn extract_state(&self, b: usize) -> Result<TtVector> {
        if b >= self.num_states() {
            return invalid(format!("state {b} out of range for {} states", self.num_states()));
        }
        let mut cores = self.cores.clone();
        cores.insert(self.position, self.block.state_core(b));
        Ok(TtVector::from_parts(cores, None))
    }

    /// Keeps the states listed in `order`, in that order.
    pub fn select_states(&self, order: &[usize]) -> Result<Self> {
        let m = self.block.local_dim();
        let mut data = Vec::with_capacity(m * order.len());
        for &s in order {
            if s >= self.num_states() {
                return invalid(format!("state {s} out of range for {} states", self.num_states()));
            }
            data.extend_from_slice(self.block.state(s));
        }
        if order.is_empty() {
            return invalid("at least one state must be selected");
        }
        let b = &self.block;
        let block = BlockCore::from_parts(b.left_rank, b.mode_size, b.right_rank, order.len(), data);
        Ok(Self { cores: self.cores.clone(), block, position: self.position })
    }

    /// Densified states (big-endian), one vector per state.
    pub fn to_dense_states(&self) -> Result<Vec<Vec<f64>>> {
        self.to_dense_states_capped(DEFAULT_DENSE_CAP)
    }

    pub fn to_dense_states_capped(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        (0..self.num_states()).map(|b| self.extract_state(b)?.to_dense_capped(cap)).collect()
    }

    /// Largest orthogonality defect of the frame: left cores before the
    /// block, right cores after it.
    pub fn frame_defect(&self) -> f64 {
        (0..self.dim())
            .filter(|&k| k != self.position)
            .map(|k| {
                let c = self.core(k);
                if k < self.position {
                    c.left_orthogonality_defect()
                } else {
                    c.right_orthogonality_defect()
                }
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::max_abs_diff;

    fn random_block(rl: usize, n: usize, rr: usize, nb: usize, seed: u64) -> BlockCore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rl * n * rr * nb).map(|_| StandardNormal.sample(&mut rng)).collect();
        BlockCore::new(rl, n, rr, nb, data).unwrap()
    }

    fn reconstruct(split: &Split, original: &BlockCore) -> BlockCore {
        let (rl, n, rr) = (original.left_rank(), original.mode_size(), original.right_rank());
        match split.direction {
            Direction::Right => {
                let nb = original.num_states();
                let r = split.core.right_rank();
                let data = gemm_new(split.core.left_unfolding(), view(split.g.data(), r, rr * nb));
                BlockCore::from_parts(rl, n, rr, nb, data)
            }
            Direction::Left => {
                let nb = original.num_states();
                let r = split.core.left_rank();
                let mut data = vec![0.0; rl * n * rr * nb];
                for s in 0..nb {
                    let out = gemm_new(view(split.g.matrix(s), rl, r), split.core.right_unfolding());
                    data[rl * n * rr * s..rl * n * rr * (s + 1)].copy_from_slice(&out);
                }
                BlockCore::from_parts(rl, n, rr, nb, data)
            }
        }
    }

    #[test]
    fn exact_split_reconstructs_single_state() {
        let c = random_block(2, 3, 2, 1, 0);
        for dir in [Direction::Right, Direction::Left] {
            let s = block_split(&c, dir, 0.0, usize::MAX).unwrap();
            assert!(max_abs_diff(reconstruct(&s, &c).data(), c.data()) < 1e-13);
            assert_eq!(s.discarded, 0.0);
        }
    }

    #[test]
    fn split_cores_are_orthogonal() {
        let c = random_block(3, 4, 2, 5, 1);
        let r = block_split(&c, Direction::Right, 0.0, usize::MAX).unwrap();
        assert!(r.core.is_left_orthogonal(1e-12));
        // a random 12 x 10 unfolding has full rank
        assert_eq!(r.rank(), 10);
        let l = block_split(&c, Direction::Left, 0.0, usize::MAX).unwrap();
        assert!(l.core.is_right_orthogonal(1e-12));
        assert_eq!(l.rank(), 8);
        assert!(max_abs_diff(reconstruct(&l, &c).data(), c.data()) < 1e-12);
        assert!(max_abs_diff(reconstruct(&r, &c).data(), c.data()) < 1e-12);
    }

    #[test]
    fn repeated_states_do_not_inflate_rank() {
        let one = random_block(1, 4, 3, 1, 2);
        let data: Vec<f64> = (0..4).flat_map(|_| one.data().to_vec()).collect();
        let c = BlockCore::new(1, 4, 3, 4, data).unwrap();
        let single = block_split(&one, Direction::Right, 1e-12, usize::MAX).unwrap();
        let many = block_split(&c, Direction::Right, 1e-12, usize::MAX).unwrap();
        assert_eq!(many.rank(), single.rank());
    }

    #[test]
    fn truncated_split_respects_budget() {
        let c = random_block(2, 4, 2, 3, 3);
        for dir in [Direction::Right, Direction::Left] {
            let s = block_split(&c, dir, 0.1, usize::MAX).unwrap();
            let back = reconstruct(&s, &c);
            let err = back.data().iter().zip(c.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err <= 0.1 * c.frobenius_norm() * (1.0 + 1e-12));
            assert!((err - s.discarded).abs() < 1e-10);
        }
    }

    #[test]
    fn split_rank_cap() {
        let c = random_block(3, 4, 3, 4, 4);
        let s = block_split(&c, Direction::Right, 0.0, 2).unwrap();
        assert_eq!(s.rank(), 2);
        assert!(block_split(&c, Direction::Right, 0.0, 0).is_err());
    }

    #[test]
    fn random_block_tt_shapes() {
        let x = BlockTt::random(&[2, 2, 2, 2], 5, 5, 0).unwrap();
        assert_eq!(x.position(), 0);
        assert_eq!(x.ranks(), vec![1, 5, 4, 2, 1]);
        assert_eq!(x.num_states(), 5);
        assert!(x.frame_defect() < 1e-12);
        let g = x.block().gram();
        let eye: Vec<f64> = (0..25).map(|ij| if ij % 5 == ij / 5 { 1.0 } else { 0.0 }).collect();
        assert!(max_abs_diff(&g, &eye) < 1e-12);
        assert_eq!(x, BlockTt::random(&[2, 2, 2, 2], 5, 5, 0).unwrap());
    }

    #[test]
    fn random_rejects_too_many_states() {
        assert!(matches!(BlockTt::random(&[2], 3, 1, 0), Err(TtError::LocalDimension { .. })));
    }

    #[test]
    fn exact_moves_round_trip() {
        let x = BlockTt::random(&[3, 3, 3, 3], 4, 4, 7).unwrap();
        let before = x.to_dense_states().unwrap();
        let far = x.move_to(3, 0.0, usize::MAX).unwrap();
        assert!(far.frame_defect() < 1e-12);
        let back = far.move_to(0, 0.0, usize::MAX).unwrap();
        for (a, b) in before.iter().zip(back.to_dense_states().unwrap()) {
            assert!(max_abs_diff(a, &b) < 1e-12);
        }
        for (a, b) in before.iter().zip(far.to_dense_states().unwrap()) {
            assert!(max_abs_diff(a, &b) < 1e-12);
        }
    }

    #[test]
    fn non_adjacent_move_rejected() {
        let x = BlockTt::random(&[2, 2, 2], 2, 2, 0).unwrap();
        assert!(x.block_move(2, 0.0, 10).is_err());
        assert!(x.block_move(1, 0.0, 10).is_ok());
    }

    #[test]
    fn move_rank_bound() {
        let x = BlockTt::random(&[3, 3, 3, 3], 3, 2, 5).unwrap();
        let y = x.block_move(1, 0.0, usize::MAX).unwrap();
        assert!(y.ranks()[1] <= (x.ranks()[1] * 3).min(3));
    }

    #[test]
    fn extracted_states_share_block_gram() {
        let x = BlockTt::random(&[3, 3, 3], 4, 4, 3).unwrap().move_to(1, 0.0, usize::MAX).unwrap();
        let states = x.to_dense_states().unwrap();
        let g = x.block().gram();
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = states[i].iter().zip(&states[j]).map(|(a, b)| a * b).sum();
                assert!((dot - g[i + 4 * j]).abs() < 1e-11);
            }
        }
        assert!(x.extract_state(4).is_err());
    }

    #[test]
    fn single_state_block_is_plain_tt() {
        let v = TtVector::random(&[2, 3, 2], 2, 1).unwrap();
        let x = BlockTt::from_tt(&v);
        assert_eq!(x.num_states(), 1);
        let a = x.extract_state(0).unwrap().to_dense().unwrap();
        assert!(max_abs_diff(&a, &v.to_dense().unwrap()) < 1e-15);
    }

    #[test]
    fn widening_keeps_states_and_frame() {
        let mut x = BlockTt::random(&[3, 4, 2], 2, 1, 4).unwrap();
        let before = x.to_dense_states().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(x.widen_right_bond(&mut rng));
        assert_eq!(x.ranks()[1], 2);
        assert!(x.frame_defect() < 1e-12);
        for (a, b) in before.iter().zip(x.to_dense_states().unwrap()) {
            assert!(max_abs_diff(a, &b) < 1e-15);
        }
        while x.widen_right_bond(&mut rng) {}
        assert_eq!(x.ranks()[1], 4);
    }

    #[test]
    fn select_states_reorders_columns() {
        let x = BlockTt::random(&[3, 3], 3, 3, 1).unwrap();
        let y = x.select_states(&[2, 0]).unwrap();
        assert_eq!(y.num_states(), 2);
        assert_eq!(y.block().state(0), x.block().state(2));
        assert_eq!(y.block().state(1), x.block().state(0));
    }
}
