use super::core::TtCore;
use super::vector::TtVector;
use crate::error::{invalid, Result, TtError};
use crate::linalg::{gemm, view, view_mut};

/// Default cap on the dimension `N` of densified operators.
pub const DEFAULT_OPERATOR_DENSE_CAP: usize = 4096;

/// Relative tolerance used when classifying an operator as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// The `n x n` operator carried by one channel pair `(g, g')` of an
/// operator core.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeOp {
    Identity,
    Diagonal(Vec<f64>),
    /// Column-major `n x n`, entry `(i, j)` at `i + n * j`.
    Dense(Vec<f64>),
}

impl ModeOp {
    /// `dst(a, i, c) += sum_j M(i, j) src(a, j, c)` for buffers laid out as
    /// `rows x n x cols` (column-major, `rows` fastest).
    pub(crate) fn apply_mode(&self, n: usize, rows: usize, cols: usize, src: &[f64], dst: &mut [f64]) {
        debug_assert_eq!(src.len(), rows * n * cols);
        debug_assert_eq!(dst.len(), rows * n * cols);
        match self {
            ModeOp::Identity => {
                dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
            }
            ModeOp::Diagonal(diag) => {
                for c in 0..cols {
                    for (i, &m) in diag.iter().enumerate() {
                        if m == 0.0 {
                            continue;
                        }
                        let off = rows * (i + n * c);
                        for a in 0..rows {
                            dst[off + a] += m * src[off + a];
                        }
                    }
                }
            }
            ModeOp::Dense(m) => {
                let mat = view(m, n, n);
                if rows == 1 {
                    // (n x cols) = M (n x cols)
                    gemm(view_mut(dst, n, cols), true, mat, view(src, n, cols));
                } else {
                    let block = rows * n;
                    for c in 0..cols {
                        let s = view(&src[block * c..block * (c + 1)], rows, n);
                        let d = view_mut(&mut dst[block * c..block * (c + 1)], rows, n);
                        gemm(d, true, s, mat.transpose());
                    }
                }
            }
        }
    }

    fn entry(&self, n: usize, i: usize, j: usize) -> f64 {
        match self {
            ModeOp::Identity => f64::from(u8::from(i == j)),
            ModeOp::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
            ModeOp::Dense(m) => m[i + n * j],
        }
    }
}

/// A nonzero channel block of an operator core.
#[derive(Debug, Clone, PartialEq)]
pub struct OpBlock {
    pub left: usize,
    pub right: usize,
    pub op: ModeOp,
}

/// An order-4 operator core `left_rank x n x n x right_rank`.
///
/// Entry `(g, i, j, g')` (row `i`, column `j`) is stored at
/// `g + gl * (i + n * (j + n * g'))`. The nonzero `n x n` channel blocks are
/// also kept separately, classified as identity, diagonal or dense, so that
/// contractions skip zero blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct OpCore {
    left_rank: usize,
    mode_size: usize,
    right_rank: usize,
    data: Vec<f64>,
    blocks: Vec<OpBlock>,
}

impl OpCore {
    pub fn new(left_rank: usize, mode_size: usize, right_rank: usize, data: Vec<f64>) -> Result<Self> {
        if left_rank == 0 || mode_size == 0 || right_rank == 0 {
            return invalid("operator core dimensions must be positive");
        }
        let n = mode_size;
        if data.len() != left_rank * n * n * right_rank {
            return invalid(format!("operator core data has {} entries, expected {left_rank}*{n}*{n}*{right_rank}", data.len()));
        }
        let mut blocks = Vec::new();
        for gr in 0..right_rank {
            for gl in 0..left_rank {
                let m: Vec<f64> = (0..n * n)
                    .map(|ij| {
                        let (i, j) = (ij % n, ij / n);
                        data[gl + left_rank * (i + n * (j + n * gr))]
                    })
                    .collect();
                if let Some(op) = classify(n, m) {
                    blocks.push(OpBlock { left: gl, right: gr, op });
                }
            }
        }
        Ok(Self { left_rank, mode_size, right_rank, data, blocks })
    }

    /// Builds a core from its nonzero channel blocks.
    pub fn from_blocks(left_rank: usize, mode_size: usize, right_rank: usize, blocks: Vec<OpBlock>) -> Result<Self> {
        let n = mode_size;
        let mut data = vec![0.0; left_rank * n * n * right_rank];
        for b in &blocks {
            if b.left >= left_rank || b.right >= right_rank {
                return invalid(format!("channel ({}, {}) out of range", b.left, b.right));
            }
            match &b.op {
                ModeOp::Diagonal(d) if d.len() != n => return invalid("diagonal block has wrong length"),
                ModeOp::Dense(m) if m.len() != n * n => return invalid("dense block has wrong size"),
                _ => {}
            }
            for j in 0..n {
                for i in 0..n {
                    data[b.left + left_rank * (i + n * (j + n * b.right))] += b.op.entry(n, i, j);
                }
            }
        }
        Self::new(left_rank, mode_size, right_rank, data)
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn blocks(&self) -> &[OpBlock] {
        &self.blocks
    }

    #[inline]
    pub fn get(&self, g: usize, i: usize, j: usize, gr: usize) -> f64 {
        let n = self.mode_size;
        self.data[g + self.left_rank * (i + n * (j + n * gr))]
    }

    fn transposed(&self) -> OpCore {
        let blocks = self
            .blocks
            .iter()
            .map(|b| OpBlock {
                left: b.left,
                right: b.right,
                op: match &b.op {
                    ModeOp::Dense(m) => {
                        let n = self.mode_size;
                        ModeOp::Dense((0..n * n).map(|ij| m[ij / n + n * (ij % n)]).collect())
                    }
                    other => other.clone(),
                },
            })
            .collect();
        OpCore::from_blocks(self.left_rank, self.mode_size, self.right_rank, blocks).expect("same shape")
    }
}

fn classify(n: usize, m: Vec<f64>) -> Option<ModeOp> {
    if m.iter().all(|&x| x == 0.0) {
        return None;
    }
    let diagonal = (0..n * n).all(|ij| ij % n == ij / n || m[ij] == 0.0);
    if !diagonal {
        return Some(ModeOp::Dense(m));
    }
    let diag: Vec<f64> = (0..n).map(|i| m[i + n * i]).collect();
    if diag.iter().all(|&x| x == 1.0) {
        Some(ModeOp::Identity)
    } else {
        Some(ModeOp::Diagonal(diag))
    }
}

/// A square operator on `R^{n_1 ... n_d}` in TT-matrix format:
/// `A(i, j) = A1(i_1, j_1) ... Ad(i_d, j_d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TtMatrix {
    cores: Vec<OpCore>,
    symmetric: bool,
}

impl TtMatrix {
    /// Validates the rank chain and determines whether the operator is
    /// symmetric (exactly, through the orthogonalized norm of `A - A^T`).
    pub fn new(cores: Vec<OpCore>) -> Result<Self> {
        let d = cores.len();
        if d == 0 {
            return invalid("an operator needs at least one core");
        }
        if cores[0].left_rank() != 1 || cores[d - 1].right_rank() != 1 {
            return invalid("operator boundary ranks must be 1");
        }
        for k in 0..d - 1 {
            if cores[k].right_rank() != cores[k + 1].left_rank() {
                return invalid(format!("operator rank mismatch between cores {k} and {}", k + 1));
            }
        }
        let mut m = Self { cores, symmetric: false };
        m.symmetric = m.symmetry_defect() <= SYMMETRY_TOL;
        Ok(m)
    }

    pub fn identity(mode_sizes: &[usize]) -> Result<Self> {
        let cores = mode_sizes
            .iter()
            .map(|&n| OpCore::from_blocks(1, n, 1, vec![OpBlock { left: 0, right: 0, op: ModeOp::Identity }]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn dim(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[OpCore] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &OpCore {
        &self.cores[k]
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(OpCore::mode_size).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(OpCore::right_rank).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Total dimension `N` (saturating).
    pub fn size(&self) -> usize {
        self.cores.iter().fold(1usize, |acc, c| acc.saturating_mul(c.mode_size()))
    }

    pub fn transpose(&self) -> TtMatrix {
        Self { cores: self.cores.iter().map(OpCore::transposed).collect(), symmetric: self.symmetric }
    }

    /// The operator viewed as a TT vector with mode sizes `n_k^2`.
    pub fn as_vector(&self) -> TtVector {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let n = c.mode_size();
                TtCore::from_parts(c.left_rank(), n * n, c.right_rank(), c.data().to_vec())
            })
            .collect();
        TtVector::from_parts(cores, None)
    }

    /// `|A - A^T|_F / |A|_F`, evaluated in TT format without densification.
    pub fn symmetry_defect(&self) -> f64 {
        let a = self.as_vector();
        let at = self.transpose_cores_as_vector();
        let diff = difference(&a, &at);
        let scale = a.orthogonal_norm();
        if scale == 0.0 {
            return 0.0;
        }
        diff.orthogonal_norm() / scale
    }

    fn transpose_cores_as_vector(&self) -> TtVector {
        let cores = self
            .cores
            .iter()
            .map(|c| {
                let (gl, n, gr) = (c.left_rank(), c.mode_size(), c.right_rank());
                TtCore::from_fn(gl, n * n, gr, |g, ij, h| c.get(g, ij / n, ij % n, h))
            })
            .collect();
        TtVector::from_parts(cores, None)
    }

    /// `y = A x`, exact; the result has ranks `rA_k * r_k`.
    ///
    /// Result bond index combines operator and vector channels as
    /// `a + r * g`.
    pub fn matvec(&self, x: &TtVector) -> Result<TtVector> {
        if self.mode_sizes() != x.mode_sizes() {
            return invalid(format!("operator modes {:?} do not match vector modes {:?}", self.mode_sizes(), x.mode_sizes()));
        }
        let cores = self
            .cores
            .iter()
            .zip(x.cores())
            .map(|(a, c)| {
                let (gl, n, gr) = (a.left_rank(), a.mode_size(), a.right_rank());
                let (ra, rb) = (c.left_rank(), c.right_rank());
                let (yl, yr) = (ra * gl, rb * gr);
                let mut out = vec![0.0; yl * n * yr];
                for blk in a.blocks() {
                    // out((a, g), i, (b, g')) += sum_j M(i, j) x(a, j, b)
                    let mut tmp = vec![0.0; ra * n * rb];
                    blk.op.apply_mode(n, ra, rb, c.data(), &mut tmp);
                    for b in 0..rb {
                        for i in 0..n {
                            let dst = (ra * blk.left) + yl * (i + n * (b + rb * blk.right));
                            let src = ra * (i + n * b);
                            for a in 0..ra {
                                out[dst + a] += tmp[src + a];
                            }
                        }
                    }
                }
                TtCore::from_parts(yl, n, yr, out)
            })
            .collect();
        Ok(TtVector::from_parts(cores, None))
    }

    /// Dense `N x N` matrix (column-major), big-endian linearization.
    pub fn to_dense(&self, cap: usize) -> Result<Vec<f64>> {
        let size = self.size();
        if size > cap {
            return Err(TtError::SizeLimit { what: "dense operator dimension", size, cap });
        }
        // acc(pi, pj, g) with prefix dims P x P, column-major
        let mut acc = vec![1.0];
        let mut prefix = 1usize;
        let mut rank = 1usize;
        for core in &self.cores {
            let (n, gr) = (core.mode_size(), core.right_rank());
            let p2 = prefix * n;
            let mut next = vec![0.0; p2 * p2 * gr];
            for blk in core.blocks() {
                for j in 0..n {
                    for i in 0..n {
                        let m = blk.op.entry(n, i, j);
                        if m == 0.0 {
                            continue;
                        }
                        for pj in 0..prefix {
                            for pi in 0..prefix {
                                let v = acc[pi + prefix * (pj + prefix * blk.left)];
                                if v != 0.0 {
                                    next[(pi * n + i) + p2 * ((pj * n + j) + p2 * blk.right)] += v * m;
                                }
                            }
                        }
                    }
                }
            }
            debug_assert_eq!(rank, core.left_rank());
            acc = next;
            prefix = p2;
            rank = gr;
        }
        Ok(acc)
    }
}

/// `x - y` as a TT vector with block-diagonal cores.
fn difference(x: &TtVector, y: &TtVector) -> TtVector {
    let d = x.dim();
    let cores = (0..d)
        .map(|k| {
            let (a, b) = (x.core(k), y.core(k));
            let n = a.mode_size();
            if d == 1 {
                return TtCore::from_fn(1, n, 1, |_, i, _| a.get(0, i, 0) - b.get(0, i, 0));
            }
            let (first, last) = (k == 0, k == d - 1);
            let (la, ra) = (a.left_rank(), a.right_rank());
            let left = if first { 1 } else { la + b.left_rank() };
            let right = if last { 1 } else { ra + b.right_rank() };
            let sign = if first { -1.0 } else { 1.0 };
            TtCore::from_fn(left, n, right, |l, i, r| {
                let in_a = (first || l < la) && (last || r < ra);
                let in_b = (first || l >= la) && (last || r >= ra);
                let mut v = 0.0;
                if in_a {
                    v += a.get(if first { 0 } else { l }, i, if last { 0 } else { r });
                }
                if in_b {
                    v += sign * b.get(if first { 0 } else { l - la }, i, if last { 0 } else { r - ra });
                }
                v
            })
        })
        .collect();
    TtVector::from_parts(cores, None)
}
