//! Local block eigenproblems: the `B` smallest eigenpairs of a symmetric
//! operator that is only available through block products.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::LocalSolver;
use crate::error::{invalid, Result, TtError};
use crate::linalg::{self, gemm, gemm_new, view, view_mut};
use crate::tt::LocalOperator;

/// A symmetric operator applied to column blocks stored column-major.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `H x` for `cols` vectors stored one after another in `x`.
    fn apply_block(&self, x: &[f64], cols: usize) -> Vec<f64>;

    /// The operator as a dense column-major matrix.
    fn to_dense(&self) -> Vec<f64> {
        let m = self.dim();
        let mut id = vec![0.0; m * m];
        for i in 0..m {
            id[i + m * i] = 1.0;
        }
        self.apply_block(&id, m)
    }
}

impl SymmetricOperator for LocalOperator<'_> {
    fn dim(&self) -> usize {
        LocalOperator::dim(self)
    }

    fn apply_block(&self, x: &[f64], cols: usize) -> Vec<f64> {
        LocalOperator::apply_block(self, x, cols)
    }
}

/// A dense symmetric matrix as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return invalid(format!("dense operator needs {} entries, got {}", n * n, data.len()));
        }
        Ok(Self { n, data })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, &v) in diag.iter().enumerate() {
            data[i + n * i] = v;
        }
        Self { n, data }
    }
}

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_block(&self, x: &[f64], cols: usize) -> Vec<f64> {
        gemm_new(view(&self.data, self.n, self.n), view(x, self.n, cols))
    }

    fn to_dense(&self) -> Vec<f64> {
        self.data.clone()
    }
}

/// Optional preconditioner for the iterative solver: transforms residual
/// columns in place given the current Ritz values.
pub trait Preconditioner {
    fn apply(&self, residuals: &mut [f64], cols: usize, ritz_values: &[f64]);
}

#[derive(Debug, Clone)]
pub struct LocalOptions {
    pub solver: LocalSolver,
    pub size_threshold: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub guards: usize,
    pub dense_fallback_limit: usize,
    pub seed: u64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self { solver: LocalSolver::Auto, size_threshold: 256, tol: 1e-9, max_iter: 300, guards: 2, dense_fallback_limit: 4000, seed: 0 }
    }
}

/// Result of a local block eigensolve.
#[derive(Debug, Clone)]
pub struct LocalEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// `m x num` column-major, orthonormal columns.
    pub vectors: Vec<f64>,
    /// `|H X - X (X^T H X)|_F` of the orthonormalized warm start, or 0 when
    /// no warm start was given.
    pub warm_residual: f64,
    /// Largest residual norm `|H x - lambda x|` of the returned pairs.
    pub residual: f64,
    pub iterations: usize,
    pub used_dense: bool,
    pub converged: bool,
}

/// A block of column vectors stored column-major.
#[derive(Debug, Clone)]
struct Block {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Block {
    fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    fn empty(rows: usize) -> Self {
        Self { rows, cols: 0, data: Vec::new() }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.data[self.rows * j..self.rows * (j + 1)]
    }

    /// `self^T other`, `self.cols x other.cols`.
    fn tn(&self, other: &Block) -> Vec<f64> {
        if self.cols == 0 || other.cols == 0 {
            return vec![0.0; self.cols * other.cols];
        }
        gemm_new(view(&self.data, self.rows, self.cols).transpose(), view(&other.data, other.rows, other.cols))
    }

    /// `self * c` with `c` a `self.cols x k` matrix.
    fn times(&self, c: &[f64], k: usize) -> Block {
        if self.cols == 0 || k == 0 {
            return Block::new(self.rows, k, vec![0.0; self.rows * k]);
        }
        Block::new(self.rows, k, gemm_new(view(&self.data, self.rows, self.cols), view(c, self.cols, k)))
    }

    /// `self -= other * c`.
    fn sub_times(&mut self, other: &Block, c: &[f64]) {
        if self.cols == 0 || other.cols == 0 {
            return;
        }
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        gemm(
            view_mut(&mut self.data, self.rows, self.cols),
            true,
            view(&other.data, other.rows, other.cols),
            view(&neg, other.cols, self.cols),
        );
    }

    fn select(&self, cols: &[usize]) -> Block {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Block::new(self.rows, cols.len(), data)
    }

    fn hcat(parts: &[&Block]) -> Block {
        let rows = parts[0].rows;
        let cols = parts.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in parts {
            data.extend_from_slice(&b.data);
        }
        Block::new(rows, cols, data)
    }
}

fn col_norm(v: &[f64]) -> f64 {
    linalg::frobenius(v)
}

/// Removes the components along the orthonormal columns of `q`, twice.
fn project_out(z: &mut Block, q: &Block) {
    for _ in 0..2 {
        let c = q.tn(z);
        z.sub_times(q, &c);
    }
}

/// Orthonormalizes `z` by a Gram-matrix eigendecomposition, dropping
/// directions with relative Gram eigenvalue below `drop`. Returns the
/// coefficient matrix `c` (`z.cols x kept`) and `kept`.
fn svqb(z: &Block, drop: f64) -> Result<(Vec<f64>, usize)> {
    let k = z.cols;
    if k == 0 {
        return Ok((Vec::new(), 0));
    }
    let g = z.tn(z);
    let scale: Vec<f64> = (0..k)
        .map(|i| {
            let gii = g[i + k * i];
            if gii > 0.0 && gii.is_finite() {
                1.0 / gii.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let gs = Mat::<f64>::from_fn(k, k, |i, j| scale[i] * g[i + k * j] * scale[j]);
    let (vals, vecs) = linalg::sym_eig(gs.as_ref())?;
    let top = vals.last().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Ok((Vec::new(), 0));
    }
    let keep: Vec<usize> = (0..k).filter(|&i| vals[i] > drop * top).collect();
    let kept = keep.len();
    let mut c = vec![0.0; k * kept];
    for (col, &e) in keep.iter().enumerate() {
        let inv = 1.0 / vals[e].sqrt();
        for i in 0..k {
            c[i + k * col] = scale[i] * vecs[(i, e)] * inv;
        }
    }
    Ok((c, kept))
}

/// Orthonormalizes `z` (and the tracked `hz = H z`) in place, twice.
fn orthonormalize(z: &mut Block, hz: Option<&mut Block>) -> Result<()> {
    let (c1, k1) = svqb(z, 1e-12)?;
    let mut z1 = z.times(&c1, k1);
    let (c2, k2) = svqb(&z1, 1e-12)?;
    z1 = z1.times(&c2, k2);
    if let Some(hz) = hz {
        *hz = hz.times(&c1, k1).times(&c2, k2);
    }
    *z = z1;
    Ok(())
}

fn symmetric_part(a: &[f64], k: usize) -> Mat<f64> {
    Mat::from_fn(k, k, |i, j| 0.5 * (a[i + k * j] + a[j + k * i]))
}

/// Rayleigh-Ritz on the orthonormal basis `s` with `hs = H s`: returns the
/// `k` lowest Ritz values, their coefficient matrix, and the largest Ritz
/// value magnitude.
fn rayleigh_ritz(s: &Block, hs: &Block, k: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = s.cols;
    let a = symmetric_part(&s.tn(hs), n);
    let (vals, vecs) = linalg::sym_eig(a.as_ref())?;
    let spread = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut y = vec![0.0; n * k];
    for j in 0..k {
        for i in 0..n {
            y[i + n * j] = vecs[(i, j)];
        }
    }
    Ok((vals[..k].to_vec(), y, spread))
}

fn random_block(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Block {
    Block::new(rows, cols, (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect())
}

/// Residual of the Rayleigh-Ritz fit of an orthonormal block.
fn fit_residual(x: &Block, hx: &Block) -> f64 {
    let g = x.tn(hx);
    let mut r = hx.clone();
    r.sub_times(x, &g);
    col_norm(&r.data)
}

/// The `num` smallest eigenpairs of `h`, restricted to the orthogonal
/// complement of the orthonormal columns of `constraints` when given.
///
/// `warm` (column-major `m x w`) seeds the iterative solver and is used to
/// report the residual of the incoming block.
pub fn local_block_eig(
    h: &dyn SymmetricOperator,
    num: usize,
    warm: Option<&[f64]>,
    constraints: Option<&[f64]>,
    opts: &LocalOptions,
) -> Result<LocalEig> {
    let m = h.dim();
    if num == 0 {
        return invalid("at least one eigenpair must be requested");
    }
    let q = match constraints {
        Some(c) if !c.is_empty() => {
            if c.len() % m != 0 {
                return invalid("constraint block has wrong length");
            }
            Some(Block::new(m, c.len() / m, c.to_vec()))
        }
        _ => None,
    };
    let nc = q.as_ref().map_or(0, |q| q.cols);
    if m < num + nc {
        return Err(TtError::LocalDimension { dim: m.saturating_sub(nc), states: num });
    }
    if let Some(w) = warm {
        if w.len() % m != 0 {
            return invalid("warm start has wrong length");
        }
    }
    let k = (num + opts.guards).min(m - nc);
    let dense = match opts.solver {
        LocalSolver::Dense => true,
        LocalSolver::Auto => m <= opts.size_threshold || 3 * k >= m - nc,
        LocalSolver::Iterative => 3 * k >= m - nc,
    };
    if dense {
        return dense_block_eig(h, num, warm, q.as_ref());
    }
    let result = lobpcg_impl(h, num, k, warm, q.as_ref(), None, opts)?;
    if !result.converged && m <= opts.dense_fallback_limit {
        log::debug!("iterative local solve stalled at residual {:.3e}; dense fallback on m = {m}", result.residual);
        let mut dense = dense_block_eig(h, num, warm, q.as_ref())?;
        dense.warm_residual = result.warm_residual;
        dense.iterations = result.iterations;
        return Ok(dense);
    }
    if !result.converged {
        log::warn!("iterative local solve did not converge: residual {:.3e} on m = {m}", result.residual);
    }
    Ok(result)
}

fn warm_block(warm: Option<&[f64]>, m: usize, limit: usize, q: Option<&Block>) -> Result<Option<Block>> {
    let Some(w) = warm else { return Ok(None) };
    let cols = (w.len() / m).min(limit);
    if cols == 0 {
        return Ok(None);
    }
    let mut b = Block::new(m, cols, w[..m * cols].to_vec());
    if let Some(q) = q {
        project_out(&mut b, q);
    }
    orthonormalize(&mut b, None)?;
    Ok(Some(b))
}

fn dense_block_eig(h: &dyn SymmetricOperator, num: usize, warm: Option<&[f64]>, q: Option<&Block>) -> Result<LocalEig> {
    let m = h.dim();
    let hd = h.to_dense();
    let mut a = symmetric_part(&hd, m);
    if let Some(q) = q {
        // P H P + sigma Q Q^T with P = I - Q Q^T; sigma lifts the constrained
        // directions above the whole spectrum
        let sigma = 2.0 * linalg::frobenius(&hd) + 1.0;
        let qm = view(&q.data, m, q.cols);
        let hq = &a * qm;
        let qhq = qm.transpose() * &hq;
        a = &a - qm * hq.transpose() - &hq * qm.transpose() + qm * &qhq * qm.transpose() + qm * qm.transpose() * faer::Scale(sigma);
    }
    let (vals, vecs) = linalg::sym_eig(a.as_ref())?;
    let vectors = linalg::to_col_major(vecs.subcols(0, num));
    let values = vals[..num].to_vec();

    let hv = gemm_new(view(&hd, m, m), view(&vectors, m, num));
    let residual =
        (0..num).map(|j| (0..m).map(|i| (hv[i + m * j] - values[j] * vectors[i + m * j]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max);

    let warm_residual = match warm_block(warm, m, num, q)? {
        Some(w) => {
            let hw = Block::new(m, w.cols, gemm_new(view(&hd, m, m), view(&w.data, m, w.cols)));
            fit_residual(&w, &hw)
        }
        None => 0.0,
    };
    Ok(LocalEig { values, vectors, warm_residual, residual, iterations: 0, used_dense: true, converged: true })
}

/// Block LOBPCG for the `num` smallest eigenpairs, carrying `k - num`
/// guard vectors. Without a preconditioner the search directions are the
/// plain residuals.
pub fn lobpcg(
    h: &dyn SymmetricOperator,
    num: usize,
    k: usize,
    warm: Option<&[f64]>,
    constraints: Option<&[f64]>,
    precond: Option<&dyn Preconditioner>,
    opts: &LocalOptions,
) -> Result<LocalEig> {
    let m = h.dim();
    let q = constraints.filter(|c| !c.is_empty()).map(|c| Block::new(m, c.len() / m, c.to_vec()));
    lobpcg_impl(h, num, k, warm, q.as_ref(), precond, opts)
}

fn lobpcg_impl(
    h: &dyn SymmetricOperator,
    num: usize,
    k: usize,
    warm: Option<&[f64]>,
    q: Option<&Block>,
    precond: Option<&dyn Preconditioner>,
    opts: &LocalOptions,
) -> Result<LocalEig> {
    let m = h.dim();
    let nc = q.map_or(0, |q| q.cols);
    if k < num || k + nc > m {
        return invalid(format!("block size {k} invalid for {num} pairs in dimension {m}"));
    }
    let apply = |b: &Block| Block::new(m, b.cols, h.apply_block(&b.data, b.cols));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    // initial basis: orthonormalized warm start, then random fill
    let (mut x, mut hx, warm_residual) = match warm_block(warm, m, num, q)? {
        Some(w) => {
            let hw = apply(&w);
            let res = fit_residual(&w, &hw);
            (w, hw, res)
        }
        None => (Block::empty(m), Block::empty(m), 0.0),
    };
    let mut attempts = 0;
    while x.cols < k {
        let mut fill = random_block(m, k - x.cols, &mut rng);
        if let Some(q) = q {
            project_out(&mut fill, q);
        }
        project_out(&mut fill, &x);
        orthonormalize(&mut fill, None)?;
        let hfill = apply(&fill);
        x = Block::hcat(&[&x, &fill]);
        hx = Block::hcat(&[&hx, &hfill]);
        attempts += 1;
        if attempts > 10 {
            return Err(TtError::Linalg("could not build an initial basis".into()));
        }
    }
    let (mut lambda, y, mut spread) = rayleigh_ritz(&x, &hx, k)?;
    x = x.times(&y, k);
    hx = hx.times(&y, k);

    let mut p: Option<(Block, Block)> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut since_refresh = 0;
    while iterations < opts.max_iter {
        let mut r = hx.clone();
        for (j, &lj) in lambda.iter().enumerate().take(k) {
            for (rv, xv) in r.data[m * j..m * (j + 1)].iter_mut().zip(x.col(j)) {
                *rv -= lj * xv;
            }
        }
        if let Some(q) = q {
            project_out(&mut r, q);
        }
        let norms: Vec<f64> = (0..k).map(|j| col_norm(r.col(j))).collect();
        let threshold = opts.tol * spread.max(f64::MIN_POSITIVE);
        residual = norms[..num].iter().copied().fold(0.0, f64::max);
        if residual <= threshold {
            if since_refresh == 0 {
                converged = true;
                break;
            }
            // confirm with an exact product before accepting
            hx = apply(&x);
            since_refresh = 0;
            continue;
        }
        let active: Vec<usize> = (0..k).filter(|&j| norms[j] > threshold).collect();
        let mut w = r.select(&active);
        if let Some(pc) = precond {
            let shifts: Vec<f64> = active.iter().map(|&j| lambda[j]).collect();
            pc.apply(&mut w.data, w.cols, &shifts);
        }
        if let Some(q) = q {
            project_out(&mut w, q);
        }
        project_out(&mut w, &x);
        orthonormalize(&mut w, None)?;
        project_out(&mut w, &x);
        orthonormalize(&mut w, None)?;
        if w.cols == 0 {
            break;
        }
        let hw = apply(&w);

        let mut parts = vec![(x.clone(), hx.clone()), (w, hw)];
        if let Some((mut pb, mut hp)) = p.take() {
            for _ in 0..2 {
                for (basis, hbasis) in &parts {
                    let c = basis.tn(&pb);
                    pb.sub_times(basis, &c);
                    hp.sub_times(hbasis, &c);
                }
            }
            orthonormalize(&mut pb, Some(&mut hp))?;
            if pb.cols > 0 {
                parts.push((pb, hp));
            }
        }
        let s = Block::hcat(&parts.iter().map(|(b, _)| b).collect::<Vec<_>>());
        let hs = Block::hcat(&parts.iter().map(|(_, hb)| hb).collect::<Vec<_>>());
        let (vals, y, sp) = rayleigh_ritz(&s, &hs, k)?;
        spread = sp;
        lambda = vals;

        // new search direction: the part of the update outside span(X)
        let ns = s.cols;
        let mut yp = y.clone();
        for j in 0..k {
            for i in 0..k {
                yp[i + ns * j] = 0.0;
            }
        }
        let new_p = s.times(&yp, k);
        let new_hp = hs.times(&yp, k);
        x = s.times(&y, k);
        hx = hs.times(&y, k);
        p = Some((new_p, new_hp));

        iterations += 1;
        since_refresh += 1;
        if since_refresh >= 20 {
            orthonormalize(&mut x, None)?;
            if x.cols < k {
                return Err(TtError::Linalg("iterate block lost rank".into()));
            }
            hx = apply(&x);
            let (l2, y2, _) = rayleigh_ritz(&x, &hx, k)?;
            lambda = l2;
            x = x.times(&y2, k);
            hx = hx.times(&y2, k);
            since_refresh = 0;
            p = None;
        }
    }
    Ok(LocalEig {
        values: lambda[..num].to_vec(),
        vectors: x.data[..m * num].to_vec(),
        warm_residual,
        residual,
        iterations,
        used_dense: false,
        converged,
    })
}
