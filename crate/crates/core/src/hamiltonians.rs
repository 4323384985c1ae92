//! Model operators in TT format and closed-form reference data.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::linalg::{self, view};
use crate::tt::{ModeOp, OpBlock, OpCore, TtMatrix, TtVector};

/// Default anharmonicity of the Henon-Heiles model.
pub const HENON_HEILES_LAMBDA: f64 = 0.111803;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Laplace,
    HenonHeiles,
    Heisenberg,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Laplace => "laplace",
            Model::HenonHeiles => "henon-heiles",
            Model::Heisenberg => "heisenberg",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "laplace" => Ok(Model::Laplace),
            "henon-heiles" | "henon_heiles" | "hh" => Ok(Model::HenonHeiles),
            "heisenberg" => Ok(Model::Heisenberg),
            other => Err(format!("unknown model `{other}` (laplace, henon-heiles, heisenberg)")),
        }
    }
}

/// A model operator together with its size parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec {
    pub model: Model,
    pub d: usize,
    /// Grid points (Laplace) or Hermite basis size (Henon-Heiles). Forced
    /// to 2 for spin chains.
    pub n: usize,
    pub lambda: f64,
}

impl HamiltonianSpec {
    pub fn laplace(d: usize, n: usize) -> Self {
        Self { model: Model::Laplace, d, n, lambda: 0.0 }
    }

    pub fn henon_heiles(d: usize, n: usize, lambda: f64) -> Self {
        Self { model: Model::HenonHeiles, d, n, lambda }
    }

    pub fn heisenberg(d: usize) -> Self {
        Self { model: Model::Heisenberg, d, n: 2, lambda: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("d must be at least 1");
        }
        match self.model {
            Model::Laplace if self.n < 2 => invalid("laplace needs n >= 2"),
            Model::HenonHeiles if self.n < 2 || self.d < 2 => invalid("henon-heiles needs d >= 2 and n >= 2"),
            Model::HenonHeiles if !self.lambda.is_finite() => invalid("lambda must be finite"),
            Model::Heisenberg if self.d < 2 => invalid("heisenberg needs d >= 2"),
            Model::Heisenberg if self.n != 2 => invalid(format!("heisenberg sites have n = 2, got {}", self.n)),
            _ => Ok(()),
        }
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        vec![self.n; self.d]
    }

    pub fn build(&self) -> Result<TtMatrix> {
        self.validate()?;
        match self.model {
            Model::Laplace => laplace_tt(self.d, self.n),
            Model::HenonHeiles => henon_heiles_tt(self.d, self.n, self.lambda),
            Model::Heisenberg => heisenberg_tt(self.d),
        }
    }
}

fn block(left: usize, right: usize, op: ModeOp) -> OpBlock {
    OpBlock { left, right, op }
}

/// `tridiag(-1, 2, -1)`, column-major.
fn second_difference(n: usize) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i + n * i] = 2.0;
        if i + 1 < n {
            k[i + 1 + n * i] = -1.0;
            k[i + n * (i + 1)] = -1.0;
        }
    }
    k
}

/// Sum of one-site terms `sum_k I x .. x M_k x .. x I` with rank-2 cores.
///
/// Channel 0 carries the finished sum, channel 1 the identity still
/// waiting for its term.
fn kronecker_sum(n: usize, terms: &[ModeOp]) -> Result<TtMatrix> {
    let d = terms.len();
    if d == 1 {
        return TtMatrix::new(vec![OpCore::from_blocks(1, n, 1, vec![block(0, 0, terms[0].clone())])?]);
    }
    let mut cores = Vec::with_capacity(d);
    for (k, t) in terms.iter().enumerate() {
        let core = if k == 0 {
            OpCore::from_blocks(1, n, 2, vec![block(0, 0, t.clone()), block(0, 1, ModeOp::Identity)])?
        } else if k == d - 1 {
            OpCore::from_blocks(2, n, 1, vec![block(0, 0, ModeOp::Identity), block(1, 0, t.clone())])?
        } else {
            OpCore::from_blocks(2, n, 2, vec![block(0, 0, ModeOp::Identity), block(1, 0, t.clone()), block(1, 1, ModeOp::Identity)])?
        };
        cores.push(core);
    }
    TtMatrix::new(cores)
}

/// Negative discrete Laplacian `-sum_k I x .. x D x .. x I` with
/// `D = tridiag(1, -2, 1)` on `n` interior grid points per axis.
pub fn laplace_tt(d: usize, n: usize) -> Result<TtMatrix> {
    HamiltonianSpec::laplace(d, n).validate()?;
    kronecker_sum(n, &vec![ModeOp::Dense(second_difference(n)); d])
}

/// `mu_b = 4 sin^2(pi (b + 1) / (2 (n + 1)))`, the eigenvalues of
/// `tridiag(-1, 2, -1)` of size `n`, ascending in `b`.
pub fn laplace_mode_eigenvalue(n: usize, b: usize) -> f64 {
    let s = (PI * (b + 1) as f64 / (2.0 * (n + 1) as f64)).sin();
    4.0 * s * s
}

/// Normalized eigenvector of `tridiag(-1, 2, -1)` belonging to
/// [`laplace_mode_eigenvalue`]`(n, b)`.
pub fn laplace_mode_vector(n: usize, b: usize) -> Vec<f64> {
    let scale = (2.0 / (n + 1) as f64).sqrt();
    (0..n).map(|i| scale * (PI * ((b + 1) * (i + 1)) as f64 / (n + 1) as f64).sin()).collect()
}

/// One eigenpair label of the discrete Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceLevel {
    pub value: f64,
    /// Zero-based mode index per axis.
    pub modes: Vec<usize>,
}

impl LaplaceLevel {
    /// The eigenvector as a rank-one TT vector.
    pub fn state(&self, n: usize) -> Result<TtVector> {
        let factors: Vec<Vec<f64>> = self.modes.iter().map(|&b| laplace_mode_vector(n, b)).collect();
        TtVector::rank_one(&factors)
    }
}

#[derive(PartialEq)]
struct Candidate(f64, Vec<usize>);

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed, the heap pops the smallest sum first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// The `count` smallest eigenvalues of [`laplace_tt`]`(d, n)` with their
/// mode multi-indices, ascending; equal values are ordered
/// lexicographically by multi-index.
pub fn laplace_spectrum(d: usize, n: usize, count: usize) -> Result<Vec<LaplaceLevel>> {
    HamiltonianSpec::laplace(d, n).validate()?;
    let total = (n as f64).powi(d as i32);
    if count as f64 > total {
        return invalid(format!("{count} eigenvalues requested from a space of dimension {n}^{d}"));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mu: Vec<f64> = (0..n.min(count)).map(|b| laplace_mode_eigenvalue(n, b)).collect();
    let sum = |idx: &[usize]| idx.iter().map(|&b| mu[b]).sum::<f64>();

    // best-first enumeration finds the value of the count-th level
    let mut heap = BinaryHeap::new();
    let mut seen = HashSet::new();
    let start = vec![0; d];
    heap.push(Candidate(sum(&start), start.clone()));
    seen.insert(start);
    let mut threshold = 0.0;
    for _ in 0..count {
        let Candidate(value, idx) = heap.pop().expect("enough multi-indices");
        threshold = value;
        for k in 0..d {
            if idx[k] + 1 < mu.len() {
                let mut next = idx.clone();
                next[k] += 1;
                if seen.insert(next.clone()) {
                    heap.push(Candidate(sum(&next), next));
                }
            }
        }
    }

    // collect every multi-index up to the threshold so that ties are complete
    let slack = 1e-12 * threshold.abs().max(1.0);
    let mut all = Vec::new();
    let mut idx = vec![0; d];
    collect_below(&mu, threshold + slack, 0, 0.0, &mut idx, &mut all);
    all.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut start = 0;
    while start < all.len() {
        let mut end = start + 1;
        while end < all.len() && all[end].value - all[end - 1].value <= slack {
            end += 1;
        }
        all[start..end].sort_by(|a, b| a.modes.cmp(&b.modes));
        start = end;
    }
    all.truncate(count);
    Ok(all)
}

fn collect_below(mu: &[f64], bound: f64, k: usize, partial: f64, idx: &mut Vec<usize>, out: &mut Vec<LaplaceLevel>) {
    if k == idx.len() {
        out.push(LaplaceLevel { value: partial, modes: idx.clone() });
        return;
    }
    // the remaining axes contribute at least mu[0] each
    let rest = (idx.len() - k - 1) as f64 * mu[0];
    for (b, &m) in mu.iter().enumerate() {
        if partial + m + rest > bound {
            break;
        }
        idx[k] = b;
        collect_below(mu, bound, k + 1, partial + m, idx, out);
    }
    idx[k] = 0;
}

/// Roots of the Hermite polynomial `H_n`, ascending, as eigenvalues of the
/// symmetric Jacobi matrix with off-diagonal entries `sqrt(k / 2)`.
pub fn hermite_mesh(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("hermite mesh needs n >= 1");
    }
    let mut jacobi = vec![0.0; n * n];
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jacobi[k + n * (k - 1)] = b;
        jacobi[k - 1 + n * k] = b;
    }
    let (mut t, _) = linalg::sym_eig(view(&jacobi, n, n))?;
    t.sort_by(f64::total_cmp);
    // the exact mesh is symmetric about zero
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (t[i] - t[n - 1 - i])).collect();
    Ok(sym)
}

/// Kinetic matrix of the Hermite DVR on [`hermite_mesh`]`(n)`,
/// column-major `n x n`:
/// `D_ii = (4n - 1 - 2 t_i^2) / 6`,
/// `D_ij = (-1)^(i-j) (2 / (t_i - t_j)^2 - 1/2)`.
pub fn hermite_dvr_laplace(n: usize) -> Result<Vec<f64>> {
    let t = hermite_mesh(n)?;
    let mut dm = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            dm[i + n * j] = if i == j {
                (4.0 * n as f64 - 1.0 - 2.0 * t[i] * t[i]) / 6.0
            } else {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let diff = t[i] - t[j];
                sign * (2.0 / (diff * diff) - 0.5)
            };
        }
    }
    Ok(dm)
}

/// Henon-Heiles Hamiltonian in Hermite DVR,
/// `H = sum_k (D/2 + Q^2/2)_k + lambda sum_{k<d-1} (Q^2_k Q_{k+1} - Q^3_{k+1} / 3)`
/// with `Q = diag(hermite_mesh(n))`.
///
/// Cores have rank 3 with channels: identity still open, `Q^2` waiting for
/// its right neighbour, sum finished.
pub fn henon_heiles_tt(d: usize, n: usize, lambda: f64) -> Result<TtMatrix> {
    HamiltonianSpec::henon_heiles(d, n, lambda).validate()?;
    let t = hermite_mesh(n)?;
    let dvr = hermite_dvr_laplace(n)?;
    let site = |k: usize| -> ModeOp {
        let mut h: Vec<f64> = dvr.iter().map(|v| 0.5 * v).collect();
        for i in 0..n {
            let q = t[i];
            h[i + n * i] += 0.5 * q * q - if k >= 1 { lambda * q * q * q / 3.0 } else { 0.0 };
        }
        ModeOp::Dense(h)
    };
    let q2 = ModeOp::Diagonal(t.iter().map(|q| q * q).collect());
    let lq = ModeOp::Diagonal(t.iter().map(|q| lambda * q).collect());
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let core = if k == 0 {
            OpCore::from_blocks(1, n, 3, vec![block(0, 0, ModeOp::Identity), block(0, 1, q2.clone()), block(0, 2, site(k))])?
        } else if k == d - 1 {
            OpCore::from_blocks(3, n, 1, vec![block(0, 0, site(k)), block(1, 0, lq.clone()), block(2, 0, ModeOp::Identity)])?
        } else {
            OpCore::from_blocks(
                3,
                n,
                3,
                vec![
                    block(0, 0, ModeOp::Identity),
                    block(0, 1, q2.clone()),
                    block(0, 2, site(k)),
                    block(1, 2, lq.clone()),
                    block(2, 2, ModeOp::Identity),
                ],
            )?
        };
        cores.push(core);
    }
    TtMatrix::new(cores)
}

/// Open spin-1/2 Heisenberg chain `H = sum_i S_i . S_{i+1}` in the real form
/// `S_i . S_{i+1} = (S+_i S-_{i+1} + S-_i S+_{i+1}) / 2 + Sz_i Sz_{i+1}`.
///
/// Channels: identity open, `S+`, `S-`, `Sz` waiting for the partner,
/// sum finished.
pub fn heisenberg_tt(d: usize) -> Result<TtMatrix> {
    HamiltonianSpec::heisenberg(d).validate()?;
    let n = 2;
    // basis (up, down); S+ maps down to up
    let splus = vec![0.0, 0.0, 1.0, 0.0];
    let sminus = vec![0.0, 1.0, 0.0, 0.0];
    let half = |m: &[f64]| ModeOp::Dense(m.iter().map(|v| 0.5 * v).collect());
    let sz = ModeOp::Diagonal(vec![0.5, -0.5]);
    let open = |left: usize| {
        vec![
            block(left, 0, ModeOp::Identity),
            block(left, 1, ModeOp::Dense(splus.clone())),
            block(left, 2, ModeOp::Dense(sminus.clone())),
            block(left, 3, sz.clone()),
        ]
    };
    let close = |right: usize| {
        vec![block(1, right, half(&sminus)), block(2, right, half(&splus)), block(3, right, sz.clone()), block(4, right, ModeOp::Identity)]
    };
    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let core = if k == 0 {
            OpCore::from_blocks(1, n, 5, open(0))?
        } else if k == d - 1 {
            OpCore::from_blocks(5, n, 1, close(0))?
        } else {
            let mut blocks = open(0);
            blocks.extend(close(4));
            OpCore::from_blocks(5, n, 5, blocks)?
        };
        cores.push(core);
    }
    TtMatrix::new(cores)
}

/// TT ranks of an operator after rounding its cores at relative accuracy
/// `eps`.
pub fn operator_ranks(a: &TtMatrix, eps: f64) -> Result<Vec<usize>> {
    Ok(a.as_vector().round(eps, usize::MAX)?.ranks())
}
