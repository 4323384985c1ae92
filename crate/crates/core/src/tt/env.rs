//! Partial contractions of the `X^T A X` network.
//!
//! A left environment at boundary `k` contracts sites `0..k`, a right
//! environment at boundary `k` contracts sites `k..d`. With both available
//! around site `p`, the projected operator on the core at `p` can be applied
//! without ever forming it.

use super::core::TtCore;
use super::matrix::{OpCore, TtMatrix};
use crate::error::{invalid, Result};
use crate::linalg::{gemm, view, view_mut};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Environment tensor of shape `bra_rank x ket_rank x op_rank`, stored
/// column-major so that each operator channel `g` is a contiguous
/// `bra_rank x ket_rank` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    side: Side,
    boundary: usize,
    bra_rank: usize,
    ket_rank: usize,
    op_rank: usize,
    data: Vec<f64>,
}

impl Environment {
    /// The empty left contraction (boundary 0), the scalar 1.
    pub fn left_trivial() -> Self {
        Self { side: Side::Left, boundary: 0, bra_rank: 1, ket_rank: 1, op_rank: 1, data: vec![1.0] }
    }

    /// The empty right contraction for a train of `d` sites.
    pub fn right_trivial(d: usize) -> Self {
        Self { side: Side::Right, boundary: d, bra_rank: 1, ket_rank: 1, op_rank: 1, data: vec![1.0] }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn boundary(&self) -> usize {
        self.boundary
    }

    pub fn bra_rank(&self) -> usize {
        self.bra_rank
    }

    pub fn ket_rank(&self) -> usize {
        self.ket_rank
    }

    pub fn op_rank(&self) -> usize {
        self.op_rank
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, bra: usize, ket: usize, g: usize) -> f64 {
        self.data[bra + self.bra_rank * (ket + self.ket_rank * g)]
    }

    fn channel(&self, g: usize) -> &[f64] {
        let sz = self.bra_rank * self.ket_rank;
        &self.data[sz * g..sz * (g + 1)]
    }

    /// Absorbs site `boundary` into a left environment.
    pub fn extend_left(&self, op: &OpCore, bra: &TtCore, ket: &TtCore) -> Result<Self> {
        if self.side != Side::Left {
            return invalid("extend_left needs a left environment");
        }
        check_site(op, bra, ket)?;
        if bra.left_rank() != self.bra_rank || ket.left_rank() != self.ket_rank || op.left_rank() != self.op_rank {
            return invalid(format!(
                "left environment {}x{}x{} does not match site ranks {}x{}x{}",
                self.bra_rank,
                self.ket_rank,
                self.op_rank,
                bra.left_rank(),
                ket.left_rank(),
                op.left_rank()
            ));
        }
        let n = op.mode_size();
        let (ra, rk) = (self.bra_rank, self.ket_rank);
        let (ra2, rk2, gr) = (bra.right_rank(), ket.right_rank(), op.right_rank());
        let wsize = ra * n * rk2;

        // w[g](a, j, b') = sum_b E_g(a, b) Y(b, j, b')
        let mut w: Vec<Option<Vec<f64>>> = vec![None; self.op_rank];
        let mut u: Vec<Option<Vec<f64>>> = vec![None; gr];
        for blk in op.blocks() {
            let wg = w[blk.left].get_or_insert_with(|| {
                let mut buf = vec![0.0; wsize];
                gemm(view_mut(&mut buf, ra, n * rk2), false, view(self.channel(blk.left), ra, rk), ket.right_unfolding());
                buf
            });
            let ug = u[blk.right].get_or_insert_with(|| vec![0.0; wsize]);
            blk.op.apply_mode(n, ra, rk2, wg, ug);
        }

        let mut data = vec![0.0; ra2 * rk2 * gr];
        for (g, ug) in u.iter().enumerate() {
            if let Some(ug) = ug {
                let dst = view_mut(&mut data[ra2 * rk2 * g..ra2 * rk2 * (g + 1)], ra2, rk2);
                gemm(dst, false, bra.left_unfolding().transpose(), view(ug, ra * n, rk2));
            }
        }
        Ok(Self { side: Side::Left, boundary: self.boundary + 1, bra_rank: ra2, ket_rank: rk2, op_rank: gr, data })
    }

    /// Absorbs site `boundary - 1` into a right environment.
    pub fn extend_right(&self, op: &OpCore, bra: &TtCore, ket: &TtCore) -> Result<Self> {
        if self.side != Side::Right {
            return invalid("extend_right needs a right environment");
        }
        if self.boundary == 0 {
            return invalid("right environment already covers every site");
        }
        check_site(op, bra, ket)?;
        if bra.right_rank() != self.bra_rank || ket.right_rank() != self.ket_rank || op.right_rank() != self.op_rank {
            return invalid(format!(
                "right environment {}x{}x{} does not match site ranks {}x{}x{}",
                self.bra_rank,
                self.ket_rank,
                self.op_rank,
                bra.right_rank(),
                ket.right_rank(),
                op.right_rank()
            ));
        }
        let n = op.mode_size();
        let (ra2, rk2) = (self.bra_rank, self.ket_rank);
        let (ra, rk, gl) = (bra.left_rank(), ket.left_rank(), op.left_rank());
        let wsize = rk * n * ra2;

        // w[g'](b, j, a') = sum_b' Y(b, j, b') E_g'(a', b')
        let mut w: Vec<Option<Vec<f64>>> = vec![None; self.op_rank];
        let mut u: Vec<Option<Vec<f64>>> = vec![None; gl];
        for blk in op.blocks() {
            let wg = w[blk.right].get_or_insert_with(|| {
                let mut buf = vec![0.0; wsize];
                let e = view(self.channel(blk.right), ra2, rk2);
                gemm(view_mut(&mut buf, rk * n, ra2), false, ket.left_unfolding(), e.transpose());
                buf
            });
            let ug = u[blk.left].get_or_insert_with(|| vec![0.0; wsize]);
            blk.op.apply_mode(n, rk, ra2, wg, ug);
        }

        let mut data = vec![0.0; ra * rk * gl];
        for (g, ug) in u.iter().enumerate() {
            if let Some(ug) = ug {
                let dst = view_mut(&mut data[ra * rk * g..ra * rk * (g + 1)], ra, rk);
                gemm(dst, false, bra.right_unfolding(), view(ug, rk, n * ra2).transpose());
            }
        }
        Ok(Self { side: Side::Right, boundary: self.boundary - 1, bra_rank: ra, ket_rank: rk, op_rank: gl, data })
    }

    /// Left environment at boundary `k` computed directly from the cores.
    pub fn left_from_scratch(op: &TtMatrix, bra: &[TtCore], ket: &[TtCore], k: usize) -> Result<Self> {
        let mut env = Self::left_trivial();
        for site in 0..k {
            env = env.extend_left(op.core(site), &bra[site], &ket[site])?;
        }
        Ok(env)
    }

    /// Right environment at boundary `k` computed directly from the cores.
    pub fn right_from_scratch(op: &TtMatrix, bra: &[TtCore], ket: &[TtCore], k: usize) -> Result<Self> {
        let d = op.dim();
        let mut env = Self::right_trivial(d);
        for site in (k..d).rev() {
            env = env.extend_right(op.core(site), &bra[site], &ket[site])?;
        }
        Ok(env)
    }
}

fn check_site(op: &OpCore, bra: &TtCore, ket: &TtCore) -> Result<()> {
    if bra.mode_size() != op.mode_size() || ket.mode_size() != op.mode_size() {
        return invalid(format!("mode size mismatch: operator {}, bra {}, ket {}", op.mode_size(), bra.mode_size(), ket.mode_size()));
    }
    Ok(())
}

/// The projected operator `X_{!=p}^T A X_{!=p}` on the core at one site,
/// applied through its environments.
#[derive(Debug, Clone, Copy)]
pub struct LocalOperator<'a> {
    left: &'a Environment,
    op: &'a OpCore,
    right: &'a Environment,
}

impl<'a> LocalOperator<'a> {
    pub fn new(left: &'a Environment, op: &'a OpCore, right: &'a Environment) -> Result<Self> {
        if left.side != Side::Left || right.side != Side::Right {
            return invalid("local operator needs a left and a right environment");
        }
        if left.bra_rank != left.ket_rank || right.bra_rank != right.ket_rank {
            return invalid("local operator requires matching bra and ket ranks");
        }
        if left.op_rank != op.left_rank() || right.op_rank != op.right_rank() {
            return invalid(format!(
                "operator channels {}x{} do not match environments {}x{}",
                op.left_rank(),
                op.right_rank(),
                left.op_rank,
                right.op_rank
            ));
        }
        Ok(Self { left, op, right })
    }

    pub fn left_rank(&self) -> usize {
        self.left.ket_rank
    }

    pub fn mode_size(&self) -> usize {
        self.op.mode_size()
    }

    pub fn right_rank(&self) -> usize {
        self.right.ket_rank
    }

    /// Local dimension `r_{p-1} n_p r_p`.
    pub fn dim(&self) -> usize {
        self.left_rank() * self.mode_size() * self.right_rank()
    }

    /// Applies the projected operator to `cols` vectors stored column-major
    /// in `input` (each a core vectorized as `(a, i, b)`).
    pub fn apply_block(&self, input: &[f64], cols: usize) -> Vec<f64> {
        let m = self.dim();
        assert_eq!(input.len(), m * cols, "local_matvec: input has wrong length");
        let (ra, n, rb) = (self.left_rank(), self.mode_size(), self.right_rank());
        let (gl, gr) = (self.op.left_rank(), self.op.right_rank());
        let tsize = ra * n * rb * cols;

        // t[g'](a, j, b, s) = sum_b0 v_s(a, j, b0) R_g'(b, b0)
        let mut t: Vec<Option<Vec<f64>>> = vec![None; gr];
        let mut s: Vec<Option<Vec<f64>>> = vec![None; gl];
        for blk in self.op.blocks() {
            let tg = t[blk.right].get_or_insert_with(|| {
                let mut buf = vec![0.0; tsize];
                let r = view(self.right.channel(blk.right), rb, rb);
                for c in 0..cols {
                    let v = view(&input[m * c..m * (c + 1)], ra * n, rb);
                    gemm(view_mut(&mut buf[m * c..m * (c + 1)], ra * n, rb), false, v, r.transpose());
                }
                buf
            });
            let sg = s[blk.left].get_or_insert_with(|| vec![0.0; tsize]);
            blk.op.apply_mode(n, ra, rb * cols, tg, sg);
        }

        let mut out = vec![0.0; m * cols];
        let mut first = true;
        for (g, sg) in s.iter().enumerate() {
            if let Some(sg) = sg {
                let l = view(self.left.channel(g), ra, ra);
                gemm(view_mut(&mut out, ra, n * rb * cols), !first, l, view(sg, ra, n * rb * cols));
                first = false;
            }
        }
        out
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        self.apply_block(input, 1)
    }

    /// The projected operator as a dense `m x m` matrix (column-major),
    /// assembled column by column.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.dim();
        let mut id = vec![0.0; m * m];
        for i in 0..m {
            id[i + m * i] = 1.0;
        }
        self.apply_block(&id, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::{dense_mul, frame_matrix, max_abs_diff, random_op, transpose};
    use crate::tt::TtVector;

    #[test]
    fn identity_operator_collapses_left_environment() {
        let x = TtVector::random(&[3, 3, 3], 2, 1).unwrap().shift_center(2).unwrap();
        let id = TtMatrix::identity(&[3, 3, 3]).unwrap();
        let env = Environment::left_trivial().extend_left(id.core(0), x.core(0), x.core(0)).unwrap();
        assert_eq!(env.boundary(), 1);
        for a in 0..env.bra_rank() {
            for b in 0..env.ket_rank() {
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((env.get(a, b, 0) - target).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn full_left_contraction_is_quadratic_form() {
        let a = random_op(&[3, 3, 3], 2, false, 7);
        let x = TtVector::random(&[3, 3, 3], 2, 3).unwrap();
        let y = TtVector::random(&[3, 3, 3], 3, 4).unwrap();
        let env = Environment::left_from_scratch(&a, x.cores(), y.cores(), 3).unwrap();
        let ad = a.to_dense(64).unwrap();
        let (xd, yd) = (x.to_dense().unwrap(), y.to_dense().unwrap());
        let ay = dense_mul(&ad, &yd, 27, 27, 1);
        let q: f64 = xd.iter().zip(&ay).map(|(u, v)| u * v).sum();
        assert_eq!(env.data().len(), 1);
        assert!((env.data()[0] - q).abs() <= 1e-10 * q.abs().max(1.0));

        let renv = Environment::right_from_scratch(&a, x.cores(), y.cores(), 0).unwrap();
        assert!((renv.data()[0] - q).abs() <= 1e-10 * q.abs().max(1.0));
    }

    #[test]
    fn incremental_matches_from_scratch() {
        let a = random_op(&[2, 3, 2, 3], 3, true, 11);
        let x = TtVector::random(&[2, 3, 2, 3], 3, 5).unwrap();
        let e1 = Environment::left_trivial()
            .extend_left(a.core(0), x.core(0), x.core(0))
            .unwrap()
            .extend_left(a.core(1), x.core(1), x.core(1))
            .unwrap();
        let e2 = Environment::left_from_scratch(&a, x.cores(), x.cores(), 2).unwrap();
        assert!(max_abs_diff(e1.data(), e2.data()) < 1e-13);
    }

    #[test]
    fn extension_rejects_wrong_side_and_shapes() {
        let a = TtMatrix::identity(&[2, 2]).unwrap();
        let x = TtVector::random(&[2, 2], 2, 0).unwrap();
        assert!(Environment::right_trivial(2).extend_left(a.core(0), x.core(0), x.core(0)).is_err());
        assert!(Environment::left_trivial().extend_left(a.core(1), x.core(1), x.core(1)).is_err());
        assert!(Environment::left_trivial().extend_right(a.core(0), x.core(0), x.core(0)).is_err());
    }

    #[test]
    fn single_site_local_operator_is_the_operator() {
        let a = random_op(&[5], 1, true, 3);
        let (l, r) = (Environment::left_trivial(), Environment::right_trivial(1));
        let h = LocalOperator::new(&l, a.core(0), &r).unwrap();
        assert_eq!(h.dim(), 5);
        assert!(max_abs_diff(&h.to_dense(), &a.to_dense(25).unwrap()) < 1e-15);
    }

    #[test]
    fn local_operator_matches_explicit_projection() {
        let modes = [3, 3, 3];
        let a = random_op(&modes, 2, true, 21);
        for p in 0..3 {
            let x = TtVector::random(&modes, 2, 9).unwrap().shift_center(p).unwrap();
            let l = Environment::left_from_scratch(&a, x.cores(), x.cores(), p).unwrap();
            let r = Environment::right_from_scratch(&a, x.cores(), x.cores(), p + 1).unwrap();
            let h = LocalOperator::new(&l, a.core(p), &r).unwrap();
            let (f, big, m) = frame_matrix(&x, p);
            assert_eq!(m, h.dim());

            let gram = dense_mul(&transpose(&f, big, m), &f, m, big, m);
            let eye: Vec<f64> = (0..m * m).map(|ij| if ij % m == ij / m { 1.0 } else { 0.0 }).collect();
            assert!(max_abs_diff(&gram, &eye) < 1e-11);

            let ad = a.to_dense(big).unwrap();
            let proj = dense_mul(&transpose(&f, big, m), &dense_mul(&ad, &f, big, big, m), m, big, m);
            assert!(max_abs_diff(&proj, &h.to_dense()) < 1e-11, "site {p}");
        }
    }

    #[test]
    fn local_operator_is_symmetric_and_batched() {
        let modes = [2, 4, 3, 2];
        let a = random_op(&modes, 3, true, 2);
        let x = TtVector::random(&modes, 3, 8).unwrap().shift_center(1).unwrap();
        let l = Environment::left_from_scratch(&a, x.cores(), x.cores(), 1).unwrap();
        let r = Environment::right_from_scratch(&a, x.cores(), x.cores(), 2).unwrap();
        let h = LocalOperator::new(&l, a.core(1), &r).unwrap();
        let m = h.dim();
        let v: Vec<f64> = (0..m).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..m).map(|i| (i as f64 * 1.13).cos()).collect();
        let (hv, hw) = (h.apply(&v), h.apply(&w));
        let vhw: f64 = v.iter().zip(&hw).map(|(a, b)| a * b).sum();
        let whv: f64 = w.iter().zip(&hv).map(|(a, b)| a * b).sum();
        assert!((vhw - whv).abs() < 1e-12 * vhw.abs().max(1.0));

        let both: Vec<f64> = v.iter().chain(&w).copied().collect();
        let hb = h.apply_block(&both, 2);
        assert!(max_abs_diff(&hb[..m], &hv) < 1e-13);
        assert!(max_abs_diff(&hb[m..], &hw) < 1e-13);
    }
}
