//! Dense column-major matrices and the factorization kernels behind the
//! subspace operations: column-pivoted Householder QR, cyclic Jacobi
//! eigenvalues, and one-sided Jacobi singular values.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense matrix with column-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<F>,
}

impl<F: Real> Mat<F> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Mat {
            n_rows,
            n_cols,
            data: vec![F::zero(); n_rows * n_cols],
        }
    }

    /// Build from a column-major buffer of length `n_rows * n_cols`.
    pub fn from_col_major(n_rows: usize, n_cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), n_rows * n_cols, "column-major buffer length");
        Mat {
            n_rows,
            n_cols,
            data,
        }
    }

    pub fn from_columns(n_rows: usize, cols: &[Vec<F>]) -> Self {
        let mut data = Vec::with_capacity(n_rows * cols.len());
        for c in cols {
            assert_eq!(c.len(), n_rows, "column length");
            data.extend_from_slice(c);
        }
        Mat {
            n_rows,
            n_cols: cols.len(),
            data,
        }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut m = Mat::zeros(n_rows, n_cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n_cols, "row length");
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[F] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [F] {
        &mut self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[j * self.n_rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[j * self.n_rows + i] = v;
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    /// y = A x, accumulated column by column in index order.
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.n_cols, "matvec operand length");
        let mut y = vec![F::zero(); self.n_rows];
        for (j, &xj) in x.iter().enumerate() {
            axpy(xj, self.col(j), &mut y);
        }
        y
    }

    /// Rows as vectors, for row-major serialization.
    pub fn to_rows(&self) -> Vec<Vec<F>> {
        (0..self.n_rows)
            .map(|i| (0..self.n_cols).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Dot product with a fixed eight-way unrolled summation order, so results
/// are identical across runs and thread counts.
#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let split = a.len() - a.len() % 8;
    let mut acc = [F::zero(); 8];
    for (ca, cb) in a[..split].chunks_exact(8).zip(b[..split].chunks_exact(8)) {
        for lane in 0..8 {
            acc[lane] += ca[lane] * cb[lane];
        }
    }
    let mut tail = F::zero();
    for (x, y) in a[split..].iter().zip(&b[split..]) {
        tail += *x * *y;
    }
    (((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]))) + tail
}

#[inline]
pub fn norm_sq<F: Real>(a: &[F]) -> F {
    dot(a, a)
}

#[inline]
pub fn axpy<F: Real>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Column-pivoted Householder QR of the columns `cols` of `a`.
///
/// Reflectors are stored below the diagonal of `w` (implicit unit leading
/// element), R on and above it; the diagonal of R is positive. `pivot[k]`
/// is the position within `cols` of the column reduced at step `k`.
#[derive(Debug)]
pub struct Cpqr<F> {
    n: usize,
    l: usize,
    w: Vec<F>, // n x l column-major
    tau: Vec<F>,
    pivot: Vec<usize>,
}

/// Factorize, detecting rank deficiency when a pivot column's remaining
/// norm falls to `tol` times the largest column norm.
pub fn cpqr<F: Real>(a: &Mat<F>, cols: &[usize], tol: F) -> Result<Cpqr<F>> {
    let n = a.n_rows();
    let l = cols.len();
    for &c in cols {
        if c >= a.n_cols() {
            return Err(Error::IndexOutOfRange {
                index: c,
                cols: a.n_cols(),
            });
        }
    }
    let mut w = Vec::with_capacity(n * l);
    for &c in cols {
        w.extend_from_slice(a.col(c));
    }
    let mut tau = vec![F::zero(); l];
    let mut pivot: Vec<usize> = (0..l).collect();
    // Remaining squared norms, downdated per step and used only to order
    // pivots; the chosen pivot's norm is recomputed exactly.
    let mut rem: Vec<F> = (0..l).map(|j| norm_sq(&w[j * n..(j + 1) * n])).collect();
    let mut scale0 = F::zero();

    for k in 0..l {
        let mut p = k;
        for j in k + 1..l {
            if rem[j] > rem[p] {
                p = j;
            }
        }
        if p != k {
            let (lo, hi) = w.split_at_mut(p * n);
            lo[k * n..k * n + n].swap_with_slice(&mut hi[..n]);
            rem.swap(k, p);
            pivot.swap(k, p);
        }

        let col = &w[k * n..(k + 1) * n];
        let s = norm_sq(&col[k..]);
        let pivnorm = s.sqrt();
        if k == 0 {
            scale0 = pivnorm;
        }
        if pivnorm <= tol * scale0 {
            return Err(Error::RankDeficient {
                column: k,
                tol: tol.as_f64(),
            });
        }

        let x0 = col[k];
        let sigma = norm_sq(&col[k + 1..]);
        let (beta, diag) = if sigma == F::zero() {
            (F::zero(), x0.abs())
        } else {
            let mu = (x0 * x0 + sigma).sqrt();
            let v1 = if x0 <= F::zero() {
                x0 - mu
            } else {
                -sigma / (x0 + mu)
            };
            let beta = F::of(2.0) * v1 * v1 / (sigma + v1 * v1);
            let inv_v1 = v1.recip();
            let colm = &mut w[k * n..(k + 1) * n];
            for v in &mut colm[k + 1..] {
                *v *= inv_v1;
            }
            (beta, mu)
        };
        tau[k] = beta;
        // Negative diagonal is avoided by construction; store |R_kk|.
        w[k * n + k] = diag;

        if beta != F::zero() {
            for j in k + 1..l {
                let (vc, cc) = col_pair(&mut w, n, k, j);
                let t = cc[k] + dot(&vc[k + 1..], &cc[k + 1..]);
                let bt = beta * t;
                cc[k] -= bt;
                for (ci, vi) in cc[k + 1..].iter_mut().zip(&vc[k + 1..]) {
                    *ci -= bt * *vi;
                }
            }
        }
        for j in k + 1..l {
            let rkj = w[j * n + k];
            rem[j] = (rem[j] - rkj * rkj).max(F::zero());
        }
    }

    Ok(Cpqr {
        n,
        l,
        w,
        tau,
        pivot,
    })
}

fn col_pair<F>(w: &mut [F], n: usize, k: usize, j: usize) -> (&[F], &mut [F]) {
    debug_assert!(k < j);
    let (lo, hi) = w.split_at_mut(j * n);
    (&lo[k * n..k * n + n], &mut hi[..n])
}

impl<F: Real> Cpqr<F> {
    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.l
    }

    /// Apply Q^T in place.
    pub fn apply_qt(&self, y: &mut [F]) {
        assert_eq!(y.len(), self.n, "vector length");
        for k in 0..self.l {
            let beta = self.tau[k];
            if beta == F::zero() {
                continue;
            }
            let v = &self.w[k * self.n..(k + 1) * self.n];
            let t = y[k] + dot(&v[k + 1..], &y[k + 1..]);
            let bt = beta * t;
            y[k] -= bt;
            for (yi, vi) in y[k + 1..].iter_mut().zip(&v[k + 1..]) {
                *yi -= bt * *vi;
            }
        }
    }

    /// Squared norm of the residual of `y` off the column span.
    pub fn residual_sq(&self, y: &[F]) -> F {
        let mut yt = y.to_vec();
        self.apply_qt(&mut yt);
        norm_sq(&yt[self.l..])
    }

    /// Least-squares coefficients in the original column order of `cols`.
    pub fn solve(&self, y: &[F]) -> Vec<F> {
        let mut yt = y.to_vec();
        self.apply_qt(&mut yt);
        let z = self.back_substitute(&yt[..self.l]);
        let mut out = vec![F::zero(); self.l];
        for (k, &pos) in self.pivot.iter().enumerate() {
            out[pos] = z[k];
        }
        out
    }

    fn back_substitute(&self, rhs: &[F]) -> Vec<F> {
        let l = self.l;
        let mut z = rhs.to_vec();
        for k in (0..l).rev() {
            let mut acc = z[k];
            for (j, zj) in z.iter().enumerate().take(l).skip(k + 1) {
                acc -= self.w[j * self.n + k] * *zj;
            }
            z[k] = acc / self.w[k * self.n + k];
        }
        z
    }

    /// Tr((A_J^T A_J)^{-1}) = ||R^{-1}||_F^2; the column permutation is a
    /// similarity transform and does not change the trace.
    pub fn trace_inverse_gram(&self) -> F {
        let l = self.l;
        // Columns of R^{-1} by back substitution against unit vectors.
        let mut total = F::zero();
        let mut e = vec![F::zero(); l];
        for j in 0..l {
            for v in e.iter_mut() {
                *v = F::zero();
            }
            e[j] = F::one();
            let col = self.back_substitute(&e);
            total += norm_sq(&col[..j + 1]);
        }
        total
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// The input buffer is destroyed.
pub fn sym_eigenvalues<F: Real>(g: &mut Mat<F>) -> Vec<F> {
    let n = g.n_rows();
    assert_eq!(n, g.n_cols(), "symmetric input");
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![g.get(0, 0)];
    }
    let tol = F::epsilon() * F::of(0.5);
    for _sweep in 0..64 {
        let mut off = F::zero();
        let mut diag = F::zero();
        for p in 0..n {
            diag += g.get(p, p).abs();
            for q in p + 1..n {
                off += g.get(p, q).abs();
            }
        }
        if off <= tol * (diag + off) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = g.get(p, q);
                if apq == F::zero() {
                    continue;
                }
                let app = g.get(p, p);
                let aqq = g.get(q, q);
                if apq.abs() <= F::epsilon() * (app.abs() + aqq.abs()) * F::of(1e-3) {
                    continue;
                }
                let theta = (aqq - app) / (F::of(2.0) * apq);
                let t = {
                    let denom = theta.abs() + (theta * theta + F::one()).sqrt();
                    if theta >= F::zero() {
                        denom.recip()
                    } else {
                        -denom.recip()
                    }
                };
                let c = (t * t + F::one()).sqrt().recip();
                let s = t * c;
                for i in 0..n {
                    let gip = g.get(i, p);
                    let giq = g.get(i, q);
                    g.set(i, p, c * gip - s * giq);
                    g.set(i, q, s * gip + c * giq);
                }
                for i in 0..n {
                    let gpi = g.get(p, i);
                    let gqi = g.get(q, i);
                    g.set(p, i, c * gpi - s * gqi);
                    g.set(q, i, s * gpi + c * gqi);
                }
            }
        }
    }
    let mut eigs: Vec<F> = (0..n).map(|i| g.get(i, i)).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}

/// Singular values of an n x l matrix with n >= l, by one-sided Jacobi;
/// returned in increasing order. The input buffer is destroyed.
pub fn singular_values<F: Real>(w: &mut Mat<F>) -> Vec<F> {
    let n = w.n_rows();
    let l = w.n_cols();
    assert!(n >= l, "one-sided Jacobi needs n_rows >= n_cols");
    if l == 0 {
        return Vec::new();
    }
    let tol = F::epsilon() * F::of_usize(n.max(2));
    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..l {
            for q in p + 1..l {
                let (cp, cq) = {
                    let (lo, hi) = w.data.split_at_mut(q * n);
                    (&mut lo[p * n..p * n + n], &mut hi[..n])
                };
                let app = norm_sq(cp);
                let aqq = norm_sq(cq);
                let apq = dot(cp, cq);
                if app == F::zero() || aqq == F::zero() {
                    continue;
                }
                if apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (F::of(2.0) * apq);
                let t = {
                    let denom = zeta.abs() + (zeta * zeta + F::one()).sqrt();
                    if zeta >= F::zero() {
                        denom.recip()
                    } else {
                        -denom.recip()
                    }
                };
                let c = (t * t + F::one()).sqrt().recip();
                let s = t * c;
                for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
                    let a = *xp;
                    let b = *xq;
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<F> = (0..l).map(|j| norm_sq(w.col(j)).sqrt()).collect();
    sv.sort_by(|a, b| a.partial_cmp(b).expect("finite singular values"));
    sv
}
