//! Numerically stable kernels over column submatrices: projection
//! residuals, least squares on a support, Gram-inverse traces, extreme
//! eigenvalues, and rank checks.
//!
//! Projections go through a thin column-pivoted Householder factorization;
//! the explicit projector I - A (A^T A)^{-1} A^T is never formed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, cpqr, Mat};
use crate::model::MeasurementMatrix;
use crate::scalar::Real;

/// Default relative rank tolerance. The f64 value is 1e-10; for wider
/// epsilon scalars the floor 64 * eps applies instead.
pub fn default_rank_tol<F: Real>() -> F {
    F::of(1e-10).max(F::epsilon() * F::of(64.0))
}

/// Strictly increasing index set J; ordered lexicographically, which is the
/// tie-break order used by the decoder.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "support indices must be strictly increasing".into(),
            ));
        }
        Ok(SupportSet { indices })
    }

    /// Sort and validate an unsorted index list.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        Self::new(indices)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Largest index, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

impl TryFrom<Vec<usize>> for SupportSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        SupportSet::new(v)
    }
}

impl From<SupportSet> for Vec<usize> {
    fn from(s: SupportSet) -> Vec<usize> {
        s.indices
    }
}

/// Extreme eigenvalues of a normalized Gram matrix (1/N) A_K^T A_K.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigSummary<F> {
    pub lambda_min: F,
    pub lambda_max: F,
}

fn check_indices<F: Real>(a: &MeasurementMatrix<F>, j: &SupportSet) -> Result<()> {
    if let Some(max) = j.max_index() {
        if max >= a.n_cols() {
            return Err(Error::IndexOutOfRange {
                index: max,
                cols: a.n_cols(),
            });
        }
    }
    Ok(())
}

fn check_vector<F: Real>(a: &MeasurementMatrix<F>, y: &[F]) -> Result<()> {
    if y.len() != a.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "vector has length {} but the matrix has {} rows",
            y.len(),
            a.n_rows()
        )));
    }
    Ok(())
}

/// Copy of the columns of `a` selected by `j`.
pub fn submatrix<F: Real>(a: &MeasurementMatrix<F>, j: &SupportSet) -> Result<Mat<F>> {
    check_indices(a, j)?;
    let n = a.n_rows();
    let mut out = Mat::zeros(n, j.len());
    for (k, &c) in j.iter().enumerate() {
        out.col_mut(k).copy_from_slice(a.mat().col(c));
    }
    Ok(out)
}

/// True iff the smallest singular value of A_J exceeds `tol` times the
/// largest. |J| > N is rank deficient by counting.
pub fn numeric_rank_full<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    tol: F,
) -> Result<bool> {
    check_indices(a, j)?;
    if j.is_empty() {
        return Ok(true);
    }
    if j.len() > a.n_rows() {
        return Ok(false);
    }
    let mut sub = submatrix(a, j)?;
    let sv = linalg::singular_values(&mut sub);
    let (smin, smax) = (sv[0], sv[sv.len() - 1]);
    Ok(smax > F::zero() && smin > tol * smax)
}

/// || Pi_perp_{A_J} y ||^2 via Householder QR of A_J.
pub fn residual_sq_norm<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
) -> Result<F> {
    residual_sq_norm_with_tol(a, j, y, default_rank_tol::<F>())
}

pub(crate) fn residual_sq_norm_with_tol<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    tol: F,
) -> Result<F> {
    check_indices(a, j)?;
    check_vector(a, y)?;
    if j.is_empty() {
        return Ok(linalg::norm_sq(y));
    }
    let f = cpqr(a.mat(), j.as_slice(), tol)?;
    Ok(f.residual_sq(y))
}

/// Least-squares coefficients of y against the columns A_J, in support
/// order. A_J times the result is the orthogonal projection of y.
pub fn ls_on_support<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
) -> Result<Vec<F>> {
    ls_on_support_with_tol(a, j, y, default_rank_tol::<F>())
}

pub(crate) fn ls_on_support_with_tol<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    tol: F,
) -> Result<Vec<F>> {
    check_indices(a, j)?;
    check_vector(a, y)?;
    if j.is_empty() {
        return Ok(Vec::new());
    }
    let f = cpqr(a.mat(), j.as_slice(), tol)?;
    Ok(f.solve(y))
}

/// Tr((A_J^T A_J)^{-1}).
pub fn trace_inverse_gram<F: Real>(a: &MeasurementMatrix<F>, j: &SupportSet) -> Result<F> {
    check_indices(a, j)?;
    if j.is_empty() {
        return Ok(F::zero());
    }
    let f = cpqr(a.mat(), j.as_slice(), default_rank_tol::<F>())?;
    Ok(f.trace_inverse_gram())
}

/// Extreme eigenvalues of (1/N) A_K^T A_K. Tiny negative roundoff on a
/// positive semidefinite Gram is clamped to zero.
pub fn extreme_eigs_gram<F: Real>(
    a: &MeasurementMatrix<F>,
    k: &SupportSet,
) -> Result<EigSummary<F>> {
    check_indices(a, k)?;
    if k.is_empty() {
        return Err(Error::InvalidConfig(
            "extreme_eigs_gram needs a nonempty index set".into(),
        ));
    }
    let n = a.n_rows();
    let size = k.len();
    let inv_n = F::of_usize(n).recip();
    let mut gram = Mat::zeros(size, size);
    for (p, &cp) in k.iter().enumerate() {
        for (q, &cq) in k.iter().enumerate().skip(p) {
            let g = linalg::dot(a.mat().col(cp), a.mat().col(cq)) * inv_n;
            gram.set(p, q, g);
            gram.set(q, p, g);
        }
    }
    let eigs = linalg::sym_eigenvalues(&mut gram);
    Ok(EigSummary {
        lambda_min: eigs[0].max(F::zero()),
        lambda_max: eigs[size - 1].max(F::zero()),
    })
}
