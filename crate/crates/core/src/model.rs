//! Problem model: sparse signals, Gaussian measurement matrices, and noisy
//! observations, with reproducible seeded generators.
//!
//! Every generator is a pure function of its arguments including the seed:
//! equal arguments give bit-identical outputs. Gaussian entries are drawn
//! in column-major order from a ChaCha8 stream.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;
use crate::subspace::SupportSet;

/// Element budget for generated matrices; guards against runaway requests.
pub const MAX_MATRIX_ELEMENTS: usize = 1 << 25;

/// Instance documents inline matrix entries at or below this element count;
/// larger matrices are stored by seed only and regenerated on load.
pub const INLINE_MATRIX_ELEMENTS: usize = 16_384;

/// How the nonzero magnitudes of a generated signal are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeRule {
    /// Every nonzero entry is +/- mu; makes mu(x) and ||x||^2 = L mu^2 exact.
    #[default]
    Constant,
    /// Magnitudes uniform in [mu, 2 mu), random signs.
    UniformAboveMu,
}

/// N x M measurement matrix; `seed` is present when the entries came from
/// [`gen_gaussian_matrix`] and can be regenerated.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix<F> {
    mat: Mat<F>,
    seed: Option<u64>,
}

impl<F: Real> MeasurementMatrix<F> {
    /// Wrap explicit entries (no generating seed).
    pub fn from_mat(mat: Mat<F>) -> Self {
        MeasurementMatrix { mat, seed: None }
    }

    #[inline]
    pub fn mat(&self) -> &Mat<F> {
        &self.mat
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.mat.n_rows()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.mat.n_cols()
    }

    #[inline]
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Sparse vector of length M with support `I`, sparsity L = |I|, and
/// minimum nonzero magnitude `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal<F> {
    values: Vec<F>,
    support: SupportSet,
    mu: F,
}

impl<F: Real> SparseSignal<F> {
    /// Build from a dense value vector; the support and mu are derived.
    pub fn new(values: Vec<F>) -> Result<Self> {
        let support: Vec<usize> = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != F::zero())
            .map(|(i, _)| i)
            .collect();
        if support.len() >= values.len() && !values.is_empty() {
            return Err(Error::InvalidSparsity {
                l: support.len(),
                m: values.len(),
            });
        }
        let mu = support
            .iter()
            .map(|&i| values[i].abs())
            .fold(F::infinity(), F::min);
        let mu = if support.is_empty() { F::zero() } else { mu };
        Ok(SparseSignal {
            values,
            support: SupportSet::new(support).expect("derived support is sorted"),
            mu,
        })
    }

    #[inline]
    pub fn values(&self) -> &[F] {
        &self.values
    }

    #[inline]
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// Sparsity L.
    #[inline]
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Minimum nonzero magnitude mu(x); zero for the zero signal.
    #[inline]
    pub fn mu(&self) -> F {
        self.mu
    }

    pub fn norm_sq(&self) -> F {
        crate::linalg::norm_sq(&self.values)
    }
}

/// A sampled compressive observation y = A x + n with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<F> {
    pub matrix: MeasurementMatrix<F>,
    pub signal: SparseSignal<F>,
    pub sigma2: F,
    pub observation: Vec<F>,
    /// alpha = L / N.
    pub alpha: F,
    /// beta = M / L (infinite for the zero signal).
    pub beta: F,
    /// Seed of the noise draw.
    pub noise_seed: u64,
}

/// i.i.d. standard normal N x M matrix, a deterministic function of
/// (n, m, seed).
pub fn gen_gaussian_matrix<F>(n: usize, m: usize, seed: u64) -> Result<MeasurementMatrix<F>>
where
    F: Real,
    StandardNormal: Distribution<F>,
{
    if n == 0 || m == 0 {
        return Err(Error::InvalidConfig(
            "matrix dimensions must be positive".into(),
        ));
    }
    let elems = n
        .checked_mul(m)
        .filter(|&e| e <= MAX_MATRIX_ELEMENTS)
        .ok_or(Error::DimensionOverflow {
            rows: n,
            cols: m,
            budget: MAX_MATRIX_ELEMENTS,
        })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<F> = (0..elems).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(MeasurementMatrix {
        mat: Mat::from_col_major(n, m, data),
        seed: Some(seed),
    })
}

/// Random L-sparse signal: support uniform among size-l subsets, nonzero
/// magnitudes at least mu per the amplitude rule, random signs. The stored
/// mu equals the realized minimum nonzero magnitude.
pub fn gen_sparse_signal<F>(
    m: usize,
    l: usize,
    mu: F,
    rule: AmplitudeRule,
    seed: u64,
) -> Result<SparseSignal<F>>
where
    F: Real,
    StandardUniform: Distribution<F>,
{
    if l == 0 || l >= m {
        return Err(Error::InvalidSparsity { l, m });
    }
    if mu <= F::zero() {
        return Err(Error::InvalidConfig("mu must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Partial Fisher-Yates: the first l entries are a uniform subset.
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..l {
        let j = rng.random_range(i..m);
        pool.swap(i, j);
    }
    let mut support = pool[..l].to_vec();
    support.sort_unstable();

    let mut values = vec![F::zero(); m];
    let mut realized_mu = F::infinity();
    for &i in &support {
        let negative = rng.random::<bool>();
        let magnitude = match rule {
            AmplitudeRule::Constant => mu,
            AmplitudeRule::UniformAboveMu => {
                let u: F = StandardUniform.sample(&mut rng);
                mu * (F::one() + u)
            }
        };
        realized_mu = realized_mu.min(magnitude);
        values[i] = if negative { -magnitude } else { magnitude };
    }
    Ok(SparseSignal {
        values,
        support: SupportSet::new(support).expect("sorted support"),
        mu: realized_mu,
    })
}

/// Observe y = A x + n with n ~ N(0, sigma2 I); sigma2 = 0 gives y = A x
/// exactly.
pub fn measure<F>(
    matrix: MeasurementMatrix<F>,
    signal: SparseSignal<F>,
    sigma2: F,
    seed: u64,
) -> Result<ProblemInstance<F>>
where
    F: Real,
    StandardNormal: Distribution<F>,
{
    if matrix.n_cols() != signal.len() {
        return Err(Error::ShapeMismatch(format!(
            "matrix has {} columns but signal has length {}",
            matrix.n_cols(),
            signal.len()
        )));
    }
    if sigma2 < F::zero() {
        return Err(Error::InvalidConfig("sigma2 must be nonnegative".into()));
    }
    let mut y = matrix.mat().matvec(signal.values());
    let sigma = sigma2.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for yi in &mut y {
        let z: F = StandardNormal.sample(&mut rng);
        *yi += sigma * z;
    }
    let n = matrix.n_rows();
    let l = signal.sparsity();
    let alpha = F::of_usize(l) / F::of_usize(n);
    let beta = if l == 0 {
        F::infinity()
    } else {
        F::of_usize(signal.len()) / F::of_usize(l)
    };
    Ok(ProblemInstance {
        matrix,
        signal,
        sigma2,
        observation: y,
        alpha,
        beta,
        noise_seed: seed,
    })
}

/// Sparsity ratios (alpha, beta) = (l/n, m/l) as exact quotients.
pub fn sparsity_params<F: Real>(n: usize, m: usize, l: usize) -> Result<(F, F)> {
    if l == 0 || l > n {
        return Err(Error::InvalidConfig(format!(
            "need 1 <= l <= n, got l = {l}, n = {n}"
        )));
    }
    if m <= 2 * l {
        return Err(Error::Regime { m, l });
    }
    Ok((
        F::of_usize(l) / F::of_usize(n),
        F::of_usize(m) / F::of_usize(l),
    ))
}

/// On-disk form of a [`ProblemInstance`]. Matrices with at most
/// [`INLINE_MATRIX_ELEMENTS`] entries carry them in `matrix`; larger seeded
/// matrices are stored by `matrix_seed` alone and regenerated on load.
/// `matrix_seed` is null only for explicit (unseeded) matrices, which are
/// always inlined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sigma2: f64,
    pub seed: u64,
    pub matrix_seed: Option<u64>,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl ProblemInstance<f64> {
    pub fn to_document(&self) -> InstanceDocument {
        let n = self.matrix.n_rows();
        let m = self.matrix.n_cols();
        let inline = self.matrix.seed().is_none() || n * m <= INLINE_MATRIX_ELEMENTS;
        InstanceDocument {
            n,
            m,
            l: self.signal.sparsity(),
            sigma2: self.sigma2,
            seed: self.noise_seed,
            matrix_seed: self.matrix.seed(),
            support: self.signal.support().as_slice().to_vec(),
            values: self.signal.values().to_vec(),
            y: self.observation.clone(),
            matrix: inline.then(|| self.matrix.mat().to_rows()),
        }
    }

    pub fn from_document(doc: &InstanceDocument) -> Result<Self> {
        if doc.values.len() != doc.m {
            return Err(Error::ShapeMismatch(format!(
                "values has length {} but m = {}",
                doc.values.len(),
                doc.m
            )));
        }
        if doc.y.len() != doc.n {
            return Err(Error::ShapeMismatch(format!(
                "y has length {} but n = {}",
                doc.y.len(),
                doc.n
            )));
        }
        let signal = SparseSignal::new(doc.values.clone())?;
        if signal.support().as_slice() != doc.support.as_slice() || signal.sparsity() != doc.l {
            return Err(Error::InvalidConfig(
                "support does not match the nonzeros of values".into(),
            ));
        }
        let matrix = match (&doc.matrix, doc.matrix_seed) {
            (Some(rows), seed) => {
                if rows.len() != doc.n || rows.iter().any(|r| r.len() != doc.m) {
                    return Err(Error::ShapeMismatch("inline matrix shape".into()));
                }
                MeasurementMatrix {
                    mat: Mat::from_rows(rows),
                    seed,
                }
            }
            (None, Some(seed)) => gen_gaussian_matrix(doc.n, doc.m, seed)?,
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "instance document has neither matrix entries nor a matrix seed".into(),
                ))
            }
        };
        let n = doc.n;
        let l = doc.l;
        let alpha = l as f64 / n as f64;
        let beta = if l == 0 {
            f64::INFINITY
        } else {
            doc.m as f64 / l as f64
        };
        Ok(ProblemInstance {
            matrix,
            signal,
            sigma2: doc.sigma2,
            observation: doc.y.clone(),
            alpha,
            beta,
            noise_seed: doc.seed,
        })
    }
}
