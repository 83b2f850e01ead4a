//! The delta-joint-typicality test, the exhaustive joint typicality
//! decoder with its zero-output fallback E0, and the genie-aided
//! estimator.
//!
//! A support J of size L is delta-jointly typical with y when A_J has full
//! numeric rank and
//!     | (1/N) ||Pi_perp_{A_J} y||^2 - ((N - L)/N) sigma^2 | < delta.
//! The decoder projects y onto all C(M, L) column subspaces and selects a
//! typical support; with no typical candidate it reports E0 and outputs
//! the zero vector.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::MeasurementMatrix;
use crate::scalar::Real;
use crate::subspace::{self, SupportSet};

mod scan;

/// Default cap on the exhaustive subset scan.
pub const DEFAULT_SUBSET_BUDGET: u64 = 4_000_000;

/// C(n, k), saturating at u128::MAX.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        let num = (n - i) as u128;
        acc = match acc.checked_mul(num) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Which typical support the decoder returns when several qualify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Smallest typicality deviation, ties broken lexicographically.
    #[default]
    MinDeviation,
    /// Lexicographically first typical support.
    FirstLexicographic,
}

/// Typicality slack: an explicit delta, or zeta in (2/3, 1) from which
/// delta = zeta mu^2 (N - L) / N is derived once mu is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypicalitySlack<F> {
    Delta(F),
    Zeta(F),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig<F> {
    pub slack: TypicalitySlack<F>,
    pub rank_tol: F,
    pub selection_rule: SelectionRule,
    pub max_subsets: u64,
}

impl<F: Real> DecoderConfig<F> {
    pub fn with_delta(delta: F) -> Self {
        DecoderConfig {
            slack: TypicalitySlack::Delta(delta),
            rank_tol: subspace::default_rank_tol::<F>(),
            selection_rule: SelectionRule::default(),
            max_subsets: DEFAULT_SUBSET_BUDGET,
        }
    }

    pub fn with_zeta(zeta: F) -> Self {
        DecoderConfig {
            slack: TypicalitySlack::Zeta(zeta),
            ..Self::with_delta(F::zero())
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.slack {
            TypicalitySlack::Delta(d) if d <= F::zero() => Err(Error::InvalidConfig(
                "typicality slack delta must be positive".into(),
            )),
            TypicalitySlack::Zeta(z)
                if z <= F::of(2.0 / 3.0) || z >= F::one() =>
            {
                Err(Error::ZetaRange { zeta: z.as_f64() })
            }
            _ => Ok(()),
        }
    }

    /// Turn a zeta slack into the concrete delta for a signal with minimum
    /// nonzero magnitude `mu` under the (n, l) problem shape.
    pub fn resolve_slack(self, mu: F, n: usize, l: usize) -> Result<Self> {
        match self.slack {
            TypicalitySlack::Delta(_) => Ok(self),
            TypicalitySlack::Zeta(z) => {
                let (delta, _) = bounds::delta_from_zeta(z, mu, n, l)?;
                Ok(DecoderConfig {
                    slack: TypicalitySlack::Delta(delta),
                    ..self
                })
            }
        }
    }

    fn delta(&self) -> Result<F> {
        match self.slack {
            TypicalitySlack::Delta(d) => Ok(d),
            TypicalitySlack::Zeta(_) => Err(Error::InvalidConfig(
                "zeta slack must be resolved against mu before decoding; \
                 call resolve_slack"
                    .into(),
            )),
        }
    }
}

/// Decoder output. `estimate` is zero outside `support`, and identically
/// zero when no typical candidate exists (`e0` = true).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult<F> {
    pub support: Option<SupportSet>,
    pub e0: bool,
    pub deviation: F,
    pub typical_count: u64,
    pub subsets_examined: u64,
    pub estimate: Vec<F>,
}

/// |(1/N) ||Pi_perp_{A_J} y||^2 - ((N - L)/N) sigma2| at the default rank
/// tolerance.
pub fn typicality_deviation<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    sigma2: F,
) -> Result<F> {
    typicality_deviation_with_tol(a, j, y, sigma2, subspace::default_rank_tol::<F>())
}

pub(crate) fn typicality_deviation_with_tol<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    sigma2: F,
    rank_tol: F,
) -> Result<F> {
    if let Some(max) = j.max_index() {
        if max >= a.n_cols() {
            return Err(Error::IndexOutOfRange {
                index: max,
                cols: a.n_cols(),
            });
        }
    }
    if y.len() != a.n_rows() {
        return Err(Error::ShapeMismatch(format!(
            "observation has length {} but the matrix has {} rows",
            y.len(),
            a.n_rows()
        )));
    }
    let mut ws = scan::ScanWorkspace::new(a.n_rows(), j.len());
    match ws.single(a.mat(), y, sigma2, rank_tol, j.as_slice()) {
        scan::LaneVerdict::Deviation(d) => Ok(d),
        scan::LaneVerdict::RankDeficient => Err(Error::RankDeficient {
            column: j.len(),
            tol: rank_tol.as_f64(),
        }),
    }
}

/// True iff A_J has full numeric rank and the typicality deviation is
/// strictly below delta.
pub fn is_jointly_typical<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    sigma2: F,
    delta: F,
) -> bool {
    is_jointly_typical_with_tol(a, j, y, sigma2, delta, subspace::default_rank_tol::<F>())
}

pub(crate) fn is_jointly_typical_with_tol<F: Real>(
    a: &MeasurementMatrix<F>,
    j: &SupportSet,
    y: &[F],
    sigma2: F,
    delta: F,
    rank_tol: F,
) -> bool {
    matches!(
        typicality_deviation_with_tol(a, j, y, sigma2, rank_tol),
        Ok(d) if d < delta
    )
}

/// Least squares on the true support, zero elsewhere.
pub fn genie_estimate<F: Real>(
    a: &MeasurementMatrix<F>,
    i: &SupportSet,
    y: &[F],
) -> Result<Vec<F>> {
    let coeffs = subspace::ls_on_support(a, i, y)?;
    Ok(scatter(a.n_cols(), i.as_slice(), &coeffs))
}

fn scatter<F: Real>(m: usize, indices: &[usize], coeffs: &[F]) -> Vec<F> {
    let mut out = vec![F::zero(); m];
    for (&i, &c) in indices.iter().zip(coeffs) {
        out[i] = c;
    }
    out
}

/// All size-l subsets of {0, .., m-1} in lexicographic order.
pub fn enumerate_supports(m: usize, l: usize) -> SupportEnumerator {
    SupportEnumerator {
        m,
        l,
        current: None,
        done: l > m,
    }
}

pub struct SupportEnumerator {
    m: usize,
    l: usize,
    current: Option<Vec<usize>>,
    done: bool,
}

impl SupportEnumerator {
    /// C(m, l).
    pub fn total(&self) -> u128 {
        binomial(self.m, self.l)
    }
}

impl Iterator for SupportEnumerator {
    type Item = SupportSet;

    fn next(&mut self) -> Option<SupportSet> {
        if self.done {
            return None;
        }
        match &mut self.current {
            None => {
                let first: Vec<usize> = (0..self.l).collect();
                self.current = Some(first.clone());
                Some(SupportSet::new(first).expect("sorted"))
            }
            Some(idx) => {
                if next_combination(idx, self.m) {
                    Some(SupportSet::new(idx.clone()).expect("sorted"))
                } else {
                    self.done = true;
                    None
                }
            }
        }
    }
}

/// Advance to the lexicographic successor in place; false at the end.
fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let l = idx.len();
    if l == 0 {
        return false;
    }
    let mut i = l;
    while i > 0 {
        i -= 1;
        if idx[i] != i + m - l {
            idx[i] += 1;
            for j in i + 1..l {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The combination of rank `r` (lexicographic, 0-based) among size-l
/// subsets of {0, .., m-1}.
fn unrank_combination(mut r: u128, m: usize, l: usize) -> Vec<usize> {
    let mut idx = Vec::with_capacity(l);
    let mut c = 0usize;
    for pos in 0..l {
        loop {
            let count = binomial(m - 1 - c, l - 1 - pos);
            if r < count {
                idx.push(c);
                c += 1;
                break;
            }
            r -= count;
            c += 1;
        }
    }
    idx
}

#[derive(Clone)]
struct Candidate<F> {
    deviation: F,
    indices: Vec<usize>,
}

/// Strict total order on candidates: smaller deviation first (NaN last),
/// lexicographic support as tie-break.
fn candidate_cmp<F: Real>(a: &Candidate<F>, b: &Candidate<F>) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match a.deviation.partial_cmp(&b.deviation) {
        Some(Equal) => a.indices.cmp(&b.indices),
        Some(o) => o,
        None => match (a.deviation.is_nan(), b.deviation.is_nan()) {
            (true, false) => Greater,
            (false, true) => Less,
            _ => a.indices.cmp(&b.indices),
        },
    }
}

#[derive(Clone)]
struct ChunkOutcome<F> {
    typical_count: u64,
    best: Option<Candidate<F>>,
}

impl<F: Real> ChunkOutcome<F> {
    fn empty() -> Self {
        ChunkOutcome {
            typical_count: 0,
            best: None,
        }
    }

    fn merge(self, other: Self, rule: SelectionRule) -> Self {
        let best = match (self.best, other.best) {
            (None, b) => b,
            (a, None) => a,
            (Some(a), Some(b)) => Some(match rule {
                SelectionRule::MinDeviation => {
                    if candidate_cmp(&a, &b) == std::cmp::Ordering::Greater {
                        b
                    } else {
                        a
                    }
                }
                SelectionRule::FirstLexicographic => {
                    if b.indices < a.indices {
                        b
                    } else {
                        a
                    }
                }
            }),
        };
        ChunkOutcome {
            typical_count: self.typical_count + other.typical_count,
            best,
        }
    }
}

/// Exhaustive joint typicality decode of y against all size-l supports.
///
/// The scan is a full pass regardless of the selection rule; its result is
/// a pure fold with an associative, commutative merge, so any evaluation
/// order or thread count produces the identical DecodeResult.
pub fn joint_typicality_decode<F: Real>(
    a: &MeasurementMatrix<F>,
    y: &[F],
    l: usize,
    sigma2: F,
    config: &DecoderConfig<F>,
) -> Result<DecodeResult<F>> {
    config.validate()?;
    let delta = config.delta()?;
    let n = a.n_rows();
    let m = a.n_cols();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "observation has length {} but the matrix has {} rows",
            y.len(),
            n
        )));
    }
    if l == 0 || l > n || l > m {
        return Err(Error::InvalidConfig(format!(
            "sparsity l = {l} must satisfy 1 <= l <= min(N, M) = {}",
            n.min(m)
        )));
    }
    if sigma2 < F::zero() {
        return Err(Error::InvalidConfig("sigma2 must be nonnegative".into()));
    }
    let total_wide = binomial(m, l);
    if total_wide > config.max_subsets as u128 {
        return Err(Error::BudgetExceeded {
            m,
            l,
            count: total_wide,
            budget: config.max_subsets,
        });
    }
    let total = total_wide as u64;

    const CHUNK: u64 = 8192;
    let tasks = total.div_ceil(CHUNK);
    let rule = config.selection_rule;
    let rank_tol = config.rank_tol;

    let outcome = (0..tasks)
        .into_par_iter()
        .map_init(
            || scan::ScanWorkspace::new(n, l),
            |ws, t| {
                let start = t * CHUNK;
                let end = total.min(start + CHUNK);
                scan_range(ws, a.mat(), y, sigma2, rank_tol, delta, m, l, start, end, rule)
            },
        )
        .reduce(ChunkOutcome::empty, |x, y| x.merge(y, rule));

    let result = match outcome.best {
        None => DecodeResult {
            support: None,
            e0: true,
            deviation: F::zero(),
            typical_count: 0,
            subsets_examined: total,
            estimate: vec![F::zero(); m],
        },
        Some(best) => {
            let support = SupportSet::new(best.indices).expect("sorted by construction");
            let coeffs =
                subspace::ls_on_support_with_tol(a, &support, y, config.rank_tol)?;
            let estimate = scatter(m, support.as_slice(), &coeffs);
            DecodeResult {
                support: Some(support),
                e0: false,
                deviation: best.deviation,
                typical_count: outcome.typical_count,
                subsets_examined: total,
                estimate,
            }
        }
    };
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn scan_range<F: Real>(
    ws: &mut scan::ScanWorkspace<F>,
    a: &Mat<F>,
    y: &[F],
    sigma2: F,
    rank_tol: F,
    delta: F,
    m: usize,
    l: usize,
    start: u64,
    end: u64,
    rule: SelectionRule,
) -> ChunkOutcome<F> {
    let mut out = ChunkOutcome::empty();
    if start >= end {
        return out;
    }
    let mut idx = unrank_combination(start as u128, m, l);
    let mut batch: Vec<usize> = Vec::with_capacity(scan::LANES * l);
    let mut remaining = end - start;
    let mut verdicts = [scan::LaneVerdict::RankDeficient; scan::LANES];
    loop {
        batch.clear();
        let count = (remaining as usize).min(scan::LANES);
        for k in 0..count {
            batch.extend_from_slice(&idx);
            if k + 1 < count || remaining as usize > count {
                let more = next_combination(&mut idx, m);
                debug_assert!(more || remaining as usize == k + 1);
            }
        }
        ws.batch(a, y, sigma2, rank_tol, &batch, count, &mut verdicts);
        for (k, verdict) in verdicts.iter().enumerate().take(count) {
            if let scan::LaneVerdict::Deviation(d) = *verdict {
                if d < delta {
                    out.typical_count += 1;
                    let indices = || batch[k * l..(k + 1) * l].to_vec();
                    let accept = match (&out.best, rule) {
                        (None, _) => true,
                        (Some(b), SelectionRule::MinDeviation) => {
                            let cand = Candidate {
                                deviation: d,
                                indices: indices(),
                            };
                            candidate_cmp(&cand, b) == std::cmp::Ordering::Less
                        }
                        // Scan order is lexicographic, so the first typical
                        // subset in this range already wins.
                        (Some(_), SelectionRule::FirstLexicographic) => false,
                    };
                    if accept {
                        out.best = Some(Candidate {
                            deviation: d,
                            indices: indices(),
                        });
                    }
                }
            }
        }
        remaining -= count as u64;
        if remaining == 0 {
            break;
        }
    }
    out
}
