//! Independent oracles for the integration suites: classical Gram-Schmidt
//! projectors, normal-equations least squares by Gauss-Jordan elimination,
//! a recursive subset enumerator, a brute-force reference decoder, and the
//! exact even-dof chi-square CDF.
//!
//! Nothing here calls into the factorization paths under test.

#![allow(dead_code)]

use jtdec::decoder::SelectionRule;
use jtdec::model::MeasurementMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn sq_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Orthonormal basis of the given columns by classical Gram-Schmidt with
/// re-orthogonalization; None when a column is dependent at `tol` (its
/// residual norm falls to tol times its original norm).
pub fn gs_basis(cols: &[&[f64]], tol: f64) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for c in cols {
        let orig = norm_sq(c).sqrt();
        let mut v = c.to_vec();
        for _ in 0..2 {
            for b in &basis {
                let coef = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= coef * bi;
                }
            }
        }
        let norm = norm_sq(&v).sqrt();
        if norm <= tol * orig {
            return None;
        }
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    Some(basis)
}

/// Squared residual of y off the span, via the explicit projector applied
/// with the Gram-Schmidt basis; None when rank deficient.
pub fn gs_residual_sq(cols: &[&[f64]], y: &[f64], tol: f64) -> Option<f64> {
    let basis = gs_basis(cols, tol)?;
    let mut r = y.to_vec();
    for b in &basis {
        let coef = dot(&r, b);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= coef * bi;
        }
    }
    Some(norm_sq(&r))
}

/// Least-squares coefficients by solving the normal equations with
/// Gauss-Jordan elimination and partial pivoting.
pub fn normal_equations_solve(cols: &[&[f64]], y: &[f64]) -> Vec<f64> {
    let l = cols.len();
    let mut aug = vec![vec![0.0f64; l + 1]; l];
    for p in 0..l {
        for q in 0..l {
            aug[p][q] = dot(cols[p], cols[q]);
        }
        aug[p][l] = dot(cols[p], y);
    }
    for col in 0..l {
        let piv = (col..l)
            .max_by(|&a, &b| {
                aug[a][col]
                    .abs()
                    .partial_cmp(&aug[b][col].abs())
                    .expect("finite pivots")
            })
            .expect("nonempty");
        aug.swap(col, piv);
        let p = aug[col][col];
        for v in &mut aug[col][col..] {
            *v /= p;
        }
        for row in 0..l {
            if row != col {
                let f = aug[row][col];
                for q in col..=l {
                    let delta = f * aug[col][q];
                    aug[row][q] -= delta;
                }
            }
        }
    }
    (0..l).map(|p| aug[p][l]).collect()
}

/// All size-l subsets of {0, .., m-1} by recursion, lexicographic.
pub fn enumerate_subsets(m: usize, l: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, l: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, l, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, l, 0, &mut Vec::with_capacity(l), &mut out);
    out
}

pub struct BruteVerdict {
    pub subset: Vec<usize>,
    pub typical: bool,
    /// None when the subset is rank deficient.
    pub deviation: Option<f64>,
}

pub struct BruteOutcome {
    pub support: Option<Vec<usize>>,
    pub e0: bool,
    pub typical_count: u64,
    pub verdicts: Vec<BruteVerdict>,
    pub estimate: Vec<f64>,
}

/// Reference decoder: rebuilds every projector by Gram-Schmidt, applies
/// the selection rule, and estimates by normal equations.
pub fn brute_decode(
    a: &MeasurementMatrix<f64>,
    y: &[f64],
    l: usize,
    sigma2: f64,
    delta: f64,
    rule: SelectionRule,
    rank_tol: f64,
) -> BruteOutcome {
    let n = a.n_rows() as f64;
    let m = a.n_cols();
    let center = (a.n_rows() - l) as f64 / n * sigma2;
    let mut verdicts = Vec::new();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut typical_count = 0u64;
    for subset in enumerate_subsets(m, l) {
        let cols: Vec<&[f64]> = subset.iter().map(|&c| a.mat().col(c)).collect();
        let deviation = gs_residual_sq(&cols, y, rank_tol).map(|r| (r / n - center).abs());
        let typical = matches!(deviation, Some(d) if d < delta);
        if typical {
            typical_count += 1;
            let d = deviation.expect("typical implies a deviation");
            let better = match (&best, rule) {
                (None, _) => true,
                (Some((bd, bs)), SelectionRule::MinDeviation) => {
                    d < *bd || (d == *bd && subset < *bs)
                }
                (Some(_), SelectionRule::FirstLexicographic) => false,
            };
            if better {
                best = Some((d, subset.clone()));
            }
        }
        verdicts.push(BruteVerdict {
            subset,
            typical,
            deviation,
        });
    }
    let mut estimate = vec![0.0; m];
    let support = best.map(|(_, s)| s);
    if let Some(s) = &support {
        let cols: Vec<&[f64]> = s.iter().map(|&c| a.mat().col(c)).collect();
        let coeffs = normal_equations_solve(&cols, y);
        for (&i, &c) in s.iter().zip(&coeffs) {
            estimate[i] = c;
        }
    }
    BruteOutcome {
        e0: support.is_none(),
        support,
        typical_count,
        verdicts,
        estimate,
    }
}

/// Chi-square CDF for even degrees of freedom, via the exact Poisson sum
/// P(X <= x) = 1 - exp(-x/2) sum_{j<k} (x/2)^j / j! with k = dof/2.
pub fn chi2_cdf_even(x: f64, dof: usize) -> f64 {
    assert!(dof >= 2 && dof.is_multiple_of(2));
    let k = dof / 2;
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..k {
        term *= half / j as f64;
        sum += term;
    }
    1.0 - (-half).exp() * sum
}

/// Binomial standard error of an empirical frequency.
pub fn binomial_se(freq: f64, trials: u64) -> f64 {
    (freq * (1.0 - freq) / trials as f64).sqrt()
}
