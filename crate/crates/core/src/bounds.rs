//! Closed-form analytical quantities: the Cramer-Rao bound of the
//! genie-aided model, typicality tail bounds, eigenvalue-concentration
//! bounds, the subset-counting exponent f(z) with its endpoints, and the
//! operating-regime validator.
//!
//! All logarithms are natural, including the binary entropy function used
//! inside concentration exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MeasurementMatrix;
use crate::scalar::Real;
use crate::subspace::{self, SupportSet};

/// Cramer-Rao bound of the genie-aided estimator given the true support:
/// sigma2 * Tr((A_I^T A_I)^{-1}).
pub fn crb_gae<F: Real>(a: &MeasurementMatrix<F>, i: &SupportSet, sigma2: F) -> Result<F> {
    Ok(sigma2 * subspace::trace_inverse_gram(a, i)?)
}

/// Binary entropy in nats, extended continuously by H(0) = H(1) = 0.
pub fn binary_entropy<F: Real>(p: F) -> Result<F> {
    if p < F::zero() || p > F::one() {
        return Err(Error::Domain(format!(
            "binary_entropy needs p in [0, 1], got {p}"
        )));
    }
    if p == F::zero() || p == F::one() {
        return Ok(F::zero());
    }
    let q = F::one() - p;
    Ok(-(p * p.ln() + q * q.ln()))
}

/// Tail bound on the true support failing the typicality test:
/// 2 exp(-(delta^2 / 4 sigma^4) * N^2 / (N - L + (2 delta / sigma^2) N)).
pub fn miss_typicality_bound<F: Real>(n: usize, l: usize, sigma2: F, delta: F) -> F {
    assert!(l < n, "need l < n");
    assert!(delta > F::zero() && sigma2 > F::zero());
    let nf = F::of_usize(n);
    let sigma4 = sigma2 * sigma2;
    let denom = F::of_usize(n - l) + F::of(2.0) * delta / sigma2 * nf;
    let exponent = delta * delta / (F::of(4.0) * sigma4) * nf * nf / denom;
    F::of(2.0) * (-exponent).exp()
}

/// Tail bound on a false support with missed signal energy
/// sum_{k in I \ J} |x_k|^2 passing the typicality test.
pub fn false_typicality_bound<F: Real>(
    n: usize,
    l: usize,
    missed_energy: F,
    sigma2: F,
    delta_prime: F,
) -> Result<F> {
    assert!(l < n, "need l < n");
    if delta_prime >= missed_energy {
        return Err(Error::Precondition(format!(
            "delta_prime = {delta_prime} must be below the missed energy {missed_energy}"
        )));
    }
    let ratio = (missed_energy - delta_prime) / (missed_energy + sigma2);
    let exponent = F::of_usize(n - l) / F::of(4.0) * ratio * ratio;
    Ok((-exponent).exp())
}

/// One-sided bound on an extreme eigenvalue of (1/N) A_K^T A_K leaving
/// [(1 - sqrt(alpha) - eps)^2, (1 + sqrt(alpha) + eps)^2]; the two-sided
/// union bound is twice this value.
pub fn eig_deviation_bound<F: Real>(m: usize, alpha: F, beta: F, epsilon: F) -> F {
    assert!(alpha > F::zero() && epsilon >= F::zero());
    assert!(beta > F::of(2.0), "need beta > 2");
    let h = binary_entropy(beta.recip()).expect("1/beta in (0, 1)");
    let exponent =
        F::of(0.5) * F::of_usize(m) * (h.sqrt() / (alpha * beta).sqrt()) * epsilon;
    (-exponent).exp()
}

/// Subset-counting exponent
/// f(z) = L z log(e/z) + L z log((beta-1) e / z)
///        - C0 L ((L z mu^2 - delta') / (L z mu^2 + sigma^2))^2.
#[allow(clippy::too_many_arguments)]
pub fn f_exponent<F: Real>(
    z: F,
    l: usize,
    beta: F,
    c0: F,
    mu2: F,
    delta_prime: F,
    sigma2: F,
) -> Result<F> {
    if z <= F::zero() || z > F::one() {
        return Err(Error::Domain(format!("f_exponent needs z in (0, 1], got {z}")));
    }
    let lf = F::of_usize(l);
    let e = F::one().exp();
    let entropy_terms = lf * z * (e / z).ln() + lf * z * ((beta - F::one()) * e / z).ln();
    let ratio = (lf * z * mu2 - delta_prime) / (lf * z * mu2 + sigma2);
    Ok(entropy_terms - c0 * lf * ratio * ratio)
}

/// Closed forms of (f(1/L), f(1)).
pub fn f_endpoints<F: Real>(
    l: usize,
    beta: F,
    c0: F,
    mu2: F,
    delta_prime: F,
    sigma2: F,
) -> (F, F) {
    let lf = F::of_usize(l);
    let two = F::of(2.0);
    let log_bm1 = (beta - F::one()).ln();
    let r1 = (mu2 - delta_prime) / (mu2 + sigma2);
    let at_inv_l = two * lf.ln() + two + log_bm1 - c0 * lf * r1 * r1;
    let rl = (lf * mu2 - delta_prime) / (lf * mu2 + sigma2);
    let at_one = lf * (two + log_bm1) - c0 * lf * rl * rl;
    (at_inv_l, at_one)
}

/// The constant multiplying the impostor-typicality mass in the union
/// bound: (1 + (8a + 4 sqrt(2a))^2 / (1 - 2 sqrt(2a))^4) ||x||^2
///        + a sigma^2 / (1 - 2 sqrt(2a))^2. Requires 2 sqrt(2 alpha) < 1.
pub fn union_bound_constant<F: Real>(x_norm_sq: F, alpha: F, sigma2: F) -> Result<F> {
    let two_r2a = F::of(2.0) * (F::of(2.0) * alpha).sqrt();
    if two_r2a >= F::one() {
        return Err(Error::Singularity {
            alpha: alpha.as_f64(),
        });
    }
    let one = F::one();
    let num = F::of(8.0) * alpha + F::of(4.0) * (F::of(2.0) * alpha).sqrt();
    let den = one - two_r2a;
    let den2 = den * den;
    let den4 = den2 * den2;
    Ok((one + num * num / den4) * x_norm_sq + alpha * sigma2 / den2)
}

/// delta' = zeta mu^2 and delta = delta' (N - L) / N.
pub fn delta_from_zeta<F: Real>(zeta: F, mu: F, n: usize, l: usize) -> Result<(F, F)> {
    if zeta <= F::of(2.0 / 3.0) || zeta >= F::one() {
        return Err(Error::ZetaRange {
            zeta: zeta.as_f64(),
        });
    }
    assert!(l < n, "need l < n");
    assert!(mu > F::zero(), "need mu > 0");
    let delta_prime = zeta * mu * mu;
    let delta = delta_prime * F::of_usize(n - l) / F::of_usize(n);
    Ok((delta, delta_prime))
}

/// Operating-regime parameters for the decoder-matches-bound guarantee.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParams<F> {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sigma2: F,
    pub mu: F,
    pub kappa: F,
    pub zeta: F,
    pub epsilon: F,
    /// Finite-size floor for the sparsity-energy growth check
    /// L mu^4 >= threshold * log L; an asymptotic hypothesis has no
    /// canonical finite form, so the threshold is configurable.
    pub lmu4_threshold: F,
}

/// One regime hypothesis: name, verdict, and signed margin (nonnegative
/// margins pass for >=-style checks, strictly positive for >-style).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck<F> {
    pub name: String,
    pub pass: bool,
    pub margin: F,
}

/// Derived constants plus the full hypothesis checklist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<F> {
    pub c0: F,
    pub c1: F,
    pub c2: F,
    pub c_exponent: F,
    pub checks: Vec<RegimeCheck<F>>,
}

impl<F: Real> RegimeReport<F> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluate every hypothesis of the operating regime; failures are
/// reported with margins, never raised, so off-regime experiments can run.
pub fn validate_regime<F: Real>(params: &RegimeParams<F>, x_norm_sq: F) -> RegimeReport<F> {
    let n = F::of_usize(params.n);
    let l = F::of_usize(params.l);
    let m = F::of_usize(params.m);
    let alpha = l / n;
    let beta = m / l;
    let sigma4 = params.sigma2 * params.sigma2;
    let mu2 = params.mu * params.mu;

    let c0 = (n - l) / (F::of(4.0) * l);
    let c1 = F::of(18.0) * params.kappa * sigma4 + F::one();
    let c2 = F::of(9.0) + F::of(4.0) * (beta - F::one()).ln();
    let c_exponent = params.zeta * params.zeta * c0 / (F::of(2.0) * sigma4);

    let mut checks = Vec::new();
    let mut strict = |name: &str, margin: F| {
        checks.push(RegimeCheck {
            name: name.to_string(),
            pass: margin > F::zero(),
            margin,
        });
    };
    strict("beta_gt_2", beta - F::of(2.0));
    strict("n_gt_c_l", n / l - c1.max(c2));
    strict("alpha_lt_one_ninth", F::of(1.0 / 9.0) - alpha);
    strict("c_gt_kappa", c_exponent - params.kappa);
    let mut lenient = |name: &str, margin: F| {
        checks.push(RegimeCheck {
            name: name.to_string(),
            pass: margin >= F::zero(),
            margin,
        });
    };
    lenient(
        "sigma2_ge_2_zeta_mu2",
        params.sigma2 - F::of(2.0) * params.zeta * mu2,
    );
    lenient("x_norm_le_l_pow_kappa", l.powf(params.kappa) - x_norm_sq);
    // Difference form keeps the margin finite at L = 1 where log L = 0.
    lenient(
        "l_mu4_growth",
        l * mu2 * mu2 - params.lmu4_threshold * l.ln(),
    );

    RegimeReport {
        c0,
        c1,
        c2,
        c_exponent,
        checks,
    }
}
