//! Batched projection kernel for the exhaustive subset scan.
//!
//! Up to [`LANES`] candidate supports are reduced together by an unpivoted
//! Householder QR whose state is laid out lane-contiguously, so every
//! inner loop vectorizes across candidates. Lanes never interact, which
//! makes the per-subset results independent of how subsets are grouped
//! into batches. A lane whose R diagonal comes within [`TRIGGER`] of the
//! rank tolerance is re-solved through the pivoted scalar factorization,
//! which is the code path that decides rank at the tolerance.
//!
//! The observation vector rides along as an extra trailing column, so the
//! reflector applications stream over one contiguous block in groups of
//! four, two, and one columns.

use crate::linalg::{cpqr, Mat};
use crate::scalar::Real;

pub(crate) const LANES: usize = 8;

/// Safety factor between the batched diagonal prefilter and the pivoted
/// rank decision.
const TRIGGER: f64 = 256.0;

#[derive(Clone, Copy, Debug)]
pub(crate) enum LaneVerdict<F> {
    Deviation(F),
    RankDeficient,
}

pub(crate) struct ScanWorkspace<F> {
    n: usize,
    l: usize,
    /// l subset columns followed by the observation column, each of n
    /// lane-vectors.
    w: Vec<[F; LANES]>,
}

impl<F: Real> ScanWorkspace<F> {
    pub fn new(n: usize, l: usize) -> Self {
        ScanWorkspace {
            n,
            l,
            w: vec![[F::zero(); LANES]; n * (l + 1)],
        }
    }

    /// Verdict for a single subset; identical to the batched result for
    /// that lane.
    pub fn single(
        &mut self,
        a: &Mat<F>,
        y: &[F],
        sigma2: F,
        rank_tol: F,
        subset: &[usize],
    ) -> LaneVerdict<F> {
        let mut out = [LaneVerdict::RankDeficient; LANES];
        self.batch(a, y, sigma2, rank_tol, subset, 1, &mut out);
        out[0]
    }

    /// Verdicts for `count` subsets packed as `count * l` column indices.
    /// Unused lanes replicate the last subset and are ignored.
    #[allow(clippy::too_many_arguments)]
    pub fn batch(
        &mut self,
        a: &Mat<F>,
        y: &[F],
        sigma2: F,
        rank_tol: F,
        subsets: &[usize],
        count: usize,
        out: &mut [LaneVerdict<F>; LANES],
    ) {
        let n = self.n;
        let l = self.l;
        debug_assert!((1..=LANES).contains(&count));
        debug_assert_eq!(subsets.len(), count * l);
        debug_assert_eq!(y.len(), n);
        if l > n {
            // More columns than rows can never have rank l.
            for v in out.iter_mut().take(count) {
                *v = LaneVerdict::RankDeficient;
            }
            return;
        }

        self.load(a, y, subsets, count);

        let mut diag_min = [F::infinity(); LANES];
        let mut diag_max = [F::zero(); LANES];

        for k in 0..l {
            let (vc, trailing) = {
                let (head, tail) = self.w.split_at_mut((k + 1) * n);
                (&head[k * n..], tail)
            };
            let sigma = sum_sq(&vc[k + 1..]);
            let x0 = vc[k];

            // Branchless per-lane reflector scalars; dead select arms may
            // produce NaN or inf and are discarded. The reflector vector
            // is kept unscaled (leading entry v1 instead of 1), with the
            // effective coefficient beta_e = 2 / (sigma + v1^2).
            let zero = F::zero();
            let mut beta = [zero; LANES];
            let mut v1 = [zero; LANES];
            let mut mu = [zero; LANES];
            for q in 0..LANES {
                mu[q] = (x0[q] * x0[q] + sigma[q]).sqrt();
            }
            for q in 0..LANES {
                let lo = x0[q] - mu[q];
                let hi = -sigma[q] / (x0[q] + mu[q]);
                let v = if x0[q] <= zero { lo } else { hi };
                let trivial = sigma[q] == zero;
                v1[q] = if trivial { zero } else { v };
                beta[q] = if trivial {
                    zero
                } else {
                    F::of(2.0) / (sigma[q] + v * v)
                };
                let d = if trivial { x0[q].abs() } else { mu[q] };
                diag_min[q] = diag_min[q].min(d);
                diag_max[q] = diag_max[q].max(d);
            }

            // Trailing subset columns plus the observation column.
            let mut rest = trailing;
            while rest.len() >= 4 * n {
                let (grp, r2) = rest.split_at_mut(4 * n);
                apply_reflector_x4(vc, grp, &beta, &v1, k, n);
                rest = r2;
            }
            if rest.len() >= 2 * n {
                let (grp, r2) = rest.split_at_mut(2 * n);
                apply_reflector_x2(vc, grp, &beta, &v1, k, n);
                rest = r2;
            }
            if !rest.is_empty() {
                apply_reflector(vc, rest, &beta, &v1, k);
            }
        }

        let res = sum_sq(&self.w[l * n + l..(l + 1) * n]);

        let nf = F::of_usize(n);
        let center = F::of_usize(n - l) * sigma2 / nf;
        let trigger = rank_tol * F::of(TRIGGER);
        for (lane, slot) in out.iter_mut().enumerate().take(count) {
            let suspicious = !(res[lane].is_finite() && diag_max[lane].is_finite())
                || diag_min[lane] <= trigger * diag_max[lane];
            *slot = if suspicious {
                match cpqr(a, &subsets[lane * l..(lane + 1) * l], rank_tol) {
                    Ok(f) => LaneVerdict::Deviation((f.residual_sq(y) / nf - center).abs()),
                    Err(_) => LaneVerdict::RankDeficient,
                }
            } else {
                LaneVerdict::Deviation((res[lane] / nf - center).abs())
            };
        }
    }

    fn load(&mut self, a: &Mat<F>, y: &[F], subsets: &[usize], count: usize) {
        let n = self.n;
        let l = self.l;
        // Lexicographically consecutive subsets usually differ only in the
        // last index; a column shared by the first and last lane is shared
        // by all of them and can be broadcast instead of gathered.
        for c in 0..l {
            let first = subsets[c];
            let shared = c + 1 < l && subsets[(count - 1) * l + c] == first;
            let dst = &mut self.w[c * n..(c + 1) * n];
            if shared || count == 1 {
                for (d, &v) in dst.iter_mut().zip(a.col(first)) {
                    *d = [v; LANES];
                }
            } else {
                let cols: [&[F]; LANES] = core::array::from_fn(|lane| {
                    let k = lane.min(count - 1);
                    a.col(subsets[k * l + c])
                });
                for (i, d) in dst.iter_mut().enumerate() {
                    for (lane, src) in cols.iter().enumerate() {
                        d[lane] = src[i];
                    }
                }
            }
        }
        for (ti, &yi) in self.w[l * n..(l + 1) * n].iter_mut().zip(y) {
            *ti = [yi; LANES];
        }
    }
}

// Four independent accumulator chains hide the FMA latency; every
// summation order below is fixed, so results do not depend on batching.

#[inline]
fn sum_sq<F: Real>(rows: &[[F; LANES]]) -> [F; LANES] {
    let mut acc = [[F::zero(); LANES]; 4];
    let mut it = rows.chunks_exact(4);
    for blk in &mut it {
        for u in 0..4 {
            let v = &blk[u];
            for q in 0..LANES {
                acc[u][q] += v[q] * v[q];
            }
        }
    }
    for (u, v) in it.remainder().iter().enumerate() {
        for q in 0..LANES {
            acc[u][q] += v[q] * v[q];
        }
    }
    let mut out = [F::zero(); LANES];
    for q in 0..LANES {
        out[q] = (acc[0][q] + acc[1][q]) + (acc[2][q] + acc[3][q]);
    }
    out
}

#[inline]
fn apply_reflector<F: Real>(
    vc: &[[F; LANES]],
    cc: &mut [[F; LANES]],
    beta: &[F; LANES],
    v1: &[F; LANES],
    k: usize,
) {
    let mut t0 = [F::zero(); LANES];
    let mut t1 = [F::zero(); LANES];
    {
        let va = &vc[k + 1..];
        let ca = &cc[k + 1..];
        let mut iv = va.chunks_exact(2);
        let mut ic = ca.chunks_exact(2);
        for (vb, cb) in (&mut iv).zip(&mut ic) {
            for q in 0..LANES {
                t0[q] += vb[0][q] * cb[0][q];
                t1[q] += vb[1][q] * cb[1][q];
            }
        }
        if let (Some(v), Some(c)) = (iv.remainder().first(), ic.remainder().first()) {
            for q in 0..LANES {
                t0[q] += v[q] * c[q];
            }
        }
    }
    let mut bt = [F::zero(); LANES];
    for q in 0..LANES {
        bt[q] = beta[q] * (v1[q] * cc[k][q] + (t0[q] + t1[q]));
    }
    for q in 0..LANES {
        cc[k][q] -= bt[q] * v1[q];
    }
    for (v, c) in vc[k + 1..].iter().zip(cc[k + 1..].iter_mut()) {
        for q in 0..LANES {
            c[q] -= bt[q] * v[q];
        }
    }
}

/// Reflector applied to two contiguous columns at once.
#[inline]
fn apply_reflector_x2<F: Real>(
    vc: &[[F; LANES]],
    grp: &mut [[F; LANES]],
    beta: &[F; LANES],
    v1: &[F; LANES],
    k: usize,
    n: usize,
) {
    debug_assert_eq!(grp.len(), 2 * n);
    let (g0, g1) = grp.split_at_mut(n);
    let va = &vc[k + 1..];
    let mut t0 = [F::zero(); LANES];
    let mut t1 = [F::zero(); LANES];
    for ((v, c0), c1) in va.iter().zip(&g0[k + 1..]).zip(&g1[k + 1..]) {
        for q in 0..LANES {
            t0[q] += v[q] * c0[q];
            t1[q] += v[q] * c1[q];
        }
    }
    let mut b0 = [F::zero(); LANES];
    let mut b1 = [F::zero(); LANES];
    for q in 0..LANES {
        b0[q] = beta[q] * (v1[q] * g0[k][q] + t0[q]);
        b1[q] = beta[q] * (v1[q] * g1[k][q] + t1[q]);
        g0[k][q] -= b0[q] * v1[q];
        g1[k][q] -= b1[q] * v1[q];
    }
    for ((v, c0), c1) in va
        .iter()
        .zip(g0[k + 1..].iter_mut())
        .zip(g1[k + 1..].iter_mut())
    {
        for q in 0..LANES {
            c0[q] -= b0[q] * v[q];
            c1[q] -= b1[q] * v[q];
        }
    }
}

/// Reflector applied to four contiguous columns at once: the reflector
/// vector is loaded once per row for four FMA chains.
#[inline]
fn apply_reflector_x4<F: Real>(
    vc: &[[F; LANES]],
    grp: &mut [[F; LANES]],
    beta: &[F; LANES],
    v1: &[F; LANES],
    k: usize,
    n: usize,
) {
    debug_assert_eq!(grp.len(), 4 * n);
    let (g0, r) = grp.split_at_mut(n);
    let (g1, r) = r.split_at_mut(n);
    let (g2, g3) = r.split_at_mut(n);
    let va = &vc[k + 1..];
    let mut t0 = [F::zero(); LANES];
    let mut t1 = [F::zero(); LANES];
    let mut t2 = [F::zero(); LANES];
    let mut t3 = [F::zero(); LANES];
    for ((((v, c0), c1), c2), c3) in va
        .iter()
        .zip(&g0[k + 1..])
        .zip(&g1[k + 1..])
        .zip(&g2[k + 1..])
        .zip(&g3[k + 1..])
    {
        for q in 0..LANES {
            t0[q] += v[q] * c0[q];
            t1[q] += v[q] * c1[q];
            t2[q] += v[q] * c2[q];
            t3[q] += v[q] * c3[q];
        }
    }
    let mut b0 = [F::zero(); LANES];
    let mut b1 = [F::zero(); LANES];
    let mut b2 = [F::zero(); LANES];
    let mut b3 = [F::zero(); LANES];
    for q in 0..LANES {
        b0[q] = beta[q] * (v1[q] * g0[k][q] + t0[q]);
        b1[q] = beta[q] * (v1[q] * g1[k][q] + t1[q]);
        b2[q] = beta[q] * (v1[q] * g2[k][q] + t2[q]);
        b3[q] = beta[q] * (v1[q] * g3[k][q] + t3[q]);
        g0[k][q] -= b0[q] * v1[q];
        g1[k][q] -= b1[q] * v1[q];
        g2[k][q] -= b2[q] * v1[q];
        g3[k][q] -= b3[q] * v1[q];
    }
    for ((((v, c0), c1), c2), c3) in va
        .iter()
        .zip(g0[k + 1..].iter_mut())
        .zip(g1[k + 1..].iter_mut())
        .zip(g2[k + 1..].iter_mut())
        .zip(g3[k + 1..].iter_mut())
    {
        for q in 0..LANES {
            c0[q] -= b0[q] * v[q];
            c1[q] -= b1[q] * v[q];
            c2[q] -= b2[q] * v[q];
            c3[q] -= b3[q] * v[q];
        }
    }
}

#[cfg(test)]
mod bench {
    use super::*;
    use crate::model::gen_gaussian_matrix;
    use std::time::Instant;

    #[test]
    #[ignore]
    fn phase_breakdown() {
        let (n, m, l) = (67usize, 48usize, 5usize);
        let a = gen_gaussian_matrix::<f64>(n, m, 1).unwrap().mat().clone();
        let y: Vec<f64> = gen_gaussian_matrix::<f64>(n, 1, 2)
            .unwrap()
            .mat()
            .col(0)
            .to_vec();
        let mut ws = ScanWorkspace::<f64>::new(n, l);
        let subsets: Vec<usize> = (0..LANES).flat_map(|k| k..k + l).collect();
        let mut out = [LaneVerdict::RankDeficient; LANES];
        let reps = 200_000u32;

        let t0 = Instant::now();
        for _ in 0..reps {
            ws.batch(&a, &y, 0.25, 1e-10, &subsets, LANES, &mut out);
        }
        let full = t0.elapsed();

        let t0 = Instant::now();
        for _ in 0..reps {
            ws.load(&a, &y, &subsets, LANES);
        }
        let load = t0.elapsed();
        println!(
            "full: {:?}/batch   load: {:?}/batch  ({:.0}% of full)",
            full / reps,
            load / reps,
            100.0 * load.as_secs_f64() / full.as_secs_f64()
        );
    }
}
