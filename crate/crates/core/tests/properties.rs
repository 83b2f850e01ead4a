//! Property-based invariants of the subspace kernels and the decoder.

mod common;

use proptest::prelude::*;

use jtdec::decoder::{joint_typicality_decode, DecoderConfig};
use jtdec::linalg::axpy;
use jtdec::model::{gen_gaussian_matrix, gen_sparse_signal, measure, AmplitudeRule};
use jtdec::subspace::{
    extreme_eigs_gram, ls_on_support, residual_sq_norm, SupportSet,
};

use common::norm_sq;

/// Pick a sorted subset of {0..m} of the given size from a seed.
fn seeded_subset(m: usize, size: usize, seed: u64) -> SupportSet {
    gen_sparse_signal::<f64>(m, size, 1.0, AmplitudeRule::Constant, seed)
        .unwrap()
        .support()
        .clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// || A_J c - y ||^2 equals the reported residual (Pythagoras).
    #[test]
    fn pythagoras(seed in 0u64..1000, n in 6usize..16, l in 1usize..4) {
        prop_assume!(l < n);
        let m = n + 4;
        let a = gen_gaussian_matrix::<f64>(n, m, seed).unwrap();
        let j = seeded_subset(m, l, seed ^ 0xfeed);
        let y: Vec<f64> = gen_gaussian_matrix::<f64>(n, 1, seed ^ 0xbeef)
            .unwrap().mat().col(0).to_vec();
        let r = residual_sq_norm(&a, &j, &y).unwrap();
        let c = ls_on_support(&a, &j, &y).unwrap();
        let mut fit = vec![0.0; n];
        for (k, &col) in j.iter().enumerate() {
            axpy(c[k], a.mat().col(col), &mut fit);
        }
        let direct: f64 = fit.iter().zip(&y).map(|(f, yi)| (f - yi) * (f - yi)).sum();
        prop_assert!((direct - r).abs() <= 1e-8 * (1.0 + direct.max(r)));
    }

    /// Projecting the residual changes nothing (idempotence).
    #[test]
    fn projection_idempotent(seed in 0u64..1000, n in 6usize..16, l in 1usize..4) {
        prop_assume!(l < n);
        let m = n + 2;
        let a = gen_gaussian_matrix::<f64>(n, m, seed).unwrap();
        let j = seeded_subset(m, l, seed ^ 0xabba);
        let y: Vec<f64> = gen_gaussian_matrix::<f64>(n, 1, seed ^ 0xcafe)
            .unwrap().mat().col(0).to_vec();
        let r1 = residual_sq_norm(&a, &j, &y).unwrap();
        // materialize the residual vector and project again
        let c = ls_on_support(&a, &j, &y).unwrap();
        let mut resid = y.clone();
        for (k, &col) in j.iter().enumerate() {
            axpy(-c[k], a.mat().col(col), &mut resid);
        }
        let r2 = residual_sq_norm(&a, &j, &resid).unwrap();
        prop_assert!((r2 - r1).abs() <= 1e-8 * (1.0 + r1));
    }

    /// Growing the support cannot grow the residual (monotonicity).
    #[test]
    fn residual_monotone_in_support(seed in 0u64..1000, n in 8usize..16) {
        let m = n + 4;
        let a = gen_gaussian_matrix::<f64>(n, m, seed).unwrap();
        let big = seeded_subset(m, 4, seed ^ 0x5151);
        let small = SupportSet::new(big.as_slice()[..2].to_vec()).unwrap();
        let y: Vec<f64> = gen_gaussian_matrix::<f64>(n, 1, seed ^ 0x1221)
            .unwrap().mat().col(0).to_vec();
        let r_small = residual_sq_norm(&a, &small, &y).unwrap();
        let r_big = residual_sq_norm(&a, &big, &y).unwrap();
        prop_assert!(r_big <= r_small + 1e-8 * norm_sq(&y));
    }

    /// Gram eigenvalue interlacing: a sub-support's extreme eigenvalues
    /// lie inside the super-support's.
    #[test]
    fn gram_eigs_interlace(seed in 0u64..1000, n in 10usize..20) {
        let m = n;
        let a = gen_gaussian_matrix::<f64>(n, m, seed).unwrap();
        let big = seeded_subset(m, 6, seed ^ 0x7777);
        let small = SupportSet::new(big.as_slice()[1..4].to_vec()).unwrap();
        let eb = extreme_eigs_gram(&a, &big).unwrap();
        let es = extreme_eigs_gram(&a, &small).unwrap();
        prop_assert!(eb.lambda_min <= es.lambda_min + 1e-8);
        prop_assert!(es.lambda_max <= eb.lambda_max + 1e-8);
    }

    /// Generators are bit-deterministic in their seed.
    #[test]
    fn generators_deterministic(seed in 0u64..5000) {
        let a1 = gen_gaussian_matrix::<f64>(5, 7, seed).unwrap();
        let a2 = gen_gaussian_matrix::<f64>(5, 7, seed).unwrap();
        for (x, y) in a1.mat().data().iter().zip(a2.mat().data()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        let s1 = gen_sparse_signal::<f64>(9, 3, 0.5, AmplitudeRule::UniformAboveMu, seed).unwrap();
        let s2 = gen_sparse_signal::<f64>(9, 3, 0.5, AmplitudeRule::UniformAboveMu, seed).unwrap();
        prop_assert_eq!(s1.support().as_slice(), s2.support().as_slice());
        for (x, y) in s1.values().iter().zip(s2.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(s1.sparsity(), 3);
        let mu_min = s1.support().iter().map(|&i| s1.values()[i].abs())
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!(mu_min, s1.mu());
    }

    /// Decoding is schedule independent: 1 thread and 4 threads give the
    /// identical result structure.
    #[test]
    fn decode_schedule_independent(seed in 0u64..200) {
        let (n, m, l) = (10usize, 9usize, 2usize);
        let a = gen_gaussian_matrix::<f64>(n, m, seed).unwrap();
        let x = gen_sparse_signal::<f64>(m, l, 1.0, AmplitudeRule::Constant, seed ^ 0x9f).unwrap();
        let inst = measure(a, x, 0.04, seed ^ 0xf9).unwrap();
        let config = DecoderConfig::with_delta(0.3);
        let decode = || joint_typicality_decode(
            &inst.matrix, &inst.observation, l, inst.sigma2, &config).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
            .install(decode);
        let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap()
            .install(decode);
        prop_assert_eq!(single, quad);
    }
}
