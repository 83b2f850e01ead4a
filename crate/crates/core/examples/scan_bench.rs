use jtdec::decoder::{joint_typicality_decode, DecoderConfig};
use jtdec::model::{gen_gaussian_matrix, gen_sparse_signal, measure, AmplitudeRule};
use std::time::Instant;

fn main() {
    let (n, m, l) = (67usize, 48usize, 5usize);
    let a = gen_gaussian_matrix::<f64>(n, m, 1).unwrap();
    let x = gen_sparse_signal::<f64>(m, l, 1.0, AmplitudeRule::Constant, 2).unwrap();
    let inst = measure(a, x, 0.25, 3).unwrap();
    let config = DecoderConfig::with_zeta(0.8).resolve_slack(1.0, n, l).unwrap();
    let t0 = Instant::now();
    let r = joint_typicality_decode(&inst.matrix, &inst.observation, l, inst.sigma2, &config).unwrap();
    let dt = t0.elapsed();
    println!(
        "decode: {:?}  subsets={}  rate={:.2} Msubsets/s  typical={}  hit={}",
        dt,
        r.subsets_examined,
        r.subsets_examined as f64 / dt.as_secs_f64() / 1e6,
        r.typical_count,
        r.support.as_ref() == Some(inst.signal.support())
    );
}
