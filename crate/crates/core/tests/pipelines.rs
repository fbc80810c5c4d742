//! End-to-end attacks against randomized sketches.

use sketchlab::ecc::Codec;
use sketchlab::estimator_attack::{attack_theorem5, DecoderConfig, EstimatorPlan, DEFAULT_Q};
use sketchlab::indicator_attack::{attack_amplified, simulate_index_protocol, theorem4_codec};
use sketchlab::rng::{random_bits, stream_rng};
use sketchlab::Builder;

#[test]
fn estimator_attack_survives_subsampling() {
    let (eps, delta, trials) = (0.01, 0.1, 20u64);
    let mut ok = 0;
    for seed in 0..trials {
        let plan = EstimatorPlan::new(2, 8, 2, 3, seed).unwrap();
        let cfg = DecoderConfig::for_n(plan.n, DEFAULT_Q);
        let msg = random_bits(plan.message_len(), &mut stream_rng(seed, 1));
        let out =
            attack_theorem5(&msg, &plan, eps, delta, &Builder::Subsample, &cfg, seed).unwrap();
        ok += out.exact() as u64;
    }
    assert!(ok as f64 >= (1.0 - delta) * trials as f64, "{ok}/{trials}");
}

#[test]
fn estimator_attack_with_quantized_answers() {
    let plan = EstimatorPlan::new(2, 8, 2, 3, 5).unwrap();
    let cfg = DecoderConfig::for_n(plan.n, DEFAULT_Q);
    let msg = random_bits(plan.message_len(), &mut stream_rng(5, 1));
    let out = attack_theorem5(&msg, &plan, 0.01, 0.1, &Builder::ReleaseAnswers, &cfg, 0).unwrap();
    assert!(out.exact());
    assert_eq!(out.sketch_bits, 56 * 7);
}

#[test]
fn amplified_attack_survives_subsampling() {
    let mut rng = stream_rng(9, 0);
    let cap = theorem4_codec(8, 2).unwrap().message_len();
    let mut ok = 0;
    for seed in 0..10 {
        let msgs: Vec<Vec<bool>> = (0..2).map(|_| random_bits(cap, &mut rng)).collect();
        ok += attack_amplified(&msgs, 8, 3, 0.01, 0.1, &Builder::Subsample, seed)
            .unwrap()
            .exact() as usize;
    }
    assert!(ok >= 9, "{ok}/10");
}

#[test]
fn index_protocol_with_subsample() {
    let mut rng = stream_rng(4, 0);
    let x = random_bits(16, &mut rng);
    let mut ok = 0;
    for y in 0..16 {
        let out =
            simulate_index_protocol(&x, y, 8, 2, 4, 8, 0.1, &Builder::Subsample, y as u64).unwrap();
        ok += (out.bit == x[y]) as usize;
    }
    assert!(ok >= 15, "{ok}/16");
}
