mod common;

use proptest::prelude::*;
use sclf_core::flip_engine::{
    error_metric_exact, error_metric_pm2, error_metric_sum, genie_first_error, genie_sclf_decode, rank_by_metric,
    sclf1_metric_decode, sclf2_metric_decode, ErrorMetricConfig, FlipPlan, MetricVariant, Sclf2Budget,
};
use sclf_core::polar_code::{CodeSpec, CrcPoly};
use sclf_core::scl_decoder::{decode_sc, ca_scl_select, DecodeError, DecodeTrace, SclDecoder};
use sclf_core::sim_harness::channel::{frame_seed, simulate_frame};

fn code128() -> CodeSpec {
    CodeSpec::construct(7, 56, 8, Some(CrcPoly::CRC8)).unwrap()
}

fn trace_strategy() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (0u32..=4).prop_flat_map(|b| {
        let l = 1usize << b;
        (Just(l), prop::collection::vec(prop::collection::vec(0.0f64..400.0, 2 * l), 1..6))
    })
}

proptest! {
    #[test]
    fn exact_metric_matches_high_precision((l, rows) in trace_strategy(), beta in 0.5f64..2.0) {
        let trace = DecodeTrace::from_metrics(l, (0..rows.len()).collect(), rows);
        let got = error_metric_exact(&trace, beta);
        for (s, &g) in got.iter().enumerate() {
            let want = common::exact_metric_oracle(trace.sorted_metrics(s), l, beta);
            prop_assert!((g - want).abs() <= 1e-9 * want.abs().max(1e-300), "step {s}: {g} vs {want}");
        }
    }

    #[test]
    fn sum_and_pm2_are_nonnegative((l, rows) in trace_strategy()) {
        let trace = DecodeTrace::from_metrics(l, (0..rows.len()).collect(), rows);
        prop_assert!(error_metric_sum(&trace).iter().all(|&v| v >= 0.0));
        prop_assert!(error_metric_pm2(&trace).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn exact_metric_shift_invariant_at_unit_beta((l, rows) in trace_strategy(), shift in 0.0f64..300.0) {
        let shifted: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
        let a = error_metric_exact(&DecodeTrace::from_metrics(l, (0..rows.len()).collect(), rows.clone()), 1.0);
        let b = error_metric_exact(&DecodeTrace::from_metrics(l, (0..rows.len()).collect(), shifted), 1.0);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn ranking_is_a_stable_permutation(metric in prop::collection::vec(-5i32..5, 0..80)) {
        let m: Vec<f64> = metric.iter().map(|&v| f64::from(v)).collect();
        let order = rank_by_metric(&m);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..m.len()).collect::<Vec<_>>());
        for w in order.windows(2) {
            prop_assert!(m[w[0]] < m[w[1]] || (m[w[0]] == m[w[1]] && w[0] < w[1]));
        }
    }
}

#[test]
fn sc_equals_list_of_one() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 1).unwrap();
    for i in 0..300 {
        let f = simulate_frame(&spec, 1.5, frame_seed(11, 0, i)).unwrap();
        let sc = decode_sc(&f.llrs, &spec).unwrap();
        let out = dec.decode(&f.llrs, &FlipPlan::empty(), None).unwrap();
        assert_eq!(out.paths.len(), 1);
        assert_eq!(out.paths[0].u, sc, "frame {i}");
    }
}

#[test]
fn trace_invariants_on_noisy_frames() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    for i in 0..100 {
        let f = simulate_frame(&spec, 1.0, frame_seed(5, 0, i)).unwrap();
        let out = dec.decode(&f.llrs, &FlipPlan::empty(), Some(&f.message.u_vector)).unwrap();
        let t = &out.trace;
        assert_eq!(t.positions(), spec.competitive_set(4));
        assert_eq!(t.set_b(), spec.set_b(4));
        for s in 0..t.len() {
            let m = t.sorted_metrics(s);
            assert!(m.windows(2).all(|w| w[0] <= w[1]));
            assert!(m.iter().all(|&v| v >= 0.0));
            let mut keys = t.candidate_keys(s).to_vec();
            keys.sort_unstable();
            assert_eq!(keys, (0..8).collect::<Vec<u32>>());
        }
        // Final path metrics are the last step's survivors, up to frozen-bit penalties.
        let last = t.survivor_metrics(t.len() - 1);
        assert!(out.paths.iter().zip(last).all(|(p, &m)| p.metric >= m));
        let alive = out.paths.iter().any(|p| p.is_reference);
        assert_eq!(alive, t.genie_loss().is_none());
    }
}

#[test]
fn flipping_the_genie_error_keeps_the_reference() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    let mut checked = 0;
    for i in 0..3000 {
        let f = simulate_frame(&spec, 1.0, frame_seed(6, 0, i)).unwrap();
        let u = &f.message.u_vector;
        let Some(e1) = genie_first_error(&mut dec, &f.llrs, &FlipPlan::empty(), u).unwrap() else { continue };
        let after = genie_first_error(&mut dec, &f.llrs, &FlipPlan::single(e1), u).unwrap();
        assert!(after.is_none_or(|e2| e2 > e1));
        // Flipping earlier than the loss drops the reference right there.
        if let Some(&early) = spec.competitive_set(4).iter().find(|&&p| p < e1) {
            let lost = genie_first_error(&mut dec, &f.llrs, &FlipPlan::single(early), u).unwrap();
            assert_eq!(lost, Some(early));
        }
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn decoders_return_initial_decision_on_exhaustion() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    let cfg = ErrorMetricConfig::new(MetricVariant::Sum);
    let mut exhausted = 0;
    for i in 0..2000 {
        let f = simulate_frame(&spec, 0.5, frame_seed(8, 0, i)).unwrap();
        let initial = dec.decode(&f.llrs, &FlipPlan::empty(), None).unwrap();
        let (first, _) = ca_scl_select(&initial.paths, &spec).unwrap();
        let r = sclf1_metric_decode(&mut dec, &f.llrs, 5, &cfg).unwrap();
        assert!(r.attempts >= 1 && r.attempts <= 6);
        if r.crc_pass {
            assert!(spec.crc_passes(&r.u));
        } else {
            assert_eq!(r.attempts, 6);
            assert_eq!(r.u, first.u);
            exhausted += 1;
        }
        let b = Sclf2Budget { t1: 4, t2_outer: 2, t2_inner: 3 };
        let r = sclf2_metric_decode(&mut dec, &f.llrs, b, &cfg).unwrap();
        if !r.crc_pass {
            assert_eq!(r.attempts as usize, b.max_attempts());
        }
        let g = genie_sclf_decode(&mut dec, &f.llrs, 2, &f.message.u_vector).unwrap();
        assert!(g.attempts <= 3);
    }
    assert!(exhausted > 0);
}

#[test]
fn attempts_match_pass_counter() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    let cfg = ErrorMetricConfig::default();
    let mut total = 0u64;
    for i in 0..500 {
        let f = simulate_frame(&spec, 1.0, frame_seed(9, 0, i)).unwrap();
        total += u64::from(sclf1_metric_decode(&mut dec, &f.llrs, 8, &cfg).unwrap().attempts);
    }
    assert_eq!(dec.passes(), total);
}

#[test]
fn plan_validation() {
    let spec = code128();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    let llrs = vec![1.0; 128];
    let frozen = spec.frozen_set()[0];
    let in_b = spec.set_b(4)[0];
    let a = spec.competitive_set(4)[3];
    let b = spec.competitive_set(4)[1];
    assert!(matches!(dec.decode(&llrs, &FlipPlan::single(frozen), None), Err(DecodeError::FlipOnFrozen(_))));
    assert!(matches!(dec.decode(&llrs, &FlipPlan::single(in_b), None), Err(DecodeError::FlipInSetB(_))));
    assert!(matches!(
        dec.decode(&llrs, &FlipPlan::from_positions(vec![a, b]), None),
        Err(DecodeError::FlipNotIncreasing(_))
    ));
    assert!(matches!(dec.decode(&llrs[..64], &FlipPlan::empty(), None), Err(DecodeError::LengthMismatch { .. })));
    assert!(SclDecoder::new(&spec, 3).is_err());
}
