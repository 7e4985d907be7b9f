mod common;

use proptest::prelude::*;
use sclf_core::dl_decoders::{ContinueCheck, FlipRanker, LstmCfcModel, LstmFlipModel};
use sclf_core::flip_engine::{extract_features, FeatureSequence, FlipPlan};
use sclf_core::nn_runtime::{
    flip_model_forward, load_model, lstm_cell_step, ArchDescriptor, LstmLayer, ModelError, ModelWeights,
};
use sclf_core::polar_code::{CodeSpec, CrcPoly};
use sclf_core::scl_decoder::decode_scl;
use sclf_core::sim_harness::channel::simulate_frame;

fn gate_strategy() -> impl Strategy<Value = [[f64; 3]; 4]> {
    prop::array::uniform4(prop::array::uniform3(-3.0f64..3.0))
}

proptest! {
    #[test]
    fn one_unit_step_matches_hand_formula(gates in gate_strategy(), x in -4.0f64..4.0, h in -1.0f64..1.0, c in -3.0f64..3.0) {
        let mut layer = LstmLayer::<f64>::zeros(1, 1);
        for (k, [w, u, b]) in gates.iter().enumerate() {
            layer.input[k].set(0, 0, *w);
            layer.recurrent[k].set(0, 0, *u);
            layer.bias[k][0] = *b;
        }
        let (h2, c2) = lstm_cell_step(&[x], &[h], &[c], &layer).unwrap();
        let (eh, ec) = common::lstm_unit_step(x, h, c, gates);
        prop_assert!((h2[0] - eh).abs() < 1e-12);
        prop_assert!((c2[0] - ec).abs() < 1e-12);
    }
}

#[test]
fn two_unit_sequence_matches_unrolled_oracle() {
    // Diagonal weights make each unit an independent one-unit LSTM.
    let gates = [[[0.3, -0.2, 0.1], [0.5, 0.4, 1.0], [-0.7, 0.9, 0.0], [0.2, 0.1, -0.3]], [
        [1.1, 0.0, -0.5],
        [-0.4, 0.6, 0.2],
        [0.8, -1.2, 0.3],
        [0.0, 0.5, 0.5],
    ]];
    let mut layer = LstmLayer::<f64>::zeros(2, 2);
    for (unit, g) in gates.iter().enumerate() {
        for (k, [w, u, b]) in g.iter().enumerate() {
            layer.input[k].set(unit, unit, *w);
            layer.recurrent[k].set(unit, unit, *u);
            layer.bias[k][unit] = *b;
        }
    }
    let xs = vec![vec![0.5, -1.0], vec![2.0, 0.25], vec![-0.75, 1.5]];
    let hs = layer.run(&xs).unwrap();
    for unit in 0..2 {
        let (mut h, mut c) = (0.0, 0.0);
        for (t, x) in xs.iter().enumerate() {
            (h, c) = common::lstm_unit_step(x[unit], h, c, gates[unit]);
            assert!((hs[t][unit] - h).abs() < 1e-12);
        }
    }
}

fn code128_trace_features() -> (FeatureSequence, sclf_core::scl_decoder::DecodeTrace) {
    let spec = CodeSpec::construct(7, 56, 8, Some(CrcPoly::CRC8)).unwrap();
    let f = simulate_frame(&spec, 1.0, 77).unwrap();
    let out = decode_scl(&f.llrs, &spec, 4, &FlipPlan::empty()).unwrap();
    (extract_features(&out.trace, 1).unwrap(), out.trace)
}

#[test]
fn zero_flip_model_scores_are_uniform_on_real_traces() {
    let (features, trace) = code128_trace_features();
    let m = ModelWeights::zeros(ArchDescriptor::flip(62, 2)).unwrap();
    let out = flip_model_forward(&m, &features).unwrap();
    assert_eq!(out.scores.len(), 62);
    assert!(out.scores.iter().all(|&s| s == 0.5));
    let ranker = LstmFlipModel::new(m).unwrap();
    assert_eq!(ranker.rank(&trace).unwrap(), (0..62).collect::<Vec<_>>());
    let cfc = LstmCfcModel::new(ModelWeights::zeros(ArchDescriptor::cfc(62, 2)).unwrap()).unwrap();
    assert!(!cfc.should_continue(&trace).unwrap());
}

#[test]
fn file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flip.json");
    let mut m = ModelWeights::zeros(ArchDescriptor::flip(62, 4)).unwrap();
    m.out.bias[7] = 0.75;
    m.lstm2.recurrent[1].set(3, 4, -0.125);
    m.input_offset = Some(vec![0.0, 1.0, 2.0, 3.0]);
    m.save(&path).unwrap();
    assert_eq!(load_model(&path).unwrap(), m);

    let missing = dir.path().join("nope.json");
    match load_model(&missing) {
        Err(ModelError::Io { path, .. }) => assert!(path.contains("nope.json")),
        other => panic!("unexpected {other:?}"),
    }

    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    v["tensors"]["lstm1.W_g"] = serde_json::json!(vec![vec![0.0; 4]; 61]);
    std::fs::write(&path, v.to_string()).unwrap();
    let err = load_model(&path).unwrap_err();
    assert!(err.to_string().contains("lstm1.W_g"), "{err}");

    let wrong_kind = LstmCfcModel::new(ModelWeights::zeros(ArchDescriptor::flip(8, 2)).unwrap());
    assert!(matches!(wrong_kind, Err(ModelError::WrongKind { .. })));
}

#[test]
fn ranking_breaks_ties_by_index() {
    let (features, _) = code128_trace_features();
    let mut m = ModelWeights::zeros(ArchDescriptor::flip(62, 2)).unwrap();
    m.out.bias[40] = 1.0;
    m.out.bias[3] = 1.0;
    m.out.bias[10] = -1.0;
    let r = flip_model_forward(&m, &features).unwrap().ranking;
    assert_eq!(&r[..3], &[3, 40, 0]);
    assert_eq!(r[61], 10);
}
