use sclf_core::dl_decoders::genie::{GenieContinue, GenieRanker};
use sclf_core::dl_decoders::{dl_sclf2, DlModels};
use sclf_core::sim_harness::channel::{bpsk_awgn_llrs, frame_rng, noise_variance};
use sclf_core::sim_harness::{run_fer, run_fer_with_models, DecoderKind, SimConfig};
use sclf_core::SclDecoder;

#[test]
fn llr_mean_matches_closed_form() {
    // E[LLR | x = 0] = 2 / sigma^2 and Var = 4 / sigma^2.
    let rate = 64.0 / 128.0;
    let snr = 1.0;
    let var = noise_variance(snr, rate);
    let zeros = vec![0u8; 1_000_000];
    let llrs = bpsk_awgn_llrs(&zeros, snr, rate, &mut frame_rng(99));
    let n = llrs.len() as f64;
    let mean = llrs.iter().sum::<f64>() / n;
    let se = (4.0 / var / n).sqrt();
    assert!((mean - 2.0 / var).abs() < 3.0 * se, "mean {mean} vs {}", 2.0 / var);
}

#[test]
fn ada_bounds_and_pass_tie_out() {
    for (kind, t) in [
        (DecoderKind::CaScl, 0),
        (DecoderKind::Sclf1Metric, 6),
        (DecoderKind::Sclf2Metric, 4),
        (DecoderKind::Genie1, 0),
        (DecoderKind::Genie2, 0),
    ] {
        let mut cfg = SimConfig::new(kind, vec![1.0, 2.0]);
        cfg.t = t.max(1);
        cfg.t2_outer = 2;
        cfg.t2_inner = 2;
        cfg.max_frames = 600;
        cfg.min_frame_errors = 0;
        let r = run_fer(&cfg).unwrap();
        for p in &r.points {
            assert_eq!(p.frames, 600);
            assert_eq!(p.attempts, p.scl_passes, "{kind}");
            let max = kind.max_attempts(&cfg) as f64;
            assert!(p.ada >= 1.0 && p.ada <= max, "{kind}: ADA {}", p.ada);
            if kind == DecoderKind::CaScl {
                assert_eq!(p.ada, 1.0);
            }
            assert!(p.fer_ci95.0 <= p.fer && p.fer <= p.fer_ci95.1);
        }
    }
}

#[test]
fn error_target_stops_early() {
    let mut cfg = SimConfig::new(DecoderKind::CaScl, vec![0.0]);
    cfg.max_frames = 10_000;
    cfg.min_frame_errors = 25;
    let p = &run_fer(&cfg).unwrap().points[0];
    assert_eq!(p.errors, 25);
    assert!(p.frames < 10_000);
}

#[test]
fn genie_stubs_plug_into_decoders() {
    let cfg = SimConfig::new(DecoderKind::CaScl, vec![1.0]);
    let spec = cfg.validate().unwrap();
    let mut dec = SclDecoder::new(&spec, 4).unwrap();
    let mut fails = 0;
    for i in 0..400 {
        let f = sclf_core::sim_harness::channel::simulate_frame(&spec, 1.0, i).unwrap();
        let u = &f.message.u_vector;
        let rank = GenieRanker::new(&spec, 4, &f.llrs, u);
        let go = GenieContinue::new(&spec, 4, &f.llrs, u);
        let models = DlModels { flip1: Some(&rank), flip2: Some(&rank), cfc: Some(&go) };
        let r = dl_sclf2(&mut dec, &f.llrs, 3, &models).unwrap();
        fails += usize::from(!r.crc_pass);
        assert!(r.attempts <= 7);
    }
    assert!(fails < 20, "{fails}");
}

#[test]
fn report_is_deterministic() {
    let mut cfg = SimConfig::new(DecoderKind::Genie1, vec![1.5]);
    cfg.max_frames = 800;
    let a = run_fer_with_models(&cfg, &DlModels::default(), 100).unwrap();
    cfg.workers = Some(2);
    let b = run_fer(&cfg).unwrap();
    assert_eq!(a.csv_string(), b.csv_string());
}
