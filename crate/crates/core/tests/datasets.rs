use sclf_core::dl_decoders::MetricRanker;
use sclf_core::flip_engine::{ErrorMetricConfig, MetricVariant};
use sclf_core::polar_code::CodeSpec;
use sclf_core::scl_decoder::SclDecoder;
use sclf_core::sim_harness::dataset::{
    generate_dataset, read_split, DatasetConfig, DatasetKind, SampleGenerator, Split, RECORD_HEADER_BYTES,
};

fn small_config(kind: DatasetKind) -> DatasetConfig {
    let mut cfg = DatasetConfig::new(kind);
    cfg.train_count = 60;
    cfg.validation_count = 12;
    cfg.snr_db = vec![1.0, 1.5, 2.0];
    cfg.seed = 21;
    cfg
}

fn regenerate(cfg: &DatasetConfig, spec: &CodeSpec, snr: f64, seed: u64) -> Vec<sclf_core::sim_harness::dataset::Sample> {
    let ranker = MetricRanker::new(ErrorMetricConfig::new(MetricVariant::Pm2));
    let gen = SampleGenerator {
        spec,
        list_size: cfg.list_size,
        kind: cfg.kind,
        feature_depth: cfg.feature_depth,
        cfc_budget: cfg.cfc_budget,
        ranker: &ranker,
    };
    let mut dec = SclDecoder::new(spec, cfg.list_size).unwrap();
    gen.samples_for_frame(&mut dec, snr, seed).unwrap()
}

fn check_kind(kind: DatasetKind) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(kind);
    let spec = cfg.validate().unwrap();
    let s = spec.competitive_set(4).len();
    let (train, val) = generate_dataset(&cfg, &dir.path().join("ds")).unwrap();

    let (m, samples) = read_split(&train.manifest).unwrap();
    assert_eq!(m.kind, kind);
    assert_eq!(m.split, Split::Train);
    assert!(m.complete);
    assert_eq!(m.count, 60);
    assert_eq!(samples.len(), 60);
    assert_eq!((m.steps, m.width), (s, 2));
    assert_eq!(m.record_bytes, RECORD_HEADER_BYTES + 4 * s * 2);
    assert_eq!(m.snr_mix.iter().map(|x| x.samples).collect::<Vec<_>>(), vec![20, 20, 20]);
    assert_eq!(std::fs::metadata(&train.data).unwrap().len() as usize, 60 * m.record_bytes);

    for smp in &samples {
        assert_eq!(smp.features.len(), s * 2);
        match kind {
            DatasetKind::Cfc => assert!(smp.label <= 1),
            _ => assert!((smp.label as usize) < s),
        }
    }

    // Any record regenerates from its seed.
    for smp in samples.iter().step_by(7) {
        let snr = m.snr_mix.iter().map(|x| x.snr_db).find(|&v| v as f32 as f64 == smp.snr_db).unwrap();
        let again = regenerate(&cfg, &spec, snr, smp.frame_seed);
        assert!(again.iter().any(|r| r.features == smp.features && r.label == smp.label));
    }

    let (vm, vs) = read_split(&val.manifest).unwrap();
    assert_eq!(vm.split, Split::Validation);
    assert_eq!(vs.len(), 12);
    assert_ne!(vm.master_seed, m.master_seed);
    assert!(vs.iter().all(|v| samples.iter().all(|t| t.frame_seed != v.frame_seed)));
}

#[test]
fn flip1_dataset() {
    check_kind(DatasetKind::Flip1);
}

#[test]
fn flip2_dataset() {
    check_kind(DatasetKind::Flip2);
}

#[test]
fn cfc_dataset() {
    check_kind(DatasetKind::Cfc);
}

#[test]
fn flip1_labels_concentrate() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(DatasetKind::Flip1);
    cfg.train_count = 600;
    cfg.validation_count = 0;
    let (train, _) = generate_dataset(&cfg, &dir.path().join("ent")).unwrap();
    let (m, samples) = read_split(&train.manifest).unwrap();
    let mut hist = vec![0usize; m.steps];
    for s in &samples {
        hist[s.label as usize] += 1;
    }
    let n = samples.len() as f64;
    let entropy: f64 = hist.iter().filter(|&&c| c > 0).map(|&c| -(c as f64 / n) * (c as f64 / n).log2()).sum();
    assert!(entropy < (m.steps as f64).log2() - 0.5, "entropy {entropy}");
}

#[test]
fn frame_cap_gives_partial_split() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(DatasetKind::Flip2);
    cfg.snr_db = vec![3.0];
    cfg.max_frames_per_snr = 50;
    let (train, _) = generate_dataset(&cfg, &dir.path().join("cap")).unwrap();
    let (m, samples) = read_split(&train.manifest).unwrap();
    assert!(!m.complete);
    assert_eq!(samples.len(), m.count);
    assert!(m.count < 60);
}

#[test]
fn generation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(DatasetKind::Cfc);
    let (a, _) = generate_dataset(&cfg, &dir.path().join("a")).unwrap();
    let (b, _) = generate_dataset(&cfg, &dir.path().join("b")).unwrap();
    assert_eq!(std::fs::read(a.data).unwrap(), std::fs::read(b.data).unwrap());
}

#[test]
fn bad_configs() {
    let mut cfg = small_config(DatasetKind::Cfc);
    cfg.cfc_budget = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = small_config(DatasetKind::Flip1);
    cfg.feature_depth = 5;
    assert!(cfg.validate().is_err());
    cfg.feature_depth = 1;
    cfg.code.crc_poly = None;
    assert!(cfg.validate().is_err());
}
