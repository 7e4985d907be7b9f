//! Labeled training data for the flip-1, flip-2 and CFC models.
//!
//! Each split is a pair of files: `<prefix>.<split>.bin` holding fixed-size
//! little-endian records and `<prefix>.<split>.json`, the manifest. A record is
//!
//! ```text
//! u64 frame_seed | f32 snr_db | f32 label | f32 features[steps * width]
//! ```
//!
//! with features stored step-major. `frame_seed` reproduces the frame exactly
//! through [`simulate_frame`](super::channel::simulate_frame).

use std::fmt;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::channel::{frame_seed, mix64, simulate_frame};
use super::{io_err, map_frames, with_workers, CodeConfig, SimError, DEFAULT_BATCH};
use crate::dl_decoders::{FlipRanker, LstmFlipModel, MetricRanker};
use crate::flip_engine::{extract_features, ErrorMetricConfig, FlipPlan, MetricVariant};
use crate::nn_runtime::load_model;
use crate::polar_code::{CodeSpec, CodeSpecFile};
use crate::scl_decoder::{ca_scl_select, DecodeTrace, SclDecoder};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Bytes before the features in every record.
pub const RECORD_HEADER_BYTES: usize = 16;

const VALIDATION_SALT: u64 = 0x5641_4C49_4441_5445;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Flip1,
    Flip2,
    Cfc,
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DatasetKind::Flip1 => "flip1",
            DatasetKind::Flip2 => "flip2",
            DatasetKind::Cfc => "cfc",
        })
    }
}

impl FromStr for DatasetKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flip1" => Ok(DatasetKind::Flip1),
            "flip2" => Ok(DatasetKind::Flip2),
            "cfc" => Ok(DatasetKind::Cfc),
            other => Err(format!("unknown dataset kind `{other}` (expected flip1, flip2 or cfc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }

    /// Master seed of this split's frame streams.
    pub fn master_seed(self, seed: u64) -> u64 {
        match self {
            Split::Train => seed,
            Split::Validation => mix64(seed ^ VALIDATION_SALT),
        }
    }
}

/// Which ordering picks the first flips whose failures become CFC samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingSource {
    MetricPm2,
    Flip1Model,
}

fn default_snrs() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 1.75, 2.0, 2.25]
}
fn default_train() -> usize {
    240_000
}
fn default_validation() -> usize {
    48_000
}
fn default_depth() -> usize {
    1
}
fn default_cfc_budget() -> usize {
    10
}
fn default_frame_cap() -> u64 {
    50_000_000
}
fn default_list_size() -> usize {
    4
}
fn default_seed() -> u64 {
    1
}
fn default_ranking() -> RankingSource {
    RankingSource::MetricPm2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default)]
    pub code: CodeConfig,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    pub kind: DatasetKind,
    #[serde(default = "default_snrs")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_train")]
    pub train_count: usize,
    #[serde(default = "default_validation")]
    pub validation_count: usize,
    /// `j`: each step carries `2j` path metrics.
    #[serde(default = "default_depth")]
    pub feature_depth: usize,
    /// First flips tried per frame when collecting CFC samples.
    #[serde(default = "default_cfc_budget")]
    pub cfc_budget: usize,
    #[serde(default = "default_ranking")]
    pub cfc_ranking: RankingSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip1_model: Option<PathBuf>,
    /// Frames simulated per SNR point before giving up on the quota.
    #[serde(default = "default_frame_cap")]
    pub max_frames_per_snr: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl DatasetConfig {
    pub fn new(kind: DatasetKind) -> Self {
        DatasetConfig {
            code: CodeConfig::default(),
            list_size: default_list_size(),
            kind,
            snr_db: default_snrs(),
            seed: default_seed(),
            train_count: default_train(),
            validation_count: default_validation(),
            feature_depth: default_depth(),
            cfc_budget: default_cfc_budget(),
            cfc_ranking: default_ranking(),
            flip1_model: None,
            max_frames_per_snr: default_frame_cap(),
            workers: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| SimError::ConfigParse { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<CodeSpec, SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.snr_db.is_empty() {
            return bad("snr_db list is empty".into());
        }
        if self.list_size == 0 || !self.list_size.is_power_of_two() {
            return bad(format!("list_size {} is not a power of two", self.list_size));
        }
        if self.feature_depth == 0 || self.feature_depth > self.list_size {
            return bad(format!("feature_depth {} outside 1..={}", self.feature_depth, self.list_size));
        }
        let spec = self.code.build()?;
        if spec.crc_poly().is_none() {
            return bad("datasets need a CRC to detect decoding failures".into());
        }
        let s = spec.competitive_set(self.list_size).len();
        if self.kind == DatasetKind::Cfc && (self.cfc_budget == 0 || self.cfc_budget > s) {
            return bad(format!("cfc_budget {} outside 1..={s}", self.cfc_budget));
        }
        if self.kind == DatasetKind::Cfc && self.cfc_ranking == RankingSource::Flip1Model && self.flip1_model.is_none()
        {
            return bad("cfc_ranking = flip1_model needs flip1_model".into());
        }
        Ok(spec)
    }
}

/// One labeled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frame_seed: u64,
    pub snr_db: f64,
    /// Step ordinal (flip kinds) or 0/1 (CFC).
    pub label: u32,
    /// `steps * width` values, step-major.
    pub features: Vec<f32>,
}

/// Turns simulated frames into samples of one kind.
pub struct SampleGenerator<'a> {
    pub spec: &'a CodeSpec,
    pub list_size: usize,
    pub kind: DatasetKind,
    pub feature_depth: usize,
    pub cfc_budget: usize,
    /// Ranking of first flips for CFC samples.
    pub ranker: &'a dyn FlipRanker,
}

fn flatten(f: &crate::flip_engine::FeatureSequence) -> Vec<f32> {
    f.values().iter().map(|&v| v as f32).collect()
}

impl SampleGenerator<'_> {
    pub fn steps(&self) -> usize {
        self.spec.competitive_set(self.list_size).len()
    }

    pub fn width(&self) -> usize {
        2 * self.feature_depth
    }

    /// All samples frame `seed` contributes at `snr_db`, in a fixed order.
    pub fn samples_for_frame(&self, dec: &mut SclDecoder, snr_db: f64, seed: u64) -> Result<Vec<Sample>, SimError> {
        let frame = simulate_frame(self.spec, snr_db, seed)?;
        let u = &frame.message.u_vector;
        let llrs = &frame.llrs;
        let initial = dec.decode(llrs, &FlipPlan::empty(), Some(u))?;
        if ca_scl_select(&initial.paths, self.spec)?.1 {
            return Ok(Vec::new());
        }
        let Some(e1) = initial.trace.genie_loss() else {
            return Ok(Vec::new());
        };
        let sample = |label: usize, trace: &DecodeTrace| -> Result<Sample, SimError> {
            Ok(Sample {
                frame_seed: seed,
                snr_db,
                label: label as u32,
                features: flatten(&extract_features(trace, self.feature_depth)?),
            })
        };
        let ordinal = |pos: usize| initial.trace.ordinal_of(pos).expect("genie losses lie in A \\ B");
        match self.kind {
            DatasetKind::Flip1 => Ok(vec![sample(ordinal(e1), &initial.trace)?]),
            DatasetKind::Flip2 => {
                let one = dec.decode(llrs, &FlipPlan::single(e1), Some(u))?;
                if ca_scl_select(&one.paths, self.spec)?.1 {
                    return Ok(Vec::new());
                }
                let Some(e2) = one.trace.genie_loss() else {
                    return Ok(Vec::new());
                };
                let two = dec.decode(llrs, &FlipPlan::pair(e1, e2), None)?;
                if !ca_scl_select(&two.paths, self.spec)?.1 {
                    return Ok(Vec::new());
                }
                Ok(vec![sample(ordinal(e2), &one.trace)?])
            }
            DatasetKind::Cfc => {
                let order = self.ranker.rank(&initial.trace)?;
                let mut out = Vec::new();
                for &k in order.iter().take(self.cfc_budget) {
                    let pos = initial.trace.position(k);
                    let attempt = dec.decode(llrs, &FlipPlan::single(pos), None)?;
                    if ca_scl_select(&attempt.paths, self.spec)?.1 {
                        break;
                    }
                    out.push(sample(usize::from(pos == e1), &attempt.trace)?);
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrShare {
    pub snr_db: f64,
    pub samples: usize,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub kind: DatasetKind,
    pub split: Split,
    /// File name of the records, relative to the manifest.
    pub data_file: String,
    pub count: usize,
    pub requested: usize,
    /// False when a frame cap stopped generation short of `requested`.
    pub complete: bool,
    pub steps: usize,
    pub width: usize,
    pub feature_depth: usize,
    pub record_bytes: usize,
    pub record_layout: String,
    pub feature_layout: String,
    pub code: CodeSpecFile,
    pub list_size: usize,
    pub seed: u64,
    pub master_seed: u64,
    pub snr_mix: Vec<SnrShare>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_source: Option<RankingSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfc_budget: Option<usize>,
}

/// Quota per SNR point; the remainder goes to the first points.
fn quotas(total: usize, points: usize) -> Vec<usize> {
    (0..points).map(|i| total / points + usize::from(i < total % points)).collect()
}

/// Generates one split in memory. Each SNR point fills its quota from its own
/// frame stream, in frame order.
pub fn generate_split(
    cfg: &DatasetConfig,
    generator: &SampleGenerator<'_>,
    split: Split,
    count: usize,
) -> Result<(Vec<Sample>, DatasetManifest), SimError> {
    let master = split.master_seed(cfg.seed);
    let mut samples = Vec::with_capacity(count);
    let mut mix = Vec::with_capacity(cfg.snr_db.len());
    for (si, (&snr, quota)) in cfg.snr_db.iter().zip(quotas(count, cfg.snr_db.len())).enumerate() {
        let mut got = Vec::with_capacity(quota);
        let mut frames = 0u64;
        while got.len() < quota && frames < cfg.max_frames_per_snr {
            let end = (frames + DEFAULT_BATCH as u64).min(cfg.max_frames_per_snr);
            let batch = map_frames(generator.spec, generator.list_size, frames..end, |dec, i| {
                generator.samples_for_frame(dec, snr, frame_seed(master, si, i))
            })?;
            for per_frame in batch {
                frames += 1;
                got.extend(per_frame.into_iter().take(quota - got.len()));
                if got.len() == quota {
                    break;
                }
            }
        }
        if got.len() < quota {
            log::warn!(
                "{} {}: only {} of {quota} samples at {snr} dB within {frames} frames",
                cfg.kind,
                split.name(),
                got.len()
            );
        }
        mix.push(SnrShare { snr_db: snr, samples: got.len(), frames });
        samples.extend(got);
    }
    let (steps, width) = (generator.steps(), generator.width());
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        kind: cfg.kind,
        split,
        data_file: String::new(),
        count: samples.len(),
        requested: count,
        complete: samples.len() == count,
        steps,
        width,
        feature_depth: cfg.feature_depth,
        record_bytes: RECORD_HEADER_BYTES + 4 * steps * width,
        record_layout: "u64 frame_seed, f32 snr_db, f32 label, f32 features[steps*width]; little-endian".into(),
        feature_layout: "step-major; row = (PM_{L+j}..PM_{L+1}, PM_j..PM_1), sorted candidate path metrics".into(),
        code: generator.spec.to_file(),
        list_size: generator.list_size,
        seed: cfg.seed,
        master_seed: master,
        snr_mix: mix,
        ranking_source: (cfg.kind == DatasetKind::Cfc).then_some(cfg.cfc_ranking),
        cfc_budget: (cfg.kind == DatasetKind::Cfc).then_some(cfg.cfc_budget),
    };
    Ok((samples, manifest))
}

pub fn encode_record(sample: &Sample, out: &mut Vec<u8>) {
    out.extend_from_slice(&sample.frame_seed.to_le_bytes());
    out.extend_from_slice(&(sample.snr_db as f32).to_le_bytes());
    out.extend_from_slice(&(sample.label as f32).to_le_bytes());
    for v in &sample.features {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn decode_record(bytes: &[u8]) -> Sample {
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    Sample {
        frame_seed: u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")),
        snr_db: f64::from(f32_at(8)),
        label: f32_at(12) as u32,
        features: (RECORD_HEADER_BYTES..bytes.len()).step_by(4).map(f32_at).collect(),
    }
}

/// Paths of a written split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitFiles {
    pub data: PathBuf,
    pub manifest: PathBuf,
}

pub fn split_files(prefix: &Path, split: Split) -> SplitFiles {
    let base = prefix.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let dir = prefix.parent().unwrap_or(Path::new(""));
    SplitFiles {
        data: dir.join(format!("{base}.{}.bin", split.name())),
        manifest: dir.join(format!("{base}.{}.json", split.name())),
    }
}

pub fn write_split(prefix: &Path, samples: &[Sample], manifest: &DatasetManifest) -> Result<SplitFiles, SimError> {
    let files = split_files(prefix, manifest.split);
    let mut manifest = manifest.clone();
    manifest.data_file = files.data.file_name().expect("has a file name").to_string_lossy().into_owned();

    let file = std::fs::File::create(&files.data).map_err(io_err(&files.data))?;
    let mut w = BufWriter::new(file);
    let mut buf = Vec::with_capacity(manifest.record_bytes);
    for s in samples {
        buf.clear();
        encode_record(s, &mut buf);
        debug_assert_eq!(buf.len(), manifest.record_bytes);
        w.write_all(&buf).map_err(io_err(&files.data))?;
    }
    w.flush().map_err(io_err(&files.data))?;

    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&files.manifest, json).map_err(io_err(&files.manifest))?;
    Ok(files)
}

/// Reads a split back through its manifest.
pub fn read_split(manifest_path: &Path) -> Result<(DatasetManifest, Vec<Sample>), SimError> {
    let text = std::fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| SimError::ConfigParse { path: manifest_path.display().to_string(), message: e.to_string() })?;
    if manifest.format_version != DATASET_FORMAT_VERSION {
        return Err(SimError::Config(format!("unsupported dataset format_version {}", manifest.format_version)));
    }
    let data = manifest_path.parent().unwrap_or(Path::new("")).join(&manifest.data_file);
    let mut bytes = Vec::new();
    std::fs::File::open(&data).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io_err(&data))?;
    if bytes.len() != manifest.count * manifest.record_bytes {
        return Err(SimError::Config(format!(
            "{} holds {} bytes, manifest promises {} records of {} bytes",
            data.display(),
            bytes.len(),
            manifest.count,
            manifest.record_bytes
        )));
    }
    let samples = bytes.chunks(manifest.record_bytes).map(decode_record).collect();
    Ok((manifest, samples))
}

/// Generates and writes both splits. Returns the train and validation files.
pub fn generate_dataset(cfg: &DatasetConfig, prefix: &Path) -> Result<(SplitFiles, SplitFiles), SimError> {
    let spec = cfg.validate()?;
    let metric = MetricRanker::new(ErrorMetricConfig::new(MetricVariant::Pm2));
    let model;
    let ranker: &dyn FlipRanker = match (cfg.kind, cfg.cfc_ranking, &cfg.flip1_model) {
        (DatasetKind::Cfc, RankingSource::Flip1Model, Some(path)) => {
            let loaded = load_model(path)
                .and_then(LstmFlipModel::new)
                .map_err(|source| SimError::ModelLoad { path: path.display().to_string(), source })?;
            model = loaded;
            let s = spec.competitive_set(cfg.list_size).len();
            if model.weights().seq_len() != s || model.weights().arch().input_dim != 2 * cfg.feature_depth {
                return Err(SimError::Config(format!("{} does not match S = {s}", path.display())));
            }
            &model
        }
        _ => &metric,
    };
    let generator = SampleGenerator {
        spec: &spec,
        list_size: cfg.list_size,
        kind: cfg.kind,
        feature_depth: cfg.feature_depth,
        cfc_budget: cfg.cfc_budget,
        ranker,
    };
    with_workers(cfg.workers, || {
        let mut out = Vec::with_capacity(2);
        for (split, count) in [(Split::Train, cfg.train_count), (Split::Validation, cfg.validation_count)] {
            let (samples, manifest) = generate_split(cfg, &generator, split, count)?;
            out.push(write_split(prefix, &samples, &manifest)?);
        }
        let val = out.pop().expect("two splits");
        Ok((out.pop().expect("two splits"), val))
    })?
}
