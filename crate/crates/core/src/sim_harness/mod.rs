//! Monte-Carlo FER/ADA estimation, configs and dataset export.

pub mod channel;
pub mod dataset;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dl_decoders::{
    dl_sclf1, dl_sclf2, dl_tp_sclf2, two_dim_dl_sclf2, DlError, DlModels, FrameResult, LstmCfcModel, LstmFlipModel,
};
use crate::flip_engine::{
    genie_sclf_decode, sclf1_metric_decode, sclf2_metric_decode, ErrorMetricConfig, FlipError, FlipPlan, MetricVariant,
    Sclf2Budget, DEFAULT_BETA,
};
use crate::nn_runtime::{load_model, ModelError};
use crate::polar_code::{CodeError, CodeSpec, CrcPoly};
use crate::scl_decoder::{ca_scl_select, DecodeError, SclDecoder};

use channel::{frame_seed, simulate_frame};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Frames simulated per parallel batch. Results never depend on it.
pub const DEFAULT_BATCH: usize = 1024;

pub const SNR_CONVENTION: &str = "Eb/N0 in dB with effective rate (K+C)/N";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: String, message: String },
    #[error("{kind} needs a {role} model (set models.{role})")]
    MissingModelPath { kind: DecoderKind, role: &'static str },
    #[error("cannot load model {path}: {source}")]
    ModelLoad { path: String, source: ModelError },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Flip(#[from] FlipError),
    #[error(transparent)]
    Dl(#[from] DlError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoderKind {
    #[serde(rename = "ca_scl")]
    CaScl,
    #[serde(rename = "sclf1_metric")]
    Sclf1Metric,
    #[serde(rename = "sclf2_metric")]
    Sclf2Metric,
    #[serde(rename = "genie1")]
    Genie1,
    #[serde(rename = "genie2")]
    Genie2,
    #[serde(rename = "dl_sclf1")]
    DlSclf1,
    #[serde(rename = "2d_dl_sclf2")]
    TwoDimDlSclf2,
    #[serde(rename = "dl_tp_sclf2")]
    DlTpSclf2,
    #[serde(rename = "dl_sclf2")]
    DlSclf2,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 9] = [
        DecoderKind::CaScl,
        DecoderKind::Sclf1Metric,
        DecoderKind::Sclf2Metric,
        DecoderKind::Genie1,
        DecoderKind::Genie2,
        DecoderKind::DlSclf1,
        DecoderKind::TwoDimDlSclf2,
        DecoderKind::DlTpSclf2,
        DecoderKind::DlSclf2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::CaScl => "ca_scl",
            DecoderKind::Sclf1Metric => "sclf1_metric",
            DecoderKind::Sclf2Metric => "sclf2_metric",
            DecoderKind::Genie1 => "genie1",
            DecoderKind::Genie2 => "genie2",
            DecoderKind::DlSclf1 => "dl_sclf1",
            DecoderKind::TwoDimDlSclf2 => "2d_dl_sclf2",
            DecoderKind::DlTpSclf2 => "dl_tp_sclf2",
            DecoderKind::DlSclf2 => "dl_sclf2",
        }
    }

    /// `(flip1, flip2, cfc)` requirements.
    pub fn required_models(self) -> (bool, bool, bool) {
        match self {
            DecoderKind::DlSclf1 => (true, false, false),
            DecoderKind::TwoDimDlSclf2 => (true, true, false),
            DecoderKind::DlTpSclf2 => (true, false, true),
            DecoderKind::DlSclf2 => (true, true, true),
            _ => (false, false, false),
        }
    }

    /// Largest number of SCL passes a frame may take.
    pub fn max_attempts(self, cfg: &SimConfig) -> usize {
        match self {
            DecoderKind::CaScl => 1,
            DecoderKind::Sclf1Metric | DecoderKind::DlSclf1 => 1 + cfg.t,
            DecoderKind::Genie1 => 2,
            DecoderKind::Genie2 => 3,
            DecoderKind::Sclf2Metric | DecoderKind::TwoDimDlSclf2 => cfg.sclf2_budget().max_attempts(),
            DecoderKind::DlTpSclf2 | DecoderKind::DlSclf2 => 1 + 2 * cfg.t,
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecoderKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<&str> = DecoderKind::ALL.iter().map(|k| k.name()).collect();
            format!("unknown decoder `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeConfig {
    /// `log2 N`.
    pub n: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crc_poly: Option<CrcPoly>,
}

impl CodeConfig {
    pub fn build(&self) -> Result<CodeSpec, CodeError> {
        CodeSpec::with_crc(self.n, self.k, self.crc_poly)
    }
}

impl Default for CodeConfig {
    fn default() -> Self {
        CodeConfig { n: 7, k: 56, crc_poly: Some(CrcPoly::CRC8) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip1: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip2: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfc: Option<PathBuf>,
}

fn default_list_size() -> usize {
    4
}
fn default_t() -> usize {
    10
}
fn default_t2() -> usize {
    5
}
fn default_min_errors() -> u64 {
    100
}
fn default_seed() -> u64 {
    1
}
fn default_max_frames() -> u64 {
    100_000
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_metric() -> MetricVariant {
    MetricVariant::Exact
}

/// Simulation settings. Loads from TOML; every field has a default except
/// the SNR list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default)]
    pub code: CodeConfig,
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    pub decoder: DecoderKind,
    #[serde(default = "default_metric")]
    pub metric: MetricVariant,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Flip budget `T`; `T1` of the nested two-flip decoders.
    #[serde(default = "default_t")]
    pub t: usize,
    #[serde(default = "default_t2")]
    pub t2_outer: usize,
    #[serde(default = "default_t2")]
    pub t2_inner: usize,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default = "default_min_errors")]
    pub min_frame_errors: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Worker threads; `None` uses all cores. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default)]
    pub models: ModelPaths,
}

impl SimConfig {
    pub fn new(decoder: DecoderKind, snr_db: Vec<f64>) -> Self {
        SimConfig {
            code: CodeConfig::default(),
            list_size: default_list_size(),
            decoder,
            metric: default_metric(),
            beta: DEFAULT_BETA,
            t: default_t(),
            t2_outer: default_t2(),
            t2_inner: default_t2(),
            snr_db,
            max_frames: default_max_frames(),
            min_frame_errors: default_min_errors(),
            seed: default_seed(),
            workers: None,
            models: ModelPaths::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::ConfigParse { path: "<inline>".into(), message: e.to_string() })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| SimError::ConfigParse { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn metric_config(&self) -> ErrorMetricConfig {
        ErrorMetricConfig { variant: self.metric, beta: self.beta }
    }

    pub fn sclf2_budget(&self) -> Sclf2Budget {
        Sclf2Budget { t1: self.t, t2_outer: self.t2_outer, t2_inner: self.t2_inner }
    }

    pub fn validate(&self) -> Result<CodeSpec, SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.max_frames == 0 {
            return bad("max_frames must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("snr_db list is empty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if self.list_size == 0 || !self.list_size.is_power_of_two() {
            return bad(format!("list_size {} is not a power of two", self.list_size));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        let spec = self.code.build()?;
        let s = spec.competitive_set(self.list_size).len();
        let uses_t = !matches!(self.decoder, DecoderKind::CaScl | DecoderKind::Genie1 | DecoderKind::Genie2);
        let limit = if self.decoder == DecoderKind::DlTpSclf2 { s.saturating_sub(1) } else { s };
        if uses_t && self.t > limit {
            return bad(format!("t = {} exceeds {limit} candidate positions", self.t));
        }
        Ok(spec)
    }
}

/// Models loaded once and shared read-only by all workers.
#[derive(Debug, Default)]
pub struct LoadedModels {
    pub flip1: Option<LstmFlipModel>,
    pub flip2: Option<LstmFlipModel>,
    pub cfc: Option<LstmCfcModel>,
}

impl LoadedModels {
    /// Loads exactly the models `cfg.decoder` needs.
    pub fn load(cfg: &SimConfig) -> Result<Self, SimError> {
        let (need1, need2, needc) = cfg.decoder.required_models();
        let kind = cfg.decoder;
        let path_of = |p: &Option<PathBuf>, role: &'static str| p.clone().ok_or(SimError::MissingModelPath { kind, role });
        let load = |path: PathBuf| {
            load_model(&path).map_err(|source| SimError::ModelLoad { path: path.display().to_string(), source })
        };
        let wrap = |path: &Path, e: ModelError| SimError::ModelLoad { path: path.display().to_string(), source: e };
        let mut out = LoadedModels::default();
        if need1 {
            let p = path_of(&cfg.models.flip1, "flip1")?;
            out.flip1 = Some(LstmFlipModel::new(load(p.clone())?).map_err(|e| wrap(&p, e))?);
        }
        if need2 {
            let p = path_of(&cfg.models.flip2, "flip2")?;
            out.flip2 = Some(LstmFlipModel::new(load(p.clone())?).map_err(|e| wrap(&p, e))?);
        }
        if needc {
            let p = path_of(&cfg.models.cfc, "cfc")?;
            out.cfc = Some(LstmCfcModel::new(load(p.clone())?).map_err(|e| wrap(&p, e))?);
        }
        Ok(out)
    }

    pub fn as_dl_models(&self) -> DlModels<'_> {
        DlModels {
            flip1: self.flip1.as_ref().map(|m| m as _),
            flip2: self.flip2.as_ref().map(|m| m as _),
            cfc: self.cfc.as_ref().map(|m| m as _),
        }
    }
}

/// Decodes one frame with `cfg.decoder`. `true_u` feeds the genie decoders.
pub fn decode_frame(
    cfg: &SimConfig,
    dec: &mut SclDecoder,
    llrs: &[f64],
    true_u: &[u8],
    models: &DlModels<'_>,
) -> Result<FrameResult, SimError> {
    Ok(match cfg.decoder {
        DecoderKind::CaScl => {
            let out = dec.decode(llrs, &FlipPlan::empty(), None)?;
            let (path, crc_pass) = ca_scl_select(&out.paths, dec.spec())?;
            FrameResult { u: path.u.clone(), crc_pass, attempts: 1, flips_used: FlipPlan::empty() }
        }
        DecoderKind::Sclf1Metric => sclf1_metric_decode(dec, llrs, cfg.t, &cfg.metric_config())?,
        DecoderKind::Sclf2Metric => sclf2_metric_decode(dec, llrs, cfg.sclf2_budget(), &cfg.metric_config())?,
        DecoderKind::Genie1 => genie_sclf_decode(dec, llrs, 1, true_u)?,
        DecoderKind::Genie2 => genie_sclf_decode(dec, llrs, 2, true_u)?,
        DecoderKind::DlSclf1 => dl_sclf1(dec, llrs, cfg.t, models)?,
        DecoderKind::TwoDimDlSclf2 => two_dim_dl_sclf2(dec, llrs, cfg.sclf2_budget(), models)?,
        DecoderKind::DlTpSclf2 => dl_tp_sclf2(dec, llrs, cfg.t, models)?,
        DecoderKind::DlSclf2 => dl_sclf2(dec, llrs, cfg.t, models)?,
    })
}

/// Per-frame record kept by the runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameOutcome {
    pub error: bool,
    pub attempts: u32,
    /// SCL passes the decoder executed for this frame.
    pub passes: u64,
}

/// Simulates frame `frame_index` of SNR point `snr_index`.
pub fn simulate_one(
    cfg: &SimConfig,
    spec: &CodeSpec,
    dec: &mut SclDecoder,
    models: &DlModels<'_>,
    snr_index: usize,
    frame_index: u64,
) -> Result<FrameOutcome, SimError> {
    let seed = frame_seed(cfg.seed, snr_index, frame_index);
    let frame = simulate_frame(spec, cfg.snr_db[snr_index], seed)?;
    let before = dec.passes();
    let r = decode_frame(cfg, dec, &frame.llrs, &frame.message.u_vector, models)?;
    let error = spec.message_of(&r.u) != frame.message.info_bits;
    Ok(FrameOutcome { error, attempts: r.attempts, passes: dec.passes() - before })
}

/// Wilson score interval at 95%.
pub fn wilson_interval(errors: u64, frames: u64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if errors == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if errors == frames { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Results for one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub snr_db: f64,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub ada: f64,
    pub attempts: u64,
    /// SCL passes executed; equals `attempts`.
    pub scl_passes: u64,
    pub fer_ci95: (f64, f64),
    pub wall_seconds: f64,
}

impl PointResult {
    fn from_counts(snr_db: f64, frames: u64, errors: u64, attempts: u64, passes: u64, wall: f64) -> Self {
        PointResult {
            snr_db,
            frames,
            errors,
            fer: errors as f64 / frames as f64,
            ada: attempts as f64 / frames as f64,
            attempts,
            scl_passes: passes,
            fer_ci95: wilson_interval(errors, frames),
            wall_seconds: wall,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub version: String,
    pub snr_convention: String,
    pub config: SimConfig,
    pub points: Vec<PointResult>,
}

#[derive(Serialize)]
struct CsvRow {
    snr_db: f64,
    frames: u64,
    errors: u64,
    fer: f64,
    ada: f64,
}

impl RunReport {
    /// Per-SNR CSV rows (`snr_db, frames, errors, fer, ada`). Deterministic:
    /// wall time is left out.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        for p in &self.points {
            wr.serialize(CsvRow { snr_db: p.snr_db, frames: p.frames, errors: p.errors, fer: p.fer, ada: p.ada })?;
        }
        wr.flush().map_err(|e| SimError::Csv(e.into()))?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs `work` on a pool of `workers` threads, or the global pool.
#[cfg(feature = "parallel")]
pub(crate) fn with_workers<R: Send>(workers: Option<usize>, work: impl FnOnce() -> R + Send) -> Result<R, SimError> {
    match workers {
        None => Ok(work()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SimError::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn with_workers<R: Send>(_workers: Option<usize>, work: impl FnOnce() -> R + Send) -> Result<R, SimError> {
    Ok(work())
}

/// Maps `f` over `range` with one decoder per worker, preserving order.
pub(crate) fn map_frames<T: Send>(
    spec: &CodeSpec,
    list_size: usize,
    range: std::ops::Range<u64>,
    f: impl Fn(&mut SclDecoder, u64) -> Result<T, SimError> + Sync + Send,
) -> Result<Vec<T>, SimError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        range
            .into_par_iter()
            .map_init(|| SclDecoder::new(spec, list_size).expect("list size validated"), |dec, i| f(dec, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut dec = SclDecoder::new(spec, list_size)?;
        range.map(|i| f(&mut dec, i)).collect()
    }
}

/// Clock that degrades to zero where `Instant` is unavailable.
pub(crate) struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    pub(crate) fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

/// Runs one SNR point. Frames are decoded in batches; the stopping rule is
/// applied in frame order, so it sees the same prefix for any worker count.
pub fn run_point(
    cfg: &SimConfig,
    spec: &CodeSpec,
    models: &DlModels<'_>,
    snr_index: usize,
    batch: usize,
) -> Result<PointResult, SimError> {
    let clock = Stopwatch::start();
    let (mut frames, mut errors, mut attempts, mut passes) = (0u64, 0u64, 0u64, 0u64);
    let batch = batch.max(1) as u64;
    'outer: while frames < cfg.max_frames {
        let end = (frames + batch).min(cfg.max_frames);
        let outcomes = map_frames(spec, cfg.list_size, frames..end, |dec, i| {
            simulate_one(cfg, spec, dec, models, snr_index, i)
        })?;
        for o in outcomes {
            frames += 1;
            errors += u64::from(o.error);
            attempts += u64::from(o.attempts);
            passes += o.passes;
            if cfg.min_frame_errors > 0 && errors >= cfg.min_frame_errors {
                break 'outer;
            }
        }
    }
    let snr = cfg.snr_db[snr_index];
    log::info!("{} at {snr} dB: {errors}/{frames} errors", cfg.decoder);
    Ok(PointResult::from_counts(snr, frames, errors, attempts, passes, clock.seconds()))
}

pub fn run_fer_with_models(cfg: &SimConfig, models: &DlModels<'_>, batch: usize) -> Result<RunReport, SimError> {
    let spec = cfg.validate()?;
    let points = with_workers(cfg.workers, || {
        (0..cfg.snr_db.len()).map(|i| run_point(cfg, &spec, models, i, batch)).collect::<Result<Vec<_>, _>>()
    })??;
    Ok(RunReport {
        format_version: REPORT_FORMAT_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        snr_convention: SNR_CONVENTION.to_string(),
        config: cfg.clone(),
        points,
    })
}

/// Loads the models named in `cfg` and runs every SNR point.
pub fn run_fer(cfg: &SimConfig) -> Result<RunReport, SimError> {
    cfg.validate()?;
    let models = LoadedModels::load(cfg)?;
    run_fer_with_models(cfg, &models.as_dl_models(), DEFAULT_BATCH)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoder_names_round_trip() {
        for k in DecoderKind::ALL {
            assert_eq!(k.name().parse::<DecoderKind>().unwrap(), k);
        }
        assert!("sclf3".parse::<DecoderKind>().is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(10, 1000);
        assert!(lo < 0.01 && 0.01 < hi);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.9 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_toml() {
        let cfg = SimConfig::from_toml("decoder = \"sclf1_metric\"\nsnr_db = [1.0, 2.0]\nmetric = \"pm2\"\n").unwrap();
        assert_eq!(cfg.decoder, DecoderKind::Sclf1Metric);
        assert_eq!(cfg.metric, MetricVariant::Pm2);
        assert_eq!(cfg.list_size, 4);
        assert_eq!(cfg.code, CodeConfig::default());
        assert_eq!(SimConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert!(SimConfig::from_toml("decoder = \"ca_scl\"\nsnr_db = [1.0]\nbogus = 1\n").is_err());
        assert!(SimConfig::from_toml("decoder = \"nope\"\nsnr_db = [1.0]\n").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = SimConfig::new(DecoderKind::CaScl, vec![]);
        assert!(cfg.validate().is_err());
        cfg.snr_db = vec![2.0];
        cfg.max_frames = 0;
        assert!(cfg.validate().is_err());
        cfg.max_frames = 10;
        cfg.list_size = 3;
        assert!(cfg.validate().is_err());
        cfg.list_size = 4;
        assert!(cfg.validate().is_ok());
        cfg.decoder = DecoderKind::Sclf1Metric;
        cfg.t = 63;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_model_path_is_reported() {
        let cfg = SimConfig::new(DecoderKind::DlSclf1, vec![2.0]);
        assert!(matches!(LoadedModels::load(&cfg), Err(SimError::MissingModelPath { role: "flip1", .. })));
        let mut cfg = cfg;
        cfg.models.flip1 = Some("/nonexistent/flip1.json".into());
        let err = LoadedModels::load(&cfg).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/flip1.json"));
    }

    #[test]
    fn ca_scl_small_run() {
        let mut cfg = SimConfig::new(DecoderKind::CaScl, vec![1.0, 3.0]);
        cfg.max_frames = 300;
        let r = run_fer_with_models(&cfg, &DlModels::default(), 64).unwrap();
        for p in &r.points {
            assert_eq!(p.ada, 1.0);
            assert_eq!(p.attempts, p.scl_passes);
            assert!(p.frames <= 300);
        }
        assert!(r.csv_string().starts_with("snr_db,frames,errors,fer,ada\n"));
    }

    #[test]
    fn batch_size_does_not_matter() {
        let mut cfg = SimConfig::new(DecoderKind::Sclf1Metric, vec![1.5]);
        cfg.max_frames = 400;
        cfg.min_frame_errors = 20;
        let a = run_fer_with_models(&cfg, &DlModels::default(), 7).unwrap();
        let b = run_fer_with_models(&cfg, &DlModels::default(), 1000).unwrap();
        assert_eq!(a.csv_string(), b.csv_string());
    }
}
