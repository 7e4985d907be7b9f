//! Browser bindings for the polar-code decoders. Every export takes plain
//! numbers or strings and returns a JSON document.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sclf_core::flip_engine::{
    error_metric_exact, error_metric_pm2, error_metric_sum, rank_by_metric, sclf1_metric_decode, ErrorMetricConfig,
    FlipError, FlipPlan, MetricVariant,
};
use sclf_core::polar_code::{polarization_weight, CodeError, CodeSpec, CrcPoly};
use sclf_core::scl_decoder::{ca_scl_select, DecodeError, SclDecoder};
use sclf_core::sim_harness::channel::simulate_frame;
use sclf_core::sim_harness::{run_fer_with_models, CodeConfig, DecoderKind, SimConfig, SimError};
use sclf_core::dl_decoders::DlModels;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Flip(#[from] FlipError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Input(String),
}

fn build_spec(n: u32, k: usize, crc: &str) -> Result<CodeSpec, DemoError> {
    let crc_poly = match crc {
        "" | "none" => None,
        name => Some(name.parse::<CrcPoly>().map_err(|e| DemoError::Input(format!("crc {name:?}: {e}")))?),
    };
    if !(3..=10).contains(&n) {
        return Err(DemoError::Input(format!("n = {n} outside 3..=10")));
    }
    Ok(CodeConfig { n, k, crc_poly }.build()?)
}

#[derive(Serialize)]
struct CodeInfo {
    n: usize,
    k: usize,
    crc_bits: usize,
    weights: Vec<f64>,
    info_set: Vec<usize>,
    set_b: Vec<usize>,
}

pub fn code_info(n: u32, k: usize, crc: &str, list_size: usize) -> Result<String, DemoError> {
    let spec = build_spec(n, k, crc)?;
    let info = CodeInfo {
        n: spec.len(),
        k: spec.info_bits(),
        crc_bits: spec.crc_bits(),
        weights: (0..spec.len()).map(polarization_weight).collect(),
        info_set: spec.info_set().to_vec(),
        set_b: spec.set_b(list_size.max(1)).to_vec(),
    };
    Ok(serde_json::to_string(&info).expect("plain data serializes"))
}

#[derive(Serialize)]
struct FrameView {
    positions: Vec<usize>,
    exact: Vec<f64>,
    sum: Vec<f64>,
    pm2: Vec<f64>,
    initial_crc_pass: bool,
    initial_correct: bool,
    /// Step index where the transmitted path left the list.
    genie_step: Option<usize>,
    genie_rank_exact: Option<usize>,
    genie_rank_pm2: Option<usize>,
    sclf1_attempts: u32,
    sclf1_correct: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn trace_frame(
    n: u32,
    k: usize,
    crc: &str,
    list_size: usize,
    snr_db: f64,
    seed: u64,
    beta: f64,
    t: usize,
) -> Result<String, DemoError> {
    let spec = build_spec(n, k, crc)?;
    let frame = simulate_frame(&spec, snr_db, seed)?;
    let truth = &frame.message.u_vector;
    let mut dec = SclDecoder::new(&spec, list_size)?;
    let out = dec.decode(&frame.llrs, &FlipPlan::empty(), Some(truth))?;
    let (best, crc_pass) = ca_scl_select(&out.paths, &spec)?;
    let trace = &out.trace;
    let exact = error_metric_exact(trace, beta);
    let pm2 = error_metric_pm2(trace);
    let genie_step = trace.genie_loss().and_then(|pos| trace.positions().iter().position(|&p| p == pos));
    let rank_of = |metric: &[f64]| genie_step.and_then(|s| rank_by_metric(metric).iter().position(|&r| r == s));
    let mut cfg = ErrorMetricConfig::new(MetricVariant::Exact);
    cfg.beta = beta;
    let flipped = sclf1_metric_decode(&mut dec, &frame.llrs, t, &cfg)?;
    let view = FrameView {
        positions: trace.positions().to_vec(),
        genie_rank_exact: rank_of(&exact),
        genie_rank_pm2: rank_of(&pm2),
        sum: error_metric_sum(trace),
        exact,
        pm2,
        initial_crc_pass: crc_pass,
        initial_correct: &best.u == truth,
        genie_step,
        sclf1_attempts: flipped.attempts,
        sclf1_correct: &flipped.u == truth,
    };
    Ok(serde_json::to_string(&view).expect("plain data serializes"))
}

pub fn sweep(decoder: &str, snrs: &str, frames: u64, seed: u64, t: usize) -> Result<String, DemoError> {
    let kind = decoder.parse::<DecoderKind>().map_err(|e| DemoError::Input(e.to_string()))?;
    if kind.required_models() != (false, false, false) {
        return Err(DemoError::Input(format!("{kind} needs model files, which the demo does not load")));
    }
    let snr_db = snrs
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| DemoError::Input(format!("bad SNR {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cfg = SimConfig::new(kind, snr_db);
    cfg.max_frames = frames;
    cfg.min_frame_errors = 0;
    cfg.seed = seed;
    cfg.t = t.max(1);
    let report = run_fer_with_models(&cfg, &DlModels::default(), 256)?;
    Ok(serde_json::to_string(&report.points).expect("plain data serializes"))
}

fn js(r: Result<String, DemoError>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = codeInfo)]
pub fn code_info_js(n: u32, k: usize, crc: &str, list_size: usize) -> Result<String, JsError> {
    js(code_info(n, k, crc, list_size))
}

#[wasm_bindgen(js_name = traceFrame)]
#[allow(clippy::too_many_arguments)]
pub fn trace_frame_js(
    n: u32,
    k: usize,
    crc: &str,
    list_size: usize,
    snr_db: f64,
    seed: f64,
    beta: f64,
    t: usize,
) -> Result<String, JsError> {
    js(trace_frame(n, k, crc, list_size, snr_db, seed as u64, beta, t))
}

#[wasm_bindgen(js_name = sweep)]
pub fn sweep_js(decoder: &str, snrs: &str, frames: f64, seed: f64, t: usize) -> Result<String, JsError> {
    js(sweep(decoder, snrs, frames as u64, seed as u64, t))
}
