//! Error metrics over SCL traces, metric-driven list-flip decoders, genie
//! oracles and LSTM feature extraction.
//!
//! Metrics are returned as one value per step of the trace, i.e. aligned with
//! [`DecodeTrace::positions`]. A smaller metric means the correct path was more
//! likely discarded at that index.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dl_decoders::FrameResult;
use crate::scl_decoder::{ca_scl_select, DecodeError, DecodeTrace, SclDecoder, SclOutput};

/// Default exponent of the exact error metric.
pub const DEFAULT_BETA: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlipError {
    #[error("flip budget must be positive")]
    ZeroBudget,
    #[error("flip budget {budget} exceeds the {available} candidate positions")]
    BudgetTooLarge { budget: usize, available: usize },
    #[error("feature depth j = {j} outside 1..={list_size}")]
    FeatureDepth { j: usize, list_size: usize },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Ordered list-flip positions for one SCL pass.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FlipPlan(Vec<usize>);

impl FlipPlan {
    pub fn empty() -> Self {
        FlipPlan(Vec::new())
    }

    pub fn single(position: usize) -> Self {
        FlipPlan(vec![position])
    }

    /// Two positions, sorted ascending.
    pub fn pair(a: usize, b: usize) -> Self {
        FlipPlan(vec![a.min(b), a.max(b)])
    }

    /// Positions as given; the decoder rejects non-increasing plans.
    pub fn from_positions(positions: Vec<usize>) -> Self {
        FlipPlan(positions)
    }

    /// This plan plus `position`, kept sorted.
    pub fn with(&self, position: usize) -> Self {
        let mut v = self.0.clone();
        if let Err(at) = v.binary_search(&position) {
            v.insert(at, position);
        }
        FlipPlan(v)
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.0.contains(&position)
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricVariant {
    /// Log-ratio of preserved to discarded path likelihoods.
    Exact,
    /// Sum of discarded minus sum of preserved metrics.
    Sum,
    /// `PM_{L+1} - PM_1`.
    Pm2,
}

impl std::str::FromStr for MetricVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "sum" => Ok(Self::Sum),
            "pm2" => Ok(Self::Pm2),
            other => Err(format!("unknown metric `{other}` (expected exact, sum or pm2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetricConfig {
    pub variant: MetricVariant,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_beta() -> f64 {
    DEFAULT_BETA
}

impl Default for ErrorMetricConfig {
    fn default() -> Self {
        ErrorMetricConfig { variant: MetricVariant::Exact, beta: DEFAULT_BETA }
    }
}

impl ErrorMetricConfig {
    pub fn new(variant: MetricVariant) -> Self {
        ErrorMetricConfig { variant, ..Default::default() }
    }
}

/// `log sum exp(xs)`, shifted by the maximum.
fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn error_metric_exact(trace: &DecodeTrace, beta: f64) -> Vec<f64> {
    let l = trace.list_size();
    (0..trace.len())
        .map(|s| {
            let m = trace.sorted_metrics(s);
            let kept = log_sum_exp(m[..l].iter().map(|v| -v));
            let dropped = log_sum_exp(m[l..].iter().map(|v| -v));
            kept - beta * dropped
        })
        .collect()
}

pub fn error_metric_sum(trace: &DecodeTrace) -> Vec<f64> {
    let l = trace.list_size();
    (0..trace.len())
        .map(|s| {
            let m = trace.sorted_metrics(s);
            m[l..].iter().sum::<f64>() - m[..l].iter().sum::<f64>()
        })
        .collect()
}

pub fn error_metric_pm2(trace: &DecodeTrace) -> Vec<f64> {
    let l = trace.list_size();
    (0..trace.len())
        .map(|s| {
            let m = trace.sorted_metrics(s);
            m[l] - m[0]
        })
        .collect()
}

pub fn error_metric(trace: &DecodeTrace, cfg: &ErrorMetricConfig) -> Vec<f64> {
    match cfg.variant {
        MetricVariant::Exact => error_metric_exact(trace, cfg.beta),
        MetricVariant::Sum => error_metric_sum(trace),
        MetricVariant::Pm2 => error_metric_pm2(trace),
    }
}

/// Step ordinals sorted by ascending metric, ties by ascending ordinal.
pub fn rank_by_metric(metric: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..metric.len()).collect();
    order.sort_by(|&a, &b| metric[a].total_cmp(&metric[b]).then(a.cmp(&b)));
    order
}

/// The `budget` positions with the smallest metric, most suspicious first.
/// `positions[k]` is the bit index of metric entry `k`.
pub fn build_flip_set_metric(metric: &[f64], positions: &[usize], budget: usize) -> Result<Vec<usize>, FlipError> {
    if budget == 0 {
        return Err(FlipError::ZeroBudget);
    }
    if budget > metric.len() {
        return Err(FlipError::BudgetTooLarge { budget, available: metric.len() });
    }
    Ok(rank_by_metric(metric).into_iter().take(budget).map(|k| positions[k]).collect())
}

/// Per-step path-metric features, `S` rows of `2j` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    width: usize,
    values: Vec<f64>,
}

impl FeatureSequence {
    pub fn from_rows(width: usize, values: Vec<f64>) -> Self {
        assert!(width > 0 && values.len().is_multiple_of(width));
        FeatureSequence { width, values }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn steps(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn step(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Row `i` is `(PM_{L+j}, ..., PM_{L+1}, PM_j, ..., PM_1)`, raw values.
pub fn extract_features(trace: &DecodeTrace, j: usize) -> Result<FeatureSequence, FlipError> {
    let l = trace.list_size();
    if j == 0 || j > l {
        return Err(FlipError::FeatureDepth { j, list_size: l });
    }
    let mut values = Vec::with_capacity(trace.len() * 2 * j);
    for s in 0..trace.len() {
        let m = trace.sorted_metrics(s);
        values.extend(m[l..l + j].iter().rev());
        values.extend(m[..j].iter().rev());
    }
    Ok(FeatureSequence { width: 2 * j, values })
}

pub(crate) fn frame_result(out: &SclOutput, dec: &SclDecoder, attempts: u32) -> FrameResult {
    let (path, pass) = ca_scl_select(&out.paths, dec.spec()).expect("SCL always yields at least one path");
    FrameResult { u: path.u.clone(), crc_pass: pass, attempts, flips_used: out.trace.plan().clone() }
}

/// Exhausted budget: report the initial CA-SCL decision.
pub(crate) fn give_up(initial: &SclOutput, dec: &SclDecoder, attempts: u32) -> FrameResult {
    let mut r = frame_result(initial, dec, attempts);
    r.crc_pass = false;
    r
}

/// Metric-driven SCLF with single flips. `attempts` counts the initial pass.
pub fn sclf1_metric_decode(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: usize,
    cfg: &ErrorMetricConfig,
) -> Result<FrameResult, FlipError> {
    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), None)?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass || budget == 0 {
        return Ok(first);
    }
    let metric = error_metric(&initial.trace, cfg);
    let flips = build_flip_set_metric(&metric, initial.trace.positions(), budget)?;
    let mut attempts = 1;
    for pos in flips {
        let out = dec.decode(channel_llrs, &FlipPlan::single(pos), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
    }
    Ok(give_up(&initial, dec, attempts))
}

/// Budgets of the nested two-flip search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sclf2Budget {
    /// Single-flip attempts.
    pub t1: usize,
    /// How many of the single-flip attempts seed a second flip.
    pub t2_outer: usize,
    /// Second flips tried per seed.
    pub t2_inner: usize,
}

impl Sclf2Budget {
    pub fn max_attempts(&self) -> usize {
        1 + self.t1 + self.t2_outer * self.t2_inner
    }
}

/// Metric-driven SCLF with up to two flips per pass.
///
/// Phase 2 recomputes the metric on the trace of the `t1`-th single-flip
/// attempt and only considers positions after that attempt's flip.
pub fn sclf2_metric_decode(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: Sclf2Budget,
    cfg: &ErrorMetricConfig,
) -> Result<FrameResult, FlipError> {
    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), None)?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass || budget.t1 == 0 {
        return Ok(first);
    }
    let metric = error_metric(&initial.trace, cfg);
    let flips = build_flip_set_metric(&metric, initial.trace.positions(), budget.t1)?;
    let mut attempts = 1;
    let mut seeds: Vec<(usize, DecodeTrace)> = Vec::with_capacity(budget.t2_outer);
    for &pos in &flips {
        let out = dec.decode(channel_llrs, &FlipPlan::single(pos), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
        if seeds.len() < budget.t2_outer {
            seeds.push((pos, out.trace));
        }
    }
    for (first_pos, trace) in seeds {
        let metric = error_metric(&trace, cfg);
        let second: Vec<usize> = rank_by_metric(&metric)
            .into_iter()
            .map(|k| trace.position(k))
            .filter(|&p| p > first_pos)
            .take(budget.t2_inner)
            .collect();
        for pos in second {
            let out = dec.decode(channel_llrs, &FlipPlan::pair(first_pos, pos), None)?;
            attempts += 1;
            let r = frame_result(&out, dec, attempts);
            if r.crc_pass {
                return Ok(r);
            }
        }
    }
    Ok(give_up(&initial, dec, attempts))
}

/// First competitive index at which the transmitted path was dropped under
/// `plan`, or `None` if it survived to the end.
pub fn genie_first_error(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    plan: &FlipPlan,
    true_u: &[u8],
) -> Result<Option<usize>, FlipError> {
    Ok(dec.decode(channel_llrs, plan, Some(true_u))?.trace.genie_loss())
}

/// Genie-aided SCLF: after each CRC failure, flip the index where the
/// transmitted path was actually lost, up to `max_flips` flips.
pub fn genie_sclf_decode(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    max_flips: usize,
    true_u: &[u8],
) -> Result<FrameResult, FlipError> {
    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), Some(true_u))?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass {
        return Ok(first);
    }
    let mut attempts = 1;
    let mut plan = FlipPlan::empty();
    let mut loss = initial.trace.genie_loss();
    for _ in 0..max_flips {
        let Some(pos) = loss else { break };
        plan = plan.with(pos);
        let out = dec.decode(channel_llrs, &plan, Some(true_u))?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
        loss = out.trace.genie_loss();
    }
    Ok(give_up(&initial, dec, attempts))
}
