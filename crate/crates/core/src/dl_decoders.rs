//! DL-aided list-flip decoders.
//!
//! The decoders talk to models through two small traits so that trained
//! LSTMs, metric rankings and simulation-only genies are interchangeable:
//!
//! * [`FlipRanker`] orders the steps of `A \ B` from most to least suspicious.
//! * [`ContinueCheck`] decides whether a failed single flip deserves a second.
//!
//! Every SCL pass counts as one attempt; model calls are free.

use thiserror::Error;

use crate::flip_engine::{
    error_metric, extract_features, frame_result, give_up, rank_by_metric, ErrorMetricConfig, FlipError, FlipPlan,
    Sclf2Budget,
};
use crate::nn_runtime::{cfc_model_forward, flip_model_forward, ModelError, ModelKind, ModelWeights};
use crate::polar_code::CodeSpec;
use crate::scl_decoder::{DecodeError, DecodeTrace, SclDecoder};

/// Outcome of decoding one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameResult {
    /// Decoded `u` vector (N bits).
    pub u: Vec<u8>,
    pub crc_pass: bool,
    /// SCL passes spent, initial pass included.
    pub attempts: u32,
    /// Plan of the pass whose output is reported.
    pub flips_used: FlipPlan,
}

#[derive(Debug, Error)]
pub enum DlError {
    #[error("{algorithm} needs a {role} model")]
    MissingModel { algorithm: &'static str, role: &'static str },
    #[error("{role} model expects S = {model}, the code has S = {code}")]
    SeqLenMismatch { role: &'static str, model: usize, code: usize },
    #[error("budget T = {budget} exceeds {limit} for this code")]
    BudgetTooLarge { budget: usize, limit: usize },
    #[error("ranking is not a permutation prefix of 0..{steps}: {detail}")]
    BadRanking { steps: usize, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flip(#[from] FlipError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Orders the steps of a trace for flipping, most suspicious first.
pub trait FlipRanker: Send + Sync {
    /// Step ordinals into `trace.positions()`.
    fn rank(&self, trace: &DecodeTrace) -> Result<Vec<usize>, DlError>;

    /// Sequence length the ranker was built for, if fixed.
    fn seq_len(&self) -> Option<usize> {
        None
    }
}

/// Continue-flipping check on the trace of a failed single-flip pass.
pub trait ContinueCheck: Send + Sync {
    fn should_continue(&self, trace: &DecodeTrace) -> Result<bool, DlError>;

    fn seq_len(&self) -> Option<usize> {
        None
    }
}

/// Trained stacked-LSTM flip model (flip-1 or flip-2).
#[derive(Debug, Clone)]
pub struct LstmFlipModel {
    weights: ModelWeights,
}

impl LstmFlipModel {
    pub fn new(weights: ModelWeights) -> Result<Self, ModelError> {
        if weights.kind() != ModelKind::Flip {
            return Err(ModelError::WrongKind { expected: ModelKind::Flip, found: weights.kind() });
        }
        Ok(LstmFlipModel { weights })
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }
}

impl FlipRanker for LstmFlipModel {
    fn rank(&self, trace: &DecodeTrace) -> Result<Vec<usize>, DlError> {
        let f = extract_features(trace, self.weights.arch().input_dim / 2)?;
        Ok(flip_model_forward(&self.weights, &f)?.ranking)
    }

    fn seq_len(&self) -> Option<usize> {
        Some(self.weights.seq_len())
    }
}

/// Trained stacked-LSTM continue-flipping check.
#[derive(Debug, Clone)]
pub struct LstmCfcModel {
    weights: ModelWeights,
}

impl LstmCfcModel {
    pub fn new(weights: ModelWeights) -> Result<Self, ModelError> {
        if weights.kind() != ModelKind::Cfc {
            return Err(ModelError::WrongKind { expected: ModelKind::Cfc, found: weights.kind() });
        }
        Ok(LstmCfcModel { weights })
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }
}

impl ContinueCheck for LstmCfcModel {
    fn should_continue(&self, trace: &DecodeTrace) -> Result<bool, DlError> {
        let f = extract_features(trace, self.weights.arch().input_dim / 2)?;
        Ok(cfc_model_forward(&self.weights, &f)?.continue_flipping)
    }

    fn seq_len(&self) -> Option<usize> {
        Some(self.weights.seq_len())
    }
}

/// Stub ranker ordering steps by an error metric instead of a model.
#[derive(Debug, Clone, Copy, Default)]
pub struct MetricRanker {
    pub metric: ErrorMetricConfig,
}

impl MetricRanker {
    pub fn new(metric: ErrorMetricConfig) -> Self {
        MetricRanker { metric }
    }
}

impl FlipRanker for MetricRanker {
    fn rank(&self, trace: &DecodeTrace) -> Result<Vec<usize>, DlError> {
        Ok(rank_by_metric(&error_metric(trace, &self.metric)))
    }
}

/// Continue-check stub with a fixed answer.
#[derive(Debug, Clone, Copy)]
pub struct ConstantContinue(pub bool);

impl ContinueCheck for ConstantContinue {
    fn should_continue(&self, _trace: &DecodeTrace) -> Result<bool, DlError> {
        Ok(self.0)
    }
}

/// Simulation-only stubs that know the transmitted `u`.
pub mod genie {
    use super::*;

    /// Loss index of the transmitted path when decoding under `plan`.
    fn loss_under(
        spec: &CodeSpec,
        list_size: usize,
        llrs: &[f64],
        true_u: &[u8],
        plan: &FlipPlan,
    ) -> Result<Option<usize>, DlError> {
        let mut dec = SclDecoder::new(spec, list_size)?;
        Ok(dec.decode(llrs, plan, Some(true_u))?.trace.genie_loss())
    }

    /// Ranks the true loss positions first: the loss under the trace's own
    /// plan, then the loss once that position is also flipped. All other
    /// steps follow in ascending order.
    #[derive(Debug, Clone)]
    pub struct GenieRanker {
        spec: CodeSpec,
        list_size: usize,
        llrs: Vec<f64>,
        true_u: Vec<u8>,
    }

    impl GenieRanker {
        pub fn new(spec: &CodeSpec, list_size: usize, llrs: &[f64], true_u: &[u8]) -> Self {
            GenieRanker { spec: spec.clone(), list_size, llrs: llrs.to_vec(), true_u: true_u.to_vec() }
        }
    }

    impl FlipRanker for GenieRanker {
        fn rank(&self, trace: &DecodeTrace) -> Result<Vec<usize>, DlError> {
            let mut plan = trace.plan().clone();
            let mut head = Vec::with_capacity(2);
            for _ in 0..2 {
                let Some(pos) = loss_under(&self.spec, self.list_size, &self.llrs, &self.true_u, &plan)? else {
                    break;
                };
                head.extend(trace.ordinal_of(pos));
                plan = plan.with(pos);
            }
            let rest = (0..trace.len()).filter(|k| !head.contains(k));
            Ok(head.iter().copied().chain(rest).collect())
        }
    }

    /// Continues iff the transmitted path is still alive after the last flip.
    #[derive(Debug, Clone)]
    pub struct GenieContinue {
        spec: CodeSpec,
        list_size: usize,
        llrs: Vec<f64>,
        true_u: Vec<u8>,
    }

    impl GenieContinue {
        pub fn new(spec: &CodeSpec, list_size: usize, llrs: &[f64], true_u: &[u8]) -> Self {
            GenieContinue { spec: spec.clone(), list_size, llrs: llrs.to_vec(), true_u: true_u.to_vec() }
        }
    }

    impl ContinueCheck for GenieContinue {
        fn should_continue(&self, trace: &DecodeTrace) -> Result<bool, DlError> {
            let loss = loss_under(&self.spec, self.list_size, &self.llrs, &self.true_u, trace.plan())?;
            Ok(match (loss, trace.plan().last()) {
                (None, _) => true,
                (Some(l), Some(f)) => l > f,
                (Some(_), None) => false,
            })
        }
    }
}

/// Models available to the DL decoders. Which ones are required depends on
/// the algorithm.
#[derive(Clone, Copy, Default)]
pub struct DlModels<'a> {
    pub flip1: Option<&'a dyn FlipRanker>,
    pub flip2: Option<&'a dyn FlipRanker>,
    pub cfc: Option<&'a dyn ContinueCheck>,
}

impl<'a> DlModels<'a> {
    fn flip1(&self, algorithm: &'static str, s: usize) -> Result<&'a dyn FlipRanker, DlError> {
        let m = self.flip1.ok_or(DlError::MissingModel { algorithm, role: "flip-1" })?;
        check_seq_len("flip-1", m.seq_len(), s)?;
        Ok(m)
    }

    fn flip2(&self, algorithm: &'static str, s: usize) -> Result<&'a dyn FlipRanker, DlError> {
        let m = self.flip2.ok_or(DlError::MissingModel { algorithm, role: "flip-2" })?;
        check_seq_len("flip-2", m.seq_len(), s)?;
        Ok(m)
    }

    fn cfc(&self, algorithm: &'static str, s: usize) -> Result<&'a dyn ContinueCheck, DlError> {
        let m = self.cfc.ok_or(DlError::MissingModel { algorithm, role: "cfc" })?;
        check_seq_len("cfc", m.seq_len(), s)?;
        Ok(m)
    }
}

fn check_seq_len(role: &'static str, model: Option<usize>, code: usize) -> Result<(), DlError> {
    match model {
        Some(m) if m != code => Err(DlError::SeqLenMismatch { role, model: m, code }),
        _ => Ok(()),
    }
}

fn check_budget(budget: usize, limit: usize) -> Result<(), DlError> {
    if budget > limit {
        return Err(DlError::BudgetTooLarge { budget, limit });
    }
    Ok(())
}

fn steps(dec: &SclDecoder) -> usize {
    dec.spec().competitive_set(dec.list_size()).len()
}

/// Ranking as bit positions, after checking it is duplicate-free and in range.
fn ranked_positions(ranker: &dyn FlipRanker, trace: &DecodeTrace) -> Result<Vec<usize>, DlError> {
    let order = ranker.rank(trace)?;
    let s = trace.len();
    let mut seen = vec![false; s];
    for &k in &order {
        if k >= s || seen[k] {
            return Err(DlError::BadRanking { steps: s, detail: format!("ordinal {k} out of range or repeated") });
        }
        seen[k] = true;
    }
    Ok(order.into_iter().map(|k| trace.position(k)).collect())
}

fn need(positions: &[usize], n: usize, s: usize) -> Result<(), DlError> {
    if positions.len() < n {
        return Err(DlError::BadRanking { steps: s, detail: format!("{} entries, need {n}", positions.len()) });
    }
    Ok(())
}

/// DL-aided SCLF-1: single flips in flip-1 rank order.
pub fn dl_sclf1(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: usize,
    models: &DlModels<'_>,
) -> Result<FrameResult, DlError> {
    let s = steps(dec);
    let flip1 = models.flip1("dl_sclf1", s)?;
    check_budget(budget, s)?;
    Ok(single_flip_phase(dec, channel_llrs, budget, flip1, 0)?.0)
}

/// Runs CA-SCL and up to `budget` single flips. On failure returns the
/// give-up result together with the first `keep` failed traces.
#[allow(clippy::type_complexity)]
fn single_flip_phase(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: usize,
    flip1: &dyn FlipRanker,
    keep: usize,
) -> Result<(FrameResult, Vec<(usize, DecodeTrace)>), DlError> {
    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), None)?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass || budget == 0 {
        return Ok((first, Vec::new()));
    }
    let flips = ranked_positions(flip1, &initial.trace)?;
    need(&flips, budget, initial.trace.len())?;
    let mut attempts = 1;
    let mut kept = Vec::with_capacity(keep);
    for &pos in &flips[..budget] {
        let out = dec.decode(channel_llrs, &FlipPlan::single(pos), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok((r, Vec::new()));
        }
        if kept.len() < keep {
            kept.push((pos, out.trace));
        }
    }
    Ok((give_up(&initial, dec, attempts), kept))
}

/// Two-dimension DL-aided SCLF-2: flip-1 phase, then flip-2 second positions
/// for each of the first `t2_outer` failed single flips.
pub fn two_dim_dl_sclf2(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: Sclf2Budget,
    models: &DlModels<'_>,
) -> Result<FrameResult, DlError> {
    let s = steps(dec);
    let flip1 = models.flip1("2d_dl_sclf2", s)?;
    let flip2 = models.flip2("2d_dl_sclf2", s)?;
    check_budget(budget.t1, s)?;
    let (phase1, seeds) = single_flip_phase(dec, channel_llrs, budget.t1, flip1, budget.t2_outer)?;
    if phase1.crc_pass || seeds.is_empty() || budget.t2_inner == 0 {
        return Ok(phase1);
    }
    let mut attempts = phase1.attempts;
    for (first, trace) in seeds {
        let second: Vec<usize> =
            ranked_positions(flip2, &trace)?.into_iter().filter(|&p| p > first).take(budget.t2_inner).collect();
        for pos in second {
            let out = dec.decode(channel_llrs, &FlipPlan::pair(first, pos), None)?;
            attempts += 1;
            let r = frame_result(&out, dec, attempts);
            if r.crc_pass {
                return Ok(r);
            }
        }
    }
    Ok(FrameResult { attempts, ..phase1 })
}

/// DL-aided two-phase SCLF-2: after each failed single flip `f_t`, the CFC
/// may trigger the pair `(f_t, f_{t+1})` from the initial ranking.
pub fn dl_tp_sclf2(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: usize,
    models: &DlModels<'_>,
) -> Result<FrameResult, DlError> {
    let s = steps(dec);
    let flip1 = models.flip1("dl_tp_sclf2", s)?;
    let cfc = models.cfc("dl_tp_sclf2", s)?;
    check_budget(budget, s.saturating_sub(1))?;

    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), None)?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass || budget == 0 {
        return Ok(first);
    }
    let flips = ranked_positions(flip1, &initial.trace)?;
    need(&flips, budget + 1, initial.trace.len())?;
    let mut attempts = 1;
    for t in 0..budget {
        let out = dec.decode(channel_llrs, &FlipPlan::single(flips[t]), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
        if cfc.should_continue(&out.trace)? {
            let out = dec.decode(channel_llrs, &FlipPlan::pair(flips[t], flips[t + 1]), None)?;
            attempts += 1;
            let r = frame_result(&out, dec, attempts);
            if r.crc_pass {
                return Ok(r);
            }
        }
    }
    Ok(give_up(&initial, dec, attempts))
}

/// DL-aided SCLF-2: after each failed single flip `f_t`, the CFC may trigger
/// a flip-2 pick `f*_t > f_t` on that same failed trace.
pub fn dl_sclf2(
    dec: &mut SclDecoder,
    channel_llrs: &[f64],
    budget: usize,
    models: &DlModels<'_>,
) -> Result<FrameResult, DlError> {
    let s = steps(dec);
    let flip1 = models.flip1("dl_sclf2", s)?;
    let flip2 = models.flip2("dl_sclf2", s)?;
    let cfc = models.cfc("dl_sclf2", s)?;
    check_budget(budget, s)?;

    let initial = dec.decode(channel_llrs, &FlipPlan::empty(), None)?;
    let first = frame_result(&initial, dec, 1);
    if first.crc_pass || budget == 0 {
        return Ok(first);
    }
    let flips = ranked_positions(flip1, &initial.trace)?;
    need(&flips, budget, initial.trace.len())?;
    let mut attempts = 1;
    for &ft in &flips[..budget] {
        let out = dec.decode(channel_llrs, &FlipPlan::single(ft), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
        if !cfc.should_continue(&out.trace)? {
            continue;
        }
        let Some(second) = ranked_positions(flip2, &out.trace)?.into_iter().find(|&p| p > ft) else {
            continue;
        };
        let out = dec.decode(channel_llrs, &FlipPlan::pair(ft, second), None)?;
        attempts += 1;
        let r = frame_result(&out, dec, attempts);
        if r.crc_pass {
            return Ok(r);
        }
    }
    Ok(give_up(&initial, dec, attempts))
}

#[cfg(test)]
mod tests {
    use super::genie::{GenieContinue, GenieRanker};
    use super::*;
    use crate::flip_engine::{genie_first_error, sclf1_metric_decode, MetricVariant};
    use crate::nn_runtime::ArchDescriptor;
    use crate::polar_code::{CrcPoly, MessageFrame};

    fn code128() -> CodeSpec {
        CodeSpec::construct(7, 56, 8, Some(CrcPoly::CRC8)).unwrap()
    }

    fn noiseless(spec: &CodeSpec) -> (Vec<u8>, Vec<f64>) {
        let bits: Vec<u8> = (0..spec.info_bits()).map(|i| ((i * 7 + 3) % 5 == 0) as u8).collect();
        let frame = MessageFrame::new(spec, &bits).unwrap();
        let x = spec.encode(&frame).unwrap();
        (frame.u_vector, x.iter().map(|&b| if b == 0 { 8.0 } else { -8.0 }).collect())
    }

    /// Weakens and inverts the first channel values so the initial pass fails.
    fn corrupted(llrs: &[f64]) -> Vec<f64> {
        let mut y = llrs.to_vec();
        for v in y.iter_mut().take(12) {
            *v = -*v * 0.3;
        }
        y
    }

    #[test]
    fn initial_pass_costs_one_attempt() {
        let spec = code128();
        let (u, llrs) = noiseless(&spec);
        let mut dec = SclDecoder::new(&spec, 4).unwrap();
        let ranker = MetricRanker::default();
        let models = DlModels { flip1: Some(&ranker), ..Default::default() };
        let r = dl_sclf1(&mut dec, &llrs, 10, &models).unwrap();
        assert!(r.crc_pass);
        assert_eq!(r.u, u);
        assert_eq!(r.attempts, 1);
        assert!(r.flips_used.is_empty());
    }

    #[test]
    fn missing_and_mismatched_models() {
        let spec = code128();
        let (_, llrs) = noiseless(&spec);
        let mut dec = SclDecoder::new(&spec, 4).unwrap();
        let err = dl_sclf1(&mut dec, &llrs, 10, &DlModels::default()).unwrap_err();
        assert!(matches!(err, DlError::MissingModel { role: "flip-1", .. }));

        let wrong = LstmFlipModel::new(ModelWeights::zeros(ArchDescriptor::flip(61, 2)).unwrap()).unwrap();
        let models = DlModels { flip1: Some(&wrong), ..Default::default() };
        let err = dl_sclf1(&mut dec, &llrs, 10, &models).unwrap_err();
        assert!(matches!(err, DlError::SeqLenMismatch { model: 61, code: 62, .. }));

        let ranker = MetricRanker::default();
        let models = DlModels { flip1: Some(&ranker), flip2: Some(&ranker), ..Default::default() };
        assert!(matches!(dl_sclf2(&mut dec, &llrs, 5, &models), Err(DlError::MissingModel { role: "cfc", .. })));
        assert!(matches!(dl_tp_sclf2(&mut dec, &llrs, 5, &models), Err(DlError::MissingModel { role: "cfc", .. })));
        assert!(matches!(dl_sclf1(&mut dec, &llrs, 63, &models), Err(DlError::BudgetTooLarge { .. })));
        let c = ConstantContinue(false);
        let models = DlModels { flip1: Some(&ranker), cfc: Some(&c), ..Default::default() };
        assert!(matches!(dl_tp_sclf2(&mut dec, &llrs, 62, &models), Err(DlError::BudgetTooLarge { .. })));
    }

    #[test]
    fn zero_weight_lstm_is_accepted() {
        let spec = code128();
        let (_, llrs) = noiseless(&spec);
        let y = corrupted(&llrs);
        let mut dec = SclDecoder::new(&spec, 4).unwrap();
        let m = LstmFlipModel::new(ModelWeights::zeros(ArchDescriptor::flip(62, 2)).unwrap()).unwrap();
        let models = DlModels { flip1: Some(&m), ..Default::default() };
        let r = dl_sclf1(&mut dec, &y, 3, &models).unwrap();
        assert!(r.attempts >= 1 && r.attempts <= 4);
    }

    #[test]
    fn metric_stub_matches_metric_decoder() {
        let spec = code128();
        let (_, llrs) = noiseless(&spec);
        let cfg = ErrorMetricConfig::new(MetricVariant::Pm2);
        let ranker = MetricRanker::new(cfg);
        let models = DlModels { flip1: Some(&ranker), ..Default::default() };
        for shift in 0..20 {
            let mut y = llrs.clone();
            for (i, v) in y.iter_mut().enumerate() {
                *v = *v * 0.25 + (((i * 31 + shift * 17) % 13) as f64 - 6.0) * 0.6;
            }
            let mut a = SclDecoder::new(&spec, 4).unwrap();
            let mut b = SclDecoder::new(&spec, 4).unwrap();
            let ra = dl_sclf1(&mut a, &y, 10, &models).unwrap();
            let rb = sclf1_metric_decode(&mut b, &y, 10, &cfg).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn constant_cfc_zero_matches_dl_sclf1_flips() {
        let spec = code128();
        let (_, llrs) = noiseless(&spec);
        let ranker = MetricRanker::default();
        let stop = ConstantContinue(false);
        let go = ConstantContinue(true);
        for shift in 0..10 {
            let y: Vec<f64> =
                llrs.iter().enumerate().map(|(i, v)| v * 0.2 + (((i * 7 + shift * 5) % 11) as f64 - 5.0) * 0.5).collect();
            let m1 = DlModels { flip1: Some(&ranker), ..Default::default() };
            let ms = DlModels { flip1: Some(&ranker), flip2: Some(&ranker), cfc: Some(&stop) };
            let mg = DlModels { flip1: Some(&ranker), flip2: Some(&ranker), cfc: Some(&go) };
            let mut d = SclDecoder::new(&spec, 4).unwrap();
            let base = dl_sclf1(&mut d, &y, 8, &m1).unwrap();
            assert_eq!(dl_sclf2(&mut d, &y, 8, &ms).unwrap(), base);
            assert_eq!(dl_tp_sclf2(&mut d, &y, 8, &ms).unwrap(), base);
            assert!(dl_sclf2(&mut d, &y, 8, &mg).unwrap().attempts <= 17);
            assert!(dl_tp_sclf2(&mut d, &y, 8, &mg).unwrap().attempts <= 17);
            let b0 = Sclf2Budget { t1: 8, t2_outer: 0, t2_inner: 0 };
            assert_eq!(two_dim_dl_sclf2(&mut d, &y, b0, &ms).unwrap(), base);
        }
    }

    #[test]
    fn exhaustion_attempt_counts() {
        // Flat channel: every pass fails unless a lucky path passes CRC.
        let spec = code128();
        let y: Vec<f64> = (0..128).map(|i| if i % 3 == 0 { -0.4 } else { 0.3 }).collect();
        let ranker = MetricRanker::default();
        let mut d = SclDecoder::new(&spec, 4).unwrap();
        let models = DlModels { flip1: Some(&ranker), flip2: Some(&ranker), ..Default::default() };
        let r = dl_sclf1(&mut d, &y, 6, &models).unwrap();
        if !r.crc_pass {
            assert_eq!(r.attempts, 7);
            let init = d.decode(&y, &FlipPlan::empty(), None).unwrap();
            assert_eq!(r.u, crate::scl_decoder::ca_scl_select(&init.paths, &spec).unwrap().0.u);
        }
        let b = Sclf2Budget { t1: 6, t2_outer: 2, t2_inner: 3 };
        let r = two_dim_dl_sclf2(&mut d, &y, b, &models).unwrap();
        if !r.crc_pass {
            assert_eq!(r.attempts as usize, b.max_attempts());
        }
    }

    #[test]
    fn genie_stubs_follow_true_losses() {
        let spec = code128();
        let (u, llrs) = noiseless(&spec);
        let mut found = false;
        for shift in 0..200 {
            let y: Vec<f64> = llrs
                .iter()
                .enumerate()
                .map(|(i, v)| v * 0.18 + (((i * 37 + shift * 101) % 17) as f64 - 8.0) * 0.35)
                .collect();
            let mut d = SclDecoder::new(&spec, 4).unwrap();
            let Some(e1) = genie_first_error(&mut d, &y, &FlipPlan::empty(), &u).unwrap() else { continue };
            let init = d.decode(&y, &FlipPlan::empty(), None).unwrap();
            let g = GenieRanker::new(&spec, 4, &y, &u);
            let order = g.rank(&init.trace).unwrap();
            assert_eq!(init.trace.position(order[0]), e1);
            let mut sorted = order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..62).collect::<Vec<_>>());

            let c = GenieContinue::new(&spec, 4, &y, &u);
            let right = d.decode(&y, &FlipPlan::single(e1), None).unwrap();
            assert!(c.should_continue(&right.trace).unwrap());
            if let Some(&wrong) = spec.competitive_set(4).iter().find(|&&p| p < e1) {
                let out = d.decode(&y, &FlipPlan::single(wrong), None).unwrap();
                assert!(!c.should_continue(&out.trace).unwrap());
            }
            found = true;
        }
        assert!(found, "no frame with a genie loss was generated");
    }
}
