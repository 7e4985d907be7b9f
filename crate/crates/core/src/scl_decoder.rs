//! Successive-cancellation (list) decoding with list-flipping.
//!
//! LLRs use the min-sum check-node update. The path metric follows the
//! hard-decision penalty rule: a decision that agrees with the LLR sign costs
//! nothing, otherwise `|LLR|` is added. `sign(0)` is `+1`.
//!
//! Candidate ordering is total: ascending metric, then parent slot, then
//! branch bit. Survivors are stored in rank order, so a slot index is the rank
//! of that path after the last competitive step.

use thiserror::Error;

use crate::flip_engine::FlipPlan;
use crate::polar_code::{bit_reversal_permute, CodeSpec};

/// Channel LLR magnitudes are clamped to this value before decoding.
pub const LLR_CLAMP: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("expected {expected} channel LLRs, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("list size {0} is not a power of two")]
    BadListSize(usize),
    #[error("flip position {0} is a frozen bit")]
    FlipOnFrozen(usize),
    #[error("flip position {0} lies in the uncontested set B")]
    FlipInSetB(usize),
    #[error("flip positions must be strictly increasing: {0:?}")]
    FlipNotIncreasing(Vec<usize>),
    #[error("empty path list")]
    EmptyPathList,
    #[error("reference vector has length {got}, expected {expected}")]
    ReferenceLength { expected: usize, got: usize },
}

/// Check-node update: `sign(a) sign(b) min(|a|, |b|)`.
#[inline]
pub fn llr_f(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update: `b + (1 - 2u) a`.
#[inline]
pub fn llr_g(a: f64, b: f64, u: u8) -> f64 {
    if u & 1 == 0 {
        b + a
    } else {
        b - a
    }
}

/// Hard decision of an LLR, with `sign(0) = +1`.
#[inline]
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

#[inline]
pub fn update_path_metric(pm_prev: f64, llr: f64, decision: u8) -> f64 {
    if decision == hard_decision(llr) {
        pm_prev
    } else {
        pm_prev + llr.abs()
    }
}

fn prepare_channel(llrs: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = llrs.iter().map(|v| v.clamp(-LLR_CLAMP, LLR_CLAMP)).collect();
    bit_reversal_permute(&clamped).expect("power-of-two length checked by caller")
}

/// Plain SC decoding. Written recursively and independently of
/// [`SclDecoder`] so the two can be checked against each other.
pub fn decode_sc(channel_llrs: &[f64], spec: &CodeSpec) -> Result<Vec<u8>, DecodeError> {
    let len = spec.len();
    if channel_llrs.len() != len {
        return Err(DecodeError::LengthMismatch { expected: len, got: channel_llrs.len() });
    }
    let llr = prepare_channel(channel_llrs);
    let mut u = vec![0u8; len];
    sc_node(&llr, 0, spec.frozen_mask(), &mut u);
    Ok(u)
}

/// Decodes the subtree whose leaves start at `first`; returns its codeword.
fn sc_node(llr: &[f64], first: usize, frozen: &[bool], u: &mut [u8]) -> Vec<u8> {
    let size = llr.len();
    if size == 1 {
        let bit = if frozen[first] { 0 } else { hard_decision(llr[0]) };
        u[first] = bit;
        return vec![bit];
    }
    let half = size / 2;
    let (a, b) = llr.split_at(half);
    let left_llr: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| llr_f(x, y)).collect();
    let left = sc_node(&left_llr, first, frozen, u);
    let right_llr: Vec<f64> = a.iter().zip(b).zip(&left).map(|((&x, &y), &v)| llr_g(x, y, v)).collect();
    let right = sc_node(&right_llr, first + half, frozen, u);
    let mut out: Vec<u8> = left.iter().zip(&right).map(|(l, r)| l ^ r).collect();
    out.extend_from_slice(&right);
    out
}

/// Per-competitive-index record of one SCL pass.
///
/// For every `i` in `A \ B` (decoding order) the `2L` candidate metrics are
/// stored sorted ascending, along with the `(parent slot, bit)` key of each
/// candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    list_size: usize,
    set_b: Vec<usize>,
    positions: Vec<usize>,
    metrics: Vec<f64>,
    keys: Vec<u32>,
    plan: FlipPlan,
    genie_loss: Option<usize>,
}

impl DecodeTrace {
    /// Builds a trace from raw candidate metrics (one row of `2L` values per
    /// position, any order). Used for synthetic studies; no plan, no reference.
    pub fn from_metrics(list_size: usize, positions: Vec<usize>, rows: Vec<Vec<f64>>) -> Self {
        assert_eq!(positions.len(), rows.len());
        let mut metrics = Vec::with_capacity(rows.len() * 2 * list_size);
        let mut keys = Vec::with_capacity(rows.len() * 2 * list_size);
        for mut row in rows {
            assert_eq!(row.len(), 2 * list_size, "each row needs 2L metrics");
            row.sort_by(f64::total_cmp);
            metrics.extend(row);
            keys.extend(0..2 * list_size as u32);
        }
        DecodeTrace { list_size, set_b: Vec::new(), positions, metrics, keys, plan: FlipPlan::empty(), genie_loss: None }
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    /// Number of recorded steps, `S`.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn set_b(&self) -> &[usize] {
        &self.set_b
    }

    /// Bit indices of `A \ B` in decoding order.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn position(&self, step: usize) -> usize {
        self.positions[step]
    }

    /// Step index (ordinal within `A \ B`) of bit index `pos`.
    pub fn ordinal_of(&self, pos: usize) -> Option<usize> {
        self.positions.binary_search(&pos).ok()
    }

    /// Sorted `PM_1 <= ... <= PM_2L` at `step`.
    pub fn sorted_metrics(&self, step: usize) -> &[f64] {
        let w = 2 * self.list_size;
        &self.metrics[step * w..(step + 1) * w]
    }

    /// `(parent << 1) | bit` of each sorted candidate at `step`.
    pub fn candidate_keys(&self, step: usize) -> &[u32] {
        let w = 2 * self.list_size;
        &self.keys[step * w..(step + 1) * w]
    }

    pub fn is_flipped(&self, step: usize) -> bool {
        self.plan.contains(self.positions[step])
    }

    /// Keys of the candidates that survived `step`.
    pub fn survivor_keys(&self, step: usize) -> &[u32] {
        let keys = self.candidate_keys(step);
        if self.is_flipped(step) {
            &keys[self.list_size..]
        } else {
            &keys[..self.list_size]
        }
    }

    pub fn survivor_metrics(&self, step: usize) -> &[f64] {
        let m = self.sorted_metrics(step);
        if self.is_flipped(step) {
            &m[self.list_size..]
        } else {
            &m[..self.list_size]
        }
    }

    /// The flip plan this pass was decoded with.
    pub fn plan(&self) -> &FlipPlan {
        &self.plan
    }

    /// First index at which the reference path left the list, if a
    /// reference was supplied and it was lost.
    pub fn genie_loss(&self) -> Option<usize> {
        self.genie_loss
    }
}

/// One surviving path at the end of a pass.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedPath {
    pub u: Vec<u8>,
    pub metric: f64,
    /// Whether this path equals the reference, when one was supplied.
    pub is_reference: bool,
}

#[derive(Debug, Clone)]
pub struct SclOutput {
    /// Final paths, ascending by metric.
    pub paths: Vec<DecodedPath>,
    pub trace: DecodeTrace,
}

#[derive(Clone, Copy)]
struct Candidate {
    metric: f64,
    parent: u32,
    bit: u8,
}

impl Candidate {
    fn key(&self) -> u32 {
        (self.parent << 1) | u32::from(self.bit)
    }
}

/// Reusable SCL decoder for one code and list size. Buffers are kept across
/// calls; every call to [`decode`](Self::decode) is one decoding pass.
pub struct SclDecoder {
    spec: CodeSpec,
    list_size: usize,
    n: u32,
    len: usize,
    channel: Vec<f64>,
    alpha: Vec<f64>,
    alpha_next: Vec<f64>,
    beta: Vec<u8>,
    beta_next: Vec<u8>,
    u: Vec<u8>,
    u_next: Vec<u8>,
    metric: Vec<f64>,
    metric_next: Vec<f64>,
    on_ref: Vec<bool>,
    on_ref_next: Vec<bool>,
    llr: Vec<f64>,
    scratch: Vec<u8>,
    candidates: Vec<Candidate>,
    passes: u64,
}

impl SclDecoder {
    pub fn new(spec: &CodeSpec, list_size: usize) -> Result<Self, DecodeError> {
        if list_size == 0 || !list_size.is_power_of_two() {
            return Err(DecodeError::BadListSize(list_size));
        }
        let len = spec.len();
        let cells = list_size * len;
        Ok(SclDecoder {
            spec: spec.clone(),
            list_size,
            n: spec.log_len(),
            len,
            channel: vec![0.0; len],
            alpha: vec![0.0; cells],
            alpha_next: vec![0.0; cells],
            beta: vec![0; cells],
            beta_next: vec![0; cells],
            u: vec![0; cells],
            u_next: vec![0; cells],
            metric: vec![0.0; list_size],
            metric_next: vec![0.0; list_size],
            on_ref: vec![false; list_size],
            on_ref_next: vec![false; list_size],
            llr: vec![0.0; list_size],
            scratch: vec![0; len],
            candidates: Vec::with_capacity(2 * list_size),
            passes: 0,
        })
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    /// Number of decoding passes executed so far.
    pub fn passes(&self) -> u64 {
        self.passes
    }

    pub fn validate_plan(&self, plan: &FlipPlan) -> Result<(), DecodeError> {
        let pos = plan.positions();
        if pos.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DecodeError::FlipNotIncreasing(pos.to_vec()));
        }
        let b = self.spec.set_b(self.list_size);
        for &p in pos {
            if p >= self.len || self.spec.is_frozen(p) {
                return Err(DecodeError::FlipOnFrozen(p));
            }
            if b.contains(&p) {
                return Err(DecodeError::FlipInSetB(p));
            }
        }
        Ok(())
    }

    /// One SCL pass. At each index in `plan`, ranks `L+1..2L` survive instead
    /// of ranks `1..L`. When `reference` is given (simulation only), the trace
    /// records where that path first left the list.
    pub fn decode(
        &mut self,
        channel_llrs: &[f64],
        plan: &FlipPlan,
        reference: Option<&[u8]>,
    ) -> Result<SclOutput, DecodeError> {
        if channel_llrs.len() != self.len {
            return Err(DecodeError::LengthMismatch { expected: self.len, got: channel_llrs.len() });
        }
        if let Some(r) = reference {
            if r.len() != self.len {
                return Err(DecodeError::ReferenceLength { expected: self.len, got: r.len() });
            }
        }
        self.validate_plan(plan)?;
        self.passes += 1;

        self.channel = prepare_channel(channel_llrs);
        let l = self.list_size;
        let len = self.len;
        let competitive = self.spec.competitive_set(l).to_vec();
        let mut trace = DecodeTrace {
            list_size: l,
            set_b: self.spec.set_b(l).to_vec(),
            positions: competitive,
            metrics: Vec::with_capacity(2 * l * self.spec.payload_bits()),
            keys: Vec::with_capacity(2 * l * self.spec.payload_bits()),
            plan: plan.clone(),
            genie_loss: None,
        };

        let mut active = 1usize;
        self.metric[0] = 0.0;
        self.on_ref[0] = reference.is_some();

        for i in 0..len {
            for p in 0..active {
                self.llr[p] = self.leaf_llr(p, i);
            }
            if self.spec.is_frozen(i) {
                for p in 0..active {
                    self.metric[p] = update_path_metric(self.metric[p], self.llr[p], 0);
                    self.u[p * len + i] = 0;
                    if let Some(r) = reference {
                        self.on_ref[p] &= r[i] == 0;
                    }
                    self.propagate(p, i, 0);
                }
                continue;
            }

            self.candidates.clear();
            for p in 0..active {
                for bit in 0..2u8 {
                    self.candidates.push(Candidate {
                        metric: update_path_metric(self.metric[p], self.llr[p], bit),
                        parent: p as u32,
                        bit,
                    });
                }
            }
            self.candidates.sort_by(|a, b| {
                a.metric.total_cmp(&b.metric).then(a.parent.cmp(&b.parent)).then(a.bit.cmp(&b.bit))
            });

            let survivors = if 2 * active <= l {
                0..2 * active
            } else {
                trace.metrics.extend(self.candidates.iter().map(|c| c.metric));
                trace.keys.extend(self.candidates.iter().map(Candidate::key));
                if plan.contains(i) {
                    l..2 * l
                } else {
                    0..l
                }
            };

            let count = survivors.len();
            for (slot, c) in self.candidates[survivors].iter().enumerate() {
                let p = c.parent as usize;
                let (src, dst) = (p * len..p * len + len, slot * len);
                self.alpha_next[dst..dst + len].copy_from_slice(&self.alpha[src.clone()]);
                self.beta_next[dst..dst + len].copy_from_slice(&self.beta[src.clone()]);
                self.u_next[dst..dst + i].copy_from_slice(&self.u[src.start..src.start + i]);
                self.u_next[dst + i] = c.bit;
                self.metric_next[slot] = c.metric;
                self.on_ref_next[slot] = self.on_ref[p] && reference.is_some_and(|r| r[i] == c.bit);
            }
            std::mem::swap(&mut self.alpha, &mut self.alpha_next);
            std::mem::swap(&mut self.beta, &mut self.beta_next);
            std::mem::swap(&mut self.u, &mut self.u_next);
            std::mem::swap(&mut self.metric, &mut self.metric_next);
            std::mem::swap(&mut self.on_ref, &mut self.on_ref_next);
            active = count;

            for slot in 0..active {
                let bit = self.u[slot * len + i];
                self.propagate(slot, i, bit);
            }
            if reference.is_some() && trace.genie_loss.is_none() && !self.on_ref[..active].iter().any(|&t| t) {
                trace.genie_loss = Some(i);
            }
        }

        let mut order: Vec<usize> = (0..active).collect();
        order.sort_by(|&a, &b| self.metric[a].total_cmp(&self.metric[b]).then(a.cmp(&b)));
        let paths = order
            .into_iter()
            .map(|p| DecodedPath {
                u: self.u[p * len..(p + 1) * len].to_vec(),
                metric: self.metric[p],
                is_reference: self.on_ref[p],
            })
            .collect();
        Ok(SclOutput { paths, trace })
    }

    /// LLR of leaf `i` on path `p`, updating the path's LLR layers.
    fn leaf_llr(&mut self, p: usize, i: usize) -> f64 {
        let n = self.n as usize;
        let base = p * self.len;
        let top = if i == 0 { n - 1 } else { i.trailing_zeros() as usize };
        let alpha = &mut self.alpha[base..base + self.len];
        let beta = &self.beta[base..base + self.len];
        for layer in (0..=top).rev() {
            let size = 1usize << layer;
            let use_g = i != 0 && layer == top;
            let (lo, hi) = alpha.split_at_mut(2 * size);
            let parent: &[f64] = if layer + 1 == n { &self.channel } else { &hi[..2 * size] };
            let child = &mut lo[size..2 * size];
            let (pa, pb) = parent.split_at(size);
            if use_g {
                let left = &beta[size..2 * size];
                for k in 0..size {
                    child[k] = llr_g(pa[k], pb[k], left[k]);
                }
            } else {
                for k in 0..size {
                    child[k] = llr_f(pa[k], pb[k]);
                }
            }
        }
        alpha[1]
    }

    /// Folds decision `bit` at leaf `i` into path `p`'s partial sums.
    fn propagate(&mut self, p: usize, i: usize, bit: u8) {
        let n = self.n as usize;
        let base = p * self.len;
        let beta = &mut self.beta[base..base + self.len];
        let scratch = &mut self.scratch;
        scratch[0] = bit;
        let mut size = 1usize;
        let mut layer = 0usize;
        while layer < n && (i >> layer) & 1 == 1 {
            let left = &beta[size..2 * size];
            for k in 0..size {
                scratch[size + k] = scratch[k];
                scratch[k] ^= left[k];
            }
            size *= 2;
            layer += 1;
        }
        if layer < n {
            beta[size..2 * size].copy_from_slice(&scratch[..size]);
        }
    }
}

/// Convenience wrapper: one pass with a fresh decoder.
pub fn decode_scl(
    channel_llrs: &[f64],
    spec: &CodeSpec,
    list_size: usize,
    plan: &FlipPlan,
) -> Result<SclOutput, DecodeError> {
    SclDecoder::new(spec, list_size)?.decode(channel_llrs, plan, None)
}

/// Picks the lowest-metric path whose payload passes the CRC, falling back to
/// the lowest-metric path with `false`.
pub fn ca_scl_select<'a>(paths: &'a [DecodedPath], spec: &CodeSpec) -> Result<(&'a DecodedPath, bool), DecodeError> {
    let first = paths.first().ok_or(DecodeError::EmptyPathList)?;
    match paths.iter().find(|p| spec.crc_passes(&p.u)) {
        Some(p) => Ok((p, true)),
        None => Ok((first, false)),
    }
}
