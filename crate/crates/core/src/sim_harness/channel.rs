//! Portable randomness and the BPSK/AWGN channel.
//!
//! Every frame owns a `Xoshiro256PlusPlus` stream seeded (through SplitMix64,
//! as `seed_from_u64` does) from a per-frame seed. The per-frame seed is a
//! pure function of `(master seed, SNR index, frame index)`:
//!
//! ```text
//! frame_seed = mix64(mix64(master ^ mix64(snr_index + 1)) + frame_index * 0x9E3779B97F4A7C15)
//! ```
//!
//! where `mix64` is the SplitMix64 output finalizer. Within a frame the draws
//! are: `K` info bits (top bit of `next_u64`), then `N` Gaussian samples from
//! Box-Muller pairs, cosine branch first.

use rand_xoshiro::rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::polar_code::{CodeError, CodeSpec, MessageFrame};

pub type FrameRng = Xoshiro256PlusPlus;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn frame_seed(master: u64, snr_index: usize, frame_index: u64) -> u64 {
    let point = mix64(master ^ mix64(snr_index as u64 + 1));
    mix64(point.wrapping_add(frame_index.wrapping_mul(GAMMA)))
}

pub fn frame_rng(seed: u64) -> FrameRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform on `(0, 1]` with 53-bit resolution.
fn open_unit(rng: &mut FrameRng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Fills `out` with independent standard normal samples.
pub fn fill_standard_normal(rng: &mut FrameRng, out: &mut [f64]) {
    for pair in out.chunks_mut(2) {
        let r = (-2.0 * open_unit(rng).ln()).sqrt();
        let theta = std::f64::consts::TAU * open_unit(rng);
        pair[0] = r * theta.cos();
        if let Some(second) = pair.get_mut(1) {
            *second = r * theta.sin();
        }
    }
}

pub fn random_bits(rng: &mut FrameRng, count: usize) -> Vec<u8> {
    (0..count).map(|_| (rng.next_u64() >> 63) as u8).collect()
}

/// Noise variance for Eb/N0 `snr_db` at code rate `rate`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// BPSK (`0 -> +1`) over AWGN; returns channel LLRs `2y / sigma^2`.
pub fn bpsk_awgn_llrs(codeword: &[u8], snr_db: f64, rate: f64, rng: &mut FrameRng) -> Vec<f64> {
    let var = noise_variance(snr_db, rate);
    let sigma = var.sqrt();
    let mut noise = vec![0.0; codeword.len()];
    fill_standard_normal(rng, &mut noise);
    codeword
        .iter()
        .zip(&noise)
        .map(|(&x, &n)| {
            let s = 1.0 - 2.0 * f64::from(x);
            2.0 * (s + sigma * n) / var
        })
        .collect()
}

/// One simulated transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub seed: u64,
    pub message: MessageFrame,
    pub llrs: Vec<f64>,
}

/// Draws the message and noise for `seed`. SNR is Eb/N0 over the effective
/// rate `(K + C) / N`.
pub fn simulate_frame(spec: &CodeSpec, snr_db: f64, seed: u64) -> Result<Frame, CodeError> {
    let mut rng = frame_rng(seed);
    let bits = random_bits(&mut rng, spec.info_bits());
    let message = MessageFrame::new(spec, &bits)?;
    let x = spec.encode(&message)?;
    let llrs = bpsk_awgn_llrs(&x, snr_db, spec.effective_rate(), &mut rng);
    Ok(Frame { seed, message, llrs })
}
