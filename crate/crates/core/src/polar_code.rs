//! Polar-code construction, encoding and CRC handling.
//!
//! Bit-channel indices are 0-based. The information set is chosen by the
//! polarization-weight rule with `beta = 2^(1/4)`; the generator matrix is
//! `G_N = B_N F^{(x)n}` with `B_N` the bit-reversal permutation.
//!
//! The payload carried on the information set is `info_bits || crc_bits`,
//! written onto the information positions in ascending (decoding) order, so the
//! CRC occupies the last `C` information positions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// `2^(1/4)`, the polarization-weight base.
const PW_BETA: f64 = 1.189_207_115_002_721;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("K + C = {payload} exceeds code length N = {len}")]
    PayloadTooLarge { payload: usize, len: usize },
    #[error("code length exponent n must be between 1 and 20, got {0}")]
    BadExponent(u32),
    #[error("CRC polynomial {poly} has degree {degree}, expected {expected}")]
    CrcDegree { poly: CrcPoly, degree: u32, expected: usize },
    #[error("CRC of {0} bits requested but no polynomial given")]
    MissingCrc(usize),
    #[error("malformed CRC polynomial: {0}")]
    MalformedPoly(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("stored information set does not match the polarization-weight construction")]
    InfoSetMismatch,
}

/// CRC generator polynomial, stored with its leading `x^C` term.
///
/// Bit `d` of the value is the coefficient of `x^d`; e.g. `x^8 + x^2 + x + 1`
/// is `0x107`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CrcPoly(u64);

impl CrcPoly {
    /// `x^8 + x^2 + x + 1`.
    pub const CRC8: CrcPoly = CrcPoly(0x107);
    /// `x^16 + x^15 + x^2 + 1`.
    pub const CRC16: CrcPoly = CrcPoly(0x1_8005);
    /// 5G NR CRC24C:
    /// `x^24+x^23+x^21+x^20+x^17+x^15+x^13+x^12+x^8+x^4+x^2+x+1`.
    pub const CRC24C: CrcPoly = CrcPoly(0x1B2_B117);

    pub fn new(value: u64) -> Result<Self, CodeError> {
        if value < 2 {
            return Err(CodeError::MalformedPoly(format!("{value:#x} has degree 0")));
        }
        if value & 1 == 0 {
            return Err(CodeError::MalformedPoly(format!(
                "{value:#x} has no constant term"
            )));
        }
        Ok(CrcPoly(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn degree(self) -> u32 {
        63 - self.0.leading_zeros()
    }

    /// Remainder of `bits(x) * x^C mod g(x)`, MSB (first bit) highest order.
    /// Register starts at zero, no reflection, no final XOR.
    pub fn remainder(self, bits: &[u8]) -> Vec<u8> {
        let c = self.degree();
        let reg = self.divide(bits.iter().copied().chain(std::iter::repeat_n(0, c as usize)));
        (0..c).rev().map(|d| ((reg >> d) & 1) as u8).collect()
    }

    fn divide(self, bits: impl Iterator<Item = u8>) -> u64 {
        let c = self.degree();
        let top = 1u64 << c;
        let mut reg = 0u64;
        for b in bits {
            reg = (reg << 1) | u64::from(b & 1);
            if reg & top != 0 {
                reg ^= self.0;
            }
        }
        reg
    }
}

impl fmt::Debug for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CrcPoly({:#x})", self.0)
    }
}

impl fmt::Display for CrcPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl FromStr for CrcPoly {
    type Err = CodeError;

    /// Accepts a hex literal (`0x107`) or a named polynomial (`crc8`, `crc16`, `crc24c`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "crc8" => return Ok(Self::CRC8),
            "crc16" => return Ok(Self::CRC16),
            "crc24" | "crc24c" => return Ok(Self::CRC24C),
            _ => {}
        }
        let digits = t.strip_prefix("0x").unwrap_or(&t);
        let v = u64::from_str_radix(digits, 16)
            .map_err(|e| CodeError::MalformedPoly(format!("{s}: {e}")))?;
        CrcPoly::new(v)
    }
}

impl Serialize for CrcPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CrcPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Appends the systematic CRC of `info_bits`.
pub fn crc_append(info_bits: &[u8], poly: CrcPoly) -> Vec<u8> {
    let mut out = info_bits.to_vec();
    out.extend(poly.remainder(info_bits));
    out
}

/// `true` iff `bits(x)` is divisible by the generator.
pub fn crc_check(bits: &[u8], poly: CrcPoly) -> bool {
    poly.divide(bits.iter().copied()) == 0
}

/// Polarization weight `sum_j b_j 2^(j/4)` of bit-channel `index`.
pub fn polarization_weight(index: usize) -> f64 {
    let mut w = 0.0;
    let mut i = index;
    let mut p = 1.0;
    while i != 0 {
        if i & 1 == 1 {
            w += p;
        }
        p *= PW_BETA;
        i >>= 1;
    }
    w
}

fn reverse_bits(i: usize, n: u32) -> usize {
    if n == 0 {
        0
    } else {
        i.reverse_bits() >> (usize::BITS - n)
    }
}

/// `output[i] = input[rev_n(i)]`.
pub fn bit_reversal_permute<T: Copy>(input: &[T]) -> Result<Vec<T>, CodeError> {
    let len = input.len();
    if !len.is_power_of_two() {
        return Err(CodeError::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros();
    Ok((0..len).map(|i| input[reverse_bits(i, n)]).collect())
}

/// In-place `x <- x F^{(x)n}` over GF(2), natural order.
pub(crate) fn polar_transform_in_place(x: &mut [u8]) {
    let len = x.len();
    let mut half = 1;
    while half < len {
        for block in x.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Encodes an `N`-bit `u` vector as `x = u B_N F^{(x)n}`.
pub fn encode(u: &[u8]) -> Result<Vec<u8>, CodeError> {
    let mut x = u.to_vec();
    polar_transform_in_place(&mut x);
    bit_reversal_permute(&x)
}

/// Static description of an `(N, K+C)` CRC-aided polar code.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSpec {
    n: u32,
    k: usize,
    crc: Option<CrcPoly>,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

#[allow(clippy::len_without_is_empty)]
impl CodeSpec {
    /// Builds the code from the polarization-weight ranking. Ties in weight
    /// go to the higher index.
    pub fn construct(n: u32, k: usize, c: usize, crc: Option<CrcPoly>) -> Result<Self, CodeError> {
        if !(1..=20).contains(&n) {
            return Err(CodeError::BadExponent(n));
        }
        let len = 1usize << n;
        if k + c > len {
            return Err(CodeError::PayloadTooLarge { payload: k + c, len });
        }
        match (c, crc) {
            (0, None) => {}
            (c, None) => return Err(CodeError::MissingCrc(c)),
            (c, Some(p)) if p.degree() as usize != c => {
                return Err(CodeError::CrcDegree { poly: p, degree: p.degree(), expected: c })
            }
            _ => {}
        }

        let mut order: Vec<(usize, f64)> = (0..len).map(|i| (i, polarization_weight(i))).collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
        let mut info_set: Vec<usize> = order[..k + c].iter().map(|&(i, _)| i).collect();
        info_set.sort_unstable();

        let mut frozen = vec![true; len];
        for &i in &info_set {
            frozen[i] = false;
        }
        Ok(CodeSpec { n, k, crc, info_set, frozen })
    }

    /// Convenience: `crc` of `None` means no CRC.
    pub fn with_crc(n: u32, k: usize, crc: Option<CrcPoly>) -> Result<Self, CodeError> {
        let c = crc.map_or(0, |p| p.degree() as usize);
        Self::construct(n, k, c, crc)
    }

    pub fn log_len(&self) -> u32 {
        self.n
    }

    /// Code length `N`.
    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn info_bits(&self) -> usize {
        self.k
    }

    pub fn crc_bits(&self) -> usize {
        self.crc.map_or(0, |p| p.degree() as usize)
    }

    /// `K + C`.
    pub fn payload_bits(&self) -> usize {
        self.info_set.len()
    }

    pub fn crc_poly(&self) -> Option<CrcPoly> {
        self.crc
    }

    /// Information set `A`, ascending.
    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.frozen[i]).collect()
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// `R = K / N`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.len() as f64
    }

    /// `(K + C) / N`, the rate used for the Eb/N0 convention.
    pub fn effective_rate(&self) -> f64 {
        self.payload_bits() as f64 / self.len() as f64
    }

    /// Bits at the information positions of `u`, in decoding order.
    pub fn payload_of(&self, u: &[u8]) -> Vec<u8> {
        self.info_set.iter().map(|&i| u[i]).collect()
    }

    /// The first `K` payload bits of `u`.
    pub fn message_of(&self, u: &[u8]) -> Vec<u8> {
        self.info_set[..self.k].iter().map(|&i| u[i]).collect()
    }

    /// CRC verdict on the payload carried by `u`. Always passes without a CRC.
    pub fn crc_passes(&self, u: &[u8]) -> bool {
        match self.crc {
            Some(p) => crc_check(&self.payload_of(u), p),
            None => true,
        }
    }

    pub fn encode(&self, frame: &MessageFrame) -> Result<Vec<u8>, CodeError> {
        if frame.u_vector.len() != self.len() {
            return Err(CodeError::LengthMismatch { expected: self.len(), got: frame.u_vector.len() });
        }
        encode(&frame.u_vector)
    }

    /// Number of leading information indices (`log2 L`) where the list fills
    /// without competition.
    pub fn set_b(&self, list_size: usize) -> &[usize] {
        let b = list_size.trailing_zeros() as usize;
        &self.info_set[..b.min(self.info_set.len())]
    }

    /// `A \ B`, ascending. Its length is `S = K + C - log2 L`.
    pub fn competitive_set(&self, list_size: usize) -> &[usize] {
        let b = list_size.trailing_zeros() as usize;
        &self.info_set[b.min(self.info_set.len())..]
    }

    pub fn to_file(&self) -> CodeSpecFile {
        CodeSpecFile {
            n: self.n,
            k: self.k,
            c: self.crc_bits(),
            crc_poly: self.crc,
            info_set: self.info_set.clone(),
        }
    }

    pub fn from_file(file: &CodeSpecFile) -> Result<Self, CodeError> {
        let spec = Self::construct(file.n, file.k, file.c, file.crc_poly)?;
        if !file.info_set.is_empty() && file.info_set != spec.info_set {
            return Err(CodeError::InfoSetMismatch);
        }
        Ok(spec)
    }
}

/// Serialized form of [`CodeSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpecFile {
    pub n: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "C")]
    pub c: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crc_poly: Option<CrcPoly>,
    #[serde(default)]
    pub info_set: Vec<usize>,
}

/// Message bits, their CRC and the resulting `u` vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageFrame {
    pub info_bits: Vec<u8>,
    pub crc_bits: Vec<u8>,
    pub u_vector: Vec<u8>,
}

impl MessageFrame {
    pub fn new(spec: &CodeSpec, info_bits: &[u8]) -> Result<Self, CodeError> {
        if info_bits.len() != spec.info_bits() {
            return Err(CodeError::LengthMismatch { expected: spec.info_bits(), got: info_bits.len() });
        }
        let crc_bits = spec.crc.map_or_else(Vec::new, |p| p.remainder(info_bits));
        let mut u_vector = vec![0u8; spec.len()];
        for (&pos, &b) in spec.info_set.iter().zip(info_bits.iter().chain(crc_bits.iter())) {
            u_vector[pos] = b & 1;
        }
        Ok(MessageFrame { info_bits: info_bits.to_vec(), crc_bits, u_vector })
    }
}
