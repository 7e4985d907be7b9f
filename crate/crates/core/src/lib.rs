//! CRC-aided polar codes with successive-cancellation list decoding,
//! list-flip decoders (metric-driven, genie-aided and LSTM-aided), a small
//! LSTM inference runtime and a reproducible Monte-Carlo harness.
//!
//! Bit indices are 0-based throughout. `u` vectors are in natural order and
//! codewords are `x = u G_N` with `G_N = B_N F^{(x)n}`.

pub mod dl_decoders;
pub mod flip_engine;
pub mod nn_runtime;
pub mod polar_code;
pub mod scl_decoder;
pub mod sim_harness;

#[cfg(feature = "cli")]
pub mod cli;

pub use dl_decoders::FrameResult;
pub use flip_engine::FlipPlan;
pub use polar_code::{CodeSpec, CrcPoly};
pub use scl_decoder::{DecodeTrace, SclDecoder};
