//! Software testbench for in-band full-duplex MIMO self-interference
//! cancellation (SIC).
//!
//! An in-band full-duplex radio transmits and receives on the same carrier at
//! the same time, so its own transmission leaks into its receiver as
//! self-interference (SI) that is many tens of dB stronger than the signal of
//! interest (SOI). This crate simulates that situation end to end for a
//! MIMO-transmit node and implements the digital assistance that drives an
//! analog canceler:
//!
//! * [`signal`] — QPSK waveform generation at IF and RF rates, pulse shaping,
//!   genie-aided demodulation.
//! * [`channel`] — multipath SI channel with per-antenna tap profiles,
//!   fractional delays and AWGN.
//! * [`frontend`] — behavioral model of the analog canceler/downconverter:
//!   reference subtraction, optional sinusoidal transfer compression, mixing
//!   and IF low-pass filtering.
//! * [`estimator`] — least-squares SI channel estimation over a convolution
//!   (Toeplitz) matrix, and the adaptive-order search that finds how many taps
//!   the canceler actually needs.
//! * [`metrics`] — Welch power spectral density, SIC depth and EVM.
//! * [`harness`] — configuration, the end-to-end experiment pipeline, sweeps
//!   and a library of bundled scenarios.
//!
//! # Example
//!
//! Estimate a two-tap channel from a QPSK waveform and reconstruct the
//! interference it produced:
//!
//! ```
//! use fdsic::channel::{MultipathChannel, Tap};
//! use fdsic::estimator::{ls_estimate, reconstruct_reference, Block};
//! use fdsic::signal::{qpsk_modulate, shape_and_upconvert, PulseShape};
//! use rand::{Rng, SeedableRng};
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let bits: Vec<bool> = (0..512).map(|_| rng.random()).collect();
//! let symbols = qpsk_modulate(&bits, 1.0e9).unwrap();
//! let x = shape_and_upconvert(&symbols, 2.0e9, 10.0e9, &PulseShape::RectNrz).unwrap();
//!
//! // Two-path channel: direct tap plus an echo 3 samples later at -6 dB.
//! let taps = vec![
//!     Tap { delay_s: 0.0, gain_db: 0.0, phase_rad: 0.0 },
//!     Tap { delay_s: 3.0e-10, gain_db: -6.0, phase_rad: 0.0 },
//! ];
//! let channel = MultipathChannel::new(vec![taps], None).unwrap();
//! let y = channel.apply(std::slice::from_ref(&x)).unwrap();
//!
//! let block = Block { start: 64, len: 2048 };
//! let estimate = ls_estimate(std::slice::from_ref(&x), &y, 8, block).unwrap();
//! let reference = reconstruct_reference(std::slice::from_ref(&x), &estimate, block).unwrap();
//!
//! // The reconstruction cancels the interference to numerical precision.
//! let err: f64 = reference
//!     .samples()
//!     .iter()
//!     .zip(&y.samples()[block.start..block.start + block.len])
//!     .map(|(r, y)| (y - r) * (y - r))
//!     .sum();
//! assert!(err / y.power() / (block.len as f64) < 1e-18);
//! ```

pub mod channel;
pub mod error;
pub mod estimator;
mod fir;
pub mod frontend;
pub mod harness;
pub mod metrics;
pub mod signal;

pub use error::{Error, Result};
