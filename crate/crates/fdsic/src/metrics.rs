//! Measurement instruments: Welch power spectral density, self-interference
//! cancellation depth and error vector magnitude.
//!
//! Cancellation depth is the band-integrated power ratio between a
//! cancellation-off and a cancellation-on capture of the same scene,
//! evaluated over the modulated self-interference band at the IF. EVM
//! compares recovered symbols against their ideal constellation points (or a
//! known transmitted sequence) and is reported in percent.

use crate::error::{Error, Result};
use crate::signal::{SampledSignal, SymbolStream};
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Window applied to each Welch segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// No tapering.
    Rectangular,
    /// Hann (raised cosine) — the default used by the harness.
    Hann,
    /// Hamming.
    Hamming,
    /// Blackman.
    Blackman,
}

impl WindowKind {
    fn sample(&self, i: usize, len: usize) -> f64 {
        let x = 2.0 * PI * i as f64 / len as f64;
        match self {
            WindowKind::Rectangular => 1.0,
            WindowKind::Hann => 0.5 - 0.5 * x.cos(),
            WindowKind::Hamming => 0.54 - 0.46 * x.cos(),
            WindowKind::Blackman => 0.42 - 0.5 * x.cos() + 0.08 * (2.0 * x).cos(),
        }
    }
}

/// One-sided power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    freqs: Vec<f64>,
    density: Vec<f64>,
    bin_width: f64,
    enbw: f64,
}

impl PsdEstimate {
    /// Bin center frequencies in Hz, `0 ..= fs/2`.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Linear power density per bin, unit²/Hz.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Density in dB (10·log10), with a -400 dB floor for empty bins.
    pub fn density_db(&self) -> Vec<f64> {
        self.density
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    10.0 * p.log10()
                } else {
                    -400.0
                }
            })
            .collect()
    }

    /// Frequency spacing between bins in Hz.
    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Equivalent noise bandwidth of the analysis window in Hz.
    pub fn enbw(&self) -> f64 {
        self.enbw
    }

    /// Power integrated over `[f_lo, f_hi]` (inclusive bin centers), unit².
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> f64 {
        self.freqs
            .iter()
            .zip(&self.density)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(_, p)| p * self.bin_width)
            .sum()
    }

    /// Power integrated over the whole one-sided spectrum, unit².
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width
    }
}

/// Welch-averaged one-sided PSD.
///
/// Splits the signal into windowed segments of `segment_len` samples (even,
/// ≥ 8, ≤ signal length) advancing by `segment_len·(1 - overlap)` with
/// `overlap ∈ [0, 1)`, and averages their scaled periodograms. The estimate
/// integrates back to the signal's mean power (Parseval) for every window
/// choice, up to edge tapering of a few percent.
pub fn welch_psd(
    sig: &SampledSignal,
    segment_len: usize,
    overlap: f64,
    window: WindowKind,
) -> Result<PsdEstimate> {
    if segment_len < 8 || segment_len % 2 != 0 {
        return Err(Error::InvalidMetrics(format!(
            "segment length must be even and >= 8, got {segment_len}"
        )));
    }
    if segment_len > sig.len() {
        return Err(Error::InvalidMetrics(format!(
            "segment length {segment_len} exceeds signal length {}",
            sig.len()
        )));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidMetrics(format!(
            "overlap must lie in [0, 1), got {overlap}"
        )));
    }
    let hop = ((segment_len as f64 * (1.0 - overlap)).round() as usize).max(1);
    let fs = sig.sample_rate();

    let w: Vec<f64> = (0..segment_len).map(|i| window.sample(i, segment_len)).collect();
    let window_power: f64 = w.iter().map(|v| v * v).sum();
    let window_sum: f64 = w.iter().sum();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment_len);

    let half = segment_len / 2;
    let mut acc = vec![0.0; half + 1];
    let mut segments = 0usize;
    let mut start = 0usize;
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_len];
    while start + segment_len <= sig.len() {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(sig.samples()[start + i] * w[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            *a += one_sided * buf[k].norm_sqr() / (fs * window_power);
        }
        segments += 1;
        start += hop;
    }
    let scale = 1.0 / segments as f64;
    let density: Vec<f64> = acc.iter().map(|v| v * scale).collect();
    let bin_width = fs / segment_len as f64;
    Ok(PsdEstimate {
        freqs: (0..=half).map(|k| k as f64 * bin_width).collect(),
        density,
        bin_width,
        enbw: fs * window_power / (window_sum * window_sum),
    })
}

/// Measurement band of the modulated interference: `if_freq ± 0.6·baud`.
pub fn sic_band(if_freq: f64, baud_rate: f64) -> (f64, f64) {
    (if_freq - 0.6 * baud_rate, if_freq + 0.6 * baud_rate)
}

/// Depth reported when the canceled capture retains no measurable in-band
/// power; see [`SicReport::capped`].
pub const SIC_DEPTH_CAP_DB: f64 = 80.0;

/// Outcome of a cancellation-depth measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicReport {
    /// Band power ratio off/on in dB, capped at [`SIC_DEPTH_CAP_DB`].
    pub depth_db: f64,
    /// Band power with cancellation off, dB (10·log10 of unit²).
    pub power_before_db: f64,
    /// Band power with cancellation on, dB.
    pub power_after_db: f64,
    /// Measurement band in Hz.
    pub band_hz: (f64, f64),
    /// True when the raw ratio exceeded the cap (the residual fell below the
    /// instrument floor of this simulation, e.g. in noiseless runs).
    pub capped: bool,
}

/// Welch defaults used for depth measurements: 4096-sample Hann segments at
/// 50% overlap, shrunk (to an even length) when the capture is shorter.
fn depth_psd(sig: &SampledSignal) -> Result<PsdEstimate> {
    let segment = 4096usize.min(sig.len() & !1);
    welch_psd(sig, segment, 0.5, WindowKind::Hann)
}

/// Cancellation depth over `band_hz`: band-integrated power of `before`
/// (cancellation off) over `after` (cancellation on).
///
/// Both captures must be self-interference-only scenes at the same rate and
/// length. A depth beyond [`SIC_DEPTH_CAP_DB`] is reported as the cap with
/// `capped = true` rather than as an unbounded number.
pub fn sic_depth(
    before: &SampledSignal,
    after: &SampledSignal,
    band_hz: (f64, f64),
) -> Result<SicReport> {
    if before.sample_rate() != after.sample_rate() || before.len() != after.len() {
        return Err(Error::MismatchedSignals(
            "depth captures must share sample rate and length".into(),
        ));
    }
    let nyquist = before.sample_rate() / 2.0;
    if !(band_hz.0 >= 0.0 && band_hz.0 < band_hz.1 && band_hz.1 <= nyquist) {
        return Err(Error::InvalidMetrics(format!(
            "band [{}, {}] Hz must be ordered and lie within [0, {nyquist}] Hz",
            band_hz.0, band_hz.1
        )));
    }
    let p_before = depth_psd(before)?.band_power(band_hz.0, band_hz.1);
    let p_after = depth_psd(after)?.band_power(band_hz.0, band_hz.1);
    if p_before <= 0.0 {
        return Err(Error::InvalidMetrics(
            "cancellation-off capture has no in-band power".into(),
        ));
    }
    let raw = if p_after > 0.0 {
        10.0 * (p_before / p_after).log10()
    } else {
        f64::INFINITY
    };
    let capped = raw > SIC_DEPTH_CAP_DB;
    Ok(SicReport {
        depth_db: raw.min(SIC_DEPTH_CAP_DB),
        power_before_db: 10.0 * p_before.log10(),
        power_after_db: if p_after > 0.0 {
            10.0 * p_after.log10()
        } else {
            f64::NEG_INFINITY
        },
        band_hz,
        capped,
    })
}

/// Reference against which EVM is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum EvmReference<'a> {
    /// Each received symbol is compared with the nearest QPSK point.
    DecisionDirected,
    /// Compare against a known transmitted sequence of the same length.
    DataAided(&'a [Complex64]),
}

/// Nearest unit-energy QPSK point to `s`.
fn qpsk_decision(s: Complex64) -> Complex64 {
    Complex64::new(
        FRAC_1_SQRT_2.copysign(s.re),
        FRAC_1_SQRT_2.copysign(s.im),
    )
}

/// Error vector magnitude in percent:
/// `100·sqrt(Σ|s - ŝ|² / Σ|ŝ|²)` over the stream.
///
/// The received stream is unit-mean-energy by construction
/// ([`SymbolStream::from_received`]); the data-aided reference must have the
/// same length.
pub fn evm_percent(rx: &SymbolStream, reference: EvmReference<'_>) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    match reference {
        EvmReference::DecisionDirected => {
            for &s in rx.symbols() {
                let ideal = qpsk_decision(s);
                num += (s - ideal).norm_sqr();
                den += ideal.norm_sqr();
            }
        }
        EvmReference::DataAided(tx) => {
            if tx.len() != rx.len() {
                return Err(Error::InvalidMetrics(format!(
                    "data-aided reference has {} symbols, received stream has {}",
                    tx.len(),
                    rx.len()
                )));
            }
            for (&s, &ideal) in rx.symbols().iter().zip(tx) {
                num += (s - ideal).norm_sqr();
                den += ideal.norm_sqr();
            }
        }
    }
    if den <= 0.0 {
        return Err(Error::InvalidMetrics("EVM reference has zero energy".into()));
    }
    Ok(100.0 * (num / den).sqrt())
}

/// Number of received symbols whose nearest QPSK point differs from the
/// transmitted one. Streams must have equal length.
pub fn count_symbol_errors(rx: &SymbolStream, tx: &SymbolStream) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::InvalidMetrics(format!(
            "transmit stream has {} symbols, received stream has {}",
            tx.len(),
            rx.len()
        )));
    }
    Ok(rx
        .symbols()
        .iter()
        .zip(tx.symbols())
        .filter(|(r, t)| {
            let d = qpsk_decision(**r);
            (d.re > 0.0) != (t.re > 0.0) || (d.im > 0.0) != (t.im > 0.0)
        })
        .count())
}
