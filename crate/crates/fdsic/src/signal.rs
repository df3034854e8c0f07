//! Waveform generation and recovery: QPSK symbol streams, pulse shaping,
//! carrier up-conversion and genie-aided demodulation.
//!
//! All waveforms are real passband signals sampled uniformly. The testbench
//! runs two rates side by side: a high "RF" rate at which the antenna carrier
//! and the multipath channel live, and the lower "IF" rate of the digitizer
//! that captures the downconverted block used for estimation. Both are plain
//! [`SampledSignal`]s; nothing in this module cares which role a signal plays.
//!
//! # Example
//!
//! ```
//! use fdsic::signal::{qpsk_modulate, shape_and_upconvert, demodulate_qpsk, PulseShape};
//!
//! let bits = [true, false, false, true, true, true, false, false];
//! let symbols = qpsk_modulate(&bits, 1.0e9).unwrap();
//! let rf = shape_and_upconvert(&symbols, 2.0e9, 10.0e9, &PulseShape::RectNrz).unwrap();
//! let back = demodulate_qpsk(&rf, 2.0e9, 1.0e9, &PulseShape::RectNrz, 0.0, 0).unwrap();
//! for (tx, rx) in symbols.symbols().iter().zip(back.symbols()) {
//!     assert!((tx - rx).norm() < 1e-9);
//! }
//! ```

pub use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fir;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// A uniformly sampled real-valued waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SampledSignal {
    /// Wraps samples taken at `sample_rate` Hz.
    ///
    /// Fails if the rate is not positive and finite, the signal is empty, or
    /// any sample is non-finite.
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive and finite, got {sample_rate}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidSignal("empty sample buffer".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Sample values.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Sample rate in Hz.
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the buffer holds no samples (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Signal duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Mean squared sample value.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64
    }

    /// Consumes the signal and returns its sample buffer.
    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Constellation used by a [`SymbolStream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// Gray-mapped QPSK with unit-energy points `(±1 ± j)/√2`.
    Qpsk,
}

/// A stream of complex symbols at a fixed baud rate.
///
/// Transmit streams built by [`qpsk_modulate`] contain exact constellation
/// points; received streams built by [`demodulate_qpsk`] contain soft symbol
/// estimates normalized to unit mean energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream {
    symbols: Vec<Complex64>,
    baud_rate: f64,
    constellation: Constellation,
}

impl SymbolStream {
    fn validate_common(symbols: &[Complex64], baud_rate: f64) -> Result<()> {
        if symbols.is_empty() {
            return Err(Error::InvalidSymbols("empty symbol stream".into()));
        }
        if !(baud_rate.is_finite() && baud_rate > 0.0) {
            return Err(Error::InvalidSymbols(format!(
                "baud rate must be positive and finite, got {baud_rate}"
            )));
        }
        if let Some(i) = symbols.iter().position(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(Error::InvalidSymbols(format!(
                "non-finite symbol at index {i}"
            )));
        }
        Ok(())
    }

    /// Builds a transmit stream, checking every symbol is a QPSK point and
    /// the mean energy is exactly one.
    pub fn from_qpsk_points(symbols: Vec<Complex64>, baud_rate: f64) -> Result<Self> {
        Self::validate_common(&symbols, baud_rate)?;
        for (i, s) in symbols.iter().enumerate() {
            let on_grid = (s.re.abs() - FRAC_1_SQRT_2).abs() < 1e-12
                && (s.im.abs() - FRAC_1_SQRT_2).abs() < 1e-12;
            if !on_grid {
                return Err(Error::InvalidSymbols(format!(
                    "symbol {i} = {s} is not a unit-energy QPSK point"
                )));
            }
        }
        Ok(Self {
            symbols,
            baud_rate,
            constellation: Constellation::Qpsk,
        })
    }

    /// Builds a received stream of soft symbol estimates. Symbols are stored
    /// as given; [`demodulate_qpsk`] normalizes its output to unit mean
    /// energy before construction. Fails on an all-zero stream.
    pub fn from_received(symbols: Vec<Complex64>, baud_rate: f64) -> Result<Self> {
        Self::validate_common(&symbols, baud_rate)?;
        if symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() <= 0.0 {
            return Err(Error::InvalidSymbols(
                "received stream has zero energy".into(),
            ));
        }
        Ok(Self {
            symbols,
            baud_rate,
            constellation: Constellation::Qpsk,
        })
    }

    /// Symbol values.
    pub fn symbols(&self) -> &[Complex64] {
        &self.symbols
    }

    /// Baud rate in Hz.
    pub fn baud_rate(&self) -> f64 {
        self.baud_rate
    }

    /// Constellation identifier.
    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    /// Number of symbols.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// True when the stream holds no symbols (never, by construction).
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Carrier arrangement of one experiment: RF carrier, local oscillator and
/// the intermediate frequency their mixing product lands on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarrierPlan {
    /// Transmit/receive carrier in Hz.
    pub rf_carrier: f64,
    /// Local-oscillator frequency in Hz, below the carrier.
    pub lo_freq: f64,
    /// Intermediate frequency `rf_carrier - lo_freq` in Hz.
    pub if_freq: f64,
}

impl CarrierPlan {
    /// Builds a plan from carrier and LO; the IF is their difference.
    pub fn new(rf_carrier: f64, lo_freq: f64) -> Result<Self> {
        if !(rf_carrier.is_finite() && lo_freq.is_finite() && lo_freq > 0.0) {
            return Err(Error::FrequencyPlan(format!(
                "carrier {rf_carrier} Hz / LO {lo_freq} Hz must be positive and finite"
            )));
        }
        if rf_carrier <= lo_freq {
            return Err(Error::FrequencyPlan(format!(
                "carrier {rf_carrier} Hz must exceed the LO {lo_freq} Hz (low-side injection)"
            )));
        }
        Ok(Self {
            rf_carrier,
            lo_freq,
            if_freq: rf_carrier - lo_freq,
        })
    }

    /// Checks the modulated IF band fits strictly inside the first Nyquist
    /// zone of a digitizer at `sample_rate`: `0 < if_freq` and
    /// `if_freq < sample_rate/2 - baud_rate`.
    pub fn check_if_band(&self, sample_rate: f64, baud_rate: f64) -> Result<()> {
        if self.if_freq <= 0.0 || self.if_freq >= sample_rate / 2.0 - baud_rate {
            return Err(Error::FrequencyPlan(format!(
                "IF {} Hz with baud {} Hz does not fit below Nyquist at {} Sa/s",
                self.if_freq, baud_rate, sample_rate
            )));
        }
        Ok(())
    }
}

/// Transmit pulse shape.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    /// Rectangular non-return-to-zero: the symbol value held for a full
    /// symbol period. This is the default shape of the testbench.
    RectNrz,
    /// Root-raised-cosine with the given roll-off, truncated to
    /// `span_symbols` symbol periods. Waveforms carry `span_symbols / 2`
    /// symbol periods of lead-in and lead-out so every symbol sees its full
    /// pulse.
    RootRaisedCosine {
        /// Excess-bandwidth factor in (0, 1].
        rolloff: f64,
        /// Pulse truncation length in symbol periods (even, ≥ 2).
        span_symbols: usize,
    },
}

impl PulseShape {
    fn validate(&self) -> Result<()> {
        if let PulseShape::RootRaisedCosine {
            rolloff,
            span_symbols,
        } = self
        {
            if !(*rolloff > 0.0 && *rolloff <= 1.0) {
                return Err(Error::InvalidSignal(format!(
                    "RRC roll-off must lie in (0, 1], got {rolloff}"
                )));
            }
            if *span_symbols < 2 || span_symbols % 2 != 0 {
                return Err(Error::InvalidSignal(format!(
                    "RRC span must be an even number of symbols >= 2, got {span_symbols}"
                )));
            }
        }
        Ok(())
    }

    /// Samples of waveform lead-in (and lead-out) added around the symbol
    /// payload by [`shape_and_upconvert`].
    pub fn guard_samples(&self, samples_per_symbol: usize) -> usize {
        match self {
            PulseShape::RectNrz => 0,
            PulseShape::RootRaisedCosine { span_symbols, .. } => {
                span_symbols / 2 * samples_per_symbol
            }
        }
    }
}

/// Root-raised-cosine impulse response, `span * sps + 1` taps, peak centered,
/// normalized to unit energy.
fn rrc_taps(sps: usize, rolloff: f64, span: usize) -> Vec<f64> {
    let len = span * sps + 1;
    let mid = (len / 2) as f64;
    let mut taps: Vec<f64> = (0..len)
        .map(|i| {
            // Time in symbol periods relative to the pulse center.
            let t = (i as f64 - mid) / sps as f64;
            let four_bt = 4.0 * rolloff * t;
            if t.abs() < 1e-9 {
                1.0 - rolloff + 4.0 * rolloff / PI
            } else if (four_bt.abs() - 1.0).abs() < 1e-9 {
                // Removable singularity at t = ±1/(4β).
                let a = (PI / (4.0 * rolloff)).sin() * (1.0 + 2.0 / PI);
                let b = (PI / (4.0 * rolloff)).cos() * (1.0 - 2.0 / PI);
                rolloff / std::f64::consts::SQRT_2 * (a + b)
            } else {
                let num = (PI * t * (1.0 - rolloff)).sin()
                    + four_bt * (PI * t * (1.0 + rolloff)).cos();
                let den = PI * t * (1.0 - four_bt * four_bt);
                num / den
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    let scale = energy.sqrt().recip();
    taps.iter_mut().for_each(|t| *t *= scale);
    taps
}

/// Carrier phase of sample `n` for a carrier at `freq_over_fs` cycles per
/// sample. The product is reduced modulo one cycle before the trig call so
/// long waveforms do not accumulate argument error.
#[inline]
fn carrier_phase(n: usize, freq_over_fs: f64) -> f64 {
    2.0 * PI * (n as f64 * freq_over_fs).fract()
}

/// Maps a bit stream onto Gray-coded QPSK symbols.
///
/// Bits are consumed in pairs `(b0, b1)`: `00 → (1+j)/√2`, `01 → (-1+j)/√2`,
/// `11 → (-1-j)/√2`, `10 → (1-j)/√2`, so adjacent constellation points differ
/// in exactly one bit. Fails on an empty or odd-length bit stream.
pub fn qpsk_modulate(bits: &[bool], baud_rate: f64) -> Result<SymbolStream> {
    if bits.is_empty() || bits.len() % 2 != 0 {
        return Err(Error::InvalidSymbols(format!(
            "QPSK needs a non-empty, even number of bits, got {}",
            bits.len()
        )));
    }
    let symbols = bits
        .chunks_exact(2)
        .map(|pair| {
            let re = if pair[1] { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
            let im = if pair[0] { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
            Complex64::new(re, im)
        })
        .collect();
    SymbolStream::from_qpsk_points(symbols, baud_rate)
}

/// Pulse-shapes a symbol stream and mixes it onto a real carrier.
///
/// The output is `Re{b(t) · e^(j·2π·carrier·t)}` where `b` is the shaped
/// complex baseband. Preconditions: `sample_rate` is an integer multiple of
/// the baud rate (integer samples per symbol) and satisfies
/// `sample_rate ≥ 2·(carrier + baud)`.
///
/// For [`PulseShape::RectNrz`] the output holds exactly
/// `symbols.len() · sps` samples; symbol `k` occupies samples
/// `[k·sps, (k+1)·sps)`. Root-raised-cosine output is longer by twice
/// [`PulseShape::guard_samples`].
pub fn shape_and_upconvert(
    stream: &SymbolStream,
    carrier_hz: f64,
    sample_rate: f64,
    pulse: &PulseShape,
) -> Result<SampledSignal> {
    pulse.validate()?;
    if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
        return Err(Error::FrequencyPlan(format!(
            "carrier must be positive and finite, got {carrier_hz}"
        )));
    }
    if sample_rate < 2.0 * (carrier_hz + stream.baud_rate()) {
        return Err(Error::FrequencyPlan(format!(
            "sample rate {sample_rate} Sa/s cannot represent carrier {carrier_hz} Hz \
             plus baud {} Hz",
            stream.baud_rate()
        )));
    }
    let sps_f = sample_rate / stream.baud_rate();
    if (sps_f - sps_f.round()).abs() > 1e-6 || sps_f < 1.0 {
        return Err(Error::FrequencyPlan(format!(
            "samples per symbol must be a positive integer, got {sps_f}"
        )));
    }
    let sps = sps_f.round() as usize;

    let baseband: Vec<Complex64> = match pulse {
        PulseShape::RectNrz => {
            let mut b = Vec::with_capacity(stream.len() * sps);
            for s in stream.symbols() {
                b.extend(std::iter::repeat_n(*s, sps));
            }
            b
        }
        PulseShape::RootRaisedCosine {
            rolloff,
            span_symbols,
        } => {
            let taps = rrc_taps(sps, *rolloff, *span_symbols);
            let len = (stream.len() + span_symbols) * sps;
            let mut b = vec![Complex64::new(0.0, 0.0); len];
            // Symbol k peaks at (k + span/2)·sps; the pulse support starts
            // at k·sps, so every pulse lies fully inside the buffer.
            for (k, s) in stream.symbols().iter().enumerate() {
                let start = k * sps;
                for (i, &t) in taps.iter().enumerate() {
                    b[start + i] += s * t;
                }
            }
            // Match NRZ's unit mean power in the loaded region: scale so one
            // isolated pulse carries sps units of energy.
            let gain = (sps as f64).sqrt();
            b.iter_mut().for_each(|v| *v *= gain);
            b
        }
    };

    let ratio = carrier_hz / sample_rate;
    let samples = baseband
        .iter()
        .enumerate()
        .map(|(n, b)| {
            let theta = carrier_phase(n, ratio);
            b.re * theta.cos() - b.im * theta.sin()
        })
        .collect();
    SampledSignal::new(samples, sample_rate)
}

/// Recovers QPSK symbols from a passband waveform with genie knowledge of
/// carrier phase and timing.
///
/// `genie_phase` is the carrier phase at sample 0 and `genie_delay` the index
/// where the transmitted waveform begins (the start of symbol 0's period for
/// NRZ, the start of the lead-in for root-raised-cosine). The signal is
/// coherently downconverted, matched-filtered for `pulse`, sampled at symbol
/// centers and normalized to unit mean energy. Demodulates as many whole
/// symbols as fit in the buffer past `genie_delay`; fails if none fit or if
/// the rates violate [`shape_and_upconvert`]'s preconditions.
///
/// The rectangular matched filter (integrate-and-dump) rejects the
/// double-frequency mixing product exactly when `2·carrier/baud` is an
/// integer, which holds for every bundled frequency plan.
pub fn demodulate_qpsk(
    sig: &SampledSignal,
    carrier_hz: f64,
    baud_rate: f64,
    pulse: &PulseShape,
    genie_phase: f64,
    genie_delay: usize,
) -> Result<SymbolStream> {
    pulse.validate()?;
    let sps_f = sig.sample_rate() / baud_rate;
    if (sps_f - sps_f.round()).abs() > 1e-6 || sps_f < 1.0 {
        return Err(Error::FrequencyPlan(format!(
            "samples per symbol must be a positive integer, got {sps_f}"
        )));
    }
    let sps = sps_f.round() as usize;
    if genie_delay >= sig.len() {
        return Err(Error::InvalidSymbols(format!(
            "genie delay {genie_delay} exceeds signal length {}",
            sig.len()
        )));
    }

    // Coherent downconversion to complex baseband (scaled by 1/2 plus a
    // double-frequency term the matched filter removes).
    let ratio = carrier_hz / sig.sample_rate();
    let baseband: Vec<Complex64> = sig.samples()[genie_delay..]
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let n = genie_delay + k;
            let theta = carrier_phase(n, ratio) + genie_phase;
            2.0 * v * Complex64::from_polar(1.0, -theta)
        })
        .collect();

    let symbols: Vec<Complex64> = match pulse {
        PulseShape::RectNrz => baseband
            .chunks_exact(sps)
            .map(|w| w.iter().sum::<Complex64>() / sps as f64)
            .collect(),
        PulseShape::RootRaisedCosine {
            rolloff,
            span_symbols,
        } => {
            let taps = rrc_taps(sps, *rolloff, *span_symbols);
            let span_len = span_symbols * sps;
            if baseband.len() < span_len + sps {
                return Err(Error::InvalidSymbols(
                    "signal shorter than one root-raised-cosine span".into(),
                ));
            }
            let n_sym = (baseband.len() - span_len) / sps;
            // Matched filter evaluated only at symbol peaks: symbol k peaks
            // at k·sps + span/2·sps, i.e. the filter dot product starts at
            // k·sps. Scale by sqrt(sps) to undo the shaping gain.
            (0..n_sym)
                .map(|k| {
                    let start = k * sps;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (i, &t) in taps.iter().enumerate() {
                        acc += baseband[start + i] * t;
                    }
                    acc / (sps as f64).sqrt()
                })
                .collect()
        }
    };
    if symbols.is_empty() {
        return Err(Error::InvalidSymbols(
            "no whole symbol fits in the signal".into(),
        ));
    }
    let mean_energy = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols.len() as f64;
    if mean_energy <= 0.0 {
        return Err(Error::InvalidSymbols("demodulated stream has zero energy".into()));
    }
    let scale = mean_energy.sqrt().recip();
    let symbols = symbols.into_iter().map(|s| s * scale).collect();
    SymbolStream::from_received(symbols, baud_rate)
}

/// Keeps every `factor`-th sample, dividing the sample rate accordingly.
///
/// The caller is responsible for band-limiting beforehand; content above the
/// new Nyquist frequency aliases.
pub fn decimate(sig: &SampledSignal, factor: usize) -> Result<SampledSignal> {
    if factor == 0 {
        return Err(Error::InvalidSignal("decimation factor must be >= 1".into()));
    }
    let samples: Vec<f64> = sig.samples().iter().step_by(factor).copied().collect();
    SampledSignal::new(samples, sig.sample_rate() / factor as f64)
}

/// Band-limited upsampling by an integer factor (FFT zero-padding); the
/// inverse of [`decimate`] for signals confined below the original Nyquist.
pub fn upsample(sig: &SampledSignal, factor: usize) -> Result<SampledSignal> {
    if factor == 0 {
        return Err(Error::InvalidSignal("upsampling factor must be >= 1".into()));
    }
    SampledSignal::new(
        fir::upsample_fft(sig.samples(), factor),
        sig.sample_rate() * factor as f64,
    )
}
