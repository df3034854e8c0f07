//! Behavioral model of the analog canceler and downconverter front end.
//!
//! The hardware this mimics is a dual-parallel electro-optic modulator fed by
//! the received RF waveform on one arm and a reconstructed cancellation
//! reference on the other. Its useful behavior reduces to four stages, which
//! is exactly what [`dpmzm_downconvert`] computes:
//!
//! 1. subtract the reference from the received waveform,
//! 2. optionally push the difference through the modulator's sinusoidal
//!    transfer curve (the dominant nonlinearity of the device),
//! 3. mix with the local oscillator,
//! 4. low-pass filter to keep the difference-frequency (IF) product.
//!
//! The IF low-pass filter is a linear-phase Kaiser design whose group delay
//! is compensated, so the output stays time-aligned with the input grid.
//! [`upconvert_reference`] is the exact single-sideband inverse of stages
//! 3–4; the experiment harness uses it to turn a digitally reconstructed IF
//! reference back into the RF drive for the canceler arm.

use crate::error::{Error, Result};
use crate::fir;
use crate::signal::SampledSignal;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Stopband attenuation of the IF low-pass filter, dB.
const LPF_STOPBAND_DB: f64 = 95.0;
/// Transition bandwidth of the IF low-pass filter as a fraction of the
/// sample rate.
pub const LPF_TRANSITION: f64 = 0.02;
/// Stopband attenuation of the transmit band-select filter, dB.
const TX_BAND_STOPBAND_DB: f64 = 95.0;
/// Transition bandwidth of the transmit band-select filter as a fraction of
/// the sample rate.
pub const TX_BAND_TRANSITION: f64 = 0.01;

/// Half-length (group delay in samples) of the IF low-pass filter.
pub(crate) fn lpf_half_len() -> usize {
    fir::kaiser_length(LPF_STOPBAND_DB, LPF_TRANSITION) / 2
}

/// Half-length (group delay in samples) of the transmit band-select filter.
pub(crate) fn tx_bandpass_half_len() -> usize {
    fir::kaiser_length(TX_BAND_STOPBAND_DB, TX_BAND_TRANSITION) / 2
}

/// Transfer curve applied to the subtracted waveform before mixing.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nonlinearity {
    /// Ideal linear front end.
    Linear,
    /// Sinusoidal modulator transfer `u = (p/β)·sin(β·d/p)` where `p` is the
    /// peak magnitude of the current block and `β` the modulation index in
    /// radians. Small `β` approaches the linear curve; large `β` compresses
    /// peaks.
    Sinusoidal {
        /// Modulation index β in radians, within `(0, π/2]`.
        modulation_index: f64,
    },
}

/// Front-end configuration shared by down- and up-conversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendParams {
    /// Local-oscillator frequency in Hz.
    pub lo_freq: f64,
    /// Local-oscillator phase at sample 0, radians.
    pub lo_phase: f64,
    /// Amplitude gain applied to the filtered IF output.
    pub conversion_gain: f64,
    /// Cutoff of the IF low-pass filter in Hz.
    pub if_lowpass_cutoff: f64,
    /// Transfer curve of the canceler arm.
    pub nonlinearity: Nonlinearity,
}

impl FrontendParams {
    fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.lo_freq.is_finite() && self.lo_freq > 0.0) {
            return Err(Error::InvalidFrontend(format!(
                "LO frequency must be positive, got {}",
                self.lo_freq
            )));
        }
        if !self.lo_phase.is_finite() {
            return Err(Error::InvalidFrontend("LO phase must be finite".into()));
        }
        if !(self.conversion_gain.is_finite() && self.conversion_gain > 0.0) {
            return Err(Error::InvalidFrontend(format!(
                "conversion gain must be positive, got {}",
                self.conversion_gain
            )));
        }
        let max_cutoff = sample_rate * (0.5 - LPF_TRANSITION);
        if !(self.if_lowpass_cutoff > 0.0 && self.if_lowpass_cutoff < max_cutoff) {
            return Err(Error::InvalidFrontend(format!(
                "IF cutoff {} Hz must lie in (0, {max_cutoff}) at {sample_rate} Sa/s",
                self.if_lowpass_cutoff
            )));
        }
        if let Nonlinearity::Sinusoidal { modulation_index } = self.nonlinearity {
            if !(modulation_index > 0.0 && modulation_index <= PI / 2.0) {
                return Err(Error::InvalidFrontend(format!(
                    "modulation index must lie in (0, π/2], got {modulation_index}"
                )));
            }
        }
        Ok(())
    }
}

/// Analog reference-path impairments between the digital reconstruction and
/// the canceler arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPathParams {
    /// Attenuation in dB, non-negative.
    pub attenuation_db: f64,
    /// Extra path delay in seconds, non-negative.
    pub delay_s: f64,
}

/// Applies reference-path attenuation and delay.
pub fn apply_ref_path(reference: &SampledSignal, params: &RefPathParams) -> Result<SampledSignal> {
    if !(params.attenuation_db.is_finite() && params.attenuation_db >= 0.0) {
        return Err(Error::InvalidFrontend(format!(
            "attenuation must be a non-negative dB value, got {}",
            params.attenuation_db
        )));
    }
    if !(params.delay_s.is_finite() && params.delay_s >= 0.0) {
        return Err(Error::InvalidFrontend(format!(
            "reference delay must be non-negative, got {}",
            params.delay_s
        )));
    }
    let gain = 10f64.powf(-params.attenuation_db / 20.0);
    let delayed = fir::delay_signal(
        reference.samples(),
        params.delay_s * reference.sample_rate(),
    );
    SampledSignal::new(delayed.iter().map(|v| gain * v).collect(), reference.sample_rate())
}

/// The image-free radiated band for a receiver that mixes with a real LO at
/// `lo_freq` and digitizes the IF at `if_sample_rate`.
///
/// A cosine mixer maps RF content at `lo_freq − f` and `lo_freq + f` onto the
/// same IF frequency `f`. Content below the LO therefore folds on top of the
/// wanted band, and no linear operation on the transmitted waveform can
/// reproduce the fold — it is invisible to a digital canceler. Keeping every
/// radiated spectrum inside `[lo_freq, lo_freq + if_sample_rate/2]` removes
/// the ambiguity: the lower edge sits half a transition band above the LO so
/// the filter's stopband begins at the LO itself, and the upper edge is the
/// highest frequency the IF digitizer can represent.
pub fn transmit_band(lo_freq: f64, if_sample_rate: f64, rf_sample_rate: f64) -> (f64, f64) {
    let low = lo_freq + 0.5 * TX_BAND_TRANSITION * rf_sample_rate;
    let high = lo_freq + 0.5 * if_sample_rate;
    (low, high)
}

/// Band-select filter applied to every radiated waveform.
///
/// Real transmit chains do not radiate the full sinc skirt of their drive
/// waveform: amplifiers and antennas confine the emission to the operating
/// band. The behavioral model needs that band limit for a deeper reason too —
/// see [`transmit_band`] for why out-of-band transmit energy is unrecoverable
/// after a real mixer.
///
/// The filter is a linear-phase Kaiser band-pass (a modulated low-pass
/// prototype, ≥ 90 dB stopband) with its group delay compensated, so the
/// output stays aligned with the input grid. `low_hz` and `high_hz` are the
/// −6 dB edges; the stopband is fully reached half a transition band beyond
/// each edge.
pub fn transmit_bandpass(
    sig: &SampledSignal,
    low_hz: f64,
    high_hz: f64,
) -> Result<SampledSignal> {
    let fs = sig.sample_rate();
    let half_transition = 0.5 * TX_BAND_TRANSITION * fs;
    if !(low_hz.is_finite() && high_hz.is_finite() && low_hz > 0.0 && high_hz > low_hz) {
        return Err(Error::InvalidFrontend(format!(
            "transmit band [{low_hz}, {high_hz}] Hz must be a positive, increasing range"
        )));
    }
    if high_hz + half_transition >= 0.5 * fs {
        return Err(Error::InvalidFrontend(format!(
            "transmit band edge {high_hz} Hz leaves no room for the filter transition \
             below the {} Hz Nyquist limit",
            0.5 * fs
        )));
    }
    let center = 0.5 * (low_hz + high_hz) / fs;
    let halfwidth = 0.5 * (high_hz - low_hz) / fs;
    let len = fir::kaiser_length(TX_BAND_STOPBAND_DB, TX_BAND_TRANSITION);
    let lowpass = fir::lowpass_taps(halfwidth, len, fir::kaiser_beta(TX_BAND_STOPBAND_DB));
    let mid = (len / 2) as f64;
    let taps: Vec<f64> = lowpass
        .iter()
        .enumerate()
        .map(|(i, &lp)| 2.0 * lp * (2.0 * PI * center * (i as f64 - mid)).cos())
        .collect();
    SampledSignal::new(fir::filter_centered(sig.samples(), &taps), fs)
}

#[inline]
fn lo_phase_at(n: usize, lo_over_fs: f64, lo_phase: f64) -> f64 {
    2.0 * PI * (n as f64 * lo_over_fs).fract() + lo_phase
}

/// Subtracts the reference, applies the transfer curve, mixes with the LO
/// and low-pass filters to the IF.
///
/// `reference = None` models an idle canceler arm (cancellation off). With a
/// reference present, both signals must share rate and length. The output
/// keeps the input rate and length; decimate separately to model a slower
/// digitizer.
///
/// For a received tone at `lo_freq + f`, the output is
/// `conversion_gain/2 · cos(2π·f·t - lo_phase)`: the LO phase appears
/// negated on the IF, and the sum-frequency image at `lo_freq + f + lo_freq`
/// is rejected by the filter's stopband (≥ 90 dB).
pub fn dpmzm_downconvert(
    received: &SampledSignal,
    reference: Option<&SampledSignal>,
    params: &FrontendParams,
) -> Result<SampledSignal> {
    let fs = received.sample_rate();
    params.validate(fs)?;

    let mut diff: Vec<f64> = match reference {
        None => received.samples().to_vec(),
        Some(r) => {
            if r.sample_rate() != fs || r.len() != received.len() {
                return Err(Error::MismatchedSignals(
                    "reference must match the received signal's rate and length".into(),
                ));
            }
            received
                .samples()
                .iter()
                .zip(r.samples())
                .map(|(a, b)| a - b)
                .collect()
        }
    };

    if let Nonlinearity::Sinusoidal { modulation_index } = params.nonlinearity {
        // Drive scaling is block-local: the peak of this capture sets the
        // modulator's full-scale point.
        let peak = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            let scale = peak / modulation_index;
            diff.iter_mut()
                .for_each(|v| *v = scale * (*v / scale).sin());
        }
    }

    let ratio = params.lo_freq / fs;
    let mixed: Vec<f64> = diff
        .iter()
        .enumerate()
        .map(|(n, v)| v * lo_phase_at(n, ratio, params.lo_phase).cos())
        .collect();

    let taps = fir::lowpass_taps(
        params.if_lowpass_cutoff / fs,
        fir::kaiser_length(LPF_STOPBAND_DB, LPF_TRANSITION),
        fir::kaiser_beta(LPF_STOPBAND_DB),
    );
    let filtered = fir::filter_centered(&mixed, &taps);
    let g = params.conversion_gain;
    SampledSignal::new(filtered.iter().map(|v| g * v).collect(), fs)
}

/// Single-sideband inverse of the downconverter's mix-and-filter stages.
///
/// Upsamples the IF reference to `rf_sample_rate` (an integer multiple of
/// its rate), forms the analytic signal and shifts it up by the LO:
/// `(2/conversion_gain) · Re{ a(t) · e^(j(2π·lo_freq·t + lo_phase)) }`.
/// Feeding the result back through [`dpmzm_downconvert`] reproduces the IF
/// reference to within the filter's accuracy, which is what closes the
/// cancellation loop.
pub fn upconvert_reference(
    reference_if: &SampledSignal,
    rf_sample_rate: f64,
    params: &FrontendParams,
) -> Result<SampledSignal> {
    params.validate(rf_sample_rate)?;
    let factor = rf_sample_rate / reference_if.sample_rate();
    if !(factor.is_finite() && factor >= 1.0 && (factor - factor.round()).abs() < 1e-9) {
        return Err(Error::FrequencyPlan(format!(
            "RF rate must be an integer multiple of the IF rate, got ratio {factor}"
        )));
    }
    let up = fir::upsample_fft(reference_if.samples(), factor.round() as usize);
    let analytic = fir::analytic_signal(&up);
    let ratio = params.lo_freq / rf_sample_rate;
    let scale = 2.0 / params.conversion_gain;
    let samples = analytic
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let lo = Complex64::from_polar(1.0, lo_phase_at(n, ratio, params.lo_phase));
            scale * (a * lo).re
        })
        .collect();
    SampledSignal::new(samples, rf_sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, n: usize, phase: f64) -> SampledSignal {
        SampledSignal::new(
            (0..n)
                .map(|i| (2.0 * PI * freq * i as f64 / fs + phase).cos())
                .collect(),
            fs,
        )
        .unwrap()
    }

    fn params() -> FrontendParams {
        FrontendParams {
            lo_freq: 8.0e9,
            lo_phase: 0.0,
            conversion_gain: 1.0,
            if_lowpass_cutoff: 2.75e9,
            nonlinearity: Nonlinearity::Linear,
        }
    }

    /// Inner product with a complex exponential at `freq`: |result| is the
    /// amplitude of that spectral line.
    fn line_amplitude(sig: &SampledSignal, freq: f64, skip: usize) -> f64 {
        let body = &sig.samples()[skip..sig.len() - skip];
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &v) in body.iter().enumerate() {
            let n = skip + i;
            let theta = 2.0 * PI * freq * n as f64 / sig.sample_rate();
            acc += v * Complex64::from_polar(1.0, -theta);
        }
        2.0 * acc.norm() / body.len() as f64
    }

    #[test]
    fn tone_downconverts_to_if_with_half_amplitude() {
        let rx = tone(10.0e9, 40.0e9, 8000, 0.0);
        let out = dpmzm_downconvert(&rx, None, &params()).unwrap();
        // Interior samples must follow cos(2π·2GHz·t)/2 within 1%.
        for i in 400..out.len() - 400 {
            let expected = 0.5 * (2.0 * PI * 2.0e9 * i as f64 / 40.0e9).cos();
            assert!(
                (out.samples()[i] - expected).abs() < 0.005,
                "sample {i}: {} vs {expected}",
                out.samples()[i]
            );
        }
    }

    #[test]
    fn lo_phase_appears_negated_on_the_if() {
        let rx = tone(10.0e9, 40.0e9, 8000, 0.0);
        let mut p = params();
        p.lo_phase = 0.7;
        let out = dpmzm_downconvert(&rx, None, &p).unwrap();
        for i in 400..out.len() - 400 {
            let expected = 0.5 * (2.0 * PI * 2.0e9 * i as f64 / 40.0e9 - 0.7).cos();
            assert!(
                (out.samples()[i] - expected).abs() < 0.005,
                "sample {i}: {} vs {expected}",
                out.samples()[i]
            );
        }
    }

    #[test]
    fn sum_frequency_image_is_rejected() {
        let rx = tone(10.0e9, 40.0e9, 16000, 0.3);
        let out = dpmzm_downconvert(&rx, None, &params()).unwrap();
        let wanted = line_amplitude(&out, 2.0e9, 500);
        let image = line_amplitude(&out, 18.0e9, 500);
        let rejection_db = 20.0 * (wanted / image).log10();
        assert!(
            rejection_db > 60.0,
            "image rejection only {rejection_db:.1} dB"
        );
    }

    #[test]
    fn perfect_reference_cancels_to_zero() {
        let rx = tone(10.0e9, 40.0e9, 4000, 1.1);
        let out = dpmzm_downconvert(&rx, Some(&rx), &params()).unwrap();
        let peak = out.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak < 1e-15, "residual peak {peak}");
    }

    #[test]
    fn linear_mode_distributes_over_subtraction() {
        let rx = tone(10.0e9, 40.0e9, 4000, 0.2);
        let r = tone(10.0e9, 40.0e9, 4000, 1.9);
        let joint = dpmzm_downconvert(&rx, Some(&r), &params()).unwrap();
        let rx_only = dpmzm_downconvert(&rx, None, &params()).unwrap();
        let ref_only = dpmzm_downconvert(&r, None, &params()).unwrap();
        for i in 0..joint.len() {
            let want = rx_only.samples()[i] - ref_only.samples()[i];
            assert!((joint.samples()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn small_modulation_index_approaches_linear() {
        let rx = tone(10.0e9, 40.0e9, 8000, 0.0);
        let linear = dpmzm_downconvert(&rx, None, &params()).unwrap();
        let mut p = params();
        p.nonlinearity = Nonlinearity::Sinusoidal {
            modulation_index: 0.05,
        };
        let soft = dpmzm_downconvert(&rx, None, &p).unwrap();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 400..rx.len() - 400 {
            num += (soft.samples()[i] - linear.samples()[i]).powi(2);
            den += linear.samples()[i].powi(2);
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.01, "relative deviation {rel} at β = 0.05");
    }

    #[test]
    fn large_modulation_index_compresses() {
        let rx = tone(10.0e9, 40.0e9, 8000, 0.0);
        let linear = dpmzm_downconvert(&rx, None, &params()).unwrap();
        let mut p = params();
        p.nonlinearity = Nonlinearity::Sinusoidal {
            modulation_index: 1.5,
        };
        let hard = dpmzm_downconvert(&rx, None, &p).unwrap();
        assert!(
            hard.power() < 0.95 * linear.power(),
            "sinusoidal transfer must compress: {} vs {}",
            hard.power(),
            linear.power()
        );
    }

    #[test]
    fn ref_path_attenuates_and_delays() {
        let r = tone(2.0e9, 10.0e9, 200, 0.4);
        let half = apply_ref_path(
            &r,
            &RefPathParams {
                attenuation_db: 20.0 * 2f64.log10(),
                delay_s: 0.0,
            },
        )
        .unwrap();
        for (a, b) in r.samples().iter().zip(half.samples()) {
            assert!((b - a / 2.0).abs() < 1e-12);
        }
        let shifted = apply_ref_path(
            &r,
            &RefPathParams {
                attenuation_db: 0.0,
                delay_s: 3.0e-10, // 3 samples at 10 GSa/s
            },
        )
        .unwrap();
        for i in 3..r.len() {
            assert!((shifted.samples()[i] - r.samples()[i - 3]).abs() < 1e-12);
        }
        assert!(apply_ref_path(
            &r,
            &RefPathParams {
                attenuation_db: -1.0,
                delay_s: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn upconvert_then_downconvert_round_trips() {
        // A band-limited IF reference survives the up/down trip to -60 dB.
        let fs_if = 10.0e9;
        let n = 5000;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / fs_if;
                (2.0 * PI * 2.0e9 * t).cos() + 0.4 * (2.0 * PI * 1.6e9 * t + 0.9).sin()
                    + 0.2 * (2.0 * PI * 2.4e9 * t + 0.2).cos()
            })
            .collect();
        let reference = SampledSignal::new(samples, fs_if).unwrap();
        let p = params();
        let rf = upconvert_reference(&reference, 40.0e9, &p).unwrap();
        assert_eq!(rf.len(), 4 * n);
        let back = dpmzm_downconvert(&rf, None, &p).unwrap();
        let down = crate::signal::decimate(&back, 4).unwrap();

        let guard = 400;
        let mut err = 0.0;
        let mut sig = 0.0;
        for i in guard..n - guard {
            err += (down.samples()[i] - reference.samples()[i]).powi(2);
            sig += reference.samples()[i].powi(2);
        }
        let rel_db = 10.0 * (err / sig).log10();
        assert!(rel_db < -60.0, "round-trip error {rel_db:.1} dB");
    }

    #[test]
    fn transmit_bandpass_passes_in_band_and_rejects_below_lo() {
        let fs = 40.0e9;
        let (low, high) = transmit_band(8.0e9, 10.0e9, fs);
        assert!(low > 8.0e9 && high == 13.0e9);

        // A tone at the carrier passes with unity gain.
        let in_band = tone(10.0e9, fs, 16000, 0.4);
        let passed = transmit_bandpass(&in_band, low, high).unwrap();
        let gain = line_amplitude(&passed, 10.0e9, 800);
        assert!((gain - 1.0).abs() < 0.01, "in-band gain {gain}");

        // A tone at the LO (just below the image-free band) is deep in the
        // stopband.
        let at_lo = tone(8.0e9, fs, 16000, 0.0);
        let stopped = transmit_bandpass(&at_lo, low, high).unwrap();
        let leak = line_amplitude(&stopped, 8.0e9, 800);
        assert!(
            20.0 * leak.log10() < -88.0,
            "leakage at the LO is only {:.1} dB",
            20.0 * leak.log10()
        );
    }

    #[test]
    fn transmit_bandpass_rejects_bad_bands() {
        let sig = tone(10.0e9, 40.0e9, 256, 0.0);
        assert!(transmit_bandpass(&sig, 13.0e9, 8.0e9).is_err());
        assert!(transmit_bandpass(&sig, 8.0e9, 19.9e9).is_err());
    }

    #[test]
    fn upconvert_rejects_non_integer_rate_ratio() {
        let r = tone(2.0e9, 10.0e9, 100, 0.0);
        assert!(upconvert_reference(&r, 25.0e9, &params()).is_err());
    }

    #[test]
    fn params_are_validated() {
        let rx = tone(10.0e9, 40.0e9, 100, 0.0);
        let mut p = params();
        p.conversion_gain = 0.0;
        assert!(dpmzm_downconvert(&rx, None, &p).is_err());
        let mut p = params();
        p.if_lowpass_cutoff = 20.0e9;
        assert!(dpmzm_downconvert(&rx, None, &p).is_err());
        let mut p = params();
        p.nonlinearity = Nonlinearity::Sinusoidal {
            modulation_index: 2.0,
        };
        assert!(dpmzm_downconvert(&rx, None, &p).is_err());
    }
}
