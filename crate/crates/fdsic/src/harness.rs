//! Config-driven experiment runner: wires signals → channel → front end →
//! estimator → metrics, and emits reproducible reports.
//!
//! An experiment is described by one [`ExperimentConfig`] (TOML on disk,
//! units are Hz, ns, dB throughout) and executed by [`run_single`]:
//!
//! 1. generate per-antenna QPSK waveforms on the IF sample grid, raise them
//!    to RF with the single-sideband upconverter, and confine each to the
//!    image-free transmit band (see
//!    [`transmit_band`](crate::frontend::transmit_band)), plus the signal of
//!    interest when enabled;
//! 2. acquire the digital-domain copies the estimator sees by passing each
//!    radiated waveform through the linear downconversion chain — the same
//!    band shaping the receive capture gets, so the fit reduces to the
//!    multipath response alone;
//! 3. apply the multipath self-interference channel at RF, add receiver
//!    noise, compose the received scene;
//! 4. downconvert with the canceler idle to capture the interference;
//! 5. estimate the channel (adaptive order by default, fixed order on
//!    request), reconstruct the reference, and upconvert it to the canceler
//!    drive;
//! 6. re-run the front end with cancellation active;
//! 7. measure cancellation depth, spectra and EVM over the capture interior
//!    (filter edge transients trimmed).
//!
//! Every run is a pure function of `(config, seed)`: reports and CSV files
//! are byte-identical across repeats. Wall-clock time is carried in the
//! in-memory report only, never written to disk.
//!
//! [`run_sweep`] repeats a run across a list of values for one named
//! parameter (in parallel), and [`scenario_library`] provides the four
//! bundled multipath scenarios SI1–SI4.

use crate::channel::{add_awgn, compose_received, MultipathChannel, Tap};
use crate::error::{Error, Result};
use crate::estimator::{
    adaptive_order_loop, ls_estimate, reconstruct_reference, Block, ChannelEstimate, LsConfig,
    OrderTrace,
};
use crate::frontend::{
    apply_ref_path, dpmzm_downconvert, lpf_half_len, transmit_band, transmit_bandpass,
    tx_bandpass_half_len, upconvert_reference, FrontendParams, Nonlinearity, RefPathParams,
    LPF_TRANSITION, TX_BAND_TRANSITION,
};
use crate::metrics::{
    count_symbol_errors, evm_percent, sic_band, sic_depth, welch_psd, EvmReference, PsdEstimate,
    SicReport, WindowKind,
};
use crate::signal::{
    decimate, demodulate_qpsk, qpsk_modulate, shape_and_upconvert, CarrierPlan, PulseShape,
    SampledSignal, SymbolStream,
};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Seed stream for antenna transmit bits; antenna `j` uses stream `base + j`.
const STREAM_ANTENNA_BITS: u64 = 0;
/// Seed stream for signal-of-interest bits.
const STREAM_SOI_BITS: u64 = 1000;
/// Seed stream for receiver noise.
const STREAM_AWGN: u64 = 2000;

/// Splits the experiment seed into independent per-purpose seeds
/// (SplitMix64 finalizer), so adding noise never shifts the transmit bits.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_bits(count: usize, seed: u64) -> Vec<bool> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random()).collect()
}

/// Waveform and frequency plan of the node's own transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    /// Symbol rate of each antenna's QPSK stream, Hz.
    pub baud_rate_hz: f64,
    /// RF carrier, Hz.
    pub rf_carrier_hz: f64,
    /// Receiver local-oscillator frequency, Hz; the IF is `rf - lo`.
    pub lo_freq_hz: f64,
    /// Analog-domain simulation rate, Hz.
    pub rf_sample_rate_hz: f64,
    /// Digitizer rate, Hz; must divide the RF rate.
    pub if_sample_rate_hz: f64,
    /// Capture duration, seconds; rounded to a whole number of symbols.
    pub duration_s: f64,
    /// Transmit pulse shape (shared by the SI antennas and the SOI).
    pub pulse: PulseShape,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            baud_rate_hz: 1.0e9,
            rf_carrier_hz: 10.0e9,
            lo_freq_hz: 8.0e9,
            rf_sample_rate_hz: 40.0e9,
            if_sample_rate_hz: 10.0e9,
            duration_s: 4.5e-6,
            pulse: PulseShape::RectNrz,
        }
    }
}

/// Multipath profile of one transmit antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AntennaTaps {
    /// Path delays in nanoseconds, ascending, first entry is the direct path.
    pub delays_ns: Vec<f64>,
    /// Path gains in dB, one per delay.
    pub gains_db: Vec<f64>,
    /// Optional per-path phase rotations in radians (empty = all zero).
    pub phases_rad: Vec<f64>,
}

/// Remote signal of interest sharing the band with the self-interference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoiConfig {
    /// Received SOI power relative to the direct-path SI power, dB. There is
    /// no physical default — the link budget of the remote node is a free
    /// choice of the experiment.
    pub power_db: f64,
    /// SOI symbol rate, Hz.
    pub baud_rate_hz: f64,
    /// SOI carrier, Hz; `None` means co-channel with the SI carrier.
    pub carrier_hz: Option<f64>,
}

impl Default for SoiConfig {
    fn default() -> Self {
        Self {
            power_db: -15.0,
            baud_rate_hz: 1.0e9,
            carrier_hz: None,
        }
    }
}

/// Channel scenario: per-antenna multipath, receiver noise, optional SOI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Scenario label echoed into reports.
    pub name: String,
    /// One multipath profile per transmit antenna. An empty list is the
    /// null channel (no self-interference): estimation and depth are
    /// skipped and the run reports EVM only.
    pub antennas: Vec<AntennaTaps>,
    /// Receiver SNR in dB relative to the received SI power; `None` disables
    /// noise.
    pub snr_db: Option<f64>,
    /// Signal of interest; `None` disables it.
    pub soi: Option<SoiConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            antennas: Vec::new(),
            snr_db: None,
            soi: None,
        }
    }
}

/// Analog path between the reconstructed reference and the canceler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefPathConfig {
    /// Attenuation, dB (non-negative).
    pub attenuation_db: f64,
    /// Extra delay, nanoseconds (non-negative).
    pub delay_ns: f64,
}

impl Default for RefPathConfig {
    fn default() -> Self {
        Self {
            attenuation_db: 0.0,
            delay_ns: 0.0,
        }
    }
}

/// Behavioral front-end settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontendConfig {
    /// Local-oscillator phase at sample 0, radians.
    pub lo_phase_rad: f64,
    /// Amplitude gain of the downconversion chain.
    pub conversion_gain: f64,
    /// IF low-pass cutoff, Hz; `None` derives `if_freq + 4·baud` over all
    /// signals present, limited to what the digitizer can pass alias-free.
    pub if_lowpass_cutoff_hz: Option<f64>,
    /// Canceler-arm transfer curve.
    pub nonlinearity: Nonlinearity,
    /// Optional reference-path impairments (unknown to the estimator, so
    /// they degrade cancellation like a real cable would).
    pub ref_path: Option<RefPathConfig>,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            lo_phase_rad: 0.0,
            conversion_gain: 1.0,
            if_lowpass_cutoff_hz: None,
            nonlinearity: Nonlinearity::Linear,
            ref_path: None,
        }
    }
}

/// How the reconstructed reference is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CancellationMode {
    /// Upconvert the reference to RF and subtract in the analog front end
    /// (the photonic canceler path). Default.
    Analog,
    /// Subtract the reconstructed reference from the captured IF waveform
    /// digitally; isolates estimator quality from front-end effects.
    Digital,
    /// Drive the canceler with the true (noise-free) SI waveform instead of
    /// an estimate; upper-bounds every estimator result.
    Genie,
}

/// Band over which cancellation depth integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SicBandMode {
    /// Main lobe of the SI modulation: `if_freq ± 0.6·baud`. Default.
    MainLobe,
    /// Entire digitizer band `[0, if_rate/2]`.
    FullBand,
}

/// Parameter sweep attached to a config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    /// Parameter to vary; one of [`SWEEPABLE_PARAMS`].
    pub param: String,
    /// Values to run, in report order.
    pub values: Vec<f64>,
    /// Parallel workers; `None` uses up to four.
    pub workers: Option<usize>,
}

/// Parameters accepted by [`run_sweep`] / [`apply_sweep_value`].
pub const SWEEPABLE_PARAMS: &[&str] = &[
    "baud_rate_hz",
    "snr_db",
    "soi_power_db",
    "soi_baud_rate_hz",
    "fixed_order",
    "l_init",
    "gamma_min",
    "gamma_max",
    "max_iterations",
    "modulation_index",
    "seed",
];

/// Complete description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; all randomness (bits, noise) derives from it.
    pub seed: u64,
    /// Default output directory for reports (CLI `--out` overrides).
    pub output_dir: Option<String>,
    /// Skip the adaptive search and estimate at this fixed order.
    pub fixed_order: Option<usize>,
    /// Reference application mode.
    pub cancellation: CancellationMode,
    /// Depth measurement band.
    pub sic_band: SicBandMode,
    /// Waveform and frequency plan.
    pub signal: SignalConfig,
    /// Channel scenario.
    pub scenario: ScenarioConfig,
    /// Front-end settings.
    pub frontend: FrontendConfig,
    /// Adaptive-order estimator settings.
    pub estimator: LsConfig,
    /// Optional parameter sweep.
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: None,
            fixed_order: None,
            cancellation: CancellationMode::Analog,
            sic_band: SicBandMode::MainLobe,
            signal: SignalConfig::default(),
            scenario: ScenarioConfig::default(),
            frontend: FrontendConfig::default(),
            estimator: LsConfig::default(),
            sweep: None,
        }
    }
}

/// Frequency/sample plan derived from a validated config.
#[derive(Debug, Clone, Copy)]
struct SoiPlan {
    if_freq: f64,
    sps_if: usize,
    n_sym: usize,
}

#[derive(Debug, Clone, Copy)]
struct RunPlan {
    if_freq: f64,
    rf_oversample: usize,
    n_sym: usize,
    n_if: usize,
    lpf_cutoff: f64,
    /// Image-free radiated band applied to every transmit waveform, Hz.
    tx_band: (f64, f64),
    /// IF samples at the end of the capture polluted by filter edge
    /// transients and channel delay; metrics stop before them.
    tail_guard: usize,
    soi: Option<SoiPlan>,
}

impl ExperimentConfig {
    /// Parses a config from TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        Ok(cfg)
    }

    /// Reads and parses a config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Canonical TOML form; [`ExperimentConfig::from_toml_str`] of the output
    /// parses back to an equal config.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Validates every cross-field constraint without running anything.
    pub fn validate(&self) -> Result<()> {
        self.plan().map(drop)
    }

    fn plan(&self) -> Result<RunPlan> {
        let sig = &self.signal;
        for (name, v) in [
            ("baud_rate_hz", sig.baud_rate_hz),
            ("rf_carrier_hz", sig.rf_carrier_hz),
            ("lo_freq_hz", sig.lo_freq_hz),
            ("rf_sample_rate_hz", sig.rf_sample_rate_hz),
            ("if_sample_rate_hz", sig.if_sample_rate_hz),
            ("duration_s", sig.duration_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "signal.{name} must be positive and finite, got {v}"
                )));
            }
        }
        let carrier = CarrierPlan::new(sig.rf_carrier_hz, sig.lo_freq_hz)?;
        carrier.check_if_band(sig.if_sample_rate_hz, sig.baud_rate_hz)?;
        if sig.rf_sample_rate_hz < 2.0 * (sig.rf_carrier_hz + sig.baud_rate_hz) {
            return Err(Error::Config(format!(
                "signal.rf_sample_rate_hz = {} cannot represent the {} Hz carrier",
                sig.rf_sample_rate_hz, sig.rf_carrier_hz
            )));
        }
        let ratio = sig.rf_sample_rate_hz / sig.if_sample_rate_hz;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio < 1.0 {
            return Err(Error::Config(format!(
                "rf_sample_rate_hz must be an integer multiple of if_sample_rate_hz, \
                 got ratio {ratio}"
            )));
        }
        let rf_oversample = ratio.round() as usize;

        let sps_if_f = sig.if_sample_rate_hz / sig.baud_rate_hz;
        if (sps_if_f - sps_if_f.round()).abs() > 1e-6 || sps_if_f < 1.0 {
            return Err(Error::Config(format!(
                "if_sample_rate_hz / baud_rate_hz must be a positive integer, got {sps_if_f}"
            )));
        }
        let sps_if: usize = sps_if_f.round() as usize;
        let n_sym = (sig.duration_s * sig.baud_rate_hz).round() as usize;
        if n_sym == 0 {
            return Err(Error::Config(
                "duration_s is shorter than one symbol".into(),
            ));
        }
        let n_if = n_sym * sps_if + 2 * sig.pulse.guard_samples(sps_if);

        // Scenario.
        let m = self.scenario.antennas.len();
        for (j, a) in self.scenario.antennas.iter().enumerate() {
            if a.delays_ns.is_empty()
                || a.delays_ns.len() != a.gains_db.len()
                || (!a.phases_rad.is_empty() && a.phases_rad.len() != a.delays_ns.len())
            {
                return Err(Error::Config(format!(
                    "scenario.antennas[{j}]: delays_ns, gains_db (and phases_rad if given) \
                     must have equal non-zero lengths"
                )));
            }
        }
        let max_delay_s = self
            .scenario
            .antennas
            .iter()
            .flat_map(|a| &a.delays_ns)
            .fold(0.0f64, |acc, d| acc.max(d * 1e-9));
        // The group-delay-compensated filters smear the capture's final
        // samples (their "future" taps run past the record), and delayed
        // multipath copies push that smear earlier; measurements and the
        // estimation block must stay clear of it.
        let tail_guard = (lpf_half_len() + tx_bandpass_half_len()).div_ceil(rf_oversample)
            + (max_delay_s * sig.if_sample_rate_hz).ceil() as usize
            + 16;
        if m > 0 {
            // Constructing the channel runs its own validation.
            build_channel(&self.scenario)?;
            if m != self.estimator.num_antennas {
                return Err(Error::Config(format!(
                    "scenario has {m} antennas but estimator.num_antennas = {}",
                    self.estimator.num_antennas
                )));
            }
            self.estimator.validate()?;
            let needed = self.estimator.block_start + self.estimator.block_size;
            let usable = n_if.saturating_sub(tail_guard);
            if needed > usable {
                return Err(Error::Config(format!(
                    "estimation block needs {needed} IF samples but the capture keeps only \
                     {usable} ({n_if} minus a {tail_guard}-sample tail transient); increase \
                     signal.duration_s"
                )));
            }
            if let Some(order) = self.fixed_order {
                if order == 0 || m * order > self.estimator.block_size {
                    return Err(Error::Config(format!(
                        "fixed_order = {order} does not fit the {} -sample block",
                        self.estimator.block_size
                    )));
                }
            }
            let n_rf = n_if * rf_oversample;
            if max_delay_s * sig.rf_sample_rate_hz >= n_rf as f64 {
                return Err(Error::Config(
                    "channel delay exceeds the capture duration".into(),
                ));
            }
        } else if self.scenario.soi.is_none() {
            return Err(Error::Config(
                "scenario has no antennas and no SOI; nothing to simulate".into(),
            ));
        }
        if matches!(self.cancellation, CancellationMode::Genie) && m == 0 {
            return Err(Error::Config(
                "genie cancellation requires a self-interference channel".into(),
            ));
        }

        // SOI plan.
        let soi = match &self.scenario.soi {
            None => None,
            Some(sc) => {
                if !sc.power_db.is_finite() && sc.power_db != f64::NEG_INFINITY {
                    return Err(Error::Config(format!(
                        "scenario.soi.power_db must be finite or -inf, got {}",
                        sc.power_db
                    )));
                }
                let carrier_hz = sc.carrier_hz.unwrap_or(sig.rf_carrier_hz);
                let plan = CarrierPlan::new(carrier_hz, sig.lo_freq_hz)?;
                plan.check_if_band(sig.if_sample_rate_hz, sc.baud_rate_hz)?;
                if sig.rf_sample_rate_hz < 2.0 * (carrier_hz + sc.baud_rate_hz) {
                    return Err(Error::Config(format!(
                        "rf_sample_rate_hz cannot represent the SOI carrier {carrier_hz} Hz"
                    )));
                }
                let sps_f = sig.if_sample_rate_hz / sc.baud_rate_hz;
                if (sps_f - sps_f.round()).abs() > 1e-6 || sps_f < 1.0 {
                    return Err(Error::Config(format!(
                        "if_sample_rate_hz / soi.baud_rate_hz must be a positive integer, \
                         got {sps_f}"
                    )));
                }
                let sps_if_soi = sps_f.round() as usize;
                let guard = sig.pulse.guard_samples(sps_if_soi);
                let payload = n_if as i64 - 2 * guard as i64;
                if payload <= 0 || payload as usize % sps_if_soi != 0 {
                    return Err(Error::Config(format!(
                        "the {n_if}-sample capture does not hold a whole number of SOI \
                         symbols at {} Bd; adjust duration_s or the SOI baud rate",
                        sc.baud_rate_hz
                    )));
                }
                let n_sym_soi = payload as usize / sps_if_soi;
                Some(SoiPlan {
                    if_freq: carrier_hz - sig.lo_freq_hz,
                    sps_if: sps_if_soi,
                    n_sym: n_sym_soi,
                })
            }
        };

        // Front end.
        let fe = &self.frontend;
        if !(fe.conversion_gain.is_finite() && fe.conversion_gain > 0.0) {
            return Err(Error::Config(format!(
                "frontend.conversion_gain must be positive, got {}",
                fe.conversion_gain
            )));
        }
        let if_freq = sig.rf_carrier_hz - sig.lo_freq_hz;
        let transition = LPF_TRANSITION * sig.rf_sample_rate_hz;
        let auto_cutoff = {
            // Wide enough to keep pulse edges crisp, capped at what the
            // digitizer can pass alias-free.
            let mut c = if_freq + 4.0 * sig.baud_rate_hz;
            if let Some(sp) = &soi {
                c = c.max(sp.if_freq + 4.0 * self.scenario.soi.as_ref().unwrap().baud_rate_hz);
            }
            c.min(sig.if_sample_rate_hz / 2.0 - transition)
        };
        let lpf_cutoff = fe.if_lowpass_cutoff_hz.unwrap_or(auto_cutoff);
        if lpf_cutoff + transition > sig.if_sample_rate_hz / 2.0 {
            return Err(Error::Config(format!(
                "IF low-pass cutoff {lpf_cutoff} Hz (+{transition} Hz transition) leaks past \
                 the digitizer Nyquist {} Hz; decimation would alias",
                sig.if_sample_rate_hz / 2.0
            )));
        }
        let tx_band = transmit_band(sig.lo_freq_hz, sig.if_sample_rate_hz, sig.rf_sample_rate_hz);
        let tx_margin = 0.5 * TX_BAND_TRANSITION * sig.rf_sample_rate_hz;
        if tx_band.0 >= tx_band.1 || tx_band.1 + tx_margin >= sig.rf_sample_rate_hz / 2.0 {
            return Err(Error::Config(format!(
                "transmit band [{}, {}] Hz does not fit below the RF Nyquist {} Hz; raise \
                 rf_sample_rate_hz",
                tx_band.0,
                tx_band.1,
                sig.rf_sample_rate_hz / 2.0
            )));
        }
        if let Some(rp) = &fe.ref_path {
            if !(rp.attenuation_db.is_finite() && rp.attenuation_db >= 0.0)
                || !(rp.delay_ns.is_finite() && rp.delay_ns >= 0.0)
            {
                return Err(Error::Config(
                    "frontend.ref_path attenuation and delay must be non-negative".into(),
                ));
            }
        }

        // Sweep.
        if let Some(sw) = &self.sweep {
            if !SWEEPABLE_PARAMS.contains(&sw.param.as_str()) {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{}'; valid: {}",
                    sw.param,
                    SWEEPABLE_PARAMS.join(", ")
                )));
            }
            if sw.values.is_empty() {
                return Err(Error::Config("sweep.values must not be empty".into()));
            }
            if sw.values.iter().any(|v| v.is_nan()) {
                return Err(Error::Config("sweep.values must not contain NaN".into()));
            }
            if sw.workers == Some(0) {
                return Err(Error::Config("sweep.workers must be >= 1".into()));
            }
        }

        Ok(RunPlan {
            if_freq,
            rf_oversample,
            n_sym,
            n_if,
            lpf_cutoff,
            tx_band,
            tail_guard,
            soi,
        })
    }

    fn frontend_params(&self, lpf_cutoff: f64) -> FrontendParams {
        FrontendParams {
            lo_freq: self.signal.lo_freq_hz,
            lo_phase: self.frontend.lo_phase_rad,
            conversion_gain: self.frontend.conversion_gain,
            if_lowpass_cutoff: lpf_cutoff,
            nonlinearity: self.frontend.nonlinearity,
        }
    }
}

fn build_channel(scenario: &ScenarioConfig) -> Result<MultipathChannel> {
    let antennas = scenario
        .antennas
        .iter()
        .map(|a| {
            a.delays_ns
                .iter()
                .zip(&a.gains_db)
                .enumerate()
                .map(|(i, (&d, &g))| Tap {
                    delay_s: d * 1e-9,
                    gain_db: g,
                    phase_rad: a.phases_rad.get(i).copied().unwrap_or(0.0),
                })
                .collect()
        })
        .collect();
    MultipathChannel::new(antennas, scenario.snr_db)
}

/// EVM measurements of the SOI with cancellation off and on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvmReport {
    /// Data-aided EVM with the canceler idle, percent.
    pub off_percent: f64,
    /// Data-aided EVM with cancellation active, percent.
    pub on_percent: f64,
    /// Symbol decision errors with cancellation active.
    pub symbol_errors: usize,
    /// Symbols measured (transient head excluded).
    pub num_symbols: usize,
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// The exact configuration that ran.
    pub config: ExperimentConfig,
    /// Canonical TOML echo of the configuration.
    pub config_echo: String,
    /// Channel estimate (absent in genie mode and on the null channel).
    pub estimate: Option<ChannelEstimate>,
    /// Adaptive-order trace (absent for fixed-order, genie and null runs).
    pub trace: Option<OrderTrace>,
    /// Mean squared value of the estimation capture.
    pub capture_power: Option<f64>,
    /// Cancellation depth (absent on the null channel).
    pub sic: Option<SicReport>,
    /// Spectrum of the measurement window with cancellation off.
    pub psd_off: Option<PsdEstimate>,
    /// Spectrum with cancellation on.
    pub psd_on: Option<PsdEstimate>,
    /// SOI quality (present when the SOI is enabled).
    pub evm: Option<EvmReport>,
    /// Elapsed execution time. Never written to report files, which are
    /// byte-deterministic functions of `(config, seed)`.
    pub wall_clock: std::time::Duration,
}

/// A pipeline failure, naming the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct RunError {
    /// Pipeline stage: `config`, `signal`, `channel`, `capture`,
    /// `estimator`, `reference`, `cancel` or `metrics`.
    pub stage: &'static str,
    /// Underlying error.
    #[source]
    pub source: Error,
}

fn at(stage: &'static str) -> impl Fn(Error) -> RunError {
    move |source| RunError { stage, source }
}

/// Measurement window: samples `[start, end)` of a capture.
fn window_of(sig: &SampledSignal, start: usize, end: usize) -> Result<SampledSignal> {
    SampledSignal::new(sig.samples()[start..end].to_vec(), sig.sample_rate())
}

fn measurement_psd(sig: &SampledSignal) -> Result<PsdEstimate> {
    let segment = 4096usize.min(sig.len() & !1);
    welch_psd(sig, segment, 0.5, WindowKind::Hann)
}

/// Runs one experiment end to end. See the module docs for the pipeline.
pub fn run_single(cfg: &ExperimentConfig) -> std::result::Result<ExperimentReport, RunError> {
    let started = Instant::now();
    let plan = cfg.plan().map_err(at("config"))?;
    let sig = &cfg.signal;
    let pulse = &sig.pulse;
    let fe_params = cfg.frontend_params(plan.lpf_cutoff);
    let m = cfg.scenario.antennas.len();
    let k = plan.rf_oversample;

    // --- Transmit waveforms -------------------------------------------------
    // Each drive is shaped on the IF sample grid, raised to RF by the
    // single-sideband upconverter (so the digitizer grid and the radiated
    // waveform stay commensurate — a rate-mismatched synthesis would skew
    // every symbol by a fraction of a sample), and confined to the image-free
    // transmit band. The estimator's digital-domain copy of each antenna is
    // then acquired through the *linear* downconversion chain: regressors and
    // receive capture share identical band shaping, so the least-squares fit
    // reduces to the multipath response alone.
    let linear_params = FrontendParams {
        nonlinearity: Nonlinearity::Linear,
        ..fe_params
    };
    let radiated = |symbols: &SymbolStream,
                    if_freq_hz: f64|
     -> std::result::Result<SampledSignal, RunError> {
        let shaped = shape_and_upconvert(symbols, if_freq_hz, sig.if_sample_rate_hz, pulse)
            .map_err(at("signal"))?;
        let rf = upconvert_reference(&shaped, sig.rf_sample_rate_hz, &linear_params)
            .map_err(at("signal"))?;
        transmit_bandpass(&rf, plan.tx_band.0, plan.tx_band.1).map_err(at("signal"))
    };
    let mut tx_rf: Vec<SampledSignal> = Vec::with_capacity(m);
    let mut x_if: Vec<SampledSignal> = Vec::with_capacity(m);
    for j in 0..m {
        let bits = random_bits(
            2 * plan.n_sym,
            derive_seed(cfg.seed, STREAM_ANTENNA_BITS + j as u64),
        );
        let symbols = qpsk_modulate(&bits, sig.baud_rate_hz).map_err(at("signal"))?;
        let tx = radiated(&symbols, plan.if_freq)?;
        let copy = dpmzm_downconvert(&tx, None, &linear_params).map_err(at("signal"))?;
        x_if.push(decimate(&copy, k).map_err(at("signal"))?);
        tx_rf.push(tx);
    }
    let soi_parts = match (&cfg.scenario.soi, &plan.soi) {
        (Some(sc), Some(sp)) => {
            let bits = random_bits(2 * sp.n_sym, derive_seed(cfg.seed, STREAM_SOI_BITS));
            let symbols = qpsk_modulate(&bits, sc.baud_rate_hz).map_err(at("signal"))?;
            let rf = radiated(&symbols, sp.if_freq)?;
            Some((symbols, rf, *sp, sc.power_db))
        }
        _ => None,
    };

    // --- Channel and received scene -----------------------------------------
    // si_clean: noise-free SI at RF (the genie reference); si_noisy: with
    // receiver noise (the SOI-free scene used for depth); received: what the
    // receiver actually sees.
    let (received_rf, si_noisy_rf, si_clean_rf) = if m > 0 {
        let channel = build_channel(&cfg.scenario).map_err(at("channel"))?;
        let si_clean = channel.apply(&tx_rf).map_err(at("channel"))?;
        let si_noisy = match cfg.scenario.snr_db {
            Some(snr) => add_awgn(&si_clean, snr, derive_seed(cfg.seed, STREAM_AWGN))
                .map_err(at("channel"))?,
            None => si_clean.clone(),
        };
        let received = match &soi_parts {
            Some((_, soi_rf, _, power_db)) => {
                let direct_power = channel
                    .direct_paths_only()
                    .apply(&tx_rf)
                    .map_err(at("channel"))?
                    .power();
                compose_received(&si_noisy, Some(soi_rf), *power_db, direct_power)
                    .map_err(at("channel"))?
            }
            None => si_noisy.clone(),
        };
        (received, Some(si_noisy), Some(si_clean))
    } else {
        // Null channel: the scene is the SOI alone, scaled against a unit
        // direct-path reference.
        let (_, soi_rf, _, power_db) = soi_parts.as_ref().expect("validated: SOI required");
        let scale = (10f64.powf(power_db / 10.0) / soi_rf.power()).sqrt();
        let samples = soi_rf.samples().iter().map(|v| v * scale).collect();
        let received =
            SampledSignal::new(samples, sig.rf_sample_rate_hz).map_err(at("channel"))?;
        (received, None, None)
    };

    // --- Capture with the canceler idle --------------------------------------
    let capture = |input_rf: &SampledSignal| -> std::result::Result<SampledSignal, RunError> {
        let down = dpmzm_downconvert(input_rf, None, &fe_params).map_err(at("capture"))?;
        decimate(&down, k).map_err(at("capture"))
    };
    let y_off = capture(&received_rf)?;
    debug_assert_eq!(y_off.len(), plan.n_if);

    // --- Estimation ----------------------------------------------------------
    let (estimate, trace) = if m == 0 || matches!(cfg.cancellation, CancellationMode::Genie) {
        (None, None)
    } else if let Some(order) = cfg.fixed_order {
        let block = Block {
            start: cfg.estimator.block_start,
            len: cfg.estimator.block_size,
        };
        let est = ls_estimate(&x_if, &y_off, order, block).map_err(at("estimator"))?;
        (Some(est), None)
    } else {
        let (est, trace) =
            adaptive_order_loop(&x_if, &y_off, &cfg.estimator).map_err(at("estimator"))?;
        (Some(est), Some(trace))
    };
    let capture_power = if m > 0 {
        let b = &cfg.estimator;
        let s = &y_off.samples()[b.block_start..b.block_start + b.block_size];
        Some(s.iter().map(|v| v * v).sum::<f64>() / b.block_size as f64)
    } else {
        None
    };

    // --- Reference and cancellation ------------------------------------------
    enum Canceler {
        AnalogRef(SampledSignal),
        DigitalRef(SampledSignal),
        None,
    }
    let canceler = if m == 0 {
        Canceler::None
    } else {
        match cfg.cancellation {
            CancellationMode::Genie => {
                Canceler::AnalogRef(si_clean_rf.clone().expect("SI present"))
            }
            mode => {
                let est = estimate.as_ref().expect("estimate present when SI present");
                let full = Block {
                    start: 0,
                    len: plan.n_if,
                };
                let ref_if =
                    reconstruct_reference(&x_if, est, full).map_err(at("reference"))?;
                match mode {
                    CancellationMode::Digital => Canceler::DigitalRef(ref_if),
                    _ => {
                        let mut ref_rf =
                            upconvert_reference(&ref_if, sig.rf_sample_rate_hz, &fe_params)
                                .map_err(at("reference"))?;
                        if let Some(rp) = &cfg.frontend.ref_path {
                            let params = RefPathParams {
                                attenuation_db: rp.attenuation_db,
                                delay_s: rp.delay_ns * 1e-9,
                            };
                            ref_rf =
                                apply_ref_path(&ref_rf, &params).map_err(at("reference"))?;
                        }
                        Canceler::AnalogRef(ref_rf)
                    }
                }
            }
        }
    };
    let cancel = |input_rf: &SampledSignal,
                  input_off_if: &SampledSignal|
     -> std::result::Result<SampledSignal, RunError> {
        match &canceler {
            Canceler::None => Ok(input_off_if.clone()),
            Canceler::AnalogRef(ref_rf) => {
                let down = dpmzm_downconvert(input_rf, Some(ref_rf), &fe_params)
                    .map_err(at("cancel"))?;
                decimate(&down, k).map_err(at("cancel"))
            }
            Canceler::DigitalRef(ref_if) => {
                let samples = input_off_if
                    .samples()
                    .iter()
                    .zip(ref_if.samples())
                    .map(|(y, r)| y - r)
                    .collect();
                SampledSignal::new(samples, input_off_if.sample_rate()).map_err(at("cancel"))
            }
        }
    };
    let y_on = cancel(&received_rf, &y_off)?;

    // --- Metrics --------------------------------------------------------------
    // The measurement window skips the estimation block's lead-in (which
    // absorbs the reconstruction spin-up and filter edges) and stops before
    // the capture's tail transient.
    let skip = cfg.estimator.block_start.min(plan.n_if.saturating_sub(16));
    let end = plan
        .n_if
        .saturating_sub(plan.tail_guard)
        .clamp(skip + 16.min(plan.n_if - skip), plan.n_if);
    let (sic, psd_off, psd_on) = if m > 0 {
        // Depth is measured on the SOI-free scene so the surviving SOI is
        // not mistaken for uncancelled interference.
        let (depth_off, depth_on) = if soi_parts.is_some() {
            let base = si_noisy_rf.as_ref().expect("SI present");
            let off = capture(base)?;
            let on = cancel(base, &off)?;
            (off, on)
        } else {
            (y_off.clone(), y_on.clone())
        };
        let off_tail = window_of(&depth_off, skip, end).map_err(at("metrics"))?;
        let on_tail = window_of(&depth_on, skip, end).map_err(at("metrics"))?;
        let band = match cfg.sic_band {
            SicBandMode::MainLobe => sic_band(plan.if_freq, sig.baud_rate_hz),
            SicBandMode::FullBand => (0.0, sig.if_sample_rate_hz / 2.0),
        };
        let sic = sic_depth(&off_tail, &on_tail, band).map_err(at("metrics"))?;
        let psd_off = measurement_psd(&off_tail).map_err(at("metrics"))?;
        let psd_on = measurement_psd(&on_tail).map_err(at("metrics"))?;
        (Some(sic), Some(psd_off), Some(psd_on))
    } else {
        (None, None, None)
    };

    let evm = match &soi_parts {
        None => None,
        Some((tx_symbols, _, sp, _)) => {
            let demod = |y: &SampledSignal| -> Result<SymbolStream> {
                demodulate_qpsk(
                    y,
                    sp.if_freq,
                    tx_symbols.baud_rate(),
                    pulse,
                    -cfg.frontend.lo_phase_rad,
                    0,
                )
            };
            let rx_off = demod(&y_off).map_err(at("metrics"))?;
            let rx_on = demod(&y_on).map_err(at("metrics"))?;
            let skip_sym = (skip.div_ceil(sp.sps_if) + 1).min(rx_on.len().saturating_sub(2));
            let end_sym = (rx_on.len() - plan.tail_guard.div_ceil(sp.sps_if).min(rx_on.len() - 1))
                .max(skip_sym + 1);
            // Renormalize within the window: the demodulator's gain reference
            // includes head/tail symbols the measurement excludes.
            let slice_stream = |s: &SymbolStream| -> Result<SymbolStream> {
                let body = &s.symbols()[skip_sym..end_sym];
                let energy =
                    body.iter().map(|v| v.norm_sqr()).sum::<f64>() / body.len() as f64;
                let gain = if energy > 0.0 { energy.sqrt().recip() } else { 1.0 };
                SymbolStream::from_received(
                    body.iter().map(|v| *v * gain).collect(),
                    s.baud_rate(),
                )
            };
            let rx_off = slice_stream(&rx_off).map_err(at("metrics"))?;
            let rx_on = slice_stream(&rx_on).map_err(at("metrics"))?;
            let tx_tail = SymbolStream::from_qpsk_points(
                tx_symbols.symbols()[skip_sym..end_sym].to_vec(),
                tx_symbols.baud_rate(),
            )
            .map_err(at("metrics"))?;
            let off_percent = evm_percent(&rx_off, EvmReference::DataAided(tx_tail.symbols()))
                .map_err(at("metrics"))?;
            let on_percent = evm_percent(&rx_on, EvmReference::DataAided(tx_tail.symbols()))
                .map_err(at("metrics"))?;
            let symbol_errors = count_symbol_errors(&rx_on, &tx_tail).map_err(at("metrics"))?;
            Some(EvmReport {
                off_percent,
                on_percent,
                symbol_errors,
                num_symbols: tx_tail.len(),
            })
        }
    };

    Ok(ExperimentReport {
        config: cfg.clone(),
        config_echo: cfg.to_toml_string(),
        estimate,
        trace,
        capture_power,
        sic,
        psd_off,
        psd_on,
        evm,
        wall_clock: started.elapsed(),
    })
}

fn db_or_neg_inf(ratio: f64) -> String {
    if ratio > 0.0 {
        format!("{:.4}", 10.0 * ratio.log10())
    } else {
        "-inf".to_string()
    }
}

impl ExperimentReport {
    /// Flat `key=value` summary, one datum per line, stable key order.
    pub fn summary_text(&self) -> String {
        let cfg = &self.config;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("scenario", cfg.scenario.name.clone());
        kv("seed", cfg.seed.to_string());
        kv(
            "cancellation",
            match cfg.cancellation {
                CancellationMode::Analog => "analog".into(),
                CancellationMode::Digital => "digital".into(),
                CancellationMode::Genie => "genie".into(),
            },
        );
        kv("num_antennas", cfg.scenario.antennas.len().to_string());
        kv("baud_rate_hz", cfg.signal.baud_rate_hz.to_string());
        kv("rf_carrier_hz", cfg.signal.rf_carrier_hz.to_string());
        kv("lo_freq_hz", cfg.signal.lo_freq_hz.to_string());
        kv(
            "if_freq_hz",
            (cfg.signal.rf_carrier_hz - cfg.signal.lo_freq_hz).to_string(),
        );
        kv("rf_sample_rate_hz", cfg.signal.rf_sample_rate_hz.to_string());
        kv("if_sample_rate_hz", cfg.signal.if_sample_rate_hz.to_string());
        if let Some(snr) = cfg.scenario.snr_db {
            kv("snr_db", snr.to_string());
        }
        if let Some(soi) = &cfg.scenario.soi {
            kv("soi_power_db", soi.power_db.to_string());
            kv("soi_baud_rate_hz", soi.baud_rate_hz.to_string());
        }
        if let Some(order) = cfg.fixed_order {
            kv("fixed_order", order.to_string());
        }
        if let Some(est) = &self.estimate {
            kv("final_order", est.order().to_string());
            if let Some(trace) = &self.trace {
                kv("converged", trace.converged().to_string());
                kv("iterations", trace.records().len().to_string());
            }
            if let Some(p) = self.capture_power {
                if p > 0.0 {
                    kv("residual_db", db_or_neg_inf(est.residual_power() / p));
                }
            }
        }
        if let Some(sic) = &self.sic {
            kv("sic_band_lo_hz", sic.band_hz.0.to_string());
            kv("sic_band_hi_hz", sic.band_hz.1.to_string());
            kv("depth_db", format!("{:.4}", sic.depth_db));
            kv("power_before_db", format!("{:.4}", sic.power_before_db));
            kv(
                "power_after_db",
                if sic.power_after_db.is_finite() {
                    format!("{:.4}", sic.power_after_db)
                } else {
                    "-inf".into()
                },
            );
            kv("depth_capped", sic.capped.to_string());
        }
        if let Some(evm) = &self.evm {
            kv("evm_off_percent", format!("{:.4}", evm.off_percent));
            kv("evm_on_percent", format!("{:.4}", evm.on_percent));
            kv("symbol_errors", evm.symbol_errors.to_string());
            kv("evm_symbols", evm.num_symbols.to_string());
        }
        s
    }

    /// Writes `config.toml`, `summary.txt` and the applicable CSVs
    /// (`trace.csv`, `psd_off.csv`, `psd_on.csv`) into `dir`, creating it if
    /// needed. All files are byte-deterministic.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), &self.config_echo)?;
        std::fs::write(dir.join("summary.txt"), self.summary_text())?;
        if let Some(trace) = &self.trace {
            std::fs::write(dir.join("trace.csv"), trace.to_csv())?;
        }
        if let Some(psd) = &self.psd_off {
            std::fs::write(dir.join("psd_off.csv"), psd_to_csv(psd))?;
        }
        if let Some(psd) = &self.psd_on {
            std::fs::write(dir.join("psd_on.csv"), psd_to_csv(psd))?;
        }
        Ok(())
    }
}

/// CSV form of a PSD: header `freq_hz,power_db`, one row per bin.
pub fn psd_to_csv(psd: &PsdEstimate) -> String {
    let mut out = String::from("freq_hz,power_db\n");
    for (f, db) in psd.freqs().iter().zip(psd.density_db()) {
        let _ = writeln!(out, "{f},{db:.4}");
    }
    out
}

/// Returns `cfg` with the named parameter set to `value`.
///
/// Accepted names are listed in [`SWEEPABLE_PARAMS`]; integer-valued
/// parameters round the value.
pub fn apply_sweep_value(
    cfg: &ExperimentConfig,
    param: &str,
    value: f64,
) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    out.sweep = None;
    match param {
        "baud_rate_hz" => out.signal.baud_rate_hz = value,
        "snr_db" => out.scenario.snr_db = Some(value),
        "soi_power_db" => match &mut out.scenario.soi {
            Some(soi) => soi.power_db = value,
            None => {
                return Err(Error::Config(
                    "cannot sweep soi_power_db: scenario has no SOI".into(),
                ))
            }
        },
        "soi_baud_rate_hz" => match &mut out.scenario.soi {
            Some(soi) => soi.baud_rate_hz = value,
            None => {
                return Err(Error::Config(
                    "cannot sweep soi_baud_rate_hz: scenario has no SOI".into(),
                ))
            }
        },
        "fixed_order" => out.fixed_order = Some(value.round() as usize),
        "l_init" => out.estimator.l_init = value.round() as usize,
        "gamma_min" => out.estimator.gamma_min = value,
        "gamma_max" => out.estimator.gamma_max = value,
        "max_iterations" => out.estimator.max_iterations = value.round() as usize,
        "modulation_index" => {
            out.frontend.nonlinearity = Nonlinearity::Sinusoidal {
                modulation_index: value,
            }
        }
        "seed" => out.seed = value.round() as u64,
        _ => {
            return Err(Error::Config(format!(
                "unknown sweep parameter '{param}'; valid: {}",
                SWEEPABLE_PARAMS.join(", ")
            )))
        }
    }
    Ok(out)
}

/// One executed point of a sweep.
#[derive(Debug)]
pub struct SweepPoint {
    /// The swept parameter's value for this point.
    pub value: f64,
    /// The run's outcome; failures are recorded, they do not abort the sweep.
    pub report: std::result::Result<ExperimentReport, RunError>,
}

/// Runs the sweep attached to `cfg` (one [`run_single`] per value, in
/// parallel, results in input order).
pub fn run_sweep(cfg: &ExperimentConfig) -> std::result::Result<Vec<SweepPoint>, RunError> {
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| at("config")(Error::Config("config has no [sweep] section".into())))?;
    cfg.plan().map_err(at("config"))?;
    let run_all = || {
        spec.values
            .par_iter()
            .map(|&value| SweepPoint {
                value,
                report: apply_sweep_value(cfg, &spec.param, value)
                    .map_err(at("config"))
                    .and_then(|c| run_single(&c)),
            })
            .collect::<Vec<_>>()
    };
    let workers = spec.workers.unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(4)
    });
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| at("config")(Error::Config(format!("cannot build worker pool: {e}"))))?;
    Ok(pool.install(run_all))
}

/// Summary CSV for a sweep: one row per point, header
/// `param,value,status,final_order,converged,residual_db,depth_db,evm_off_percent,evm_on_percent,symbol_errors`.
/// Failed points carry the stage name in `status` and empty metric cells.
pub fn sweep_summary_csv(param: &str, points: &[SweepPoint]) -> String {
    let mut out = String::from(
        "param,value,status,final_order,converged,residual_db,depth_db,\
         evm_off_percent,evm_on_percent,symbol_errors\n",
    );
    for p in points {
        match &p.report {
            Ok(r) => {
                let order = r
                    .estimate
                    .as_ref()
                    .map(|e| e.order().to_string())
                    .unwrap_or_default();
                let converged = r
                    .trace
                    .as_ref()
                    .map(|t| t.converged().to_string())
                    .unwrap_or_default();
                let residual = match (&r.estimate, r.capture_power) {
                    (Some(e), Some(cp)) if cp > 0.0 => db_or_neg_inf(e.residual_power() / cp),
                    _ => String::new(),
                };
                let depth = r
                    .sic
                    .as_ref()
                    .map(|s| format!("{:.4}", s.depth_db))
                    .unwrap_or_default();
                let (evm_off, evm_on, errors) = r
                    .evm
                    .as_ref()
                    .map(|e| {
                        (
                            format!("{:.4}", e.off_percent),
                            format!("{:.4}", e.on_percent),
                            e.symbol_errors.to_string(),
                        )
                    })
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{param},{},ok,{order},{converged},{residual},{depth},{evm_off},{evm_on},{errors}",
                    p.value
                );
            }
            Err(e) => {
                let _ = writeln!(out, "{param},{},{},,,,,,,", p.value, e.stage);
            }
        }
    }
    out
}

/// Writes a sweep: `sweep.csv` plus one `point_NN/` report directory per
/// successful point.
pub fn write_sweep(param: &str, points: &[SweepPoint], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("sweep.csv"), sweep_summary_csv(param, points))?;
    for (i, p) in points.iter().enumerate() {
        if let Ok(report) = &p.report {
            report.write(&dir.join(format!("point_{i:02}")))?;
        }
    }
    Ok(())
}

/// The four bundled multipath scenarios.
///
/// SI1 is fully specified: antenna 1 paths at 0/10/20/30 ns with gains
/// 0/−3.09/−10.45/−20 dB, antenna 2 at 0/16/24/28 ns with gains
/// 0/−3.74/−9.12/−16.48 dB. SI2–SI4 keep SI1's gain profiles and scale its
/// delay vectors so the maximum excess delay becomes 28, 40 and 21 ns
/// respectively (rounded to whole nanoseconds — the digitizer's sample
/// grid). The scaling rule is deterministic, so the fixtures never change
/// between runs or versions.
pub fn scenario_library() -> Vec<ExperimentConfig> {
    let gains_a1 = vec![0.0, -3.09, -10.45, -20.0];
    let gains_a2 = vec![0.0, -3.74, -9.12, -16.48];
    let cases: [(&str, [f64; 4], [f64; 4]); 4] = [
        ("SI1", [0.0, 10.0, 20.0, 30.0], [0.0, 16.0, 24.0, 28.0]),
        ("SI2", [0.0, 9.0, 19.0, 28.0], [0.0, 15.0, 22.0, 26.0]),
        ("SI3", [0.0, 13.0, 27.0, 40.0], [0.0, 21.0, 32.0, 37.0]),
        ("SI4", [0.0, 7.0, 14.0, 21.0], [0.0, 11.0, 17.0, 20.0]),
    ];
    cases
        .iter()
        .map(|(name, d1, d2)| ExperimentConfig {
            scenario: ScenarioConfig {
                name: (*name).into(),
                antennas: vec![
                    AntennaTaps {
                        delays_ns: d1.to_vec(),
                        gains_db: gains_a1.clone(),
                        phases_rad: vec![],
                    },
                    AntennaTaps {
                        delays_ns: d2.to_vec(),
                        gains_db: gains_a2.clone(),
                        phases_rad: vec![],
                    },
                ],
                snr_db: None,
                soi: None,
            },
            ..ExperimentConfig::default()
        })
        .collect()
}

/// Looks up a bundled scenario by name (case-insensitive).
pub fn scenario(name: &str) -> Option<ExperimentConfig> {
    scenario_library()
        .into_iter()
        .find(|c| c.scenario.name.eq_ignore_ascii_case(name))
}
