//! Least-squares self-interference channel estimation with adaptive order
//! selection.
//!
//! # The estimation problem
//!
//! The digital canceler sees the known transmit waveforms `x_j` (one per
//! antenna) and the captured interference `y`, and models the channel of
//! antenna `j` as an FIR response `h_j` of length `L` (the *order*). Over an
//! observation block of `N` samples starting at `n`, stacking the delayed
//! copies of `x_j` column-wise gives the convolution matrix
//! ([`build_convolution_matrix`]) with entry `(k, l) = x_j(n + k - l)`; the
//! concatenation `X = [X_1 … X_m]` turns channel estimation into the linear
//! least-squares problem `min ‖y - X·h‖`. [`ls_estimate`] solves it through
//! a Householder QR factorization — never through the normal equations,
//! whose explicit `XᵀX` inverse squares the condition number.
//!
//! # Choosing the order
//!
//! The order is a cost/performance dial: too small truncates real multipath
//! taps, too large wastes canceler resources on zeros. The adaptive search
//! ([`adaptive_order_loop`]) probes how much the fit improves when the order
//! grows by a gap `Δ`:
//!
//! ```text
//! e_Δ(i) = ‖e_L(i)‖² - ‖e_{L(i)-Δ}‖²  ≤ 0
//! ```
//!
//! (non-positive because the models are nested — extra columns can only
//! reduce the residual). The working float order then follows
//!
//! ```text
//! l_f(i+1) = (l_f(i) - α) - γ(i)·e_Δ(i)
//! ```
//!
//! so a shrinking pressure `α` competes against the improvement term: while
//! truncation still hurts, `γ·|e_Δ|` exceeds `α` and the order climbs; once
//! the support is covered `e_Δ ≈ 0` and the order drifts back down. The
//! integer order only moves when the float order has drifted more than a
//! hysteresis `δ` away, which parks `L` at the equilibrium. The weight `γ`
//! ramps linearly over iterations ([`gamma_schedule`]), softening early
//! steps and sharpening late ones.
//!
//! Residuals for *every* nested order come from a single factorization: with
//! the columns of `X` ordered antenna-interleaved by lag, the leading
//! `m·L'` columns are exactly the order-`L'` model, and one QR of the
//! `[X | y]` augmentation yields `‖e_{L'}‖² = ‖y‖² - Σ c_k²` for all `L'` at
//! once (`c = Qᵀy`). The whole adaptive loop therefore costs one
//! factorization per captured block, and `e_Δ` is computed as a plain sum of
//! squares, immune to cancellation error.

use crate::error::{Error, Result};
use crate::signal::SampledSignal;
use faer::Mat;
use serde::{Deserialize, Serialize};

/// Observation window: samples `start .. start + len` of the capture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    /// Index of the first sample used.
    pub start: usize,
    /// Number of samples used.
    pub len: usize,
}

impl Block {
    fn validate(&self, signal_len: usize) -> Result<()> {
        if self.len == 0 {
            return Err(Error::InvalidEstimator("block length must be > 0".into()));
        }
        if self.start + self.len > signal_len {
            return Err(Error::InvalidEstimator(format!(
                "block [{}, {}) exceeds signal length {signal_len}",
                self.start,
                self.start + self.len
            )));
        }
        Ok(())
    }
}

/// Which float order the integer-order update compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderRule {
    /// Compare against the freshly updated float order (default): test
    /// `|L(i) - l_f(i+1)| > δ` and assign `⌊l_f(i+1)⌋`.
    FreshFloat,
    /// Compare against the pre-update float order: test
    /// `|L(i) - l_f(i)| > δ` and assign `⌊l_f(i)⌋`. One iteration laggier;
    /// converges to the same equilibrium.
    LaggedFloat,
}

/// Configuration of the adaptive-order least-squares search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LsConfig {
    /// Number of transmit antennas `m`.
    pub num_antennas: usize,
    /// Constant shrinking pressure α on the float order per iteration.
    pub alpha: f64,
    /// Hysteresis δ: the integer order moves only when the float order has
    /// drifted further than this.
    pub delta: f64,
    /// Order-probe gap Δ used by the fit-improvement measure `e_Δ`.
    pub big_delta: usize,
    /// Weight on `e_Δ` at the first iteration.
    pub gamma_min: f64,
    /// Weight on `e_Δ` at the last iteration.
    pub gamma_max: f64,
    /// Iteration budget of the adaptive loop.
    pub max_iterations: usize,
    /// Starting order `L(0)`.
    pub l_init: usize,
    /// Smallest admissible order (must exceed `big_delta`).
    pub l_min: usize,
    /// Largest admissible order; one factorization at this order serves the
    /// whole loop.
    pub l_max: usize,
    /// Observation block length `N` in samples.
    pub block_size: usize,
    /// Index of the first observation sample.
    pub block_start: usize,
    /// Consecutive iterations the integer order must hold for convergence.
    pub patience: usize,
    /// Normalize `e_Δ` by `‖y‖²` (default), making γ scale-free; `false`
    /// uses the raw squared-residual difference.
    pub normalize_e_delta: bool,
    /// Integer-order update variant.
    pub order_rule: OrderRule,
}

impl Default for LsConfig {
    fn default() -> Self {
        Self {
            num_antennas: 2,
            alpha: 10.0,
            delta: 1.0,
            big_delta: 40,
            gamma_min: 2000.0,
            gamma_max: 4000.0,
            max_iterations: 600,
            l_init: 150,
            l_min: 50,
            l_max: 450,
            block_size: 40_000,
            block_start: 500,
            patience: 20,
            normalize_e_delta: true,
            order_rule: OrderRule::FreshFloat,
        }
    }
}

impl LsConfig {
    /// Checks the mutual constraints between the configuration fields.
    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::InvalidEstimator("need at least one antenna".into()));
        }
        if !(self.l_min >= 1 && self.l_min <= self.l_init && self.l_init <= self.l_max) {
            return Err(Error::InvalidEstimator(format!(
                "order bounds must satisfy 1 <= l_min <= l_init <= l_max, got \
                 l_min={}, l_init={}, l_max={}",
                self.l_min, self.l_init, self.l_max
            )));
        }
        if self.big_delta == 0 || self.big_delta >= self.l_min {
            return Err(Error::InvalidEstimator(format!(
                "probe gap must satisfy 1 <= big_delta < l_min, got big_delta={}, l_min={}",
                self.big_delta, self.l_min
            )));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::InvalidEstimator(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidEstimator(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        if !(self.gamma_min.is_finite()
            && self.gamma_max.is_finite()
            && self.gamma_min > 0.0
            && self.gamma_min <= self.gamma_max)
        {
            return Err(Error::InvalidEstimator(format!(
                "gamma range must satisfy 0 < gamma_min <= gamma_max, got [{}, {}]",
                self.gamma_min, self.gamma_max
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidEstimator(
                "need at least one iteration".into(),
            ));
        }
        if self.patience == 0 {
            return Err(Error::InvalidEstimator("patience must be >= 1".into()));
        }
        if self.block_size < self.num_antennas * self.l_max {
            return Err(Error::InvalidEstimator(format!(
                "block of {} samples cannot support {} antennas at order {} \
                 ({} unknowns)",
                self.block_size,
                self.num_antennas,
                self.l_max,
                self.num_antennas * self.l_max
            )));
        }
        Ok(())
    }

    fn block(&self) -> Block {
        Block {
            start: self.block_start,
            len: self.block_size,
        }
    }
}

/// Estimated FIR channel: one tap vector per transmit antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    taps: Vec<Vec<f64>>,
    order: usize,
    residual_power: f64,
}

impl ChannelEstimate {
    /// Tap vector of one antenna, length [`ChannelEstimate::order`].
    pub fn taps(&self, antenna: usize) -> &[f64] {
        &self.taps[antenna]
    }

    /// All tap vectors.
    pub fn all_taps(&self) -> &[Vec<f64>] {
        &self.taps
    }

    /// Number of antennas.
    pub fn num_antennas(&self) -> usize {
        self.taps.len()
    }

    /// Model order (taps per antenna).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Mean squared fit residual `‖y - X·h‖²/N` over the estimation block.
    pub fn residual_power(&self) -> f64 {
        self.residual_power
    }
}

/// One row of the adaptive-order trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderTraceRecord {
    /// Iteration index `i`.
    pub iteration: usize,
    /// Integer order `L(i)` in effect during the iteration.
    pub order: usize,
    /// Float order `l_f(i)` before this iteration's update.
    pub order_float: f64,
    /// Fit-improvement measure `e_Δ(i)` (normalized when configured).
    pub e_delta: f64,
    /// Weight `γ(i)`.
    pub gamma: f64,
    /// Mean squared residual of the order-`L(i)` fit.
    pub residual_power: f64,
}

/// Iteration-by-iteration record of one adaptive-order run.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderTrace {
    records: Vec<OrderTraceRecord>,
    capture_power: f64,
    converged: bool,
}

impl OrderTrace {
    /// Per-iteration records, in order.
    pub fn records(&self) -> &[OrderTraceRecord] {
        &self.records
    }

    /// Mean squared value of the captured block (the `‖y‖²/N` normalizer).
    pub fn capture_power(&self) -> f64 {
        self.capture_power
    }

    /// Whether the integer order held for the configured patience before the
    /// iteration budget ran out.
    pub fn converged(&self) -> bool {
        self.converged
    }

    /// Final integer order of the run.
    pub fn final_order(&self) -> usize {
        self.records.last().map_or(0, |r| r.order)
    }

    /// Serializes the trace as CSV with header
    /// `i,L,l_f,e_delta,gamma,residual_db`; the residual is in dB relative
    /// to the capture power.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,L,l_f,e_delta,gamma,residual_db\n");
        for r in &self.records {
            let rel = r.residual_power / self.capture_power;
            let residual_db = if rel > 0.0 {
                format!("{:.4}", 10.0 * rel.log10())
            } else {
                "-inf".to_string()
            };
            out.push_str(&format!(
                "{},{},{},{:e},{},{}\n",
                r.iteration, r.order, r.order_float, r.e_delta, r.gamma, residual_db
            ));
        }
        out
    }
}

/// State of the adaptive-order iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderState {
    /// Completed iterations.
    pub iteration: usize,
    /// Integer order `L`.
    pub order: usize,
    /// Float order `l_f`.
    pub order_float: f64,
    /// Most recent `e_Δ`, if any iteration ran.
    pub last_e_delta: Option<f64>,
}

impl OrderState {
    /// Initial state at the configured starting order.
    pub fn new(cfg: &LsConfig) -> Self {
        Self {
            iteration: 0,
            order: cfg.l_init,
            order_float: cfg.l_init as f64,
            last_e_delta: None,
        }
    }
}

/// Convolution (Toeplitz) matrix of one transmit waveform over a block.
///
/// Entry `(k, l) = x(start + k - l)` for `k < block.len`, `l < order`;
/// indices before the signal start read as zero. Columns are the waveform at
/// lags `0 .. order`, so `X·h` is the FIR response of `x` under `h` observed
/// on the block.
pub fn build_convolution_matrix(
    x: &SampledSignal,
    order: usize,
    block: Block,
) -> Result<Mat<f64>> {
    block.validate(x.len())?;
    if order == 0 {
        return Err(Error::InvalidEstimator("order must be >= 1".into()));
    }
    if block.len < order {
        return Err(Error::InvalidEstimator(format!(
            "block of {} samples is shorter than the order {order}",
            block.len
        )));
    }
    let s = x.samples();
    Ok(Mat::from_fn(block.len, order, |k, l| {
        let idx = block.start + k;
        if idx >= l {
            s[idx - l]
        } else {
            0.0
        }
    }))
}

/// Shared validation for the estimation entry points.
fn validate_inputs(xs: &[SampledSignal], y: &SampledSignal, block: Block) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidEstimator(
            "need at least one transmit waveform".into(),
        ));
    }
    for (i, x) in xs.iter().enumerate() {
        if x.sample_rate() != y.sample_rate() || x.len() != y.len() {
            return Err(Error::MismatchedSignals(format!(
                "transmit waveform {i} must match the capture's rate and length"
            )));
        }
    }
    block.validate(y.len())
}

/// Augmented QR factorization giving fits for every nested order at once.
///
/// Columns are antenna-interleaved by lag (`x_0` lag 0, `x_1` lag 0, …,
/// `x_0` lag 1, …), so the leading `m·L` columns form the order-`L` model
/// for any `L ≤ l_max`.
struct NestedFactor {
    /// Upper-triangular R of the interleaved X, row-major `p × p`.
    r: Vec<f64>,
    /// `c = Qᵀy`, length `p`.
    c: Vec<f64>,
    /// `prefix[k] = Σ_{j<k} c_j²`.
    prefix: Vec<f64>,
    /// `‖y‖²` over the block.
    y_norm_sq: f64,
    num_antennas: usize,
    l_max: usize,
    block_len: usize,
}

impl NestedFactor {
    fn new(xs: &[SampledSignal], y: &SampledSignal, l_max: usize, block: Block) -> Result<Self> {
        validate_inputs(xs, y, block)?;
        let m = xs.len();
        let p = m * l_max;
        if l_max == 0 {
            return Err(Error::InvalidEstimator("order must be >= 1".into()));
        }
        if block.len < p {
            return Err(Error::InvalidEstimator(format!(
                "block of {} samples is shorter than the {p} unknowns of order {l_max}",
                block.len
            )));
        }

        let ys = y.samples();
        let y_norm_sq: f64 = ys[block.start..block.start + block.len]
            .iter()
            .map(|v| v * v)
            .sum();

        // Augment y as the last column: after factoring, that column of R
        // holds Qᵀy, and prefix sums of its squares give every nested
        // residual without forming Q.
        let aug = Mat::from_fn(block.len, p + 1, |k, j| {
            if j == p {
                ys[block.start + k]
            } else {
                let lag = j / m;
                let antenna = j % m;
                let idx = block.start + k;
                if idx >= lag {
                    xs[antenna].samples()[idx - lag]
                } else {
                    0.0
                }
            }
        });
        let qr = aug.qr();
        let r_full = qr.R();

        let mut r = vec![0.0; p * p];
        for i in 0..p {
            for j in i..p {
                r[i * p + j] = r_full[(i, j)];
            }
        }
        let c: Vec<f64> = (0..p).map(|i| r_full[(i, p)]).collect();
        let mut prefix = Vec::with_capacity(p + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &v in &c {
            acc += v * v;
            prefix.push(acc);
        }
        Ok(Self {
            r,
            c,
            prefix,
            y_norm_sq,
            num_antennas: m,
            l_max,
            block_len: block.len,
        })
    }

    /// `‖y - X_L·ĥ_L‖²` for the order-`L` model (clamped at zero against
    /// roundoff in the subtraction).
    fn residual_sq(&self, order: usize) -> f64 {
        let k = self.num_antennas * order;
        (self.y_norm_sq - self.prefix[k]).max(0.0)
    }

    /// Raw `e_Δ = ‖e_L‖² - ‖e_{L-Δ}‖²`, evaluated as the exact negated sum
    /// of `c²` over the gap's columns; non-positive by construction.
    fn e_delta_raw(&self, order: usize, big_delta: usize) -> f64 {
        debug_assert!(big_delta < order && order <= self.l_max);
        let hi = self.num_antennas * order;
        let lo = self.num_antennas * (order - big_delta);
        -(self.prefix[hi] - self.prefix[lo])
    }

    /// Back-substitutes the leading `m·L` block of R for the order-`L` tap
    /// vectors, de-interleaving per antenna. Fails on a numerically
    /// rank-deficient system.
    fn solve(&self, order: usize) -> Result<Vec<Vec<f64>>> {
        let m = self.num_antennas;
        let q = m * order;
        let p = m * self.l_max;
        let max_diag = (0..q)
            .map(|i| self.r[i * p + i].abs())
            .fold(0.0f64, f64::max);
        let threshold = max_diag * self.block_len.max(p) as f64 * f64::EPSILON;
        let mut z = vec![0.0; q];
        for i in (0..q).rev() {
            let diag = self.r[i * p + i];
            if diag.abs() <= threshold {
                return Err(Error::RankDeficient {
                    column: i,
                    diagonal: diag.abs(),
                    threshold,
                });
            }
            let mut acc = self.c[i];
            for j in i + 1..q {
                acc -= self.r[i * p + j] * z[j];
            }
            z[i] = acc / diag;
        }
        let mut taps = vec![vec![0.0; order]; m];
        for (idx, &v) in z.iter().enumerate() {
            taps[idx % m][idx / m] = v;
        }
        Ok(taps)
    }
}

/// FIR response of the transmit waveforms under estimated taps, evaluated on
/// a block: `r̂(k) = Σ_j Σ_l h_j(l)·x_j(start + k - l)`.
///
/// Indices before the signal start read as zero, so the first `order`
/// samples of a block starting at 0 carry a spin-up transient; blocks
/// starting at `order` or later are transient-free. Output length is
/// `block.len` at the transmit sample rate.
pub fn reconstruct_reference(
    xs: &[SampledSignal],
    estimate: &ChannelEstimate,
    block: Block,
) -> Result<SampledSignal> {
    if xs.len() != estimate.num_antennas() {
        return Err(Error::InvalidEstimator(format!(
            "estimate covers {} antennas but {} waveforms were given",
            estimate.num_antennas(),
            xs.len()
        )));
    }
    if xs.is_empty() {
        return Err(Error::InvalidEstimator(
            "need at least one transmit waveform".into(),
        ));
    }
    block.validate(xs[0].len())?;
    let mut out = vec![0.0; block.len];
    for (x, taps) in xs.iter().zip(estimate.all_taps()) {
        let s = x.samples();
        for (k, o) in out.iter_mut().enumerate() {
            let idx = block.start + k;
            let max_lag = taps.len().min(idx + 1);
            let mut acc = 0.0;
            for (l, &h) in taps.iter().take(max_lag).enumerate() {
                acc += h * s[idx - l];
            }
            *o += acc;
        }
    }
    SampledSignal::new(out, xs[0].sample_rate())
}

fn residual_power_on_block(
    xs: &[SampledSignal],
    y: &SampledSignal,
    taps: Vec<Vec<f64>>,
    order: usize,
    block: Block,
) -> Result<ChannelEstimate> {
    let estimate = ChannelEstimate {
        taps,
        order,
        residual_power: 0.0,
    };
    let reconstruction = reconstruct_reference(xs, &estimate, block)?;
    let residual_power = y.samples()[block.start..block.start + block.len]
        .iter()
        .zip(reconstruction.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / block.len as f64;
    Ok(ChannelEstimate {
        residual_power,
        ..estimate
    })
}

/// Least-squares channel estimate at a fixed order over one block.
///
/// Solves `min ‖y - X·h‖` by Householder QR; the reported residual power is
/// recomputed in the time domain from the solution, so it is exact even when
/// the fit is perfect. Requires `block.len ≥ m·order` and waveforms matching
/// the capture's rate and length; a numerically rank-deficient system is
/// rejected with the offending column.
pub fn ls_estimate(
    xs: &[SampledSignal],
    y: &SampledSignal,
    order: usize,
    block: Block,
) -> Result<ChannelEstimate> {
    let factor = NestedFactor::new(xs, y, order, block)?;
    let taps = factor.solve(order)?;
    residual_power_on_block(xs, y, taps, order, block)
}

/// Fit improvement from growing the model by `big_delta` taps per antenna:
/// `(‖e_order‖² - ‖e_{order-big_delta}‖²) / ‖y‖²`, which is ≤ 0.
///
/// Requires `big_delta < order` and a non-silent capture (`‖y‖² > 0`).
pub fn order_error_delta(
    xs: &[SampledSignal],
    y: &SampledSignal,
    order: usize,
    big_delta: usize,
    block: Block,
) -> Result<f64> {
    if big_delta == 0 || big_delta >= order {
        return Err(Error::InvalidEstimator(format!(
            "probe gap must satisfy 1 <= big_delta < order, got big_delta={big_delta}, \
             order={order}"
        )));
    }
    let factor = NestedFactor::new(xs, y, order, block)?;
    if factor.y_norm_sq <= 0.0 {
        return Err(Error::InvalidEstimator(
            "capture is silent; e_delta normalization is undefined".into(),
        ));
    }
    Ok(factor.e_delta_raw(order, big_delta) / factor.y_norm_sq)
}

/// [`order_error_delta`] over a whole grid of orders from one factorization.
///
/// Factors the capture once at `max(orders)` and reads `e_Δ` for each probed
/// order in constant time, so sweeping the full landscape costs the same as
/// a single fit. Useful for picking `gamma` bounds: the adaptive loop parks
/// where `|e_Δ(L)| ≈ alpha/gamma`. Every order must satisfy
/// `big_delta < order`, and the block must cover `max(orders)` unknowns.
pub fn order_error_landscape(
    xs: &[SampledSignal],
    y: &SampledSignal,
    orders: &[usize],
    big_delta: usize,
    block: Block,
) -> Result<Vec<f64>> {
    let &l_top = orders
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidEstimator("no orders to probe".into()))?;
    if big_delta == 0 || orders.iter().any(|&l| l <= big_delta) {
        return Err(Error::InvalidEstimator(format!(
            "probe gap must satisfy 1 <= big_delta < order for every order, got \
             big_delta={big_delta}, smallest order {}",
            orders.iter().min().copied().unwrap_or(0)
        )));
    }
    let factor = NestedFactor::new(xs, y, l_top, block)?;
    if factor.y_norm_sq <= 0.0 {
        return Err(Error::InvalidEstimator(
            "capture is silent; e_delta normalization is undefined".into(),
        ));
    }
    Ok(orders
        .iter()
        .map(|&l| factor.e_delta_raw(l, big_delta) / factor.y_norm_sq)
        .collect())
}

/// Weight on `e_Δ` at iteration `i`: linear ramp from `gamma_min` to
/// `gamma_max` across the iteration budget (constant when the budget is a
/// single iteration). At the midpoint of an odd budget the weight is the
/// arithmetic mean of the two endpoints.
pub fn gamma_schedule(iteration: usize, cfg: &LsConfig) -> f64 {
    if cfg.max_iterations <= 1 {
        return cfg.gamma_min;
    }
    let i = iteration.min(cfg.max_iterations - 1) as f64;
    let t = i / (cfg.max_iterations - 1) as f64;
    cfg.gamma_min + (cfg.gamma_max - cfg.gamma_min) * t
}

/// One step of the order update law.
///
/// The float order moves by the shrinking pressure and the weighted fit
/// improvement, `l_f' = (l_f - α) - γ·e_Δ`, clamped to `[l_min, l_max]`. The
/// integer order follows only when the comparison float (per
/// [`LsConfig::order_rule`]) has drifted beyond the hysteresis `δ`, taking
/// its floor. `e_Δ = -α/γ` is the fixed point: the float order holds still.
pub fn update_order(state: &OrderState, e_delta: f64, gamma: f64, cfg: &LsConfig) -> OrderState {
    let raw = (state.order_float - cfg.alpha) - gamma * e_delta;
    let next_float = raw.clamp(cfg.l_min as f64, cfg.l_max as f64);
    let compare = match cfg.order_rule {
        OrderRule::FreshFloat => next_float,
        OrderRule::LaggedFloat => state.order_float,
    };
    let next_order = if (state.order as f64 - compare).abs() > cfg.delta {
        (compare.floor() as usize).clamp(cfg.l_min, cfg.l_max)
    } else {
        state.order
    };
    OrderState {
        iteration: state.iteration + 1,
        order: next_order,
        order_float: next_float,
        last_e_delta: Some(e_delta),
    }
}

/// Runs the adaptive-order search on one captured block and returns the
/// estimate at the settled order together with the full iteration trace.
///
/// The capture is factored once at `l_max`; every iteration then reads its
/// `e_Δ` and residual in constant time. Convergence is declared when the
/// integer order survives [`LsConfig::patience`] consecutive updates
/// unchanged; otherwise the loop stops at the iteration budget with
/// [`OrderTrace::converged`] = false.
pub fn adaptive_order_loop(
    xs: &[SampledSignal],
    y: &SampledSignal,
    cfg: &LsConfig,
) -> Result<(ChannelEstimate, OrderTrace)> {
    cfg.validate()?;
    if xs.len() != cfg.num_antennas {
        return Err(Error::InvalidEstimator(format!(
            "config expects {} antennas but {} waveforms were given",
            cfg.num_antennas,
            xs.len()
        )));
    }
    let block = cfg.block();
    let factor = NestedFactor::new(xs, y, cfg.l_max, block)?;
    if factor.y_norm_sq <= 0.0 {
        return Err(Error::InvalidEstimator(
            "capture is silent; e_delta normalization is undefined".into(),
        ));
    }

    let mut state = OrderState::new(cfg);
    let mut records = Vec::with_capacity(cfg.max_iterations);
    let mut hold_streak = 0usize;
    let mut converged = false;
    for i in 0..cfg.max_iterations {
        let e_raw = factor.e_delta_raw(state.order, cfg.big_delta);
        let e_delta = if cfg.normalize_e_delta {
            e_raw / factor.y_norm_sq
        } else {
            e_raw
        };
        let gamma = gamma_schedule(i, cfg);
        records.push(OrderTraceRecord {
            iteration: i,
            order: state.order,
            order_float: state.order_float,
            e_delta,
            gamma,
            residual_power: factor.residual_sq(state.order) / block.len as f64,
        });
        let previous = state.order;
        state = update_order(&state, e_delta, gamma, cfg);
        if state.order == previous {
            hold_streak += 1;
            if hold_streak >= cfg.patience {
                converged = true;
                break;
            }
        } else {
            hold_streak = 0;
        }
    }

    let final_order = state.order;
    let taps = factor.solve(final_order)?;
    let estimate = residual_power_on_block(xs, y, taps, final_order, block)?;
    let trace = OrderTrace {
        records,
        capture_power: factor.y_norm_sq / block.len as f64,
        converged,
    };
    Ok((estimate, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn white_signal(n: usize, seed: u64) -> SampledSignal {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        SampledSignal::new(
            (0..n)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect(),
            10.0e9,
        )
        .unwrap()
    }

    /// Applies FIR taps by direct convolution (zero initial history).
    fn fir_apply(x: &[f64], taps: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|n| {
                taps.iter()
                    .enumerate()
                    .take(n + 1)
                    .map(|(l, h)| h * x[n - l])
                    .sum()
            })
            .collect()
    }

    /// Test-only least-squares oracle: normal equations `(XᵀX)h = Xᵀy`
    /// solved by Gaussian elimination with partial pivoting. Adequate at toy
    /// sizes; the production path never forms XᵀX.
    fn pseudo_inverse_oracle(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let p = cols.len();
        let mut a = vec![vec![0.0; p + 1]; p];
        for i in 0..p {
            for j in 0..p {
                a[i][j] = cols[i].iter().zip(&cols[j]).map(|(u, v)| u * v).sum();
            }
            a[i][p] = cols[i].iter().zip(y).map(|(u, v)| u * v).sum();
        }
        for k in 0..p {
            let pivot = (k..p).max_by(|&r, &s| a[r][k].abs().total_cmp(&a[s][k].abs())).unwrap();
            a.swap(k, pivot);
            for r in k + 1..p {
                let f = a[r][k] / a[k][k];
                for c in k..=p {
                    a[r][c] -= f * a[k][c];
                }
            }
        }
        let mut h = vec![0.0; p];
        for k in (0..p).rev() {
            let mut acc = a[k][p];
            for j in k + 1..p {
                acc -= a[k][j] * h[j];
            }
            h[k] = acc / a[k][k];
        }
        h
    }

    #[test]
    fn convolution_matrix_matches_the_lagged_layout() {
        let x = SampledSignal::new(vec![1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        let m = build_convolution_matrix(&x, 2, Block { start: 1, len: 3 }).unwrap();
        let expected = [[2.0, 1.0], [3.0, 2.0], [4.0, 3.0]];
        for (k, row) in expected.iter().enumerate() {
            for (l, want) in row.iter().enumerate() {
                assert_eq!(m[(k, l)], *want, "entry ({k}, {l})");
            }
        }
    }

    #[test]
    fn convolution_matrix_of_impulse_is_identity() {
        let mut samples = vec![0.0; 8];
        samples[3] = 1.0;
        let x = SampledSignal::new(samples, 1.0).unwrap();
        let m = build_convolution_matrix(&x, 3, Block { start: 3, len: 3 }).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                assert_eq!(m[(k, l)], if k == l { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn convolution_matrix_zero_fills_before_signal_start() {
        let x = SampledSignal::new(vec![5.0, 6.0, 7.0], 1.0).unwrap();
        let m = build_convolution_matrix(&x, 3, Block { start: 0, len: 3 }).unwrap();
        // Row 0 reads x(0), x(-1), x(-2) -> 5, 0, 0.
        assert_eq!(m[(0, 0)], 5.0);
        assert_eq!(m[(0, 1)], 0.0);
        assert_eq!(m[(0, 2)], 0.0);
        assert_eq!(m[(2, 2)], 5.0);
    }

    #[test]
    fn exact_channel_is_recovered_to_machine_precision() {
        let xs = [white_signal(4000, 1), white_signal(4000, 2)];
        let true_taps = [
            vec![1.0, 0.0, -0.35, 0.0, 0.12],
            vec![0.8, 0.5, 0.0, 0.0, -0.07],
        ];
        let mut y = vec![0.0; 4000];
        for (x, taps) in xs.iter().zip(&true_taps) {
            for (acc, v) in y.iter_mut().zip(fir_apply(x.samples(), taps)) {
                *acc += v;
            }
        }
        let y = SampledSignal::new(y, 10.0e9).unwrap();
        let block = Block { start: 16, len: 3000 };
        let est = ls_estimate(&xs, &y, 8, block).unwrap();
        for (antenna, truth) in true_taps.iter().enumerate() {
            for l in 0..8 {
                let want = truth.get(l).copied().unwrap_or(0.0);
                let got = est.taps(antenna)[l];
                assert!(
                    (got - want).abs() < 1e-9,
                    "antenna {antenna} lag {l}: {got} vs {want}"
                );
            }
        }
        assert!(est.residual_power() < 1e-20, "residual {}", est.residual_power());
    }

    #[test]
    fn ls_estimate_matches_pseudo_inverse_oracle() {
        // Noisy multi-antenna problems at toy sizes, solved both ways.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for case in 0..20 {
            let n = 48 + (case % 5) * 8;
            let m = 1 + case % 2;
            let order = 3 + case % 4;
            let xs: Vec<SampledSignal> =
                (0..m).map(|j| white_signal(n, 1000 + case as u64 * 10 + j as u64)).collect();
            let y = SampledSignal::new(
                (0..n)
                    .map(|_| {
                        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)
                    })
                    .collect::<Vec<f64>>(),
                10.0e9,
            )
            .unwrap();
            let block = Block { start: 8, len: n - 8 };

            let est = ls_estimate(&xs, &y, order, block).unwrap();

            // Oracle in the block-concatenated layout [X_0 | X_1 | ...].
            let mut cols = Vec::new();
            for x in &xs {
                for l in 0..order {
                    cols.push(
                        (0..block.len)
                            .map(|k| {
                                let idx = block.start + k;
                                if idx >= l { x.samples()[idx - l] } else { 0.0 }
                            })
                            .collect::<Vec<f64>>(),
                    );
                }
            }
            let y_blk = &y.samples()[block.start..block.start + block.len];
            let oracle = pseudo_inverse_oracle(&cols, y_blk);
            for antenna in 0..m {
                for l in 0..order {
                    let got = est.taps(antenna)[l];
                    let want = oracle[antenna * order + l];
                    assert!(
                        (got - want).abs() < 1e-9,
                        "case {case} antenna {antenna} lag {l}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn residuals_shrink_as_order_grows() {
        let xs = [white_signal(3000, 5)];
        let taps = vec![1.0, -0.4, 0.2, 0.6, -0.1, 0.05, 0.3, -0.2];
        let mut y_s = fir_apply(xs[0].samples(), &taps);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5150);
        for v in &mut y_s {
            let n: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            *v += 0.05 * n;
        }
        let y = SampledSignal::new(y_s, 10.0e9).unwrap();
        let block = Block { start: 10, len: 2500 };
        let mut last = f64::INFINITY;
        for order in [2, 4, 6, 8, 12, 16] {
            let r = ls_estimate(&xs, &y, order, block).unwrap().residual_power();
            assert!(
                r <= last + 1e-15,
                "residual must not grow with order: {r} after {last}"
            );
            last = r;
        }
    }

    #[test]
    fn order_error_delta_agrees_with_two_explicit_fits() {
        let xs = [white_signal(2000, 8), white_signal(2000, 9)];
        let mut y_s = vec![0.0; 2000];
        for (x, scale) in xs.iter().zip([1.0, 0.7]) {
            let taps: Vec<f64> = (0..12).map(|l| scale * 0.8f64.powi(l)).collect();
            for (acc, v) in y_s.iter_mut().zip(fir_apply(x.samples(), &taps)) {
                *acc += v;
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(303);
        for v in &mut y_s {
            let n: f64 = rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng);
            *v += 0.1 * n;
        }
        let y = SampledSignal::new(y_s, 10.0e9).unwrap();
        let block = Block { start: 20, len: 1800 };
        let y_norm_sq: f64 = y.samples()[20..1820].iter().map(|v| v * v).sum();

        let (order, gap) = (10, 4);
        let e = order_error_delta(&xs, &y, order, gap, block).unwrap();
        let r_hi = ls_estimate(&xs, &y, order, block).unwrap().residual_power() * 1800.0;
        let r_lo = ls_estimate(&xs, &y, order - gap, block).unwrap().residual_power() * 1800.0;
        let expected = (r_hi - r_lo) / y_norm_sq;
        assert!(e <= 0.0, "e_delta must be non-positive, got {e}");
        assert!(
            (e - expected).abs() < 1e-9,
            "prefix-sum e_delta {e} vs explicit {expected}"
        );
    }

    #[test]
    fn orthogonal_capture_yields_zero_taps() {
        // Project a random y onto the orthogonal complement of the model
        // columns; the least-squares fit of the projection is exactly zero.
        let x = white_signal(220, 14);
        let order = 3;
        let block = Block { start: 4, len: 200 };
        let cols: Vec<Vec<f64>> = (0..order)
            .map(|l| {
                (0..block.len)
                    .map(|k| x.samples()[block.start + k - l])
                    .collect()
            })
            .collect();
        let y_raw = white_signal(220, 15);
        let h_fit = pseudo_inverse_oracle(
            &cols,
            &y_raw.samples()[block.start..block.start + block.len],
        );
        let mut y = y_raw.samples().to_vec();
        for (l, col) in cols.iter().enumerate() {
            for (k, v) in col.iter().enumerate() {
                y[block.start + k] -= h_fit[l] * v;
            }
        }
        let y = SampledSignal::new(y, 10.0e9).unwrap();
        let est = ls_estimate(std::slice::from_ref(&x), &y, order, block).unwrap();
        let scale = y.power().sqrt();
        for (l, &h) in est.taps(0).iter().enumerate() {
            assert!(h.abs() / scale < 1e-9, "lag {l}: {h}");
        }
    }

    #[test]
    fn e_delta_vanishes_when_both_orders_cover_the_support() {
        let xs = [white_signal(2000, 16)];
        let taps = [1.0, 0.3, -0.5, 0.2, 0.1];
        let y = SampledSignal::new(fir_apply(xs[0].samples(), &taps), 10.0e9).unwrap();
        let e = order_error_delta(&xs, &y, 100, 40, Block { start: 110, len: 1600 }).unwrap();
        assert!(e.abs() < 1e-9, "expected vanishing e_delta, got {e}");
    }

    #[test]
    fn landscape_matches_pointwise_probes_and_validates() {
        let xs = [white_signal(2000, 21), white_signal(2000, 22)];
        let mut y_s = vec![0.0; 2000];
        for (x, scale) in xs.iter().zip([1.0, -0.6]) {
            let taps: Vec<f64> = (0..30).map(|l| scale * 0.9f64.powi(l)).collect();
            for (acc, v) in y_s.iter_mut().zip(fir_apply(x.samples(), &taps)) {
                *acc += v;
            }
        }
        let y = SampledSignal::new(y_s, 10.0e9).unwrap();
        let block = Block { start: 90, len: 1700 };
        let orders = [15, 25, 40, 60, 80];
        let curve = order_error_landscape(&xs, &y, &orders, 10, block).unwrap();
        for (&l, &e) in orders.iter().zip(&curve) {
            let point = order_error_delta(&xs, &y, l, 10, block).unwrap();
            assert!(
                (e - point).abs() < 1e-12,
                "order {l}: landscape {e} vs pointwise {point}"
            );
        }
        assert!(order_error_landscape(&xs, &y, &[], 10, block).is_err());
        assert!(order_error_landscape(&xs, &y, &[10, 60], 10, block).is_err());
    }

    #[test]
    fn e_delta_is_large_while_the_probe_truncates_taps() {
        // Support of 50 lags with geometric decay; probing L = 60 against
        // L - 40 = 20 leaves real tap energy on the table.
        let xs = [white_signal(2000, 17)];
        let taps: Vec<f64> = (0..50).map(|l| 0.95f64.powi(l)).collect();
        let y = SampledSignal::new(fir_apply(xs[0].samples(), &taps), 10.0e9).unwrap();
        let e = order_error_delta(&xs, &y, 60, 40, Block { start: 100, len: 1700 }).unwrap();
        assert!(e < 0.0);
        assert!(e.abs() > 0.01, "truncation energy should dominate, got {e}");
    }

    #[test]
    fn duplicate_antennas_are_reported_rank_deficient() {
        let x = white_signal(1000, 11);
        let y = white_signal(1000, 12);
        let err = ls_estimate(
            &[x.clone(), x],
            &y,
            4,
            Block { start: 8, len: 900 },
        )
        .unwrap_err();
        assert!(
            matches!(err, Error::RankDeficient { .. }),
            "expected rank deficiency, got {err}"
        );
    }

    #[test]
    fn square_system_interpolates_exactly() {
        // block.len == m·order: the fit is exactly determined.
        let xs = [white_signal(400, 21)];
        let y = white_signal(400, 22);
        let block = Block { start: 50, len: 12 };
        let est = ls_estimate(&xs, &y, 12, block).unwrap();
        assert!(
            est.residual_power() < 1e-18,
            "square system residual {}",
            est.residual_power()
        );
    }

    #[test]
    fn gamma_schedule_ramps_linearly() {
        let cfg = LsConfig {
            gamma_min: 100.0,
            gamma_max: 300.0,
            max_iterations: 201,
            ..LsConfig::default()
        };
        assert_eq!(gamma_schedule(0, &cfg), 100.0);
        assert_eq!(gamma_schedule(200, &cfg), 300.0);
        // Midpoint of an odd budget: exactly the arithmetic mean.
        assert_eq!(gamma_schedule(100, &cfg), 200.0);
        // Past the budget the weight stays pinned at gamma_max.
        assert_eq!(gamma_schedule(500, &cfg), 300.0);
    }

    #[test]
    fn update_order_follows_the_update_law() {
        let cfg = LsConfig::default();
        let state = OrderState {
            iteration: 3,
            order: 450,
            order_float: 450.0,
            last_e_delta: None,
        };
        // e_delta = 0: the float order shrinks by exactly alpha and the
        // integer order follows (drift 10 > delta 1).
        let next = update_order(&state, 0.0, 1000.0, &cfg);
        assert_eq!(next.order_float, 440.0);
        assert_eq!(next.order, 440);
        assert_eq!(next.iteration, 4);
        assert_eq!(next.last_e_delta, Some(0.0));

        // e_delta = -alpha/gamma is the fixed point.
        let held = update_order(&state, -cfg.alpha / 1000.0, 1000.0, &cfg);
        assert_eq!(held.order_float, 450.0);
        assert_eq!(held.order, 450);

        // Small drift within the hysteresis leaves the integer order alone.
        let slight = OrderState {
            order_float: 200.4,
            order: 200,
            ..state
        };
        let next = update_order(&slight, -9.6 / 1000.0, 1000.0, &cfg);
        assert!((next.order_float - 200.0).abs() < 1e-12);
        assert_eq!(next.order, 200);
    }

    #[test]
    fn update_order_clamps_to_bounds() {
        let cfg = LsConfig::default();
        let low = OrderState {
            iteration: 0,
            order: 52,
            order_float: 52.0,
            last_e_delta: None,
        };
        let next = update_order(&low, 0.0, 1000.0, &cfg);
        assert_eq!(next.order_float, cfg.l_min as f64);
        assert_eq!(next.order, cfg.l_min);

        let high = OrderState {
            iteration: 0,
            order: 445,
            order_float: 445.0,
            last_e_delta: None,
        };
        let next = update_order(&high, -1.0, 10_000.0, &cfg);
        assert_eq!(next.order_float, cfg.l_max as f64);
        assert_eq!(next.order, cfg.l_max);
    }

    #[test]
    fn lagged_rule_uses_pre_update_float() {
        let cfg = LsConfig {
            order_rule: OrderRule::LaggedFloat,
            ..LsConfig::default()
        };
        let state = OrderState {
            iteration: 0,
            order: 300,
            order_float: 320.7,
            last_e_delta: None,
        };
        // Fresh float would be 310.7, but the lagged rule assigns the floor
        // of the pre-update float.
        let next = update_order(&state, 0.0, 1000.0, &cfg);
        assert_eq!(next.order, 320);
        assert!((next.order_float - 310.7).abs() < 1e-12);
    }

    #[test]
    fn adaptive_loop_shrinks_to_l_min_on_a_memoryless_channel() {
        // y = x: one tap at lag 0. Any order past 1 adds nothing, so e_delta
        // is ~0 everywhere and the alpha pressure walks the order down to
        // l_min, where it converges.
        let x = white_signal(3000, 31);
        let y = x.clone();
        let cfg = LsConfig {
            num_antennas: 1,
            l_init: 100,
            l_min: 50,
            l_max: 120,
            big_delta: 40,
            block_size: 2000,
            block_start: 200,
            max_iterations: 50,
            patience: 10,
            gamma_min: 100.0,
            gamma_max: 200.0,
            ..LsConfig::default()
        };
        let (est, trace) = adaptive_order_loop(std::slice::from_ref(&x), &y, &cfg).unwrap();
        assert!(trace.converged(), "expected convergence at l_min");
        assert_eq!(trace.final_order(), 50);
        assert_eq!(est.order(), 50);
        assert!((est.taps(0)[0] - 1.0).abs() < 1e-9);
        assert!(est.residual_power() < 1e-20);
        // The order walked down monotonically.
        let orders: Vec<usize> = trace.records().iter().map(|r| r.order).collect();
        assert!(orders.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn adaptive_loop_trace_is_well_formed() {
        let x = white_signal(3000, 41);
        let taps: Vec<f64> = (0..30).map(|l| 0.9f64.powi(l)).collect();
        let y = SampledSignal::new(fir_apply(x.samples(), &taps), 10.0e9).unwrap();
        let cfg = LsConfig {
            num_antennas: 1,
            l_init: 60,
            l_min: 45,
            l_max: 100,
            big_delta: 40,
            block_size: 2200,
            block_start: 150,
            max_iterations: 40,
            patience: 8,
            gamma_min: 50.0,
            gamma_max: 100.0,
            alpha: 2.0,
            ..LsConfig::default()
        };
        let (_, trace) = adaptive_order_loop(std::slice::from_ref(&x), &y, &cfg).unwrap();
        for (i, r) in trace.records().iter().enumerate() {
            assert_eq!(r.iteration, i);
            assert!(r.e_delta <= 0.0, "iteration {i}: e_delta {}", r.e_delta);
            assert!(r.gamma >= 50.0 && r.gamma <= 100.0);
            assert!(r.residual_power >= 0.0);
            assert!((cfg.l_min..=cfg.l_max).contains(&r.order));
        }
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i,L,l_f,e_delta,gamma,residual_db"));
        assert_eq!(csv.lines().count(), trace.records().len() + 1);
    }

    #[test]
    fn config_validation_catches_inconsistencies() {
        let ok = LsConfig::default();
        assert!(ok.validate().is_ok());
        let bad = LsConfig { big_delta: 50, l_min: 50, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = LsConfig { l_init: 500, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = LsConfig { block_size: 800, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = LsConfig { gamma_min: 0.0, ..ok.clone() };
        assert!(bad.validate().is_err());
        let bad = LsConfig { gamma_min: 10.0, gamma_max: 5.0, ..ok };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn silent_capture_is_rejected() {
        let x = white_signal(1000, 51);
        let y = SampledSignal::new(vec![0.0; 1000], 10.0e9).unwrap();
        let err = order_error_delta(
            std::slice::from_ref(&x),
            &y,
            50,
            40,
            Block { start: 100, len: 800 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidEstimator(_)));
    }
}
