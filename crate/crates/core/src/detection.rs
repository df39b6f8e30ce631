//! Correntropy detection function.
//!
//! For every frame start `t` on a hop grid and every channel `c`, the
//! correntropy estimate
//!
//! ```text
//! V[t,c](τ) = 1/N · Σ_{n=0}^{N-1} G_σ(x_c[t+n], x_c[t+n+τ]),   τ = 1..=τ_max
//! ```
//!
//! is pooled over channels into `W[t](τ)`, and consecutive frames are
//! differenced into the signed detection function
//! `ΔW[k] = Σ_τ W[k+1](τ) − Σ_τ W[k](τ)`. Notes starting pull `W` down
//! (negative peaks); notes ending let it recover (positive peaks).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::events::{Event, EventList};
use crate::filterbank::Cochleagram;
use crate::parallel::run_with_threads;

/// Window length, lag range and hop of the correntropy analysis, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrentropyParams {
    pub window: usize,
    pub max_lag: usize,
    pub hop: usize,
}

impl CorrentropyParams {
    /// `window = max_lag = floor(rate / lowest_hz)`, `hop = round(hop_seconds · rate)`.
    pub fn for_rate(sample_rate: u32, lowest_hz: f64, hop_seconds: f64) -> Result<Self> {
        if !(lowest_hz > 0.0) || !(hop_seconds > 0.0) {
            return Err(Error::invalid(
                "lowest frequency and hop duration must be positive",
            ));
        }
        let span = (sample_rate as f64 / lowest_hz).floor() as usize;
        let hop = (hop_seconds * sample_rate as f64).round() as usize;
        Self::new(span, span, hop)
    }

    pub fn new(window: usize, max_lag: usize, hop: usize) -> Result<Self> {
        if window == 0 || max_lag == 0 || hop == 0 {
            return Err(Error::invalid(format!(
                "correntropy window ({window}), max lag ({max_lag}) and hop ({hop}) must all be >= 1"
            )));
        }
        Ok(Self {
            window,
            max_lag,
            hop,
        })
    }

    /// Samples touched by one frame: `window + max_lag`.
    pub fn span(&self) -> usize {
        self.window + self.max_lag
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.span() {
            0
        } else {
            (len - self.span()) / self.hop + 1
        }
    }
}

const INV_FACTORIALS: [f64; 14] = [
    1.0,
    1.0,
    1.0 / 2.0,
    1.0 / 6.0,
    1.0 / 24.0,
    1.0 / 120.0,
    1.0 / 720.0,
    1.0 / 5040.0,
    1.0 / 40320.0,
    1.0 / 362880.0,
    1.0 / 3628800.0,
    1.0 / 39916800.0,
    1.0 / 479001600.0,
    1.0 / 6227020800.0,
];

/// `e^x` for `x <= 0`, branch-free so the lag loop vectorizes.
///
/// Cody–Waite reduction `x = k·ln2 + r`, `|r| <= ln2/2`, then a degree-13
/// Taylor polynomial (truncation error below 1e-17). Arguments below −708
/// saturate to `e^-708` so the result stays a positive normal number.
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;
    // 1.5·2^52: adding it rounds to an integer held in the low mantissa bits.
    const SHIFTER: f64 = 6_755_399_441_055_744.0;

    let x = if x < -708.0 { -708.0 } else { x };
    let shifted = x * std::f64::consts::LOG2_E + SHIFTER;
    let k = shifted - SHIFTER;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = INV_FACTORIALS[13];
    for &c in INV_FACTORIALS[..13].iter().rev() {
        p = p * r + c;
    }
    let exponent = shifted
        .to_bits()
        .wrapping_sub(SHIFTER.to_bits())
        .wrapping_add(1023);
    p * f64::from_bits(exponent << 52)
}

/// Gaussian Parzen kernel `G_σ(p, q) = exp(−(p−q)²/2σ²) / (√(2π)·σ)` with
/// its per-σ constants folded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParzenKernel {
    norm: f64,
    inv_two_var: f64,
}

impl ParzenKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!(
                "kernel bandwidth must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self {
            norm: 1.0 / ((2.0 * PI).sqrt() * sigma),
            inv_two_var: 1.0 / (2.0 * sigma * sigma),
        })
    }

    /// Kernel value at zero distance, the upper bound of [`Self::eval`].
    pub fn peak(&self) -> f64 {
        self.norm
    }

    #[inline(always)]
    pub fn eval(&self, p: f64, q: f64) -> f64 {
        let d = p - q;
        self.norm * exp_nonpositive(-(d * d) * self.inv_two_var)
    }
}

/// Evaluates the Gaussian Parzen kernel for a single pair of samples.
pub fn gaussian_parzen(p: f64, q: f64, sigma: f64) -> Result<f64> {
    Ok(ParzenKernel::new(sigma)?.eval(p, q))
}

/// Adds `Σ_n G(x[t+n], x[t+n+τ])` into `acc[τ-1]` for τ = 1..=max_lag.
///
/// The inner loop runs over lags so each accumulator still sees its terms in
/// increasing `n`; the result is bit-identical to a plain n-inner loop.
#[inline]
fn accumulate_lag_sums(
    x: &[f64],
    t: usize,
    params: &CorrentropyParams,
    kernel: &ParzenKernel,
    acc: &mut [f64],
) {
    // Same arithmetic on every path; wider registers only change throughput.
    #[cfg(target_arch = "x86_64")]
    {
        if is_x86_feature_detected!("avx512f") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { lag_sums_avx512(x, t, params, kernel, acc) };
        }
        if is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { lag_sums_avx2(x, t, params, kernel, acc) };
        }
    }
    lag_sums(x, t, params, kernel, acc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn lag_sums_avx512(x: &[f64], t: usize, params: &CorrentropyParams, kernel: &ParzenKernel, acc: &mut [f64]) {
    lag_sums(x, t, params, kernel, acc)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn lag_sums_avx2(x: &[f64], t: usize, params: &CorrentropyParams, kernel: &ParzenKernel, acc: &mut [f64]) {
    lag_sums(x, t, params, kernel, acc)
}

#[inline(always)]
fn lag_sums(x: &[f64], t: usize, params: &CorrentropyParams, kernel: &ParzenKernel, acc: &mut [f64]) {
    let lags = params.max_lag;
    for n in 0..params.window {
        let p = x[t + n];
        let lagged = &x[t + n + 1..t + n + 1 + lags];
        for (a, &q) in acc.iter_mut().zip(lagged) {
            *a += kernel.eval(p, q);
        }
    }
}

fn check_frame(len: usize, t: usize, params: &CorrentropyParams) -> Result<()> {
    if t + params.span() > len {
        return Err(Error::FrameOutOfRange {
            start: t,
            needed: params.span(),
            len,
        });
    }
    Ok(())
}

/// Correntropy of one channel for the frame starting at sample `t`: entry
/// `τ-1` holds `V(τ)`. Requires `t + window + max_lag <= x.len()`.
pub fn correntropy_channel_frame(
    x: &[f64],
    t: usize,
    params: &CorrentropyParams,
    sigma: f64,
) -> Result<Vec<f64>> {
    let kernel = ParzenKernel::new(sigma)?;
    check_frame(x.len(), t, params)?;
    let mut acc = vec![0.0; params.max_lag];
    accumulate_lag_sums(x, t, params, &kernel, &mut acc);
    let n = params.window as f64;
    Ok(acc.into_iter().map(|s| s / n).collect())
}

/// Element-wise sum over channels, in channel order.
pub fn pool_channels(per_channel: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = per_channel
        .first()
        .ok_or(Error::EmptyInput("no channels to pool"))?;
    let mut pooled = vec![0.0; first.len()];
    for v in per_channel {
        if v.len() != pooled.len() {
            return Err(Error::LengthMismatch {
                expected: pooled.len(),
                found: v.len(),
            });
        }
        for (w, &c) in pooled.iter_mut().zip(v) {
            *w += c;
        }
    }
    Ok(pooled)
}

/// Pooled correntropy frames `W[t](τ)` on the hop grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrentropySeries {
    frames: Vec<Vec<f64>>,
    frame_times: Vec<f64>,
    sigma_track: Vec<f64>,
    params: CorrentropyParams,
    sample_rate: u32,
}

impl CorrentropySeries {
    /// Assembles a series from precomputed frames (frame `k` starts at `k·hop`).
    pub fn from_frames(
        frames: Vec<Vec<f64>>,
        sigma_track: Vec<f64>,
        params: CorrentropyParams,
        sample_rate: u32,
    ) -> Result<Self> {
        if sigma_track.len() != frames.len() {
            return Err(Error::LengthMismatch {
                expected: frames.len(),
                found: sigma_track.len(),
            });
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != params.max_lag) {
            return Err(Error::LengthMismatch {
                expected: params.max_lag,
                found: bad.len(),
            });
        }
        let frame_times = (0..frames.len())
            .map(|k| (k * params.hop) as f64 / sample_rate as f64)
            .collect();
        Ok(Self {
            frames,
            frame_times,
            sigma_track,
            params,
            sample_rate,
        })
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Start time of each frame in seconds.
    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn sigma_track(&self) -> &[f64] {
        &self.sigma_track
    }

    pub fn params(&self) -> &CorrentropyParams {
        &self.params
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn hop_seconds(&self) -> f64 {
        self.params.hop as f64 / self.sample_rate as f64
    }

    /// `Σ_τ W[k](τ)` for every frame, summed in lag order.
    pub fn frame_sums(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.iter().sum()).collect()
    }
}

/// Computes `W[t](τ)` for every complete frame of the cochleagram.
///
/// `sigma_track[k]` is the kernel bandwidth used for frame `k`, shared by all
/// channels. Frames are independent and may be spread over `threads` workers
/// (0 = all cores); the output does not depend on the thread count.
pub fn correntropy_series(
    cochleagram: &Cochleagram,
    params: &CorrentropyParams,
    sigma_track: &[f64],
    threads: usize,
) -> Result<CorrentropySeries> {
    let n_frames = params.frame_count(cochleagram.len());
    if sigma_track.len() != n_frames {
        return Err(Error::LengthMismatch {
            expected: n_frames,
            found: sigma_track.len(),
        });
    }
    let kernels = sigma_track
        .iter()
        .map(|&s| ParzenKernel::new(s))
        .collect::<Result<Vec<_>>>()?;
    let n = params.window as f64;

    let frames: Vec<Vec<f64>> = run_with_threads(threads, || {
        kernels
            .par_iter()
            .enumerate()
            .map(|(k, kernel)| {
                let t = k * params.hop;
                let mut pooled = vec![0.0; params.max_lag];
                let mut acc = vec![0.0; params.max_lag];
                for channel in cochleagram.channels() {
                    acc.fill(0.0);
                    accumulate_lag_sums(channel, t, params, kernel, &mut acc);
                    for (w, &s) in pooled.iter_mut().zip(&acc) {
                        *w += s / n;
                    }
                }
                pooled
            })
            .collect()
    });
    CorrentropySeries::from_frames(
        frames,
        sigma_track.to_vec(),
        *params,
        cochleagram.sample_rate(),
    )
}

/// Signed detection function on the hop grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFunction {
    values: Vec<f64>,
    hop_seconds: f64,
    origin_seconds: f64,
}

impl DetectionFunction {
    pub fn new(values: Vec<f64>, hop_seconds: f64, origin_seconds: f64) -> Result<Self> {
        if !(hop_seconds > 0.0) {
            return Err(Error::invalid("detection function hop must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("detection function values must be finite"));
        }
        Ok(Self {
            values,
            hop_seconds,
            origin_seconds,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn origin_seconds(&self) -> f64 {
        self.origin_seconds
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time in seconds of hop index `i`.
    pub fn time_of(&self, i: usize) -> f64 {
        self.origin_seconds + i as f64 * self.hop_seconds
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * gain).collect(),
            self.hop_seconds,
            self.origin_seconds,
        )
    }
}

/// Differences consecutive frame sums into `ΔW`. Values stay signed.
///
/// Index `k` compares frames `k` and `k+1` and is stamped at the start time
/// of frame `k`.
pub fn detection_function(series: &CorrentropySeries) -> Result<DetectionFunction> {
    if series.len() < 2 {
        return Err(Error::invalid(format!(
            "detection function needs at least 2 frames, got {}",
            series.len()
        )));
    }
    let sums = series.frame_sums();
    let values = sums.windows(2).map(|w| w[1] - w[0]).collect();
    DetectionFunction::new(values, series.hop_seconds(), series.frame_times()[0])
}

/// Sign-change event estimate: an onset opens at the first index with
/// `ΔW < −threshold`, its offset at the first later index with
/// `ΔW > threshold`. A trailing open onset is closed at the last index.
pub fn naive_events(df: &DetectionFunction, threshold: f64) -> EventList {
    let mut events = Vec::new();
    let mut open: Option<usize> = None;
    for (i, &v) in df.values().iter().enumerate() {
        match open {
            None if v < -threshold => open = Some(i),
            Some(on) if v > threshold => {
                events.push((on, i));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(on) = open {
        let last = df.len() - 1;
        if on < last {
            events.push((on, last));
        }
    }
    EventList::from_events(
        events
            .into_iter()
            .map(|(on, off)| Event::pair(df.time_of(on), df.time_of(off)))
            .collect(),
    )
}
