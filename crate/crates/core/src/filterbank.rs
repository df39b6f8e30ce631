//! Gammatone filterbank with ERB-rate spaced center frequencies.
//!
//! Each channel is a 4th-order gammatone realized as a cascade of four
//! identical complex one-pole resonators. The real part of the cascade output
//! (scaled by 2) is a real filter whose impulse response is the sampled
//! gammatone `t^3 exp(-2πbt) cos(2πf_c t)`, with unit gain at `f_c`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};
use crate::parallel::run_with_threads;

/// Bandwidth scale for a 4th-order gammatone relative to the channel's ERB.
pub const ORDER4_BANDWIDTH_FACTOR: f64 = 1.019;

/// Upper bound on the energy gain `||y||^2 / ||x||^2` of any channel.
///
/// The complex cascade has unit peak magnitude at its center frequency and
/// the real output adds the mirrored negative-frequency response, so the
/// magnitude response never exceeds 2.
pub const CHANNEL_ENERGY_GAIN_BOUND: f64 = 4.0;

/// Glasberg–Moore ERB-rate (number of ERBs below `freq_hz`).
pub fn erb_rate(freq_hz: f64) -> f64 {
    21.4 * (0.00437 * freq_hz + 1.0).log10()
}

/// Inverse of [`erb_rate`].
pub fn erb_rate_to_hz(rate: f64) -> f64 {
    (10f64.powf(rate / 21.4) - 1.0) / 0.00437
}

/// Glasberg–Moore equivalent rectangular bandwidth in Hz.
pub fn erb_bandwidth(freq_hz: f64) -> f64 {
    24.7 * (0.00437 * freq_hz + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterbankSpec {
    pub n_channels: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    pub sample_rate: u32,
}

impl FilterbankSpec {
    /// 64 channels between 80 Hz and 4 kHz.
    pub fn standard(sample_rate: u32) -> Self {
        Self {
            n_channels: 64,
            f_lo: 80.0,
            f_hi: 4000.0,
            sample_rate,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 {
            return Err(Error::invalid("filterbank needs at least one channel"));
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi && self.f_hi < nyquist) {
            return Err(Error::invalid(format!(
                "filterbank range must satisfy 0 < f_lo < f_hi < {nyquist} Hz (got {}..{})",
                self.f_lo, self.f_hi
            )));
        }
        Ok(())
    }
}

/// Per-channel filtered signals `x_c(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochleagram {
    channels: Vec<Vec<f64>>,
    center_freqs: Vec<f64>,
    sample_rate: u32,
}

impl Cochleagram {
    pub fn new(channels: Vec<Vec<f64>>, center_freqs: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if channels.len() != center_freqs.len() {
            return Err(Error::LengthMismatch {
                expected: center_freqs.len(),
                found: channels.len(),
            });
        }
        if let Some(first) = channels.first() {
            if let Some(bad) = channels.iter().find(|c| c.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        if center_freqs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("center frequencies must be strictly increasing"));
        }
        Ok(Self {
            channels,
            center_freqs,
            sample_rate,
        })
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.channels[c]
    }

    pub fn center_freqs(&self) -> &[f64] {
        &self.center_freqs
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Center frequencies uniformly spaced on the ERB-rate scale, endpoints
/// exactly `f_lo` and `f_hi`. A single channel sits at `f_lo`.
pub fn erb_space(spec: &FilterbankSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.n_channels;
    if n == 1 {
        return Ok(vec![spec.f_lo]);
    }
    let lo = erb_rate(spec.f_lo);
    let hi = erb_rate(spec.f_hi);
    let step = (hi - lo) / (n - 1) as f64;
    let mut freqs: Vec<f64> = (0..n)
        .map(|i| erb_rate_to_hz(lo + step * i as f64))
        .collect();
    freqs[0] = spec.f_lo;
    freqs[n - 1] = spec.f_hi;
    Ok(freqs)
}

/// One gammatone channel: four cascaded complex one-pole sections sharing
/// the pole `r·e^{jθ}`, each with gain `1 - r` (unit gain at `θ`).
#[derive(Debug, Clone, Copy)]
pub struct GammatoneChannel {
    pole_re: f64,
    pole_im: f64,
    gain: f64,
}

impl GammatoneChannel {
    pub fn new(center_hz: f64, sample_rate: u32) -> Self {
        let fs = sample_rate as f64;
        let theta = 2.0 * PI * center_hz / fs;
        let bandwidth = ORDER4_BANDWIDTH_FACTOR * erb_bandwidth(center_hz);
        let radius = (-2.0 * PI * bandwidth / fs).exp();
        Self {
            pole_re: radius * theta.cos(),
            pole_im: radius * theta.sin(),
            gain: 1.0 - radius,
        }
    }

    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let (ar, ai, g) = (self.pole_re, self.pole_im, self.gain);
        let mut state = [(0.0f64, 0.0f64); 4];
        input
            .iter()
            .map(|&x| {
                let mut in_re = g * x;
                let mut in_im = 0.0;
                for s in state.iter_mut() {
                    let re = ar * s.0 - ai * s.1 + in_re;
                    let im = ar * s.1 + ai * s.0 + in_im;
                    *s = (re, im);
                    in_re = g * re;
                    in_im = g * im;
                }
                2.0 * state[3].0
            })
            .collect()
    }
}

/// Filters `buf` through every channel of the bank described by `spec`.
pub fn apply_filterbank(buf: &AudioBuffer, spec: &FilterbankSpec) -> Result<Cochleagram> {
    apply_filterbank_with_threads(buf, spec, 1)
}

/// [`apply_filterbank`] with channels distributed over `threads` workers
/// (0 = all cores). Output is identical for every thread count.
pub fn apply_filterbank_with_threads(
    buf: &AudioBuffer,
    spec: &FilterbankSpec,
    threads: usize,
) -> Result<Cochleagram> {
    if buf.sample_rate() != spec.sample_rate {
        return Err(Error::RateMismatch {
            expected: spec.sample_rate,
            found: buf.sample_rate(),
        });
    }
    if buf.is_empty() {
        return Err(Error::EmptyInput("filterbank input buffer"));
    }
    let freqs = erb_space(spec)?;
    let input = buf.samples();
    let channels: Vec<Vec<f64>> = run_with_threads(threads, || {
        freqs
            .par_iter()
            .map(|&fc| GammatoneChannel::new(fc, spec.sample_rate).process(input))
            .collect()
    });
    Cochleagram::new(channels, freqs, spec.sample_rate)
}
