//! Kernel bandwidth selection by Silverman's rule of thumb,
//! `σ = b · stddev · N^(−1/5)`, either once for the whole signal or on a
//! sliding observation window updated every correntropy hop.

use crate::audio_io::AudioBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilvermanParams {
    /// Scale factor `b`.
    pub b: f64,
    /// Observation window length in seconds.
    pub obs_window: f64,
    /// Samples between σ updates (the correntropy hop).
    pub update_hop: usize,
    pub sigma_floor: f64,
}

impl Default for SilvermanParams {
    fn default() -> Self {
        Self {
            b: 0.9,
            obs_window: 7.0,
            update_hop: 55,
            sigma_floor: 1e-6,
        }
    }
}

impl SilvermanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 0.0 && self.obs_window > 0.0 && self.sigma_floor > 0.0)
            || self.update_hop == 0
        {
            return Err(Error::invalid(format!(
                "Silverman parameters must be positive (b={}, window={} s, hop={}, floor={})",
                self.b, self.obs_window, self.update_hop, self.sigma_floor
            )));
        }
        Ok(())
    }

    fn apply(&self, stddev: f64, n: usize) -> f64 {
        (self.b * stddev * (n as f64).powf(-0.2)).max(self.sigma_floor)
    }
}

/// Rule-of-thumb bandwidth for `window`, using the sample standard
/// deviation (divisor `n − 1`), clamped below at `sigma_floor`.
pub fn silverman_sigma(window: &[f64], params: &SilvermanParams) -> Result<f64> {
    params.validate()?;
    let n = window.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "bandwidth estimation needs at least 2 samples, got {n}"
        )));
    }
    let mean = window.iter().sum::<f64>() / n as f64;
    let ss: f64 = window.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(params.apply((ss / (n - 1) as f64).sqrt(), n))
}

/// Window `[start, start + width)` of the observation window centered on `t`,
/// slid inward at the signal edges so it keeps its full width whenever the
/// signal is long enough.
fn observation_range(t: usize, width: usize, len: usize) -> (usize, usize) {
    if width >= len {
        return (0, len);
    }
    let start = t.saturating_sub(width / 2).min(len - width);
    (start, start + width)
}

/// σ for each of `n_frames` frames starting at `k · update_hop`, computed on
/// the observation window centered at the frame start.
pub fn sigma_track(buf: &AudioBuffer, params: &SilvermanParams, n_frames: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let x = buf.samples();
    if x.is_empty() {
        return Err(Error::EmptyInput("sigma track input buffer"));
    }
    let width = ((params.obs_window * buf.sample_rate() as f64).round() as usize).max(2);
    if x.len() < 2 {
        return Ok(vec![params.sigma_floor; n_frames]);
    }

    // Prefix sums of the globally centered signal keep the variance
    // subtraction well conditioned.
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut s1 = Vec::with_capacity(x.len() + 1);
    let mut s2 = Vec::with_capacity(x.len() + 1);
    let (mut a, mut b) = (0.0, 0.0);
    s1.push(0.0);
    s2.push(0.0);
    for &v in x {
        let d = v - mean;
        a += d;
        b += d * d;
        s1.push(a);
        s2.push(b);
    }

    Ok((0..n_frames)
        .map(|k| {
            let (lo, hi) = observation_range(k * params.update_hop, width, x.len());
            let n = (hi - lo) as f64;
            let sum = s1[hi] - s1[lo];
            let sq = s2[hi] - s2[lo];
            let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
            params.apply(var.sqrt(), hi - lo)
        })
        .collect())
}

/// A constant track holding the whole-signal Silverman bandwidth.
pub fn global_sigma_track(buf: &AudioBuffer, params: &SilvermanParams, n_frames: usize) -> Result<Vec<f64>> {
    let x = buf.samples();
    if x.is_empty() {
        return Err(Error::EmptyInput("sigma track input buffer"));
    }
    let sigma = if x.len() < 2 {
        params.sigma_floor
    } else {
        silverman_sigma(x, params)?
    };
    Ok(vec![sigma; n_frames])
}
