//! Pairwise onset/offset picking with stretched inverse-hyperbolic templates.
//!
//! The template `Λ(z) = z / (1 + α − |z|)` sampled on `ω` points spans a
//! sharp negative spike, a flat middle and a sharp positive spike. Sign
//! flipped, it has the shape of the detection function between an offset
//! (positive peak) and the next onset (negative peak); unflipped, it matches
//! an onset followed by its offset. From the current cursor the picker
//! stretches the template over every admissible length, scores each stretch
//! by its normalized lack of fit, jumps to the best end point, and alternates
//! polarity.

use crate::detection::DetectionFunction;
use crate::error::{Error, Result};
use crate::events::{Event, EventList};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickParams {
    /// Sharpness `α` of the template.
    pub alpha: f64,
    /// Window-length weighting exponent: lack of fit is scaled by `ω^(−k)`.
    pub k: f64,
    /// Shortest template, in hops.
    pub omega_min: usize,
    /// Longest template, in hops.
    pub omega_max: usize,
    /// Template abscissae span `[−z_clip, z_clip]`.
    pub z_clip: f64,
}

impl Default for PickParams {
    fn default() -> Self {
        Self {
            alpha: 0.15,
            k: 1.0,
            omega_min: 4,
            omega_max: 500,
            z_clip: 1.0 - 1e-5,
        }
    }
}

impl PickParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.k >= 0.0) || !self.k.is_finite() {
            return Err(Error::invalid(format!("k must be non-negative, got {}", self.k)));
        }
        if self.omega_min < 1 || self.omega_min >= self.omega_max {
            return Err(Error::invalid(format!(
                "need 1 <= omega_min < omega_max (got {} and {})",
                self.omega_min, self.omega_max
            )));
        }
        if !(self.z_clip > 0.0 && self.z_clip < 1.0) {
            return Err(Error::invalid(format!("z_clip must lie in (0, 1), got {}", self.z_clip)));
        }
        Ok(())
    }
}

/// `Λ(z) = z / (1 + α − |z|)` on `|z| <= 1 − 1e-5`.
pub fn lambda_kernel(z: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(z.abs() <= 1.0 - 1e-5) {
        return Err(Error::invalid(format!("template abscissa {z} outside [-1+1e-5, 1-1e-5]")));
    }
    Ok(z / (1.0 + alpha - z.abs()))
}

/// Normalized templates `Λ'_ω` for every `ω` in `[omega_min, omega_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    omega_min: usize,
    templates: Vec<Vec<f64>>,
}

impl KernelBank {
    pub fn omega_min(&self) -> usize {
        self.omega_min
    }

    pub fn omega_max(&self) -> usize {
        self.omega_min + self.templates.len() - 1
    }

    /// Template of length `omega`.
    pub fn get(&self, omega: usize) -> Option<&[f64]> {
        omega
            .checked_sub(self.omega_min)
            .and_then(|i| self.templates.get(i))
            .map(Vec::as_slice)
    }
}

/// One template: `ω` uniformly spaced abscissae over `[−z_clip, z_clip]`,
/// scaled to unit maximum magnitude. Abscissae come from the integer offsets
/// `2i − (ω − 1)`, so mirrored samples are exact negatives.
fn template(omega: usize, alpha: f64, z_clip: f64) -> Vec<f64> {
    if omega == 1 {
        return vec![0.0];
    }
    let denom = (omega - 1) as f64;
    let raw: Vec<f64> = (0..omega)
        .map(|i| {
            let offset = (2 * i) as f64 - denom;
            let z = z_clip * offset / denom;
            z / (1.0 + alpha - z.abs())
        })
        .collect();
    let peak = max_abs(&raw);
    raw.into_iter().map(|v| v / peak).collect()
}

pub fn build_kernel_bank(params: &PickParams) -> Result<KernelBank> {
    params.validate()?;
    let templates = (params.omega_min..=params.omega_max)
        .map(|omega| template(omega, params.alpha, params.z_clip))
        .collect();
    Ok(KernelBank {
        omega_min: params.omega_min,
        templates,
    })
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `−ω^(−k) · Σ (t_i − w_i / window_peak)²` for a unit-peak template.
#[inline]
fn scaled_fit(template: &[f64], window: &[f64], window_peak: f64, k: f64) -> f64 {
    let sse: f64 = template
        .iter()
        .zip(window)
        .map(|(&t, &w)| {
            let d = t - w / window_peak;
            d * d
        })
        .sum();
    -(sse * (template.len() as f64).powf(-k))
}

/// Goodness of fit between a template and a detection-function window.
///
/// Both inputs are scaled to unit maximum magnitude before differencing, so
/// the score ignores the window's overall level. Returns `−∞` for an
/// all-zero window. Zero is a perfect fit; higher is better.
pub fn goodness(template: &[f64], window: &[f64], k: f64) -> Result<f64> {
    if template.len() != window.len() {
        return Err(Error::LengthMismatch {
            expected: template.len(),
            found: window.len(),
        });
    }
    if template.is_empty() {
        return Err(Error::invalid("goodness needs a window of at least one sample"));
    }
    let window_peak = max_abs(window);
    if window_peak == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let template_peak = max_abs(template);
    let normalized: Vec<f64> = if template_peak > 0.0 {
        template.iter().map(|v| v / template_peak).collect()
    } else {
        template.to_vec()
    };
    Ok(scaled_fit(&normalized, window, window_peak, k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seeking {
    Onset,
    Offset,
}

/// Best end point in `cursor + ω_min ..= min(cursor + ω_max, last)`.
///
/// The window for end point `e` covers indices `cursor+1 ..= e`. Ties go to
/// the smallest `e`; all-zero windows score `−∞` and are never chosen.
fn best_end(
    values: &[f64],
    cursor: usize,
    bank: &KernelBank,
    k: f64,
    seeking: Seeking,
    scratch: &mut Vec<f64>,
) -> Option<usize> {
    let last = values.len() - 1;
    let lo = cursor + bank.omega_min();
    let hi = (cursor + bank.omega_max()).min(last);
    let mut best: Option<(usize, f64)> = None;
    let mut peak = max_abs(&values[cursor + 1..lo]);
    for end in lo..=hi {
        peak = peak.max(values[end].abs());
        if peak == 0.0 {
            continue;
        }
        let base = bank.get(end - cursor).expect("window length within bank range");
        let template: &[f64] = match seeking {
            Seeking::Offset => base,
            Seeking::Onset => {
                scratch.clear();
                scratch.extend(base.iter().map(|v| -v));
                scratch
            }
        };
        let score = scaled_fit(template, &values[cursor + 1..=end], peak, k);
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((end, score));
        }
    }
    best.map(|(end, _)| end)
}

/// Alternating onset/offset search on raw detection-function values,
/// returning `(onset, offset)` hop indices.
///
/// The search starts at index 0 looking for an onset. Each step jumps the
/// cursor to the best-fitting end point and flips polarity; a stretch whose
/// every candidate window is all zero is skipped in one jump. An onset left
/// open when the cursor can no longer advance is closed at the last index.
pub fn pick_indices(values: &[f64], bank: &KernelBank, k: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    if values.is_empty() {
        return pairs;
    }
    let last = values.len() - 1;
    let mut scratch = Vec::with_capacity(bank.omega_max());
    let mut cursor = 0;
    let mut open_onset: Option<usize> = None;
    while cursor + bank.omega_min() <= last {
        let seeking = if open_onset.is_some() {
            Seeking::Offset
        } else {
            Seeking::Onset
        };
        match best_end(values, cursor, bank, k, seeking, &mut scratch) {
            Some(end) => {
                match open_onset.take() {
                    Some(onset) => pairs.push((onset, end)),
                    None => open_onset = Some(end),
                }
                cursor = end;
            }
            None => cursor = (cursor + bank.omega_max()).min(last),
        }
    }
    if let Some(onset) = open_onset {
        if onset < last {
            pairs.push((onset, last));
        }
    }
    pairs
}

/// Pairwise onset/offset picking on a detection function, in seconds.
pub fn pairwise_pick(df: &DetectionFunction, params: &PickParams) -> Result<EventList> {
    let bank = build_kernel_bank(params)?;
    Ok(pick_with_bank(df, &bank, params.k))
}

/// [`pairwise_pick`] with a prebuilt kernel bank.
pub fn pick_with_bank(df: &DetectionFunction, bank: &KernelBank, k: f64) -> EventList {
    let events = pick_indices(df.values(), bank, k)
        .into_iter()
        .map(|(on, off)| Event::pair(df.time_of(on), df.time_of(off)))
        .collect();
    EventList::from_events(events)
}
