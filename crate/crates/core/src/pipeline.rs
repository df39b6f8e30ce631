//! End-to-end configuration and composition of the detection pipeline.

use crate::audio_io::{resample, AudioBuffer, PIPELINE_RATE};
use crate::detection::{correntropy_series, detection_function, CorrentropyParams, CorrentropySeries, DetectionFunction};
use crate::error::{Error, Result};
use crate::evaluation::{OFFSET_TOLERANCE, ONSET_TOLERANCE};
use crate::events::EventList;
use crate::filterbank::{apply_filterbank_with_threads, FilterbankSpec};
use crate::peakpick::{pairwise_pick, PickParams};
use crate::sigma::{global_sigma_track, sigma_track, SilvermanParams};

/// How the kernel bandwidth evolves over the file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaMode {
    /// Silverman bandwidth on a sliding observation window, updated every hop.
    #[default]
    Localized,
    /// One Silverman bandwidth for the whole file.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample_rate: u32,
    pub n_channels: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Correntropy hop and σ update interval, seconds.
    pub hop_seconds: f64,
    pub sigma_window_seconds: f64,
    pub sigma_b: f64,
    pub sigma_floor: f64,
    pub sigma_mode: SigmaMode,
    pub alpha: f64,
    pub k: f64,
    pub omega_min: usize,
    pub omega_max: usize,
    pub onset_tolerance: f64,
    pub offset_tolerance: f64,
    /// Worker threads for the filterbank and correntropy stages (0 = all cores).
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let pick = PickParams::default();
        Self {
            sample_rate: PIPELINE_RATE,
            n_channels: 64,
            f_lo: 80.0,
            f_hi: 4000.0,
            hop_seconds: 0.005,
            sigma_window_seconds: 7.0,
            sigma_b: 0.9,
            sigma_floor: 1e-6,
            sigma_mode: SigmaMode::Localized,
            alpha: pick.alpha,
            k: pick.k,
            omega_min: pick.omega_min,
            omega_max: pick.omega_max,
            onset_tolerance: ONSET_TOLERANCE,
            offset_tolerance: OFFSET_TOLERANCE,
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn filterbank_spec(&self) -> FilterbankSpec {
        FilterbankSpec {
            n_channels: self.n_channels,
            f_lo: self.f_lo,
            f_hi: self.f_hi,
            sample_rate: self.sample_rate,
        }
    }

    /// Window and lag range cover one period of the lowest filterbank frequency.
    pub fn correntropy_params(&self) -> Result<CorrentropyParams> {
        CorrentropyParams::for_rate(self.sample_rate, self.f_lo, self.hop_seconds)
    }

    pub fn silverman_params(&self) -> Result<SilvermanParams> {
        Ok(SilvermanParams {
            b: self.sigma_b,
            obs_window: self.sigma_window_seconds,
            update_hop: self.correntropy_params()?.hop,
            sigma_floor: self.sigma_floor,
        })
    }

    pub fn pick_params(&self) -> PickParams {
        PickParams {
            alpha: self.alpha,
            k: self.k,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            ..PickParams::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        self.filterbank_spec().validate()?;
        self.silverman_params()?.validate()?;
        self.pick_params().validate()?;
        if !(self.onset_tolerance >= 0.0 && self.offset_tolerance >= 0.0) {
            return Err(Error::invalid("tolerances must be non-negative"));
        }
        Ok(())
    }
}

/// Every intermediate of one detection run.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// Input at the pipeline rate.
    pub audio: AudioBuffer,
    pub series: CorrentropySeries,
    pub detection: DetectionFunction,
    pub events: EventList,
}

/// Correntropy series and detection function for audio already at the
/// pipeline rate.
pub fn detection_stage(audio: &AudioBuffer, config: &PipelineConfig) -> Result<(CorrentropySeries, DetectionFunction)> {
    config.validate()?;
    let params = config.correntropy_params()?;
    let n_frames = params.frame_count(audio.len());
    if n_frames < 2 {
        return Err(Error::invalid(format!(
            "input too short: {} samples, need at least {} at {} Hz",
            audio.len(),
            params.span() + params.hop,
            config.sample_rate
        )));
    }
    let silverman = config.silverman_params()?;
    let sigmas = match config.sigma_mode {
        SigmaMode::Localized => sigma_track(audio, &silverman, n_frames)?,
        SigmaMode::Global => global_sigma_track(audio, &silverman, n_frames)?,
    };
    // The all-pole gammatone passes a little DC; remove the offset so a
    // constant input yields a constant (zero) cochleagram.
    let mean = audio.samples().iter().sum::<f64>() / audio.len() as f64;
    let centered = AudioBuffer::new(
        audio.samples().iter().map(|v| v - mean).collect(),
        audio.sample_rate(),
    )?;
    let cochleagram = apply_filterbank_with_threads(&centered, &config.filterbank_spec(), config.threads)?;
    let series = correntropy_series(&cochleagram, &params, &sigmas, config.threads)?;
    let detection = detection_function(&series)?;
    Ok((series, detection))
}

/// Resamples `input` to the pipeline rate and runs detection and picking.
pub fn analyze(input: &AudioBuffer, config: &PipelineConfig) -> Result<Analysis> {
    config.validate()?;
    if input.is_empty() {
        return Err(Error::EmptyInput("audio buffer"));
    }
    let audio = resample(input, config.sample_rate)?;
    let (series, detection) = detection_stage(&audio, config)?;
    let events = pairwise_pick(&detection, &config.pick_params())?;
    Ok(Analysis {
        audio,
        series,
        detection,
        events,
    })
}
