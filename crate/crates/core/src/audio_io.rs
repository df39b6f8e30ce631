//! WAV decoding, mono mixdown and band-limited resampling.

use std::f64::consts::PI;
use std::io::ErrorKind;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Analysis rate of the detection pipeline.
pub const PIPELINE_RATE: u32 = 11_025;

/// A uniformly sampled mono signal.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }
}

fn map_hound_error(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(source) => {
            if source.kind() == ErrorKind::UnexpectedEof {
                Error::MalformedWav {
                    path: path.to_path_buf(),
                    detail: source.to_string(),
                }
            } else {
                Error::Unreadable {
                    path: path.to_path_buf(),
                    source,
                }
            }
        }
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat => Error::UnsupportedCodec {
            path: path.to_path_buf(),
            detail: err.to_string(),
        },
        other => Error::MalformedWav {
            path: path.to_path_buf(),
            detail: other.to_string(),
        },
    }
}

/// Decodes a PCM (8/16/24/32-bit) or 32-bit float WAV file, mixing all
/// channels to mono by their arithmetic mean. Integer PCM is scaled by
/// `2^(bits-1)` so full scale maps to [-1, 1).
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Unreadable {
        path: path.to_path_buf(),
        source,
    })?;
    let reader =
        WavReader::new(std::io::BufReader::new(file)).map_err(|e| map_hound_error(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::MalformedWav {
            path: path.to_path_buf(),
            detail: "zero channels".into(),
        });
    }

    // Sum channels in f64 before a single division: integer and f32 sample
    // sums are exact, so identical channels mix back to themselves.
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| map_hound_error(path, e))?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_hound_error(path, e))?,
        (format, bits) => {
            return Err(Error::UnsupportedCodec {
                path: path.to_path_buf(),
                detail: format!("{bits}-bit {format:?}"),
            })
        }
    };
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }

    let mono: Vec<f64> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    if mono.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }
    AudioBuffer::new(mono, spec.sample_rate).map_err(|_| Error::MalformedWav {
        path: path.to_path_buf(),
        detail: "non-finite sample values".into(),
    })
}

/// Writes a mono 16-bit PCM WAV file, the inverse of the `2^15` read scaling.
/// Samples outside the representable range are clipped.
pub fn write_wav_16(path: impl AsRef<Path>, buf: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    let spec = WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let to_io = |e: hound::Error| Error::Unwritable {
        path: path.to_path_buf(),
        source: match e {
            hound::Error::IoError(io) => io,
            other => std::io::Error::other(other.to_string()),
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(to_io)?;
    for &s in &buf.samples {
        let q = (s * 32_768.0).round().clamp(-32_768.0, 32_767.0) as i16;
        writer.write_sample(q).map_err(to_io)?;
    }
    writer.finalize().map_err(to_io)
}

// Kaiser-windowed sinc design: passband edge at 0.45 x the lower rate,
// stopband edge at its Nyquist frequency, 80 dB design attenuation.
const PASS_EDGE: f64 = 0.45;
const STOP_EDGE: f64 = 0.5;
const ATTENUATION_DB: f64 = 80.0;
const MAX_PHASES: usize = 4096;

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct SincKernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    half_width: f64,
    beta: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn new(in_rate: u32, out_rate: u32) -> Self {
        let lower = in_rate.min(out_rate) as f64;
        let transition = (STOP_EDGE - PASS_EDGE) * lower / in_rate as f64;
        let cutoff = 0.5 * (PASS_EDGE + STOP_EDGE) * lower / in_rate as f64;
        let beta = 0.1102 * (ATTENUATION_DB - 8.7);
        let taps = (ATTENUATION_DB - 7.95) / (14.36 * transition);
        Self {
            cutoff,
            half_width: (taps / 2.0).ceil(),
            beta,
            i0_beta: bessel_i0(beta),
        }
    }

    /// Filter weight for an input sample `u` samples away from the output position.
    fn weight(&self, u: f64) -> f64 {
        if u.abs() >= self.half_width {
            return 0.0;
        }
        let arg = 2.0 * self.cutoff * u;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (PI * arg).sin() / (PI * arg)
        };
        let ratio = u / self.half_width;
        let window = bessel_i0(self.beta * (1.0 - ratio * ratio).max(0.0).sqrt()) / self.i0_beta;
        2.0 * self.cutoff * sinc * window
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Band-limited sample-rate conversion with a Kaiser-windowed sinc kernel.
///
/// Output length is `round(len * target_rate / rate)`. Output sample `j`
/// sits at input position `j * rate / target_rate`; samples outside the
/// buffer are treated as zero.
pub fn resample(buf: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::invalid("target sample rate must be positive"));
    }
    let in_rate = buf.sample_rate;
    if in_rate == target_rate {
        return Ok(buf.clone());
    }
    let g = gcd(in_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = in_rate as u64 / g;
    let out_len = ((buf.len() as f64) * target_rate as f64 / in_rate as f64).round() as usize;

    let kernel = SincKernel::new(in_rate, target_rate);
    let reach = kernel.half_width as i64;
    let taps = 2 * reach as usize;
    let x = &buf.samples;

    // Output j lies at input position base + phase/up with
    // base = (j*down) / up and phase = (j*down) % up; taps cover
    // input indices base-reach+1 ..= base+reach.
    let table: Option<Vec<f64>> = (up as usize <= MAX_PHASES).then(|| {
        let mut t = Vec::with_capacity(up as usize * taps);
        for phase in 0..up {
            let frac = phase as f64 / up as f64;
            for m in 0..taps as i64 {
                let offset = m - reach + 1;
                t.push(kernel.weight(frac - offset as f64));
            }
        }
        t
    });

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len as u64 {
        let pos = j * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let frac = phase as f64 / up as f64;
        let mut acc = 0.0;
        for m in 0..taps as i64 {
            let idx = base + m - reach + 1;
            if idx < 0 || idx as usize >= x.len() {
                continue;
            }
            let w = match &table {
                Some(t) => t[phase as usize * taps + m as usize],
                None => kernel.weight(frac - (m - reach + 1) as f64),
            };
            acc += w * x[idx as usize];
        }
        out.push(acc);
    }
    AudioBuffer::new(out, target_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(freq: f64, rate: u32, len: usize, amp: f64) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin())
            .collect()
    }

    /// Least-squares amplitude of a sinusoid of known frequency.
    fn fit_amplitude(x: &[f64], freq: f64, rate: u32) -> f64 {
        let (mut ss, mut sc, mut cc, mut xs, mut xc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let ph = 2.0 * PI * freq * i as f64 / rate as f64;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            xs += v * s;
            xc += v * c;
        }
        let det = ss * cc - sc * sc;
        let a = (xs * cc - xc * sc) / det;
        let b = (xc * ss - xs * sc) / det;
        (a * a + b * b).sqrt()
    }

    #[test]
    fn rejects_invalid_buffers() {
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
        assert!(AudioBuffer::new(vec![0.0, f64::NAN], 8000).is_err());
        assert!(AudioBuffer::new(vec![f64::INFINITY], 8000).is_err());
    }

    #[test]
    fn exact_four_to_one_length() {
        let buf = AudioBuffer::new(vec![0.1; 44_100], 44_100).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        assert_eq!(out.len(), 11_025);
        assert_eq!(out.sample_rate(), 11_025);
    }

    #[test]
    fn output_length_rounds() {
        let buf = AudioBuffer::new(vec![0.0; 1001], 48_000).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        assert_eq!(out.len(), (1001.0 * 11_025.0 / 48_000.0f64).round() as usize);
    }

    #[test]
    fn identity_when_rates_match() {
        let buf = AudioBuffer::new(sine(440.0, 11_025, 500, 0.3), 11_025).unwrap();
        assert_eq!(resample(&buf, 11_025).unwrap(), buf);
    }

    #[test]
    fn zero_target_rate_is_an_error() {
        let buf = AudioBuffer::new(vec![0.0; 10], 8000).unwrap();
        assert!(matches!(
            resample(&buf, 0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn sine_amplitude_survives_decimation() {
        let buf = AudioBuffer::new(sine(1000.0, 44_100, 44_100, 1.0), 44_100).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        // Skip edge transients.
        let interior = &out.samples()[500..out.len() - 500];
        let amp = fit_amplitude(interior, 1000.0, 11_025);
        assert!((amp - 1.0).abs() < 0.01, "amplitude {amp}");
    }

    #[test]
    fn dc_is_preserved() {
        for &(from, to) in &[(44_100, 11_025), (48_000, 11_025), (8_000, 11_025)] {
            let buf = AudioBuffer::new(vec![0.37; from as usize], from).unwrap();
            let out = resample(&buf, to).unwrap();
            let n = out.len();
            for &v in &out.samples()[n / 5..n - n / 5] {
                assert!((v - 0.37).abs() < 1e-3, "{from}->{to}: {v}");
            }
        }
    }

    #[test]
    fn aliases_are_suppressed_by_60_db() {
        // 7 kHz lies above the 5512.5 Hz output Nyquist and would fold to 4025 Hz.
        let buf = AudioBuffer::new(sine(7000.0, 44_100, 44_100, 1.0), 44_100).unwrap();
        let out = resample(&buf, 11_025).unwrap();
        let interior = &out.samples()[500..out.len() - 500];
        let rms = (interior.iter().map(|v| v * v).sum::<f64>() / interior.len() as f64).sqrt();
        let level_db = 20.0 * (rms * 2f64.sqrt()).log10();
        assert!(level_db < -60.0, "alias level {level_db} dB");
    }

    #[test]
    fn down_up_round_trip_recovers_band_limited_signal() {
        let rate = 11_025;
        let len = 11_025;
        let x: Vec<f64> = (0..len)
            .map(|i| {
                let t = i as f64 / rate as f64;
                0.5 * (2.0 * PI * 300.0 * t).sin()
                    + 0.3 * (2.0 * PI * 1234.5 * t + 0.4).sin()
                    + 0.2 * (2.0 * PI * 2100.0 * t + 1.1).sin()
            })
            .collect();
        let buf = AudioBuffer::new(x.clone(), rate).unwrap();
        let half = resample(&buf, rate / 2).unwrap();
        let back = resample(&half, rate).unwrap();
        assert_eq!(back.len(), len);
        let range = 400..len - 400;
        let err: f64 = range
            .clone()
            .map(|i| (back.samples()[i] - x[i]).powi(2))
            .sum();
        let energy: f64 = range.map(|i| x[i] * x[i]).sum();
        let rel = (err / energy).sqrt();
        assert!(rel < 0.01, "relative RMS error {rel}");
    }
}
