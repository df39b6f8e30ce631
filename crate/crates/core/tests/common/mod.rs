//! Reference implementations shared by the oracle tests and the acceptance
//! harness. Everything here is deliberately loop-for-loop and allocation
//! heavy; only the kernel bank and the scalar kernel come from the crate.

#![allow(dead_code)]

use correntropy_onset::audio_io::AudioBuffer;
use correntropy_onset::detection::{gaussian_parzen, CorrentropyParams};
use correntropy_onset::filterbank::Cochleagram;
use correntropy_onset::peakpick::{build_kernel_bank, goodness, PickParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Pooled correntropy frames and the detection function, straight from the
/// estimator definitions: for every frame, channel and lag, average the
/// kernel over the window; sum channels; sum lags; difference frames.
pub fn naive_detection(
    cochleagram: &Cochleagram,
    params: &CorrentropyParams,
    sigmas: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n_frames = params.frame_count(cochleagram.len());
    assert_eq!(n_frames, sigmas.len());
    let mut frames = Vec::with_capacity(n_frames);
    for (k, &sigma) in sigmas.iter().enumerate() {
        let t = k * params.hop;
        let mut pooled = vec![0.0; params.max_lag];
        for c in 0..cochleagram.n_channels() {
            let x = cochleagram.channel(c);
            for tau in 1..=params.max_lag {
                let mut sum = 0.0;
                for n in 0..params.window {
                    sum += gaussian_parzen(x[t + n], x[t + n + tau], sigma).unwrap();
                }
                pooled[tau - 1] += sum / params.window as f64;
            }
        }
        frames.push(pooled);
    }
    let mut sums = Vec::with_capacity(n_frames);
    for frame in &frames {
        let mut s = 0.0;
        for &w in frame {
            s += w;
        }
        sums.push(s);
    }
    let mut delta = Vec::new();
    for k in 0..sums.len().saturating_sub(1) {
        delta.push(sums[k + 1] - sums[k]);
    }
    (frames, delta)
}

/// Algorithm 1 as written: alternate onset (−Λ) and offset (+Λ) searches,
/// each taking the argmax of the goodness over window ends
/// `t + ω_min ..= min(t + ω_max, T)`, first maximum on ties.
pub fn literal_pick(values: &[f64], params: &PickParams) -> Vec<(usize, usize)> {
    let bank = build_kernel_bank(params).unwrap();
    let mut marks: Vec<usize> = Vec::new();
    if values.is_empty() {
        return Vec::new();
    }
    let big_t = values.len() - 1;
    let mut t = 0usize;
    let mut find_onset = true;
    while t + params.omega_min <= big_t {
        let mut best_score = f64::NEG_INFINITY;
        let mut best_end: Option<usize> = None;
        let last_end = if t + params.omega_max < big_t { t + params.omega_max } else { big_t };
        for t_end in (t + params.omega_min)..=last_end {
            let omega = t_end - t;
            let base = bank.get(omega).unwrap();
            let kernel: Vec<f64> = if find_onset {
                base.iter().map(|v| -v).collect()
            } else {
                base.to_vec()
            };
            let window: Vec<f64> = values[t + 1..=t_end].to_vec();
            let score = goodness(&kernel, &window, params.k).unwrap();
            if score > best_score {
                best_score = score;
                best_end = Some(t_end);
            }
        }
        match best_end {
            Some(mark) => {
                marks.push(mark);
                t = mark;
                find_onset = !find_onset;
            }
            // Every window flat: nothing to fit, move on by the longest window.
            None => t = (t + params.omega_max).min(big_t),
        }
    }
    if marks.len() % 2 == 1 {
        let onset = marks.pop().unwrap();
        if onset < big_t {
            marks.push(onset);
            marks.push(big_t);
        }
    }
    marks.chunks(2).map(|p| (p[0], p[1])).collect()
}

/// A random detection function: Gaussian noise with occasional negative and
/// positive bumps, a random scale, and sometimes exact-zero stretches.
pub fn random_detection_values(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = rng.gen_range(20..1500);
    let scale = 10f64.powf(rng.gen_range(-3.0..4.0));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut v: Vec<f64> = (0..len).map(|_| normal.sample(rng) * scale * 0.1).collect();
    let bumps = rng.gen_range(0..len / 20 + 1);
    for _ in 0..bumps {
        let at = rng.gen_range(0..len);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let width = rng.gen_range(1..12);
        for (j, x) in v.iter_mut().enumerate().skip(at).take(width) {
            *x += sign * scale * (1.0 - (j - at) as f64 / width as f64);
        }
    }
    if rng.gen_bool(0.3) {
        let a = rng.gen_range(0..len);
        let b = (a + rng.gen_range(1..700)).min(len);
        v[a..b].fill(0.0);
    }
    v
}

/// Concatenated template segments: per note a scaled −Λ'_{ω₁} segment that
/// ends on the onset hop and a scaled Λ'_{ω₂} segment that ends on the
/// offset hop. Index 0 is the search origin. Returns the values and the
/// planted (onset, offset) hops.
pub fn planted_scene(rng: &mut ChaCha8Rng, params: &PickParams) -> (Vec<f64>, Vec<(usize, usize)>) {
    let bank = build_kernel_bank(params).unwrap();
    let notes = rng.gen_range(1..8);
    let mut values = vec![0.0];
    let mut marks = Vec::new();
    for _ in 0..notes {
        let lead = rng.gen_range(params.omega_min..=params.omega_max.min(160));
        let body = rng.gen_range(params.omega_min..=params.omega_max.min(320));
        let a = 10f64.powf(rng.gen_range(-2.0..3.0));
        let b = 10f64.powf(rng.gen_range(-2.0..3.0));
        values.extend(bank.get(lead).unwrap().iter().map(|v| -a * v));
        let onset = values.len() - 1;
        values.extend(bank.get(body).unwrap().iter().map(|v| b * v));
        marks.push((onset, values.len() - 1));
    }
    (values, marks)
}

/// Random 0.5 s test signal at `rate`: a mix of noise, tones and level steps.
pub fn random_signal(rng: &mut ChaCha8Rng, rate: u32) -> AudioBuffer {
    let len = rate as usize / 2;
    let normal = Normal::new(0.0, 1.0).unwrap();
    let noise_level = 10f64.powf(rng.gen_range(-3.0..-0.5));
    let tones: Vec<(f64, f64, f64)> = (0..rng.gen_range(0..4))
        .map(|_| (rng.gen_range(80.0..3000.0), rng.gen_range(0.05..0.5), rng.gen_range(0.0..0.5)))
        .collect();
    let samples = (0..len)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let mut x = noise_level * normal.sample(rng);
            for &(f, amp, start) in &tones {
                if t >= start {
                    x += amp * (2.0 * std::f64::consts::PI * f * t).sin();
                }
            }
            x
        })
        .collect();
    AudioBuffer::new(samples, rate).unwrap()
}
