use std::path::Path;

use correntropy_onset::audio_io::{load_wav, write_wav_16, AudioBuffer};
use correntropy_onset::Error;
use hound::{SampleFormat, WavSpec, WavWriter};

fn spec(channels: u16, bits: u16, format: SampleFormat) -> WavSpec {
    WavSpec {
        channels,
        sample_rate: 44_100,
        bits_per_sample: bits,
        sample_format: format,
    }
}

fn write_int(path: &Path, spec: WavSpec, samples: &[i32]) {
    let mut w = WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample(s).unwrap();
    }
    w.finalize().unwrap();
}

#[test]
fn stereo_with_equal_channels_mixes_to_either() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stereo.wav");
    let left: Vec<i32> = (0..44_100).map(|i| ((i * 7919) % 65_536 - 32_768) as i32).collect();
    let interleaved: Vec<i32> = left.iter().flat_map(|&s| [s, s]).collect();
    write_int(&path, spec(2, 16, SampleFormat::Int), &interleaved);
    let audio = load_wav(&path).unwrap();
    assert_eq!(audio.len(), 44_100);
    assert_eq!(audio.sample_rate(), 44_100);
    for (&got, &raw) in audio.samples().iter().zip(&left) {
        assert_eq!(got, raw as f64 / 32_768.0);
    }
}

#[test]
fn zero_payload_reads_as_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeros.wav");
    write_int(&path, spec(1, 16, SampleFormat::Int), &[0; 1000]);
    let audio = load_wav(&path).unwrap();
    assert_eq!(audio.len(), 1000);
    assert!(audio.samples().iter().all(|&v| v == 0.0));
}

#[test]
fn full_scale_square_wave() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.wav");
    let square: Vec<i32> = (0..4410).map(|i| if (i / 50) % 2 == 0 { 32_767 } else { -32_767 }).collect();
    write_int(&path, spec(1, 16, SampleFormat::Int), &square);
    let audio = load_wav(&path).unwrap();
    let lsb = 1.0 / 32_768.0;
    for &v in audio.samples() {
        assert!((v.abs() - 0.99997).abs() <= lsb, "{v}");
    }
}

#[test]
fn wider_and_float_encodings() {
    let dir = tempfile::tempdir().unwrap();
    let p24 = dir.path().join("s24.wav");
    write_int(&p24, spec(1, 24, SampleFormat::Int), &[4_194_304, -8_388_608, 0]);
    assert_eq!(load_wav(&p24).unwrap().samples(), &[0.5, -1.0, 0.0]);

    let pf = dir.path().join("f32.wav");
    let mut w = WavWriter::create(&pf, spec(1, 32, SampleFormat::Float)).unwrap();
    for s in [0.25f32, -0.75, 1.0] {
        w.write_sample(s).unwrap();
    }
    w.finalize().unwrap();
    assert_eq!(load_wav(&pf).unwrap().samples(), &[0.25, -0.75, 1.0]);
}

#[test]
fn distinct_errors() {
    let dir = tempfile::tempdir().unwrap();

    let missing = dir.path().join("missing.wav");
    assert!(matches!(load_wav(&missing), Err(Error::Unreadable { .. })));

    let empty = dir.path().join("empty.wav");
    write_int(&empty, spec(1, 16, SampleFormat::Int), &[]);
    assert!(matches!(load_wav(&empty), Err(Error::EmptyAudio(_))));

    let garbage = dir.path().join("garbage.wav");
    std::fs::write(&garbage, b"definitely not a RIFF file").unwrap();
    assert!(matches!(load_wav(&garbage), Err(Error::MalformedWav { .. })));

    // A 64-bit float stream hand-assembled: format tag 3, 64 bits per sample.
    let f64_path = dir.path().join("f64.wav");
    let mut bytes = Vec::new();
    let data: Vec<u8> = [0.5f64, -0.5].iter().flat_map(|v| v.to_le_bytes()).collect();
    bytes.extend_from_slice(b"RIFF");
    bytes.extend_from_slice(&(36 + data.len() as u32).to_le_bytes());
    bytes.extend_from_slice(b"WAVEfmt ");
    bytes.extend_from_slice(&16u32.to_le_bytes());
    bytes.extend_from_slice(&3u16.to_le_bytes());
    bytes.extend_from_slice(&1u16.to_le_bytes());
    bytes.extend_from_slice(&8000u32.to_le_bytes());
    bytes.extend_from_slice(&64_000u32.to_le_bytes());
    bytes.extend_from_slice(&8u16.to_le_bytes());
    bytes.extend_from_slice(&64u16.to_le_bytes());
    bytes.extend_from_slice(b"data");
    bytes.extend_from_slice(&(data.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&data);
    std::fs::write(&f64_path, bytes).unwrap();
    match load_wav(&f64_path) {
        Err(Error::UnsupportedCodec { .. }) | Err(Error::MalformedWav { .. }) => {}
        other => panic!("64-bit float accepted: {other:?}"),
    }
}

#[test]
fn sixteen_bit_writer_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rt.wav");
    let samples: Vec<f64> = (0..500).map(|i| (i as f64 * 0.05).sin() * 0.8).collect();
    write_wav_16(&path, &AudioBuffer::new(samples.clone(), 8000).unwrap()).unwrap();
    let back = load_wav(&path).unwrap();
    assert_eq!(back.sample_rate(), 8000);
    for (a, b) in samples.iter().zip(back.samples()) {
        assert!((a - b).abs() <= 1.0 / 32_768.0);
    }
}
