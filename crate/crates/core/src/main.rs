use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use correntropy_onset::audio_io::{load_wav, resample, write_wav_16};
use correntropy_onset::evaluation::{evaluate, EvalReport};
use correntropy_onset::export::{correntropy_csv, detection_csv, sigma_csv, write_text};
use correntropy_onset::peakpick::pairwise_pick;
use correntropy_onset::pipeline::{detection_stage, PipelineConfig, SigmaMode};
use correntropy_onset::synth::{presets, synthesize, SynthScene};
use correntropy_onset::{Error, EventList};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_PROCESSING: u8 = 3;

/// Correntropy-based note onset and offset detection.
#[derive(Debug, Parser)]
#[command(name = "corronset", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect onset/offset pairs and write annotation files.
    Detect(DetectArgs),
    /// Score detected annotations against ground truth.
    Eval(EvalArgs),
    /// Render a synthetic scene to WAV plus its ground-truth annotations.
    Synth(SynthArgs),
    /// Write intermediate signals (ΔW, W, σ) as CSV.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Internal processing rate, Hz.
    #[arg(long, default_value_t = 11_025)]
    sample_rate: u32,
    /// Number of gammatone channels.
    #[arg(long, default_value_t = 64)]
    channels: usize,
    /// Lowest filterbank center frequency, Hz.
    #[arg(long, default_value_t = 80.0)]
    f_lo: f64,
    /// Highest filterbank center frequency, Hz.
    #[arg(long, default_value_t = 4000.0)]
    f_hi: f64,
    /// Correntropy hop, milliseconds.
    #[arg(long, default_value_t = 5.0)]
    hop_ms: f64,
    /// Observation window for the kernel bandwidth, seconds.
    #[arg(long, default_value_t = 7.0)]
    sigma_window_s: f64,
    /// Silverman scale factor.
    #[arg(long, default_value_t = 0.9)]
    sigma_b: f64,
    /// Lower bound on the kernel bandwidth.
    #[arg(long, default_value_t = 1e-6)]
    sigma_floor: f64,
    /// Use one bandwidth for the whole file instead of a sliding window.
    #[arg(long)]
    global_sigma: bool,
    /// Kernel sharpness factor.
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    /// Window-length weighting exponent.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Shortest picking window, hops.
    #[arg(long, default_value_t = 4)]
    omega_min: usize,
    /// Longest picking window, hops.
    #[arg(long, default_value_t = 500)]
    omega_max: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            sample_rate: self.sample_rate,
            n_channels: self.channels,
            f_lo: self.f_lo,
            f_hi: self.f_hi,
            hop_seconds: self.hop_ms / 1000.0,
            sigma_window_seconds: self.sigma_window_s,
            sigma_b: self.sigma_b,
            sigma_floor: self.sigma_floor,
            sigma_mode: if self.global_sigma { SigmaMode::Global } else { SigmaMode::Localized },
            alpha: self.alpha,
            k: self.k,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            threads: self.threads,
            ..PipelineConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct DetectArgs {
    /// Input WAV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Annotation file (one input) or directory (several inputs). Stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the detection function ΔW as CSV (file, or directory for several inputs).
    #[arg(long)]
    dump_df: Option<PathBuf>,
    /// Write the pooled correntropy W_t(τ) as CSV.
    #[arg(long)]
    dump_w: Option<PathBuf>,
    /// Write the per-frame kernel bandwidth as CSV.
    #[arg(long)]
    dump_sigma: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Pairs of annotation files: DETECTED TRUTH [DETECTED TRUTH ...].
    #[arg(required = true, num_args = 2.., value_names = ["DETECTED", "TRUTH"])]
    files: Vec<PathBuf>,
    /// Onset matching tolerance, milliseconds.
    #[arg(long, default_value_t = 50.0)]
    onset_tol_ms: f64,
    /// Offset matching tolerance, milliseconds.
    #[arg(long, default_value_t = 100.0)]
    offset_tol_ms: f64,
    /// Also write the report as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Vocal,
    Clarinet,
    Dynamic,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Scene description file (key = value lines).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    scene: Option<PathBuf>,
    /// Built-in benchmark scene.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Noise seed (overrides the scene file).
    #[arg(long)]
    seed: Option<u64>,
    /// Pink-noise SNR in dB (overrides the scene).
    #[arg(long)]
    snr_db: Option<f64>,
    /// Output sample rate in Hz (overrides the scene).
    #[arg(long)]
    sample_rate: Option<u32>,
    /// Output WAV path (16-bit PCM).
    #[arg(long)]
    wav: PathBuf,
    /// Output ground-truth annotation path.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Input WAV file.
    input: PathBuf,
    /// Detection function ΔW CSV. Printed to stdout when no output is named.
    #[arg(long)]
    dump_df: Option<PathBuf>,
    /// Pooled correntropy W_t(τ) CSV.
    #[arg(long)]
    dump_w: Option<PathBuf>,
    /// Kernel bandwidth track CSV.
    #[arg(long)]
    dump_sigma: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidParameter(_) => EXIT_USAGE,
            Error::Unreadable { .. }
            | Error::Unwritable { .. }
            | Error::UnsupportedCodec { .. }
            | Error::MalformedWav { .. }
            | Error::EmptyAudio(_)
            | Error::Parse { .. } => EXIT_IO,
            _ => EXIT_PROCESSING,
        };
        Failure { code, message: err.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn in_file(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
    move |err| {
        let mut f = Failure::from(err);
        if matches!(f.code, EXIT_IO) && !f.message.contains(&*path.to_string_lossy()) {
            f.message = format!("{}: {}", path.display(), f.message);
        }
        f
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_owned())
}

/// Target path for one of several inputs: `dir/<stem><suffix>`.
fn target(dest: &Option<PathBuf>, input: &Path, suffix: &str, many: bool) -> Option<PathBuf> {
    dest.as_ref().map(|d| if many { d.join(format!("{}{suffix}", stem(input))) } else { d.clone() })
}

fn run_detect(args: DetectArgs) -> Result<(), Failure> {
    let config = args.pipeline.config();
    config.validate()?;
    let many = args.inputs.len() > 1;
    if many && args.output.is_none() {
        return Err(usage("several inputs need --output DIR"));
    }
    if many {
        for dir in [&args.output, &args.dump_df, &args.dump_w, &args.dump_sigma].into_iter().flatten() {
            fs::create_dir_all(dir).map_err(|source| Error::Unwritable { path: dir.clone(), source })?;
        }
    }
    for input in &args.inputs {
        let audio = load_wav(input).map_err(in_file(input))?;
        let audio = resample(&audio, config.sample_rate)?;
        let (series, df) = detection_stage(&audio, &config).map_err(in_file(input))?;
        let events = pairwise_pick(&df, &config.pick_params())?;
        if let Some(path) = target(&args.dump_df, input, "_df.csv", many) {
            write_text(&path, &detection_csv(&df))?;
        }
        if let Some(path) = target(&args.dump_w, input, "_w.csv", many) {
            write_text(&path, &correntropy_csv(&series))?;
        }
        if let Some(path) = target(&args.dump_sigma, input, "_sigma.csv", many) {
            write_text(&path, &sigma_csv(&series))?;
        }
        match target(&args.output, input, ".txt", many) {
            Some(path) => events.write(&path)?,
            None => print!("{}", events.to_annotation_string()),
        }
    }
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), Failure> {
    if args.files.len() % 2 != 0 {
        return Err(usage("eval expects DETECTED TRUTH pairs"));
    }
    let (onset_tol, offset_tol) = (args.onset_tol_ms / 1000.0, args.offset_tol_ms / 1000.0);
    if !(onset_tol >= 0.0 && offset_tol >= 0.0) {
        return Err(usage("tolerances must be non-negative"));
    }
    let mut files = Vec::new();
    for pair in args.files.chunks(2) {
        let detected = EventList::read(&pair[0]).map_err(in_file(&pair[0]))?;
        let truth = EventList::read(&pair[1]).map_err(in_file(&pair[1]))?;
        let scores = evaluate(&detected, &truth, onset_tol, offset_tol)?;
        files.push((pair[0].display().to_string(), scores));
    }
    let report = EvalReport::from_files(files);
    print!("{}", report.to_table());
    if let Some(path) = &args.csv {
        write_text(path, &report.to_csv())?;
    }
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<(), Failure> {
    let mut scene = match (&args.scene, args.preset) {
        (Some(path), _) => SynthScene::read(path).map_err(in_file(path))?,
        (None, Some(preset)) => {
            let seed = args.seed.unwrap_or(0);
            match preset {
                Preset::Vocal => presets::vocal(seed),
                Preset::Clarinet => presets::clarinet(seed),
                Preset::Dynamic => presets::dynamic(seed),
            }
        }
        (None, None) => return Err(usage("synth needs --scene or --preset")),
    };
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }
    if let Some(snr) = args.snr_db {
        scene.snr_db = Some(snr);
    }
    if let Some(rate) = args.sample_rate {
        scene.sample_rate = rate;
    }
    let (audio, truth) = synthesize(&scene)?;
    write_wav_16(&args.wav, &audio)?;
    truth.write(&args.truth)?;
    Ok(())
}

fn run_export(args: ExportArgs) -> Result<(), Failure> {
    let config = args.pipeline.config();
    config.validate()?;
    let audio = load_wav(&args.input).map_err(in_file(&args.input))?;
    let audio = resample(&audio, config.sample_rate)?;
    let (series, df) = detection_stage(&audio, &config).map_err(in_file(&args.input))?;
    let mut wrote = false;
    if let Some(path) = &args.dump_df {
        write_text(path, &detection_csv(&df))?;
        wrote = true;
    }
    if let Some(path) = &args.dump_w {
        write_text(path, &correntropy_csv(&series))?;
        wrote = true;
    }
    if let Some(path) = &args.dump_sigma {
        write_text(path, &sigma_csv(&series))?;
        wrote = true;
    }
    if !wrote {
        print!("{}", detection_csv(&df));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Detect(args) => run_detect(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
        Command::Export(args) => run_export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("corronset: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
