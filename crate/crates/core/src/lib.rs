//! Paired note onset/offset detection for monophonic audio.
//!
//! The pipeline resamples the input to a fixed analysis rate, splits it into
//! gammatone channels on the ERB-rate scale, measures per-channel correntropy
//! over short lagged windows, pools the channels, and differences the pooled
//! frames into a signed detection function. Onsets show up as negative peaks
//! and offsets as positive peaks; [`peakpick::pairwise_pick`] locates them
//! jointly by fitting stretched inverse-hyperbolic templates.
//!
//! ```no_run
//! use correntropy_onset::{audio_io, pipeline::{analyze, PipelineConfig}};
//!
//! let audio = audio_io::load_wav("take.wav").unwrap();
//! let analysis = analyze(&audio, &PipelineConfig::default()).unwrap();
//! for event in analysis.events.iter() {
//!     println!("{:.3} -> {:?}", event.onset, event.offset);
//! }
//! ```

pub mod audio_io;
pub mod detection;
pub mod error;
pub mod evaluation;
pub mod events;
pub mod export;
pub mod filterbank;
pub mod peakpick;
pub mod pipeline;
pub mod sigma;
pub mod synth;

mod parallel;

pub use error::{Error, Result};
pub use events::{Event, EventList};
