//! CSV dumps of pipeline intermediates for offline plotting.

use std::fmt::Write as _;
use std::path::Path;

use crate::detection::{CorrentropySeries, DetectionFunction};
use crate::error::{Error, Result};

/// `time_s,delta_w`, one row per hop.
pub fn detection_csv(df: &DetectionFunction) -> String {
    let mut out = String::from("time_s,delta_w\n");
    for (i, v) in df.values().iter().enumerate() {
        let _ = writeln!(out, "{:.6},{}", df.time_of(i), v);
    }
    out
}

/// `time_s,sigma`, one row per correntropy frame (frame start times).
pub fn sigma_csv(series: &CorrentropySeries) -> String {
    let mut out = String::from("time_s,sigma\n");
    for (t, s) in series.frame_times().iter().zip(series.sigma_track()) {
        let _ = writeln!(out, "{t:.6},{s}");
    }
    out
}

/// Pooled correntropy matrix: `time_s,tau_1,...,tau_L`, one row per frame.
pub fn correntropy_csv(series: &CorrentropySeries) -> String {
    let lags = series.params().max_lag;
    let mut out = String::from("time_s");
    for tau in 1..=lags {
        let _ = write!(out, ",tau_{tau}");
    }
    out.push('\n');
    for (t, frame) in series.frame_times().iter().zip(series.frames()) {
        let _ = write!(out, "{t:.6}");
        for w in frame {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|source| Error::Unwritable {
        path: path.to_path_buf(),
        source,
    })
}
