//! Tolerance-window scoring of detected events against ground truth.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::events::EventList;

/// Default onset tolerance (± seconds).
pub const ONSET_TOLERANCE: f64 = 0.05;
/// Default offset tolerance (± seconds).
pub const OFFSET_TOLERANCE: f64 = 0.10;

// Absorbs decimal round-off so that a detection exactly one tolerance away
// (e.g. 1.05 vs 1.00 at ±0.05) still counts.
const BOUNDARY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl std::ops::Add for MatchCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            true_positives: self.true_positives + o.true_positives,
            false_positives: self.false_positives + o.false_positives,
            false_negatives: self.false_negatives + o.false_negatives,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl Metrics {
    pub fn from_counts(counts: MatchCounts) -> Self {
        let (precision, recall, f_measure) = prf(&counts);
        Self {
            counts,
            precision,
            recall,
            f_measure,
        }
    }
}

fn is_sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

/// Greedy chronological one-to-one matching within `±tolerance`.
///
/// Each detection, in time order, claims the earliest unclaimed ground-truth
/// event inside its tolerance window; unclaimed detections are false
/// positives and unclaimed ground truth false negatives.
pub fn match_events(detections: &[f64], ground_truth: &[f64], tolerance: f64) -> Result<MatchCounts> {
    if !is_sorted(detections) {
        return Err(Error::Unsorted("detections"));
    }
    if !is_sorted(ground_truth) {
        return Err(Error::Unsorted("ground truth"));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be non-negative, got {tolerance}")));
    }
    let reach = tolerance + BOUNDARY_SLACK;
    let mut next = 0;
    let mut tp = 0;
    for &d in detections {
        while next < ground_truth.len() && ground_truth[next] < d - reach {
            next += 1;
        }
        if next < ground_truth.len() && ground_truth[next] <= d + reach {
            tp += 1;
            next += 1;
        }
    }
    Ok(MatchCounts {
        true_positives: tp,
        false_positives: detections.len() - tp,
        false_negatives: ground_truth.len() - tp,
    })
}

/// Precision, recall and F-measure; each is 0 when its denominator is 0.
pub fn prf(counts: &MatchCounts) -> (f64, f64, f64) {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let tp = counts.true_positives;
    let p = ratio(tp, tp + counts.false_positives);
    let r = ratio(tp, tp + counts.false_negatives);
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

/// Scores for one file. Offsets are absent when the ground truth carries no
/// offset for some event.
#[derive(Debug, Clone, PartialEq)]
pub struct FileEvaluation {
    pub onset: Metrics,
    pub offset: Option<Metrics>,
}

/// Scores onsets and offsets independently, each against its own sorted list.
pub fn evaluate(
    detected: &EventList,
    truth: &EventList,
    onset_tol: f64,
    offset_tol: f64,
) -> Result<FileEvaluation> {
    let onset = Metrics::from_counts(match_events(&detected.onsets(), &truth.onsets(), onset_tol)?);
    let offset = match truth.offsets() {
        Some(truth_offsets) => {
            let mut det: Vec<f64> = detected.iter().filter_map(|e| e.offset).collect();
            det.sort_by(f64::total_cmp);
            Some(Metrics::from_counts(match_events(&det, &truth_offsets, offset_tol)?))
        }
        None => None,
    };
    Ok(FileEvaluation { onset, offset })
}

/// Per-file results plus micro-averaged totals.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub files: Vec<(String, FileEvaluation)>,
    pub onset: Metrics,
    /// Summed over the files that have offset annotations.
    pub offset: Option<Metrics>,
}

impl EvalReport {
    pub fn from_files(files: Vec<(String, FileEvaluation)>) -> Self {
        let onset = files
            .iter()
            .fold(MatchCounts::default(), |acc, (_, f)| acc + f.onset.counts);
        let offset = files
            .iter()
            .filter_map(|(_, f)| f.offset)
            .map(|m| m.counts)
            .reduce(|a, b| a + b);
        Self {
            files,
            onset: Metrics::from_counts(onset),
            offset: offset.map(Metrics::from_counts),
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<24} {:>6} {:>5} {:>5} {:>5} {:>9} {:>9} {:>9}",
            "file", "kind", "TP", "FP", "FN", "precision", "recall", "F"
        );
        let mut row = |name: &str, kind: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{:<24} {:>6} {:>5} {:>5} {:>5} {:>9.4} {:>9.4} {:>9.4}",
                name,
                kind,
                m.counts.true_positives,
                m.counts.false_positives,
                m.counts.false_negatives,
                m.precision,
                m.recall,
                m.f_measure
            );
        };
        for (name, f) in &self.files {
            row(name, "onset", &f.onset);
            if let Some(m) = &f.offset {
                row(name, "offset", m);
            }
        }
        if self.files.len() > 1 {
            row("TOTAL", "onset", &self.onset);
            if let Some(m) = &self.offset {
                row("TOTAL", "offset", m);
            }
        }
        out
    }

    /// `file,kind,tp,fp,fn,precision,recall,f_measure`, one row per file and
    /// kind followed by `TOTAL` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("file,kind,tp,fp,fn,precision,recall,f_measure\n");
        let mut row = |name: &str, kind: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{:.6}",
                name,
                kind,
                m.counts.true_positives,
                m.counts.false_positives,
                m.counts.false_negatives,
                m.precision,
                m.recall,
                m.f_measure
            );
        };
        for (name, f) in &self.files {
            row(name, "onset", &f.onset);
            if let Some(m) = &f.offset {
                row(name, "offset", m);
            }
        }
        row("TOTAL", "onset", &self.onset);
        if let Some(m) = &self.offset {
            row("TOTAL", "offset", m);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::Event;
    use proptest::prelude::*;

    fn counts(tp: usize, fp: usize, fn_: usize) -> MatchCounts {
        MatchCounts {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }

    #[test]
    fn matching_examples() {
        assert_eq!(match_events(&[1.03], &[1.00], 0.05).unwrap(), counts(1, 0, 0));
        assert_eq!(match_events(&[1.08], &[1.00], 0.05).unwrap(), counts(0, 1, 1));
        assert_eq!(match_events(&[0.98, 1.02], &[1.00], 0.05).unwrap(), counts(1, 1, 0));
        assert_eq!(match_events(&[1.05], &[1.00], 0.05).unwrap(), counts(1, 0, 0));
        assert_eq!(match_events(&[], &[1.0, 2.0], 0.05).unwrap(), counts(0, 0, 2));
    }

    #[test]
    fn unsorted_input_is_rejected() {
        assert!(matches!(match_events(&[2.0, 1.0], &[], 0.05), Err(Error::Unsorted("detections"))));
        assert!(matches!(match_events(&[], &[2.0, 1.0], 0.05), Err(Error::Unsorted("ground truth"))));
    }

    #[test]
    fn prf_examples() {
        let (p, r, f) = prf(&counts(4, 1, 1));
        assert!((p - 0.8).abs() < 1e-12 && (r - 0.8).abs() < 1e-12 && (f - 0.8).abs() < 1e-12);
        assert_eq!(prf(&counts(0, 0, 0)), (0.0, 0.0, 0.0));
        // Aggregate row of the reference results table: P = 81.1 %, R = 80.2 %.
        let f: f64 = 2.0 * 0.811 * 0.802 / (0.811 + 0.802);
        assert!((f - 0.8065).abs() < 5e-5, "{f}");
    }

    #[test]
    fn evaluate_examples() {
        let truth = EventList::from_pairs(&[(0.5, 1.0), (1.5, 2.2), (3.0, 3.4)]);
        let same = evaluate(&truth, &truth, ONSET_TOLERANCE, OFFSET_TOLERANCE).unwrap();
        assert_eq!(same.onset.f_measure, 1.0);
        assert_eq!(same.offset.unwrap().f_measure, 1.0);

        let none = evaluate(&EventList::default(), &truth, ONSET_TOLERANCE, OFFSET_TOLERANCE).unwrap();
        assert_eq!(none.onset.counts, counts(0, 0, 3));
        assert_eq!((none.onset.precision, none.onset.recall, none.onset.f_measure), (0.0, 0.0, 0.0));

        let onset_only = EventList::from_events(vec![Event::onset_only(0.5), Event::onset_only(1.5)]);
        let det = EventList::from_pairs(&[(0.52, 1.0), (1.49, 2.0)]);
        let r = evaluate(&det, &onset_only, ONSET_TOLERANCE, OFFSET_TOLERANCE).unwrap();
        assert!(r.offset.is_none());
        assert_eq!(r.onset.counts, counts(2, 0, 0));
    }

    #[test]
    fn offsets_use_their_own_tolerance() {
        let truth = EventList::from_pairs(&[(1.0, 2.0)]);
        let det = EventList::from_pairs(&[(1.04, 2.09)]);
        let r = evaluate(&det, &truth, ONSET_TOLERANCE, OFFSET_TOLERANCE).unwrap();
        assert_eq!(r.onset.counts.true_positives, 1);
        assert_eq!(r.offset.unwrap().counts.true_positives, 1);
        let strict = evaluate(&det, &truth, ONSET_TOLERANCE, 0.05).unwrap();
        assert_eq!(strict.offset.unwrap().counts.true_positives, 0);
    }

    #[test]
    fn micro_average() {
        let a = FileEvaluation { onset: Metrics::from_counts(counts(3, 1, 0)), offset: None };
        let b = FileEvaluation {
            onset: Metrics::from_counts(counts(1, 0, 3)),
            offset: Some(Metrics::from_counts(counts(2, 2, 2))),
        };
        let report = EvalReport::from_files(vec![("a".into(), a), ("b".into(), b)]);
        assert_eq!(report.onset.counts, counts(4, 1, 3));
        assert_eq!(report.offset.unwrap().counts, counts(2, 2, 2));
        let csv = report.to_csv();
        assert!(csv.starts_with("file,kind,tp,fp,fn,precision,recall,f_measure\n"));
        assert!(csv.contains("TOTAL,onset,4,1,3,0.800000,0.571429,0.666667"));
        assert!(report.to_table().contains("TOTAL"));
    }

    fn sorted_times() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..30.0, 0..40).prop_map(|mut v| {
            v.sort_by(f64::total_cmp);
            v
        })
    }

    proptest! {
        #[test]
        fn count_identities_and_shift_invariance(
            det in sorted_times(),
            gt in sorted_times(),
            tol in 0.0f64..0.2,
            shift in -5.0f64..5.0,
        ) {
            let c = match_events(&det, &gt, tol).unwrap();
            prop_assert_eq!(c.true_positives + c.false_negatives, gt.len());
            prop_assert_eq!(c.true_positives + c.false_positives, det.len());
            // Shift by a multiple of 2^-10 so every difference is preserved exactly.
            let s = (shift * 1024.0).round() / 1024.0;
            let det_s: Vec<f64> = det.iter().map(|v| v + s).collect();
            let gt_s: Vec<f64> = gt.iter().map(|v| v + s).collect();
            let cs = match_events(&det_s, &gt_s, tol).unwrap();
            prop_assert_eq!(c, cs);
        }

        #[test]
        fn shrinking_tolerance_never_adds_hits(
            det in sorted_times(),
            gt in sorted_times(),
            tol in 0.0f64..0.3,
            shrink in 0.0f64..1.0,
        ) {
            let wide = match_events(&det, &gt, tol).unwrap();
            let narrow = match_events(&det, &gt, tol * shrink).unwrap();
            prop_assert!(narrow.true_positives <= wide.true_positives);
        }
    }
}
