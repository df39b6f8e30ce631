//! Onset/offset event lists and the tab-separated annotation format.
//!
//! One event per line: `onset_seconds` or `onset_seconds<TAB>offset_seconds`.
//! Blank lines and lines starting with `#` are ignored when reading; writing
//! uses six decimal places, sorted by onset.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub onset: f64,
    pub offset: Option<f64>,
}

impl Event {
    pub fn pair(onset: f64, offset: f64) -> Self {
        Self {
            onset,
            offset: Some(offset),
        }
    }

    pub fn onset_only(onset: f64) -> Self {
        Self {
            onset,
            offset: None,
        }
    }
}

/// Events ordered by onset time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventList {
    events: Vec<Event>,
}

impl EventList {
    /// Wraps events, sorting them by onset.
    pub fn from_events(mut events: Vec<Event>) -> Self {
        events.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        Self { events }
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        Self::from_events(pairs.iter().map(|&(a, b)| Event::pair(a, b)).collect())
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn onsets(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.onset).collect()
    }

    /// Offsets in ascending order, or `None` if any event lacks one.
    pub fn offsets(&self) -> Option<Vec<f64>> {
        let mut offs: Vec<f64> = self.events.iter().map(|e| e.offset).collect::<Option<_>>()?;
        offs.sort_by(f64::total_cmp);
        Some(offs)
    }

    /// True when every event has an offset and the marks strictly alternate:
    /// `onset_i < offset_i < onset_{i+1}`.
    pub fn is_interleaved(&self) -> bool {
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            let Some(off) = e.offset else { return false };
            if !(last < e.onset && e.onset < off) {
                return false;
            }
            last = off;
        }
        true
    }

    /// Events shifted by `delta` seconds.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            events: self
                .events
                .iter()
                .map(|e| Event {
                    onset: e.onset + delta,
                    offset: e.offset.map(|o| o + delta),
                })
                .collect(),
        }
    }

    pub fn to_annotation_string(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            match e.offset {
                Some(off) => writeln!(out, "{:.6}\t{:.6}", e.onset, off),
                None => writeln!(out, "{:.6}", e.onset),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn parse_annotations(text: &str) -> Result<Self> {
        let mut events = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            let parse = |field: &str| -> Result<f64> {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line: lineno,
                        message: format!("not a time in seconds: {field:?}"),
                    })
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let event = match fields.as_slice() {
                [on] => Event::onset_only(parse(on)?),
                [on, off] => {
                    let (on, off) = (parse(on)?, parse(off)?);
                    if off < on {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("offset {off} precedes onset {on}"),
                        });
                    }
                    Event::pair(on, off)
                }
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected 1 or 2 fields, found {}", fields.len()),
                    })
                }
            };
            events.push(event);
        }
        Ok(Self::from_events(events))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Unreadable {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_annotations(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_annotation_string()).map_err(|source| Error::Unwritable {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn annotation_format() {
        let list = EventList::from_events(vec![Event::pair(1.5, 2.25), Event::onset_only(0.1)]);
        assert_eq!(list.to_annotation_string(), "0.100000\n1.500000\t2.250000\n");
    }

    #[test]
    fn parse_mixed_and_comments() {
        let list = EventList::parse_annotations("# truth\n0.5\t1.0\n\n2.0\n1.2 1.4\n").unwrap();
        assert_eq!(
            list.events(),
            &[Event::pair(0.5, 1.0), Event::pair(1.2, 1.4), Event::onset_only(2.0)]
        );
        assert!(list.offsets().is_none());
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (text, line) in [("0.5\n0.7\tx\n", 2), ("1\t2\t3\n", 1), ("\n\n2.0\t1.0\n", 3), ("nan\n", 1)] {
            match EventList::parse_annotations(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn interleaving() {
        assert!(EventList::from_pairs(&[(0.1, 0.5), (0.6, 0.9)]).is_interleaved());
        assert!(!EventList::from_pairs(&[(0.1, 0.7), (0.6, 0.9)]).is_interleaved());
        assert!(!EventList::from_pairs(&[(0.1, 0.1)]).is_interleaved());
        assert!(!EventList::from_events(vec![Event::onset_only(1.0)]).is_interleaved());
        assert!(EventList::default().is_interleaved());
    }

    proptest! {
        #[test]
        fn write_then_parse_preserves_microsecond_times(
            raw in prop::collection::vec((0.0f64..1000.0, 0.0f64..5.0), 0..20)
        ) {
            let list = EventList::from_events(
                raw.iter().map(|&(on, len)| Event::pair(on, on + len)).collect(),
            );
            let back = EventList::parse_annotations(&list.to_annotation_string()).unwrap();
            prop_assert_eq!(back.len(), list.len());
            for (a, b) in list.iter().zip(back.iter()) {
                prop_assert!((a.onset - b.onset).abs() <= 5e-7);
                prop_assert!((a.offset.unwrap() - b.offset.unwrap()).abs() <= 5e-7);
            }
        }
    }
}
