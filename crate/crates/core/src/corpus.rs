//! Segmented long-video data model.
//!
//! A [`Video`] is an ordered list of timestamped event captions; the full
//! paragraph used as the standard retrieval query is the space-joined
//! concatenation of those captions.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Default cutoff for [`filter_outliers`].
pub const DEFAULT_MAX_WORDS: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub caption: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Video {
    pub video_id: String,
    pub duration_s: f64,
    pub events: Vec<EventSegment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub split: String,
    pub videos: Vec<Video>,
}

/// A broken [`Video`] or [`Dataset`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CorpusError {
    InvariantViolation { video_id: String, rule: &'static str },
    DuplicateId(String),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::InvariantViolation { video_id, rule } => {
                write!(f, "video {video_id:?} violates rule {rule:?}")
            }
            CorpusError::DuplicateId(id) => write!(f, "duplicate video_id {id:?}"),
        }
    }
}

impl core::error::Error for CorpusError {}

impl Video {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |rule| {
            Err(CorpusError::InvariantViolation {
                video_id: self.video_id.clone(),
                rule,
            })
        };
        if self.video_id.is_empty() {
            return fail("video_id_non_empty");
        }
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            return fail("duration_non_negative");
        }
        if self.events.is_empty() {
            return fail("events_non_empty");
        }
        for e in &self.events {
            if !(e.start_s.is_finite() && e.end_s.is_finite()) || e.start_s < 0.0 {
                return fail("start_non_negative");
            }
            if e.start_s >= e.end_s {
                return fail("start_before_end");
            }
            if e.end_s > self.duration_s {
                return fail("within_duration");
            }
            if e.caption.trim().is_empty() {
                return fail("caption_non_empty");
            }
        }
        if self.events.windows(2).any(|w| w[0].start_s > w[1].start_s) {
            return fail("sorted");
        }
        Ok(())
    }

    pub fn event_count(&self) -> usize {
        self.events.len()
    }
}

impl Dataset {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = alloc::collections::BTreeSet::new();
        for v in &self.videos {
            v.validate()?;
            if !ids.insert(v.video_id.as_str()) {
                return Err(CorpusError::DuplicateId(v.video_id.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, video_id: &str) -> Option<&Video> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }
}

/// Joins trimmed captions with exactly one space.
pub fn join_captions<'a>(captions: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for c in captions {
        let c = c.trim();
        if c.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(c);
    }
    out
}

/// Caption kind `f`: the concatenation of all event captions.
pub fn full_paragraph(video: &Video) -> String {
    join_captions(video.events.iter().map(|e| e.caption.as_str()))
}

/// Captions of events `start..=end`, space-joined.
pub fn event_range_text(video: &Video, start: usize, end: usize) -> String {
    join_captions(video.events[start..=end].iter().map(|e| e.caption.as_str()))
}

/// Whitespace-separated chunks containing at least one alphanumeric
/// character. This is the word notion used for length targets and outlier
/// filtering.
pub fn count_words(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

/// Drops videos whose full paragraph has more than `max_words` words,
/// preserving order. Returns the survivors and the removed ids.
pub fn filter_outliers(dataset: &Dataset, max_words: usize) -> (Dataset, Vec<String>) {
    let mut kept = Vec::with_capacity(dataset.videos.len());
    let mut removed = Vec::new();
    for v in &dataset.videos {
        if count_words(&full_paragraph(v)) > max_words {
            removed.push(v.video_id.clone());
        } else {
            kept.push(v.clone());
        }
    }
    (
        Dataset {
            name: dataset.name.clone(),
            split: dataset.split.clone(),
            videos: kept,
        },
        removed,
    )
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use alloc::string::ToString;

    pub fn video(id: &str, captions: &[&str]) -> Video {
        let events = captions
            .iter()
            .enumerate()
            .map(|(k, c)| EventSegment {
                start_s: k as f64 * 5.0,
                end_s: (k + 1) as f64 * 5.0,
                caption: c.to_string(),
            })
            .collect::<Vec<_>>();
        Video {
            video_id: id.to_string(),
            duration_s: captions.len() as f64 * 5.0,
            events,
            feature_ref: None,
        }
    }

    pub fn kayak() -> Video {
        video(
            "kayak",
            &[
                "People are sitting in kayaks paddling in the water.",
                "They go under a rock and through a tunnel.",
            ],
        )
    }
}
