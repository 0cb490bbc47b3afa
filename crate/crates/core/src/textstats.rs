//! Word-level corpus statistics: counts, lengths and unique noun/verb
//! deltas between each generated caption kind and its source paragraph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::augment::CaptionPool;
use crate::corpus::{full_paragraph, Dataset};
use crate::lexicon::{PosLexicon, PosTag};
use crate::CaptionKind;

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CaptionStats {
    pub word_count: usize,
    pub mean_word_len: f64,
    pub unique_nouns: usize,
    pub unique_verbs: usize,
}

pub fn caption_stats(text: &str, lexicon: &PosLexicon) -> CaptionStats {
    let tokens = tokenize(text);
    if tokens.is_empty() {
        return CaptionStats::default();
    }
    let chars: usize = tokens.iter().map(|t| t.chars().count()).sum();
    let distinct: BTreeSet<&str> = tokens.iter().map(String::as_str).collect();
    let mut nouns = 0;
    let mut verbs = 0;
    for t in distinct {
        match lexicon.tag(t) {
            PosTag::Noun => nouns += 1,
            PosTag::Verb => verbs += 1,
            PosTag::Other => {}
        }
    }
    CaptionStats {
        word_count: tokens.len(),
        mean_word_len: chars as f64 / tokens.len() as f64,
        unique_nouns: nouns,
        unique_verbs: verbs,
    }
}

/// One column of the report.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KindDelta {
    pub delta_nouns: f64,
    pub delta_verbs: f64,
    pub word_count: f64,
    pub word_len: f64,
    pub videos: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SourceRow {
    pub word_count: f64,
    pub word_len: f64,
    pub videos: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    /// Noun/verb uniqueness is computed on surface forms (no lemmatization).
    pub note: String,
    pub source: SourceRow,
    /// Keyed by the nine generated kinds.
    pub kinds: BTreeMap<CaptionKind, KindDelta>,
    /// Dataset videos with no pool.
    pub missing_pools: Vec<String>,
}

impl DeltaReport {
    /// Columns in table order: source, then s/m/l, e/i/u, se/si/su.
    pub fn columns(&self) -> Vec<&'static str> {
        let mut cols = alloc::vec!["source"];
        cols.extend(CaptionKind::GENERATED.iter().map(|k| k.as_str()));
        cols
    }
}

/// Per-kind means of unique noun/verb differences against the full
/// paragraph, over videos present in both `dataset` and `pools`.
pub fn delta_report(pools: &[CaptionPool], dataset: &Dataset, lexicon: &PosLexicon) -> DeltaReport {
    let by_id: BTreeMap<&str, &CaptionPool> =
        pools.iter().map(|p| (p.video_id.as_str(), p)).collect();
    // Iterate in id order so floating sums do not depend on input order.
    let mut videos: Vec<_> = dataset.videos.iter().collect();
    videos.sort_by(|a, b| a.video_id.cmp(&b.video_id));

    let mut missing = Vec::new();
    let mut src_words = 0.0;
    let mut src_len = 0.0;
    let mut src_n = 0usize;
    let mut sums: BTreeMap<CaptionKind, [f64; 4]> = BTreeMap::new();
    let mut counts: BTreeMap<CaptionKind, usize> = BTreeMap::new();

    for video in videos {
        let Some(pool) = by_id.get(video.video_id.as_str()) else {
            missing.push(video.video_id.clone());
            continue;
        };
        let source = caption_stats(&full_paragraph(video), lexicon);
        src_words += source.word_count as f64;
        src_len += source.mean_word_len;
        src_n += 1;
        for kind in CaptionKind::GENERATED {
            let Some(text) = pool.captions.get(&kind) else {
                continue;
            };
            let st = caption_stats(text, lexicon);
            let acc = sums.entry(kind).or_insert([0.0; 4]);
            acc[0] += st.unique_nouns as f64 - source.unique_nouns as f64;
            acc[1] += st.unique_verbs as f64 - source.unique_verbs as f64;
            acc[2] += st.word_count as f64;
            acc[3] += st.mean_word_len;
            *counts.entry(kind).or_insert(0) += 1;
        }
    }

    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    let kinds = CaptionKind::GENERATED
        .iter()
        .map(|&k| {
            let n = counts.get(&k).copied().unwrap_or(0);
            let s = sums.get(&k).copied().unwrap_or([0.0; 4]);
            (
                k,
                KindDelta {
                    delta_nouns: mean(s[0], n),
                    delta_verbs: mean(s[1], n),
                    word_count: mean(s[2], n),
                    word_len: mean(s[3], n),
                    videos: n,
                },
            )
        })
        .collect();

    DeltaReport {
        note: String::from("unique nouns/verbs counted on surface forms, not lemmas"),
        source: SourceRow {
            word_count: mean(src_words, src_n),
            word_len: mean(src_len, src_n),
            videos: src_n,
        },
        kinds,
        missing_pools: missing,
    }
}
