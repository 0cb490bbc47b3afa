//! Three-section annotation study: meaning preservation, simplification
//! ranking and hallucination probes. Builds survey versions from caption
//! pools and aggregates collected judgments into agreement reports.
//!
//! A survey comes in two halves. [`SurveyDoc`] is what annotators see;
//! [`SurveyKey`] holds the hidden candidate sources and reading levels and
//! never leaves the operator's side.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::augment::CaptionPool;
use crate::embed::EmbeddingTable;
use crate::lexicon::{PosLexicon, PosTag};
use crate::math;
use crate::rng;
use crate::textstats::tokenize;
use crate::CaptionKind;

pub const ITEMS_PER_SECTION: usize = 5;
pub const ITEMS_PER_SURVEY: usize = 3 * ITEMS_PER_SECTION;
pub const MAX_PROBE_WORDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Meaning,
    Simplify,
    Halluc,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Meaning, Section::Simplify, Section::Halluc];

    pub fn as_str(self) -> &'static str {
        match self {
            Section::Meaning => "meaning",
            Section::Simplify => "simplify",
            Section::Halluc => "halluc",
        }
    }
}

/// Where a meaning-preservation candidate was generated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Actual,
    Neighbor,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Judgment {
    Different,
    Unsure,
    Matches,
}

impl Judgment {
    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeaningPayload {
    pub paragraph: String,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplifyPayload {
    pub paragraph: String,
    pub captions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HallucPayload {
    pub original: String,
    pub generated: String,
    pub probe_words: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Payload {
    Meaning(MeaningPayload),
    Simplify(SimplifyPayload),
    Halluc(HallucPayload),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyItem {
    pub item_id: String,
    pub section: Section,
    pub payload: Payload,
}

/// The annotator-facing document. Carries no hidden tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyDoc {
    pub version_id: u32,
    pub items: Vec<SurveyItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hidden {
    Meaning {
        sources: Vec<Source>,
        kind: CaptionKind,
        neighbor_id: String,
        random_id: String,
    },
    Simplify {
        levels: Vec<CaptionKind>,
    },
    Halluc {
        kind: CaptionKind,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemKey {
    pub item_id: String,
    pub video_id: String,
    pub hidden: Hidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyKey {
    pub version_id: u32,
    pub items: Vec<ItemKey>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answers {
    /// One judgment per candidate (meaning) or per probe word (halluc).
    Labels(Vec<Judgment>),
    /// Rank of each displayed caption, 1 = simplest, 3 = most complex.
    Ranks(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub annotator_id: String,
    pub version_id: u32,
    pub item_id: String,
    pub answers: Answers,
    #[serde(default)]
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurveyError {
    TooFewRows,
    InsufficientVideos { needed: usize, available: usize },
    MissingEmbedding(String),
    UnknownItem(String),
    IncompleteAnswer { item_id: String, reason: String },
    KeyMismatch(String),
}

impl fmt::Display for SurveyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurveyError::TooFewRows => f.write_str("need at least two embeddings for neighbor search"),
            SurveyError::InsufficientVideos { needed, available } => {
                write!(f, "need {needed} usable videos, have {available}")
            }
            SurveyError::MissingEmbedding(id) => write!(f, "no embedding for video {id:?}"),
            SurveyError::UnknownItem(id) => write!(f, "unknown survey item {id:?}"),
            SurveyError::IncompleteAnswer { item_id, reason } => {
                write!(f, "answer for {item_id:?} is invalid: {reason}")
            }
            SurveyError::KeyMismatch(id) => write!(f, "key for item {id:?} does not match its section"),
        }
    }
}

impl core::error::Error for SurveyError {}

/// For each row, the other row with the highest cosine similarity. Ties
/// go to the lexicographically smallest id.
pub fn nearest_neighbors(table: &EmbeddingTable) -> Result<BTreeMap<String, String>, SurveyError> {
    if table.len() < 2 {
        return Err(SurveyError::TooFewRows);
    }
    let rows: Vec<Vec<f64>> = (0..table.len()).map(|k| table.unit_row(k)).collect();
    let ids = table.ids();
    let mut out = BTreeMap::new();
    for a in 0..rows.len() {
        let mut best: Option<(f64, &str)> = None;
        for b in 0..rows.len() {
            if a == b {
                continue;
            }
            let s = math::dot(&rows[a], &rows[b]);
            let better = match best {
                None => true,
                Some((bs, bid)) => s > bs || (s == bs && ids[b].as_str() < bid),
            };
            if better {
                best = Some((s, ids[b].as_str()));
            }
        }
        let (_, id) = best.expect("at least one other row");
        out.insert(ids[a].clone(), String::from(id));
    }
    Ok(out)
}

/// Nouns and verbs of `generated` that do not occur in `source`, first
/// `max` distinct ones in order of appearance.
pub fn probe_words(source: &str, generated: &str, lexicon: &PosLexicon, max: usize) -> Vec<String> {
    let known: BTreeSet<String> = tokenize(source).into_iter().collect();
    let mut out: Vec<String> = Vec::new();
    for tok in tokenize(generated) {
        if out.len() == max {
            break;
        }
        if known.contains(&tok) || out.contains(&tok) {
            continue;
        }
        if matches!(lexicon.tag(&tok), PosTag::Noun | PosTag::Verb) {
            out.push(tok);
        }
    }
    out
}

fn item_id(version: u32, section: Section, k: usize) -> String {
    format!("v{version}-{}-{}", section.as_str(), k + 1)
}

/// Builds `versions` surveys of 15 items each, every item on a distinct
/// video.
pub fn make_surveys(
    pools: &[CaptionPool],
    gt_embeddings: &EmbeddingTable,
    versions: u32,
    seed: u64,
    lexicon: &PosLexicon,
) -> Result<(Vec<SurveyDoc>, Vec<SurveyKey>), SurveyError> {
    let by_id: BTreeMap<&str, &CaptionPool> = pools.iter().map(|p| (p.video_id.as_str(), p)).collect();
    let mut ids: Vec<&str> = by_id.keys().copied().collect();
    for id in &ids {
        if gt_embeddings.position(id).is_none() {
            return Err(SurveyError::MissingEmbedding(String::from(*id)));
        }
    }
    let needed = ITEMS_PER_SURVEY * versions as usize;
    if ids.len() < needed.max(3) {
        return Err(SurveyError::InsufficientVideos {
            needed: needed.max(3),
            available: ids.len(),
        });
    }
    // Neighbors are searched among pooled videos only.
    let pooled_rows: Vec<(String, Vec<f32>)> = ids
        .iter()
        .map(|id| (String::from(*id), gt_embeddings.get(id).unwrap_or(&[]).to_vec()))
        .collect();
    let pooled = EmbeddingTable::from_rows(pooled_rows, false).map_err(|_| SurveyError::TooFewRows)?;
    let neighbors = nearest_neighbors(&pooled)?;

    let mut rng = rng::seeded(seed);
    ids.shuffle(&mut rng);
    let mut queue = ids.clone().into_iter();

    let mut docs = Vec::new();
    let mut keys = Vec::new();
    for version in 1..=versions {
        let mut items = Vec::with_capacity(ITEMS_PER_SURVEY);
        let mut item_keys = Vec::with_capacity(ITEMS_PER_SURVEY);
        for k in 0..ITEMS_PER_SECTION {
            let vid = queue.next().ok_or(SurveyError::InsufficientVideos {
                needed,
                available: ids.len(),
            })?;
            let kind = CaptionKind::GENERATED[rng.random_range(0..CaptionKind::GENERATED.len())];
            let neighbor = neighbors[vid].as_str();
            let random = loop {
                let r = ids[rng.random_range(0..ids.len())];
                if r != vid && r != neighbor {
                    break r;
                }
            };
            let mut cands = [
                (Source::Actual, by_id[vid].get(kind)),
                (Source::Neighbor, by_id[neighbor].get(kind)),
                (Source::Random, by_id[random].get(kind)),
            ];
            cands.shuffle(&mut rng);
            let id = item_id(version, Section::Meaning, k);
            items.push(SurveyItem {
                item_id: id.clone(),
                section: Section::Meaning,
                payload: Payload::Meaning(MeaningPayload {
                    paragraph: String::from(by_id[vid].get(CaptionKind::F)),
                    candidates: cands.iter().map(|c| String::from(c.1)).collect(),
                }),
            });
            item_keys.push(ItemKey {
                item_id: id,
                video_id: String::from(vid),
                hidden: Hidden::Meaning {
                    sources: cands.iter().map(|c| c.0).collect(),
                    kind,
                    neighbor_id: String::from(neighbor),
                    random_id: String::from(random),
                },
            });
        }
        for k in 0..ITEMS_PER_SECTION {
            let vid = queue.next().ok_or(SurveyError::InsufficientVideos {
                needed,
                available: ids.len(),
            })?;
            let mut levels = [CaptionKind::E, CaptionKind::I, CaptionKind::U];
            levels.shuffle(&mut rng);
            let id = item_id(version, Section::Simplify, k);
            items.push(SurveyItem {
                item_id: id.clone(),
                section: Section::Simplify,
                payload: Payload::Simplify(SimplifyPayload {
                    paragraph: String::from(by_id[vid].get(CaptionKind::F)),
                    captions: levels.iter().map(|&l| String::from(by_id[vid].get(l))).collect(),
                }),
            });
            item_keys.push(ItemKey {
                item_id: id,
                video_id: String::from(vid),
                hidden: Hidden::Simplify { levels: levels.to_vec() },
            });
        }
        let mut k = 0;
        while k < ITEMS_PER_SECTION {
            let vid = queue.next().ok_or(SurveyError::InsufficientVideos {
                needed,
                available: ids.len(),
            })?;
            let choices = [CaptionKind::L, CaptionKind::E, CaptionKind::I, CaptionKind::U];
            let kind = choices[rng.random_range(0..choices.len())];
            let original = by_id[vid].get(CaptionKind::F);
            let generated = by_id[vid].get(kind);
            let words = probe_words(original, generated, lexicon, MAX_PROBE_WORDS);
            if words.is_empty() {
                // no candidate hallucinations: draw another video
                continue;
            }
            let id = item_id(version, Section::Halluc, k);
            items.push(SurveyItem {
                item_id: id.clone(),
                section: Section::Halluc,
                payload: Payload::Halluc(HallucPayload {
                    original: String::from(original),
                    generated: String::from(generated),
                    probe_words: words,
                }),
            });
            item_keys.push(ItemKey {
                item_id: id,
                video_id: String::from(vid),
                hidden: Hidden::Halluc { kind },
            });
            k += 1;
        }
        docs.push(SurveyDoc { version_id: version, items });
        keys.push(SurveyKey {
            version_id: version,
            items: item_keys,
        });
    }
    Ok((docs, keys))
}

/// Checks that `answers` is complete and well formed for `item`.
pub fn validate_answers(item: &SurveyItem, answers: &Answers) -> Result<(), SurveyError> {
    let bad = |reason: String| {
        Err(SurveyError::IncompleteAnswer {
            item_id: item.item_id.clone(),
            reason,
        })
    };
    match (&item.payload, answers) {
        (Payload::Meaning(p), Answers::Labels(l)) => {
            if l.len() != p.candidates.len() {
                return bad(format!("expected {} labels, got {}", p.candidates.len(), l.len()));
            }
        }
        (Payload::Halluc(p), Answers::Labels(l)) => {
            if l.len() != p.probe_words.len() {
                return bad(format!("expected {} labels, got {}", p.probe_words.len(), l.len()));
            }
        }
        (Payload::Simplify(p), Answers::Ranks(r)) => {
            let n = p.captions.len();
            let mut sorted = r.clone();
            sorted.sort_unstable();
            let perm: Vec<u8> = (1..=n as u8).collect();
            if sorted != perm {
                return bad(format!("ranks {r:?} are not a permutation of 1..={n}"));
            }
        }
        (_, Answers::Labels(_)) => return bad(String::from("expected ranks")),
        (_, Answers::Ranks(_)) => return bad(String::from("expected labels")),
    }
    Ok(())
}

/// Percentages over Different / Unsure / Matches.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelRow {
    pub n: u64,
    pub different: f64,
    pub unsure: f64,
    pub matches: f64,
}

impl LabelRow {
    fn from_counts(c: [u64; 3]) -> Self {
        let n = c.iter().sum();
        let pct = |x: u64| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 };
        LabelRow {
            n,
            different: pct(c[0]),
            unsure: pct(c[1]),
            matches: pct(c[2]),
        }
    }
}

/// Percentages over rank positions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RankRow {
    pub n: u64,
    pub simplest: f64,
    pub middle: f64,
    pub most_complex: f64,
}

impl RankRow {
    fn from_counts(c: [u64; 3]) -> Self {
        let n = c.iter().sum();
        let pct = |x: u64| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 };
        RankRow {
            n,
            simplest: pct(c[0]),
            middle: pct(c[1]),
            most_complex: pct(c[2]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HallucReport {
    pub total: LabelRow,
    pub majority_per_word: LabelRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UnanimityRow {
    /// Items answered by at least two annotators.
    pub items: u64,
    /// Percent of items where every annotator gave identical answers to
    /// every sub-question.
    pub unanimous: f64,
    /// Percent of items where at least one sub-question was answered
    /// identically by all annotators.
    pub unanimous_any: f64,
    /// Expected `unanimous` for annotators picking uniformly among three
    /// options on a single sub-question.
    pub random_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n: u64,
    pub meaning: BTreeMap<Source, LabelRow>,
    pub simplify: BTreeMap<CaptionKind, RankRow>,
    pub halluc: HallucReport,
    pub unanimous: BTreeMap<Section, UnanimityRow>,
}

struct Indexed<'a> {
    item: &'a SurveyItem,
    key: &'a ItemKey,
}

fn index_items<'a>(
    surveys: &'a [SurveyDoc],
    keys: &'a [SurveyKey],
) -> Result<BTreeMap<(u32, &'a str), Indexed<'a>>, SurveyError> {
    let key_index: BTreeMap<(u32, &str), &ItemKey> = keys
        .iter()
        .flat_map(|k| k.items.iter().map(move |i| ((k.version_id, i.item_id.as_str()), i)))
        .collect();
    let mut out = BTreeMap::new();
    for doc in surveys {
        for item in &doc.items {
            let key = *key_index
                .get(&(doc.version_id, item.item_id.as_str()))
                .ok_or_else(|| SurveyError::KeyMismatch(item.item_id.clone()))?;
            let consistent = matches!(
                (&item.payload, &key.hidden),
                (Payload::Meaning(_), Hidden::Meaning { .. })
                    | (Payload::Simplify(_), Hidden::Simplify { .. })
                    | (Payload::Halluc(_), Hidden::Halluc { .. })
            );
            if !consistent {
                return Err(SurveyError::KeyMismatch(item.item_id.clone()));
            }
            out.insert((doc.version_id, item.item_id.as_str()), Indexed { item, key });
        }
    }
    Ok(out)
}

fn random_baseline(annotators: u64) -> f64 {
    let k = annotators.max(1) - 1;
    100.0 * libm::pow(1.0 / 3.0, k as f64)
}

/// Aggregates judgments into per-section distributions and unanimity rates.
/// The result does not depend on response order.
pub fn aggregate(
    responses: &[ResponseRecord],
    surveys: &[SurveyDoc],
    keys: &[SurveyKey],
) -> Result<AgreementReport, SurveyError> {
    let index = index_items(surveys, keys)?;
    let mut meaning: BTreeMap<Source, [u64; 3]> = BTreeMap::new();
    let mut simplify: BTreeMap<CaptionKind, [u64; 3]> = BTreeMap::new();
    let mut halluc_total = [0u64; 3];
    // (version, item) -> annotator -> answers, so response order cannot matter
    let mut per_item: BTreeMap<(u32, &str), BTreeMap<&str, &Answers>> = BTreeMap::new();

    for r in responses {
        let entry = index
            .get(&(r.version_id, r.item_id.as_str()))
            .ok_or_else(|| SurveyError::UnknownItem(r.item_id.clone()))?;
        validate_answers(entry.item, &r.answers)?;
        match (&entry.key.hidden, &r.answers) {
            (Hidden::Meaning { sources, .. }, Answers::Labels(labels)) => {
                for (s, l) in sources.iter().zip(labels) {
                    meaning.entry(*s).or_insert([0; 3])[l.index()] += 1;
                }
            }
            (Hidden::Simplify { levels }, Answers::Ranks(ranks)) => {
                for (lv, &rank) in levels.iter().zip(ranks) {
                    simplify.entry(*lv).or_insert([0; 3])[usize::from(rank) - 1] += 1;
                }
            }
            (Hidden::Halluc { .. }, Answers::Labels(labels)) => {
                for l in labels {
                    halluc_total[l.index()] += 1;
                }
            }
            _ => return Err(SurveyError::KeyMismatch(r.item_id.clone())),
        }
        per_item
            .entry((r.version_id, r.item_id.as_str()))
            .or_default()
            .insert(r.annotator_id.as_str(), &r.answers);
    }

    let mut majority = [0u64; 3];
    let mut unanimity: BTreeMap<Section, (u64, u64, u64, BTreeMap<u64, u64>)> = BTreeMap::new();
    for (key, by_annotator) in &per_item {
        let entry = &index[key];
        let answers: Vec<&Answers> = by_annotator.values().copied().collect();
        if let Payload::Halluc(p) = &entry.item.payload {
            for w in 0..p.probe_words.len() {
                let mut votes = [0u64; 3];
                for a in &answers {
                    if let Answers::Labels(l) = a {
                        votes[l[w].index()] += 1;
                    }
                }
                let top = *votes.iter().max().unwrap_or(&0);
                let winners: Vec<usize> = (0..3).filter(|&k| votes[k] == top).collect();
                // an unbroken tie counts as Unsure
                let label = if winners.len() == 1 { winners[0] } else { Judgment::Unsure.index() };
                majority[label] += 1;
            }
        }
        if answers.len() < 2 {
            continue;
        }
        let all_same = answers.iter().all(|a| *a == answers[0]);
        let width = match answers[0] {
            Answers::Labels(l) => l.len(),
            Answers::Ranks(r) => r.len(),
        };
        let any_same = (0..width).any(|pos| {
            let pick = |a: &Answers| match a {
                Answers::Labels(l) => l[pos] as u8,
                Answers::Ranks(r) => r[pos],
            };
            answers.iter().all(|a| pick(a) == pick(answers[0]))
        });
        let row = unanimity.entry(entry.item.section).or_default();
        row.0 += 1;
        row.1 += u64::from(all_same);
        row.2 += u64::from(any_same);
        *row.3.entry(answers.len() as u64).or_insert(0) += 1;
    }

    let pct = |x: u64, n: u64| if n == 0 { 0.0 } else { 100.0 * x as f64 / n as f64 };
    let unanimous = Section::ALL
        .iter()
        .map(|&s| {
            let (items, all, any, sizes) = unanimity.remove(&s).unwrap_or_default();
            let typical = sizes
                .iter()
                .max_by_key(|&(size, count)| (*count, *size))
                .map_or(3, |(size, _)| *size);
            (
                s,
                UnanimityRow {
                    items,
                    unanimous: pct(all, items),
                    unanimous_any: pct(any, items),
                    random_baseline: random_baseline(typical),
                },
            )
        })
        .collect();

    Ok(AgreementReport {
        n: responses.len() as u64,
        meaning: [Source::Actual, Source::Neighbor, Source::Random]
            .iter()
            .map(|&s| (s, LabelRow::from_counts(meaning.get(&s).copied().unwrap_or([0; 3]))))
            .collect(),
        simplify: [CaptionKind::E, CaptionKind::I, CaptionKind::U]
            .iter()
            .map(|&l| (l, RankRow::from_counts(simplify.get(&l).copied().unwrap_or([0; 3]))))
            .collect(),
        halluc: HallucReport {
            total: LabelRow::from_counts(halluc_total),
            majority_per_word: LabelRow::from_counts(majority),
        },
        unanimous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn neighbor_examples() {
        let t = EmbeddingTable::from_rows(
            alloc::vec![
                ("v1".to_string(), alloc::vec![1.0, 0.0]),
                ("v2".to_string(), alloc::vec![0.9, 0.436]),
                ("v3".to_string(), alloc::vec![0.0, 1.0]),
            ],
            false,
        )
        .unwrap();
        let nn = nearest_neighbors(&t).unwrap();
        assert_eq!(nn["v1"], "v2");
        assert_eq!(nn["v3"], "v2");
        assert!(nn.iter().all(|(a, b)| a != b));

        let dup = EmbeddingTable::from_rows(
            alloc::vec![
                ("c".to_string(), alloc::vec![1.0, 0.0]),
                ("b".to_string(), alloc::vec![1.0, 0.0]),
                ("a".to_string(), alloc::vec![1.0, 0.0]),
            ],
            false,
        )
        .unwrap();
        let nn = nearest_neighbors(&dup).unwrap();
        assert_eq!(nn["c"], "a");
        assert_eq!(nn["a"], "b");

        let one = EmbeddingTable::from_rows(alloc::vec![("x".to_string(), alloc::vec![1.0])], false).unwrap();
        assert_eq!(nearest_neighbors(&one), Err(SurveyError::TooFewRows));
    }

    #[test]
    fn probe_word_examples() {
        let lex = PosLexicon::from_tsv("tunnel\tNOUN\nnavigate\tVERB\na\tNOUN\nb\tNOUN\nc\tNOUN\nd\tNOUN\ne\tNOUN\n").unwrap();
        assert!(probe_words("x y", "x y", &lex, 3).is_empty());
        assert_eq!(
            probe_words("they go", "they go tunnel navigate quickly", &lex, 3),
            ["tunnel", "navigate"]
        );
        assert_eq!(probe_words("", "a b c d e", &lex, 3), ["a", "b", "c"]);
    }

    #[test]
    fn rank_answers_must_be_permutations() {
        let item = SurveyItem {
            item_id: "i".into(),
            section: Section::Simplify,
            payload: Payload::Simplify(SimplifyPayload {
                paragraph: "p".into(),
                captions: alloc::vec!["a".into(), "b".into(), "c".into()],
            }),
        };
        assert!(validate_answers(&item, &Answers::Ranks(alloc::vec![2, 3, 1])).is_ok());
        assert!(validate_answers(&item, &Answers::Ranks(alloc::vec![1, 1, 2])).is_err());
        assert!(validate_answers(&item, &Answers::Labels(alloc::vec![Judgment::Matches; 3])).is_err());
    }
}
