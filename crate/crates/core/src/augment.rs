//! Caption-pool generation: length targets, batched prompts, labeled
//! response parsing, partial-range sampling and pool assembly around a
//! pluggable completion backend.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{count_words, event_range_text, full_paragraph, Video};
use crate::hash::{fnv1a, hex64, Fnv1a};
use crate::rng::{self, Rng};
use crate::CaptionKind;

/// Floor for summary targets so very short paragraphs never ask for zero
/// words.
pub const MIN_TARGET: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordTargets {
    /// 1/7 of the source length.
    pub short: usize,
    /// 4/7 of the source length.
    pub medium: usize,
    /// Full source length.
    pub full: usize,
}

/// `max(min_target, floor(source_words * l / 7))` for `l` in 1, 4, 7.
pub fn word_targets(source_words: usize, min_target: usize) -> WordTargets {
    let t = |l: usize| (source_words * l / 7).max(min_target);
    WordTargets {
        short: t(1),
        medium: t(4),
        full: t(7),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptFamily {
    Summarization,
    Simplification,
    Joint,
}

impl PromptFamily {
    pub const ALL: [PromptFamily; 3] = [
        PromptFamily::Summarization,
        PromptFamily::Simplification,
        PromptFamily::Joint,
    ];

    pub fn labels(self) -> [&'static str; 3] {
        match self {
            PromptFamily::Summarization => SUMMARY_LABELS,
            PromptFamily::Simplification | PromptFamily::Joint => VERSION_LABELS,
        }
    }

    /// Pool kinds filled by this family's labels, in label order.
    pub fn kinds(self) -> [CaptionKind; 3] {
        use CaptionKind::*;
        match self {
            PromptFamily::Summarization => [S, M, L],
            PromptFamily::Simplification => [E, I, U],
            PromptFamily::Joint => [Se, Si, Su],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptFamily::Summarization => "summarization",
            PromptFamily::Simplification => "simplification",
            PromptFamily::Joint => "joint",
        }
    }
}

impl fmt::Display for PromptFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const SUMMARY_LABELS: [&str; 3] = ["SUMMARY_1", "SUMMARY_4", "SUMMARY_7"];
pub const VERSION_LABELS: [&str; 3] = [
    "VERSION_primary_school",
    "VERSION_secondary_school",
    "VERSION_university",
];
const READING_LEVELS: [&str; 3] = ["primary school", "secondary school", "university"];

const SUMMARIZE_ROLE: &str =
    "You are a helpful writing assistant, with a speciality in summarizing text-based scene descriptions.";
const SIMPLIFY_ROLE: &str = "You are a helpful writing assistant, with a speciality in simplifying and rewriting descriptions for different age groups and reading levels.";
const JOINT_ROLE: &str = "You are a helpful writing assistant, with a speciality in summarizing text-based scene descriptions. You also have a speciality in simplifying and rewriting descriptions for different age groups and reading levels.";
const GUARDRAILS: &str = "Do not modify the indicated order of events. Prioritize visual details. Do not hallucinate. Do not describe objects or events that do not appear in the original paragraph.";
const PARAGRAPH_MARKER: &str = "PARAGRAPH: ";
const LABEL_LINE_PREFIX: &str = "\nLabel this ";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AugmentError {
    EmptyParagraph,
    MissingLabel(String),
    EmptySection(String),
    UnrecognizedPrompt,
    BackendExhausted {
        family: PromptFamily,
        attempts: u32,
        last_error: String,
    },
    InvalidPool {
        video_id: String,
        reason: String,
    },
}

impl fmt::Display for AugmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentError::EmptyParagraph => f.write_str("paragraph is empty"),
            AugmentError::MissingLabel(l) => write!(f, "response is missing label {l}"),
            AugmentError::EmptySection(l) => write!(f, "response section {l} is empty"),
            AugmentError::UnrecognizedPrompt => f.write_str("prompt does not match any template"),
            AugmentError::BackendExhausted {
                family,
                attempts,
                last_error,
            } => write!(
                f,
                "{family} prompt failed after {attempts} attempts: {last_error}"
            ),
            AugmentError::InvalidPool { video_id, reason } => {
                write!(f, "pool for {video_id:?} is invalid: {reason}")
            }
        }
    }
}

impl core::error::Error for AugmentError {}

/// The template substitutes its own period after the paragraph.
fn paragraph_slot(paragraph: &str) -> &str {
    let p = paragraph.trim();
    p.strip_suffix('.').unwrap_or(p).trim_end()
}

/// Renders the batched prompt for `family`. Summarization asks for all three
/// target lengths; simplification rewrites at the full length; the joint
/// prompt rewrites at the short length.
pub fn build_prompt(
    family: PromptFamily,
    paragraph: &str,
    targets: &WordTargets,
) -> Result<String, AugmentError> {
    let slot = paragraph_slot(paragraph);
    if !slot.chars().any(char::is_alphanumeric) {
        return Err(AugmentError::EmptyParagraph);
    }
    let mut out = String::new();
    match family {
        PromptFamily::Summarization => {
            out.push_str(&format!(
                "{SUMMARIZE_ROLE} You will be asked to write 3 summaries of the scene described in the following paragraph, indicated by PARAGRAPH. {GUARDRAILS} {PARAGRAPH_MARKER}{slot}."
            ));
            for (label, n) in SUMMARY_LABELS
                .iter()
                .zip([targets.short, targets.medium, targets.full])
            {
                out.push_str(&format!(
                    "{LABEL_LINE_PREFIX}summary as {label}. For this summary, please write {n} words which summarize the scene described by the PARAGRAPH. Do not use more or less than {n} words. Without using more than {n} words, write complete sentences."
                ));
            }
        }
        PromptFamily::Simplification => {
            out.push_str(&format!(
                "{SIMPLIFY_ROLE} You will be asked to write 3 versions of the scene described in the following paragraph, indicated by PARAGRAPH. {GUARDRAILS} {PARAGRAPH_MARKER}{slot}."
            ));
            let n = targets.full;
            for (label, level) in VERSION_LABELS.iter().zip(READING_LEVELS) {
                out.push_str(&format!(
                    "{LABEL_LINE_PREFIX}version as {label}. For this version, rewrite the PARAGRAPH with {n} words to make it suitable for a {level} reading level."
                ));
            }
        }
        PromptFamily::Joint => {
            let n = targets.short;
            out.push_str(&format!(
                "{JOINT_ROLE} You will be asked to use {n} words to write 3 summaries of the scene described in the following paragraph, indicated by PARAGRAPH. {GUARDRAILS} {PARAGRAPH_MARKER}{slot}."
            ));
            for (label, level) in VERSION_LABELS.iter().zip(READING_LEVELS) {
                out.push_str(&format!(
                    "{LABEL_LINE_PREFIX}version as {label}. For this version, rewrite the PARAGRAPH with {n} words to make it suitable for a {level} reading level. Do not use more or less than {n} words. Without using more than {n} words, write complete sentences."
                ));
            }
        }
    }
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Byte offset of the first occurrence of `label` as a whole identifier.
fn find_label(body: &str, label: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(rel) = body[from..].find(label) {
        let at = from + rel;
        let end = at + label.len();
        let before_ok = body[..at].chars().next_back().map_or(true, |c| !is_ident_char(c));
        let after_ok = body[end..].chars().next().map_or(true, |c| !is_ident_char(c));
        if before_ok && after_ok {
            return Some(at);
        }
        from = end;
    }
    None
}

fn clean_section(raw: &str) -> &str {
    let lead: &[char] = &[':', '*', '#', '-', '=', '>', '`', ')', ']', '_', '|'];
    let trail: &[char] = &['*', '#', '-', '=', '>', '`', '(', '[', '_', '|'];
    let mut s = raw
        .trim_start_matches(|c: char| c.is_whitespace() || lead.contains(&c))
        .trim_end_matches(|c: char| c.is_whitespace() || trail.contains(&c));
    for (open, close) in [('"', '"'), ('\u{201c}', '\u{201d}'), ('\'', '\'')] {
        if s.len() >= 2 && s.starts_with(open) && s.ends_with(close) {
            s = s[open.len_utf8()..s.len() - close.len_utf8()].trim();
        }
    }
    s
}

/// Splits a model response into the sections introduced by each expected
/// label. Label order in the body does not matter.
pub fn parse_labeled_response(
    body: &str,
    expected_labels: &[&str],
) -> Result<BTreeMap<String, String>, AugmentError> {
    let mut found: Vec<(usize, &str)> = Vec::with_capacity(expected_labels.len());
    for &label in expected_labels {
        let at = find_label(body, label).ok_or_else(|| AugmentError::MissingLabel(label.to_string()))?;
        found.push((at, label));
    }
    found.sort_unstable();
    let mut out = BTreeMap::new();
    for (k, &(at, label)) in found.iter().enumerate() {
        let start = at + label.len();
        let end = found.get(k + 1).map_or(body.len(), |&(next, _)| next);
        let text = clean_section(&body[start..end]);
        if !text.chars().any(char::is_alphanumeric) {
            return Err(AugmentError::EmptySection(label.to_string()));
        }
        out.insert(label.to_string(), text.to_string());
    }
    Ok(out)
}

/// Picks a contiguous event range `i..=j` that is not the whole video
/// (unless the video has a single event) and returns its text.
pub fn duration_subset(video: &Video, rng: &mut Rng) -> (usize, usize, String) {
    let e = video.events.len();
    if e <= 1 {
        return (0, 0, full_paragraph(video));
    }
    loop {
        let i = rng.random_range(0..e);
        let j = rng.random_range(i..e);
        if (i, j) != (0, e - 1) {
            return (i, j, event_range_text(video, i, j));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub backend_id: String,
    /// Most attempts any single prompt needed.
    pub attempts: u32,
    pub prompt_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionPool {
    pub video_id: String,
    pub captions: BTreeMap<CaptionKind, String>,
    pub partial_range: (usize, usize),
    pub provenance: Provenance,
}

impl CaptionPool {
    pub fn get(&self, kind: CaptionKind) -> &str {
        self.captions.get(&kind).map_or("", String::as_str)
    }

    /// Checks the pool on its own and, when given, against its video.
    pub fn validate(&self, video: Option<&Video>) -> Result<(), AugmentError> {
        let fail = |reason: String| {
            Err(AugmentError::InvalidPool {
                video_id: self.video_id.clone(),
                reason,
            })
        };
        for kind in CaptionKind::ALL {
            match self.captions.get(&kind) {
                Some(t) if !t.trim().is_empty() => {}
                _ => return fail(format!("caption kind {kind} missing or empty")),
            }
        }
        if self.captions.len() != CaptionKind::ALL.len() {
            return fail("unexpected caption kinds".to_string());
        }
        let (i, j) = self.partial_range;
        if i > j {
            return fail(format!("partial range ({i}, {j}) is reversed"));
        }
        if let Some(video) = video {
            if video.video_id != self.video_id {
                return fail(format!("checked against video {:?}", video.video_id));
            }
            if j >= video.events.len() {
                return fail(format!("partial range ({i}, {j}) out of bounds"));
            }
            if self.get(CaptionKind::P) != event_range_text(video, i, j) {
                return fail("partial caption does not match its event range".to_string());
            }
            if self.get(CaptionKind::F) != full_paragraph(video) {
                return fail("full caption does not match the event captions".to_string());
            }
        }
        Ok(())
    }
}

/// A transport or service failure reported by a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendFailure(pub String);

impl fmt::Display for BackendFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::error::Error for BackendFailure {}

/// Something that answers a prompt with a completion.
pub trait CompletionBackend {
    fn backend_id(&self) -> String;

    fn model_name(&self) -> Option<String> {
        None
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendFailure>;

    /// Called before retry number `attempt` (1-based). Remote backends sleep
    /// here.
    fn backoff(&self, _attempt: u32) {}
}

impl<B: CompletionBackend + ?Sized> CompletionBackend for &B {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }
    fn model_name(&self) -> Option<String> {
        (**self).model_name()
    }
    fn complete(&self, prompt: &str) -> Result<String, BackendFailure> {
        (**self).complete(prompt)
    }
    fn backoff(&self, attempt: u32) {
        (**self).backoff(attempt)
    }
}

fn run_family<B: CompletionBackend + ?Sized>(
    backend: &B,
    family: PromptFamily,
    prompt: &str,
    retries: u32,
) -> Result<(BTreeMap<String, String>, u32), AugmentError> {
    let labels = family.labels();
    let mut last_error = String::new();
    for attempt in 0..=retries {
        if attempt > 0 {
            backend.backoff(attempt);
        }
        match backend.complete(prompt) {
            Ok(body) => match parse_labeled_response(&body, &labels) {
                Ok(sections) => return Ok((sections, attempt + 1)),
                Err(e) => last_error = e.to_string(),
            },
            Err(e) => last_error = e.0,
        }
    }
    Err(AugmentError::BackendExhausted {
        family,
        attempts: retries + 1,
        last_error,
    })
}

/// Builds the eleven-caption pool for one video: the full paragraph, a
/// partial range and nine model-generated variants from three prompts.
pub fn generate_pool<B: CompletionBackend + ?Sized>(
    video: &Video,
    backend: &B,
    retries: u32,
    rng: &mut Rng,
) -> Result<CaptionPool, AugmentError> {
    let paragraph = full_paragraph(video);
    let targets = word_targets(count_words(&paragraph), MIN_TARGET);
    let mut captions = BTreeMap::new();
    let mut max_attempts = 0;
    let mut prompt_hash = Fnv1a::default();
    for family in PromptFamily::ALL {
        let prompt = build_prompt(family, &paragraph, &targets)?;
        prompt_hash.write(prompt.as_bytes());
        prompt_hash.write(&[0]);
        let (sections, attempts) = run_family(backend, family, &prompt, retries)?;
        max_attempts = max_attempts.max(attempts);
        for (label, kind) in family.labels().iter().zip(family.kinds()) {
            captions.insert(kind, sections[*label].clone());
        }
    }
    let (i, j, partial) = duration_subset(video, rng);
    captions.insert(CaptionKind::F, paragraph);
    captions.insert(CaptionKind::P, partial);
    let pool = CaptionPool {
        video_id: video.video_id.clone(),
        captions,
        partial_range: (i, j),
        provenance: Provenance {
            backend_id: backend.backend_id(),
            attempts: max_attempts,
            prompt_hash: hex64(prompt_hash.finish()),
            model_name: backend.model_name(),
        },
    };
    pool.validate(Some(video))?;
    Ok(pool)
}

/// Long/short word pairs used by the mock backend. Elementary rewrites map
/// left to right, university rewrites map right to left.
pub const SYNONYMS: &[(&str, &str)] = &[
    ("individuals", "people"),
    ("individual", "person"),
    ("automobile", "car"),
    ("automobiles", "cars"),
    ("commence", "start"),
    ("commences", "starts"),
    ("commencing", "starting"),
    ("demonstrate", "show"),
    ("demonstrates", "shows"),
    ("demonstrating", "showing"),
    ("utilize", "use"),
    ("utilizes", "uses"),
    ("utilizing", "using"),
    ("approximately", "about"),
    ("purchase", "buy"),
    ("assist", "help"),
    ("assists", "helps"),
    ("assisting", "helping"),
    ("observe", "see"),
    ("observes", "sees"),
    ("observing", "seeing"),
    ("numerous", "many"),
    ("residence", "home"),
    ("beverage", "drink"),
    ("canine", "dog"),
    ("feline", "cat"),
    ("attempt", "try"),
    ("attempts", "tries"),
    ("attempting", "trying"),
    ("proceed", "go"),
    ("proceeds", "goes"),
    ("proceeding", "going"),
    ("subsequently", "then"),
    ("terminates", "ends"),
    ("participate", "join"),
    ("participates", "joins"),
    ("velocity", "speed"),
    ("consume", "eat"),
    ("consumes", "eats"),
    ("consuming", "eating"),
    ("converse", "talk"),
    ("conversing", "talking"),
    ("youngster", "kid"),
    ("youngsters", "kids"),
    ("gentleman", "man"),
    ("gentlemen", "men"),
    ("vessel", "boat"),
    ("manipulates", "moves"),
    ("illuminated", "lit"),
    ("exhibits", "shows"),
    ("enormous", "big"),
    ("diminutive", "small"),
    ("rapidly", "fast"),
    ("additionally", "also"),
    ("structure", "building"),
    ("instructor", "teacher"),
    ("photograph", "photo"),
    ("receptacle", "bin"),
    ("ascends", "climbs"),
    ("navigates", "steers"),
    ("traverses", "crosses"),
    ("grasps", "holds"),
    ("positions", "puts"),
    ("transports", "carries"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadingLevel {
    Elementary,
    Intermediate,
    University,
}

fn lookup_synonym(word: &str, level: ReadingLevel) -> Option<&'static str> {
    match level {
        ReadingLevel::Elementary => SYNONYMS.iter().find(|(l, _)| *l == word).map(|p| p.1),
        ReadingLevel::University => SYNONYMS.iter().find(|(_, s)| *s == word).map(|p| p.0),
        ReadingLevel::Intermediate => None,
    }
}

/// Word-for-word substitution through [`SYNONYMS`], keeping surrounding
/// punctuation, capitalisation and whitespace layout. Word count is
/// unchanged.
pub fn rewrite_for_level(text: &str, level: ReadingLevel) -> String {
    let mut out = String::with_capacity(text.len());
    for (k, chunk) in text.split_whitespace().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        let start = chunk.find(|c: char| c.is_alphanumeric());
        let end = chunk.rfind(|c: char| c.is_alphanumeric());
        let (Some(s), Some(e)) = (start, end) else {
            out.push_str(chunk);
            continue;
        };
        let e = e + chunk[e..].chars().next().map_or(1, char::len_utf8);
        let core = &chunk[s..e];
        let lower = core.to_lowercase();
        match lookup_synonym(&lower, level) {
            Some(rep) => {
                out.push_str(&chunk[..s]);
                if core.chars().next().is_some_and(char::is_uppercase) {
                    let mut cs = rep.chars();
                    if let Some(first) = cs.next() {
                        out.extend(first.to_uppercase());
                        out.push_str(cs.as_str());
                    }
                } else {
                    out.push_str(rep);
                }
                out.push_str(&chunk[e..]);
            }
            None => out.push_str(chunk),
        }
    }
    out
}

/// Exactly `n` words taken from the start of `text` (cycling if it is
/// shorter), ending with a period.
pub fn leading_words(text: &str, n: usize) -> String {
    let words: Vec<&str> = text
        .split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .collect();
    if words.is_empty() || n == 0 {
        return String::new();
    }
    let mut out = String::new();
    for k in 0..n {
        if k > 0 {
            out.push(' ');
        }
        let w = words[k % words.len()];
        if k + 1 == n {
            out.push_str(w.trim_end_matches(|c: char| !c.is_alphanumeric()));
            out.push('.');
        } else {
            out.push_str(w);
        }
    }
    out
}

fn ensure_period(mut s: String) -> String {
    let trimmed = s.trim_end().len();
    s.truncate(trimmed);
    if !s.ends_with(['.', '!', '?']) {
        s.push('.');
    }
    s
}

struct ParsedPrompt<'a> {
    family: PromptFamily,
    paragraph: &'a str,
    targets: Vec<usize>,
}

fn number_after(line: &str, key: &str) -> Option<usize> {
    let at = line.find(key)? + key.len();
    let digits: String = line[at..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

fn parse_prompt(prompt: &str) -> Result<ParsedPrompt<'_>, AugmentError> {
    let family = if prompt.starts_with(JOINT_ROLE) {
        PromptFamily::Joint
    } else if prompt.starts_with(SIMPLIFY_ROLE) {
        PromptFamily::Simplification
    } else if prompt.starts_with(SUMMARIZE_ROLE) {
        PromptFamily::Summarization
    } else {
        return Err(AugmentError::UnrecognizedPrompt);
    };
    let start = prompt
        .find(PARAGRAPH_MARKER)
        .ok_or(AugmentError::UnrecognizedPrompt)?
        + PARAGRAPH_MARKER.len();
    let end = prompt[start..]
        .find(LABEL_LINE_PREFIX)
        .map(|e| start + e)
        .ok_or(AugmentError::UnrecognizedPrompt)?;
    let paragraph = prompt[start..end].strip_suffix('.').unwrap_or(&prompt[start..end]);
    let key = match family {
        PromptFamily::Summarization => "please write ",
        _ => "rewrite the PARAGRAPH with ",
    };
    let targets: Vec<usize> = prompt[end..]
        .split(LABEL_LINE_PREFIX)
        .filter(|l| !l.is_empty())
        .map(|l| number_after(l, key).ok_or(AugmentError::UnrecognizedPrompt))
        .collect::<Result<_, _>>()?;
    if targets.len() != 3 {
        return Err(AugmentError::UnrecognizedPrompt);
    }
    Ok(ParsedPrompt {
        family,
        paragraph,
        targets,
    })
}

/// Deterministic offline stand-in for a chat model.
///
/// Summaries are leading-word extracts of exactly the requested length;
/// simplifications substitute words through [`SYNONYMS`]. `seed` only
/// changes the order in which labeled sections are emitted.
pub fn mock_backend(prompt: &str, seed: u64) -> Result<String, AugmentError> {
    let parsed = parse_prompt(prompt)?;
    let levels = [
        ReadingLevel::Elementary,
        ReadingLevel::Intermediate,
        ReadingLevel::University,
    ];
    let labels = parsed.family.labels();
    let mut sections: Vec<(&str, String)> = match parsed.family {
        PromptFamily::Summarization => labels
            .iter()
            .zip(&parsed.targets)
            .map(|(l, &n)| (*l, leading_words(parsed.paragraph, n)))
            .collect(),
        PromptFamily::Simplification => labels
            .iter()
            .zip(levels)
            .map(|(l, lv)| (*l, ensure_period(rewrite_for_level(parsed.paragraph, lv))))
            .collect(),
        PromptFamily::Joint => labels
            .iter()
            .zip(levels)
            .zip(&parsed.targets)
            .map(|((l, lv), &n)| (*l, rewrite_for_level(&leading_words(parsed.paragraph, n), lv)))
            .collect(),
    };
    let mut order_rng = rng::seeded(seed ^ fnv1a(prompt.as_bytes()));
    for k in (1..sections.len()).rev() {
        let other = order_rng.random_range(0..=k);
        sections.swap(k, other);
    }
    let mut out = String::new();
    for (label, text) in sections {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(label);
        out.push_str(": ");
        out.push_str(&text);
    }
    Ok(out)
}

/// [`mock_backend`] behind the [`CompletionBackend`] interface.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockBackend {
    pub seed: u64,
}

impl CompletionBackend for MockBackend {
    fn backend_id(&self) -> String {
        format!("mock:{}", self.seed)
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendFailure> {
        mock_backend(prompt, self.seed).map_err(|e| BackendFailure(e.to_string()))
    }
}
