//! Lexicon-driven part-of-speech tagging.
//!
//! Tags are coarse (noun, verb, everything else). Lookup is exact match on
//! the lowercased word, then the first matching suffix rule, then
//! [`PosTag::Other`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

const BUNDLED: &str = include_str!("../data/lexicon.tsv");

/// Header line that starts the suffix-rule section of a lexicon TSV.
pub const SUFFIX_SECTION: &str = "#suffix";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PosTag {
    Noun,
    Verb,
    Other,
}

impl FromStr for PosTag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Ok(PosTag::Noun),
            "VERB" => Ok(PosTag::Verb),
            "OTHER" => Ok(PosTag::Other),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for LexiconError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lexicon line {}: {}", self.line, self.message)
    }
}

impl core::error::Error for LexiconError {}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PosLexicon {
    words: BTreeMap<String, PosTag>,
    suffixes: Vec<(String, PosTag)>,
}

impl PosLexicon {
    pub fn new(
        words: impl IntoIterator<Item = (String, PosTag)>,
        suffixes: Vec<(String, PosTag)>,
    ) -> Self {
        PosLexicon {
            words: words
                .into_iter()
                .map(|(w, t)| (w.to_lowercase(), t))
                .collect(),
            suffixes: suffixes
                .into_iter()
                .map(|(s, t)| (s.to_lowercase(), t))
                .collect(),
        }
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_tsv(BUNDLED).expect("bundled lexicon is well formed")
    }

    /// Parses `word<TAB>TAG` lines, then an optional `#suffix` header
    /// followed by `suffix<TAB>TAG` rules in priority order.
    pub fn from_tsv(text: &str) -> Result<Self, LexiconError> {
        let mut words = BTreeMap::new();
        let mut suffixes = Vec::new();
        let mut in_suffixes = false;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if line.trim() == SUFFIX_SECTION {
                in_suffixes = true;
                continue;
            }
            let mut parts = line.split('\t');
            let (Some(word), Some(tag), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(LexiconError {
                    line: idx + 1,
                    message: "expected `word<TAB>TAG`".to_string(),
                });
            };
            let tag: PosTag = tag.parse().map_err(|_| LexiconError {
                line: idx + 1,
                message: alloc::format!("unknown tag {tag:?}"),
            })?;
            let word = word.trim().to_lowercase();
            if word.is_empty() {
                return Err(LexiconError {
                    line: idx + 1,
                    message: "empty entry".to_string(),
                });
            }
            if in_suffixes {
                suffixes.push((word, tag));
            } else {
                words.insert(word, tag);
            }
        }
        Ok(PosLexicon { words, suffixes })
    }

    pub fn tag(&self, word: &str) -> PosTag {
        let lower;
        let word = if word.chars().any(char::is_uppercase) {
            lower = word.to_lowercase();
            lower.as_str()
        } else {
            word
        };
        if let Some(&t) = self.words.get(word) {
            return t;
        }
        // Require a stem of at least two characters so "sing" is not "-ing".
        self.suffixes
            .iter()
            .find(|(s, _)| word.len() >= s.len() + 2 && word.ends_with(s.as_str()))
            .map_or(PosTag::Other, |&(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_is_case_insensitive_and_total() {
        let lex = PosLexicon::from_tsv("kayak\tNOUN\npaddle\tVERB\n#suffix\ning\tVERB\n").unwrap();
        assert_eq!(lex.tag("Kayak"), PosTag::Noun);
        assert_eq!(lex.tag("PADDLE"), PosTag::Verb);
        assert_eq!(lex.tag("rowing"), PosTag::Verb);
        assert_eq!(lex.tag("ing"), PosTag::Other);
        assert_eq!(lex.tag("zzz"), PosTag::Other);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let err = PosLexicon::from_tsv("ok\tNOUN\nbad line\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = PosLexicon::from_tsv("ok\tADJ\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn bundled_lexicon_covers_caption_vocabulary() {
        let lex = PosLexicon::bundled();
        assert!(lex.len() > 1000);
        assert_eq!(lex.tag("people"), PosTag::Noun);
        assert_eq!(lex.tag("sitting"), PosTag::Verb);
        assert_eq!(lex.tag("are"), PosTag::Other);
        assert_eq!(lex.tag("the"), PosTag::Other);
        // suffix fallback
        assert_eq!(lex.tag("snorkeling"), PosTag::Verb);
        assert_eq!(lex.tag("celebration"), PosTag::Noun);
    }
}
