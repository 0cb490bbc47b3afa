use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the eleven caption variants kept for every video.
///
/// The derived ordering is the column order used in pool files:
/// `f, e, i, u, s, m, l, se, si, su, p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptionKind {
    /// Original ground-truth paragraph.
    F,
    /// Elementary (primary school) simplification.
    E,
    /// Intermediate (secondary school) simplification.
    I,
    /// University-level rewrite.
    U,
    /// Short summary, 1/7 of the source length.
    S,
    /// Medium summary, 4/7 of the source length.
    M,
    /// Long summary, full source length.
    L,
    /// Short summary simplified for primary school.
    Se,
    /// Short summary simplified for secondary school.
    Si,
    /// Short summary rewritten at university level.
    Su,
    /// Partial caption covering a contiguous sub-range of events.
    P,
}

impl CaptionKind {
    pub const ALL: [CaptionKind; 11] = [
        CaptionKind::F,
        CaptionKind::E,
        CaptionKind::I,
        CaptionKind::U,
        CaptionKind::S,
        CaptionKind::M,
        CaptionKind::L,
        CaptionKind::Se,
        CaptionKind::Si,
        CaptionKind::Su,
        CaptionKind::P,
    ];

    /// The nine kinds produced by the language model, in the column order
    /// of the text statistics table.
    pub const GENERATED: [CaptionKind; 9] = [
        CaptionKind::S,
        CaptionKind::M,
        CaptionKind::L,
        CaptionKind::E,
        CaptionKind::I,
        CaptionKind::U,
        CaptionKind::Se,
        CaptionKind::Si,
        CaptionKind::Su,
    ];

    /// Kinds a trainer may sample as the alternative caption.
    pub const SAMPLEABLE: [CaptionKind; 10] = [
        CaptionKind::E,
        CaptionKind::I,
        CaptionKind::U,
        CaptionKind::S,
        CaptionKind::M,
        CaptionKind::L,
        CaptionKind::Se,
        CaptionKind::Si,
        CaptionKind::Su,
        CaptionKind::P,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaptionKind::F => "f",
            CaptionKind::E => "e",
            CaptionKind::I => "i",
            CaptionKind::U => "u",
            CaptionKind::S => "s",
            CaptionKind::M => "m",
            CaptionKind::L => "l",
            CaptionKind::Se => "se",
            CaptionKind::Si => "si",
            CaptionKind::Su => "su",
            CaptionKind::P => "p",
        }
    }

    pub fn is_generated(self) -> bool {
        !matches!(self, CaptionKind::F | CaptionKind::P)
    }
}

impl fmt::Display for CaptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownKind;

impl fmt::Display for UnknownKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown caption kind")
    }
}

impl core::error::Error for UnknownKind {}

impl FromStr for CaptionKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let kind = match s.trim().to_ascii_lowercase().as_str() {
            "f" => CaptionKind::F,
            "e" | "l+e" => CaptionKind::E,
            "i" | "l+i" => CaptionKind::I,
            "u" | "l+u" => CaptionKind::U,
            "s" => CaptionKind::S,
            "m" => CaptionKind::M,
            "l" => CaptionKind::L,
            "se" | "s+e" => CaptionKind::Se,
            "si" | "s+i" => CaptionKind::Si,
            "su" | "s+u" => CaptionKind::Su,
            "p" => CaptionKind::P,
            _ => return Err(UnknownKind),
        };
        Ok(kind)
    }
}
