//! The audit label set.
//!
//! Raters assign exactly one of `CC`, `CS`, `CB`, `X`, `WL`, `NL` or the
//! transient `U`. `C` is the union of the three correct subclasses and is
//! never assignable directly.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus_io::CorpusKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AnnotationLabel {
    /// Correct translation, natural sentence.
    CC,
    /// Correct translation, short.
    CS,
    /// Correct translation, boilerplate.
    CB,
    /// Incorrect translation, both sides in the right languages.
    X,
    /// Wrong language.
    WL,
    /// Not language.
    NL,
    /// Unknown; must be resolved before statistics.
    U,
}

impl AnnotationLabel {
    pub const ALL: [AnnotationLabel; 7] = [
        AnnotationLabel::CC,
        AnnotationLabel::CS,
        AnnotationLabel::CB,
        AnnotationLabel::X,
        AnnotationLabel::WL,
        AnnotationLabel::NL,
        AnnotationLabel::U,
    ];

    /// The six labels that survive into statistics.
    pub const RESOLVED: [AnnotationLabel; 6] = [
        AnnotationLabel::CC,
        AnnotationLabel::CS,
        AnnotationLabel::CB,
        AnnotationLabel::X,
        AnnotationLabel::WL,
        AnnotationLabel::NL,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AnnotationLabel::CC => "CC",
            AnnotationLabel::CS => "CS",
            AnnotationLabel::CB => "CB",
            AnnotationLabel::X => "X",
            AnnotationLabel::WL => "WL",
            AnnotationLabel::NL => "NL",
            AnnotationLabel::U => "U",
        }
    }

    pub fn is_correct(self) -> bool {
        matches!(self, AnnotationLabel::CC | AnnotationLabel::CS | AnnotationLabel::CB)
    }

    /// Legal for the given item kind. `X` needs a translation to be wrong.
    pub fn allowed_for(self, kind: CorpusKind) -> bool {
        !(self == AnnotationLabel::X && kind == CorpusKind::Monolingual)
    }
}

/// Case-insensitive parse of a label token. No aliases.
pub fn parse_label(token: &str) -> Result<AnnotationLabel> {
    token.parse()
}

impl FromStr for AnnotationLabel {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let upper = token.trim().to_ascii_uppercase();
        AnnotationLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == upper)
            .ok_or_else(|| Error::UnknownLabel {
                token: token.to_string(),
            })
    }
}

impl fmt::Display for AnnotationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for AnnotationLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for AnnotationLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let token = String::deserialize(d)?;
        token.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of classes labels are compared at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Granularity {
    Two,
    Four,
    Six,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Two, Granularity::Four, Granularity::Six];

    pub fn classes(self) -> u8 {
        match self {
            Granularity::Two => 2,
            Granularity::Four => 4,
            Granularity::Six => 6,
        }
    }

    pub fn from_classes(n: u8) -> Result<Self> {
        match n {
            2 => Ok(Granularity::Two),
            4 => Ok(Granularity::Four),
            6 => Ok(Granularity::Six),
            _ => Err(Error::InvalidArgument(format!(
                "granularity must be 2, 4 or 6, got {n}"
            ))),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.classes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CoarseLabel {
    CC,
    CS,
    CB,
    C,
    X,
    WL,
    NL,
    #[serde(rename = "not-C")]
    NotC,
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoarseLabel::CC => "CC",
            CoarseLabel::CS => "CS",
            CoarseLabel::CB => "CB",
            CoarseLabel::C => "C",
            CoarseLabel::X => "X",
            CoarseLabel::WL => "WL",
            CoarseLabel::NL => "NL",
            CoarseLabel::NotC => "not-C",
        })
    }
}

pub fn coarsen(label: AnnotationLabel, n: Granularity) -> Result<CoarseLabel> {
    use AnnotationLabel as L;
    let fine = match label {
        L::CC => CoarseLabel::CC,
        L::CS => CoarseLabel::CS,
        L::CB => CoarseLabel::CB,
        L::X => CoarseLabel::X,
        L::WL => CoarseLabel::WL,
        L::NL => CoarseLabel::NL,
        L::U => return Err(Error::UnresolvedLabel),
    };
    Ok(match n {
        Granularity::Six => fine,
        Granularity::Four if label.is_correct() => CoarseLabel::C,
        Granularity::Four => fine,
        Granularity::Two if label.is_correct() => CoarseLabel::C,
        Granularity::Two => CoarseLabel::NotC,
    })
}

/// One rater's judgment of one item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub item_id: String,
    pub rater_id: String,
    pub label: AnnotationLabel,
    #[serde(default)]
    pub offensive: bool,
    #[serde(default)]
    pub porn: bool,
    #[serde(default)]
    pub note: Option<String>,
    /// UTC seconds since the Unix epoch.
    pub timestamp: i64,
}

/// When a record is being checked. `U` is fine while annotating but must be
/// gone by export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Submission,
    Export,
}

/// Known item and rater ids of a project.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub items: BTreeSet<String>,
    /// `None` accepts any non-empty rater id.
    pub raters: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    XOnMonolingual,
    UnresolvedU,
    UnknownItem,
    UnknownRater,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// Check a record against its item kind and, optionally, the project's ids.
/// An empty result means the record is acceptable.
pub fn validate_annotation(
    record: &AnnotationRecord,
    kind: CorpusKind,
    registry: Option<&Registry>,
    stage: Stage,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if !record.label.allowed_for(kind) {
        out.push(Violation {
            kind: ViolationKind::XOnMonolingual,
            message: "X illegal for monolingual".into(),
        });
    }
    if stage == Stage::Export && record.label == AnnotationLabel::U {
        out.push(Violation {
            kind: ViolationKind::UnresolvedU,
            message: "unresolved U".into(),
        });
    }
    if record.rater_id.trim().is_empty() {
        out.push(Violation {
            kind: ViolationKind::UnknownRater,
            message: "empty rater id".into(),
        });
    }
    if let Some(reg) = registry {
        if !reg.items.contains(&record.item_id) {
            out.push(Violation {
                kind: ViolationKind::UnknownItem,
                message: format!("unknown item id {:?}", record.item_id),
            });
        }
        if let Some(raters) = &reg.raters {
            if !record.rater_id.trim().is_empty() && !raters.contains(&record.rater_id) {
                out.push(Violation {
                    kind: ViolationKind::UnknownRater,
                    message: format!("unknown rater id {:?}", record.rater_id),
                });
            }
        }
    }
    out
}
