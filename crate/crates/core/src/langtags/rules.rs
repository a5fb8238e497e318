//! Known language-code problems of published datasets.
//!
//! The rules file is CSV with a mandatory `# corpaudit-rules v1` first
//! line, `#` comments and the columns
//! `dataset,observed,category,suggestion,related,note`. `dataset` is
//! lowercase or `*` for every dataset; `suggestion` and `related` hold
//! space-separated tags.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tag::{match_key, normalize, parse_tag};
use crate::error::{Error, Result};

pub const RULES_HEADER: &str = "# corpaudit-rules v1";

const BUILTIN: &str = include_str!("../../data/rules.csv");

/// Datasets the bundled rules were written for, including those without
/// any entries.
pub const KNOWN_DATASETS: [&str; 6] = ["ccaligned", "jw300", "mc4", "oscar", "paracrawl", "wikimatrix"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCategory {
    Nonstandard,
    Deprecated,
    SupersetAmbiguous,
    SignLanguageMislabel,
    MalformedPrivateUse,
    Iso3ForIso2,
    EquivalentDuplicate,
}

impl IssueCategory {
    pub const ALL: [IssueCategory; 7] = [
        IssueCategory::Nonstandard,
        IssueCategory::Deprecated,
        IssueCategory::SupersetAmbiguous,
        IssueCategory::SignLanguageMislabel,
        IssueCategory::MalformedPrivateUse,
        IssueCategory::Iso3ForIso2,
        IssueCategory::EquivalentDuplicate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IssueCategory::Nonstandard => "NONSTANDARD",
            IssueCategory::Deprecated => "DEPRECATED",
            IssueCategory::SupersetAmbiguous => "SUPERSET_AMBIGUOUS",
            IssueCategory::SignLanguageMislabel => "SIGN_LANGUAGE_MISLABEL",
            IssueCategory::MalformedPrivateUse => "MALFORMED_PRIVATE_USE",
            IssueCategory::Iso3ForIso2 => "ISO3_FOR_ISO2",
            IssueCategory::EquivalentDuplicate => "EQUIVALENT_DUPLICATE",
        }
    }
}

impl fmt::Display for IssueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IssueCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IssueCategory::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown issue category {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub dataset: String,
    /// Code as published.
    pub observed: String,
    pub category: IssueCategory,
    /// Canonical replacement tags; empty when unresolved.
    pub suggestion: Vec<String>,
    /// Sub-codes for superset rules.
    pub related: Vec<String>,
    pub note: String,
}

impl Rule {
    /// Identifies the rule in findings, e.g. `oscar/als/NONSTANDARD`.
    pub fn source(&self) -> String {
        format!("{}/{}/{}", self.dataset, self.observed, self.category)
    }

    fn key(&self) -> String {
        match_key(&self.observed)
    }

    fn applies_to(&self, dataset: &str) -> bool {
        self.dataset == "*" || self.dataset == dataset
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleRow {
    dataset: String,
    observed: String,
    category: String,
    #[serde(default)]
    suggestion: String,
    #[serde(default)]
    related: String,
    #[serde(default)]
    note: String,
}

/// Immutable set of rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RulesDatabase {
    rules: Vec<Rule>,
}

fn split_tags(field: &str, line: usize, what: &str) -> Result<Vec<String>> {
    field
        .split_whitespace()
        .map(|t| {
            normalize(t).map_err(|e| Error::Rules {
                line,
                message: format!("{what} {t:?} is not a valid tag: {e}"),
            })
        })
        .collect()
}

impl RulesDatabase {
    /// The bundled rules.
    pub fn builtin() -> &'static RulesDatabase {
        static DB: std::sync::OnceLock<RulesDatabase> = std::sync::OnceLock::new();
        DB.get_or_init(|| RulesDatabase::parse(BUILTIN).expect("bundled rules are valid"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("").trim();
        if first != RULES_HEADER {
            return Err(Error::Rules {
                line: 1,
                message: format!("expected version header {RULES_HEADER:?}, found {first:?}"),
            });
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.clone();
        let mut rules = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let row: RuleRow = record.deserialize(Some(&headers))?;
            let category: IssueCategory = row.category.parse().map_err(|_| Error::Rules {
                line,
                message: format!("unknown category {:?}", row.category),
            })?;
            if row.observed.is_empty() || row.dataset.is_empty() {
                return Err(Error::Rules {
                    line,
                    message: "dataset and observed must be non-empty".into(),
                });
            }
            let related = split_tags(&row.related, line, "related code")?;
            if category == IssueCategory::SupersetAmbiguous && related.is_empty() {
                return Err(Error::Rules {
                    line,
                    message: "superset rule needs related codes".into(),
                });
            }
            rules.push(Rule {
                dataset: row.dataset.to_ascii_lowercase(),
                observed: row.observed,
                category,
                suggestion: split_tags(&row.suggestion, line, "suggestion")?,
                related,
                note: row.note,
            });
        }
        Ok(RulesDatabase { rules })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = csv::Writer::from_writer(Vec::new());
        for r in &self.rules {
            out.serialize(RuleRow {
                dataset: r.dataset.clone(),
                observed: r.observed.clone(),
                category: r.category.to_string(),
                suggestion: r.suggestion.join(" "),
                related: r.related.join(" "),
                note: r.note.clone(),
            })?;
        }
        let body = out.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(format!("{RULES_HEADER}\n{}", String::from_utf8_lossy(&body)))
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn datasets(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .map(|r| r.dataset.clone())
            .filter(|d| d != "*")
            .chain(KNOWN_DATASETS.iter().map(|d| d.to_string()))
            .collect()
    }

    pub fn is_known_dataset(&self, dataset: &str) -> bool {
        self.datasets().contains(&dataset.to_ascii_lowercase())
    }

    /// Rules in force for a dataset; every rule for an unknown dataset.
    pub fn for_dataset<'a>(&'a self, dataset: &str) -> Vec<&'a Rule> {
        let dataset = dataset.to_ascii_lowercase();
        if self.is_known_dataset(&dataset) {
            self.rules.iter().filter(|r| r.applies_to(&dataset)).collect()
        } else {
            self.rules.iter().collect()
        }
    }

    /// Per-code rules (everything but superset rules) for `code`. The exact
    /// code is tried first, then its base language subtag.
    pub fn matching<'a>(&'a self, code: &str, dataset: &str) -> Vec<&'a Rule> {
        let rules: Vec<&Rule> = self
            .for_dataset(dataset)
            .into_iter()
            .filter(|r| r.category != IssueCategory::SupersetAmbiguous)
            .collect();
        let key = match_key(code);
        let exact: Vec<&Rule> = rules.iter().copied().filter(|r| r.key() == key).collect();
        if !exact.is_empty() {
            return exact;
        }
        let base = match parse_tag(code) {
            Ok(tag) => tag.language,
            Err(_) => key.split('-').next().unwrap_or("").to_string(),
        };
        if base == key || base.is_empty() {
            return Vec::new();
        }
        rules.into_iter().filter(|r| r.key() == base).collect()
    }
}
