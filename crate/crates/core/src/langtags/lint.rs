//! Code checks and lint reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::registry::IsoRegistry;
use super::rules::{IssueCategory, Rule, RulesDatabase};
use super::tag::{match_key, parse_tag};
use crate::error::{Error, Result};

/// A labeling problem found for one published code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeIssue {
    pub category: IssueCategory,
    pub observed: String,
    /// Canonical replacement tag(s); empty when none is known.
    pub suggestion: Vec<String>,
    /// Co-present sub-codes for superset findings.
    pub related: Vec<String>,
    pub note: String,
    /// The rule that fired.
    pub source: String,
}

impl CodeIssue {
    fn from_rule(observed: &str, rule: &Rule) -> Self {
        CodeIssue {
            category: rule.category,
            observed: observed.to_string(),
            suggestion: rule.suggestion.clone(),
            related: rule.related.clone(),
            note: rule.note.clone(),
            source: rule.source(),
        }
    }
}

fn warn_unknown(db: &RulesDatabase, dataset: &str) {
    if !db.is_known_dataset(dataset) {
        log::warn!("unknown dataset {dataset:?}; applying all rules");
    }
}

impl RulesDatabase {
    /// Every per-code issue for `code` in `dataset`. Empty means clean.
    pub fn check_code(&self, code: &str, dataset: &str) -> Vec<CodeIssue> {
        warn_unknown(self, dataset);
        self.matching(code, dataset)
            .into_iter()
            .map(|r| CodeIssue::from_rule(code, r))
            .collect()
    }

    /// Superset codes that occur together with any of their sub-codes.
    pub fn superset_conflicts<S: AsRef<str>>(&self, codes: &[S], dataset: &str) -> Vec<CodeIssue> {
        warn_unknown(self, dataset);
        let present: BTreeMap<String, &str> = codes.iter().map(|c| (match_key(c.as_ref()), c.as_ref())).collect();
        let mut out: Vec<CodeIssue> = Vec::new();
        for rule in self.for_dataset(dataset) {
            if rule.category != IssueCategory::SupersetAmbiguous {
                continue;
            }
            let Some(observed) = present.get(&match_key(&rule.observed)) else {
                continue;
            };
            let co_present: Vec<String> = rule
                .related
                .iter()
                .filter(|r| present.contains_key(&match_key(r)))
                .cloned()
                .collect();
            if co_present.is_empty() {
                continue;
            }
            // unknown datasets may hold several rules for the same supercode
            if let Some(prev) = out.iter_mut().find(|i| i.observed == *observed) {
                for c in co_present {
                    if !prev.related.contains(&c) {
                        prev.related.push(c);
                    }
                }
                continue;
            }
            out.push(CodeIssue {
                related: co_present,
                ..CodeIssue::from_rule(observed, rule)
            });
        }
        out
    }

    pub fn check_sign_language(&self, code: &str, dataset: &str) -> Option<CodeIssue> {
        self.check_code(code, dataset)
            .into_iter()
            .find(|i| i.category == IssueCategory::SignLanguageMislabel)
    }
}

/// A problem with the code itself rather than a known mislabel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintWarning {
    pub observed: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintReport {
    pub dataset: String,
    pub codes: usize,
    pub issues: Vec<CodeIssue>,
    pub warnings: Vec<LintWarning>,
}

impl LintReport {
    /// Distinct observed codes with at least one issue of `category`.
    pub fn codes_with(&self, category: IssueCategory) -> BTreeSet<&str> {
        self.issues
            .iter()
            .filter(|i| i.category == category)
            .map(|i| i.observed.as_str())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dataset", "code", "category", "suggestion", "related", "note", "source"])?;
        for i in &self.issues {
            out.write_record([
                self.dataset.as_str(),
                &i.observed,
                i.category.as_str(),
                &i.suggestion.join(" "),
                &i.related.join(" "),
                &i.note,
                &i.source,
            ])?;
        }
        out.flush().map_err(|e| Error::io("<lint csv>", e))?;
        Ok(())
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "## Language codes: {}\n", self.dataset);
        let _ = writeln!(
            md,
            "{} codes checked, {} findings, {} warnings.\n",
            self.codes,
            self.issues.len(),
            self.warnings.len()
        );
        let _ = writeln!(md, "| Category | Codes |\n|---|---:|");
        for c in IssueCategory::ALL {
            let n = self.codes_with(c).len();
            if n > 0 {
                let _ = writeln!(md, "| {c} | {n} |");
            }
        }
        if !self.issues.is_empty() {
            let _ = writeln!(md, "\n| Code | Category | Suggestion | Note |\n|---|---|---|---|");
            for i in &self.issues {
                let suggestion = if i.suggestion.is_empty() && !i.related.is_empty() {
                    format!("overlaps {}", i.related.join(", "))
                } else {
                    i.suggestion.join(" / ")
                };
                let _ = writeln!(
                    md,
                    "| `{}` | {} | {} | {} |",
                    i.observed,
                    i.category,
                    suggestion,
                    i.note.replace('|', "\\|")
                );
            }
        }
        if !self.warnings.is_empty() {
            let _ = writeln!(md, "\n### Warnings\n");
            for w in &self.warnings {
                let _ = writeln!(md, "- `{}`: {}", w.observed, w.message);
            }
        }
        md
    }
}

/// Lint a dataset's full code list: per-code rules, superset conflicts,
/// codes that collapse to the same canonical tag, and subtags missing from
/// the ISO snapshot.
pub fn lint_codes<S: AsRef<str>>(db: &RulesDatabase, registry: &IsoRegistry, codes: &[S], dataset: &str) -> LintReport {
    let mut issues = Vec::new();
    let mut warnings = Vec::new();
    let mut canonical: BTreeMap<String, String> = BTreeMap::new();
    let mut warn = |observed: &str, message: String| {
        warnings.push(LintWarning {
            observed: observed.to_string(),
            message,
        })
    };
    if !db.is_known_dataset(dataset) {
        warn("", format!("unknown dataset {dataset:?}; all rules applied"));
    }

    for code in codes {
        let code = code.as_ref();
        issues.extend(db.check_code(code, dataset));
        match parse_tag(code) {
            Ok(tag) => {
                if tag.underscore {
                    warn(code, format!("underscore separator; canonical form is {tag}"));
                }
                if !registry.is_language(&tag.language) {
                    warn(code, format!("language subtag {:?} is not in ISO 639", tag.language));
                }
                if let Some(s) = tag.script.as_deref().filter(|s| !registry.is_script(s)) {
                    warn(code, format!("script subtag {s:?} is not in ISO 15924"));
                }
                if let Some(r) = tag.region.as_deref().filter(|r| !registry.is_region(r)) {
                    warn(code, format!("region subtag {r:?} is not in ISO 3166"));
                }
                let key = tag.to_string();
                if let Some(first) = canonical.get(&key) {
                    issues.push(CodeIssue {
                        category: IssueCategory::EquivalentDuplicate,
                        observed: code.to_string(),
                        suggestion: vec![key.clone()],
                        related: vec![first.clone()],
                        note: format!("same canonical tag as {first}"),
                        source: "canonical form".into(),
                    });
                } else {
                    canonical.insert(key, code.to_string());
                }
            }
            Err(e) => warn(code, e.to_string()),
        }
    }
    issues.extend(db.superset_conflicts(codes, dataset));
    LintReport {
        dataset: dataset.to_string(),
        codes: codes.len(),
        issues,
        warnings,
    }
}

/// Codes from a list file: one per line, `#` comments and blanks ignored.
pub fn read_code_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}
