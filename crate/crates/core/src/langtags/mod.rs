//! Language tags and language-code linting.

mod lint;
mod registry;
mod rules;
mod tag;

pub use lint::{lint_codes, read_code_list, CodeIssue, LintReport, LintWarning};
pub use registry::{IsoRegistry, LanguageEntry, Scope};
pub use rules::{IssueCategory, Rule, RulesDatabase, KNOWN_DATASETS, RULES_HEADER};
pub use tag::{match_key, normalize, normalize_tag, parse_tag, LanguageTag};
