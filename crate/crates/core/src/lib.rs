//! Core library for auditing web-mined multilingual corpora.
//!
//! The crate covers the full audit loop short of the annotation server:
//!
//! - [`corpus_io`]: reading monolingual and parallel corpora, sentence
//!   splitting and deduplication.
//! - [`sampling`]: reproducible audit samples and audit-language selection.
//! - [`taxonomy`]: the closed label set raters use, coarsening and validation.
//! - [`stats`]: per-language percentages, macro/micro aggregates, threshold
//!   counts, quality CDFs, Spearman correlation and rater agreement.
//! - [`langtags`]: BCP-47 subset parsing and a rules-driven code linter.
//! - [`langid`]: a character n-gram classifier and LangID filter evaluation.
//! - [`export`]: the annotation JSONL interchange format.
//! - [`report`]: CSV and Markdown writers for audit reports.

pub mod corpus_io;
pub mod error;
pub mod export;
pub mod langid;
pub mod langtags;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod taxonomy;

pub use corpus_io::{AuditItem, CorpusDescriptor, CorpusKind, SentenceItem, SentencePair};
pub use error::{Error, Result};
pub use export::ExportLine;
pub use langid::{FilterDecision, FilterMetrics, LangIdModel, Prediction};
pub use langtags::{CodeIssue, IssueCategory, LanguageTag, RulesDatabase};
pub use sampling::AuditSample;
pub use stats::{Aggregate, CorpusStats, CorrelationResult, Pct, StatKey, ThresholdCounts};
pub use taxonomy::{AnnotationLabel, AnnotationRecord, CoarseLabel, Granularity};
