//! Annotation export lines.
//!
//! One JSON object per line with the fields, in order,
//! `id, corpus, lang, src, tgt, label, porn, offensive, rater, ts, note`.
//! `tgt` is omitted for monolingual items; `note` is `null` when absent.
//! For sentence pairs `lang` is the pair key `src-tgt`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{AuditItem, CorpusKind};
use crate::error::{Error, Result};
use crate::stats::{per_language_stats, CorpusStats};
use crate::taxonomy::{AnnotationLabel, AnnotationRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportLine {
    pub id: String,
    pub corpus: String,
    pub lang: String,
    pub src: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt: Option<String>,
    pub label: AnnotationLabel,
    pub porn: bool,
    pub offensive: bool,
    pub rater: String,
    pub ts: i64,
    pub note: Option<String>,
}

impl ExportLine {
    pub fn new(corpus: &str, item: &AuditItem, record: &AnnotationRecord) -> Self {
        let (src, tgt) = match item {
            AuditItem::Sentence(s) => (s.text.clone(), None),
            AuditItem::Pair(p) => (p.src_text.clone(), Some(p.tgt_text.clone())),
        };
        ExportLine {
            id: item.id().to_string(),
            corpus: corpus.to_string(),
            lang: item.lang_key(),
            src,
            tgt,
            label: record.label,
            porn: record.porn,
            offensive: record.offensive,
            rater: record.rater_id.clone(),
            ts: record.timestamp,
            note: record.note.clone(),
        }
    }

    pub fn kind(&self) -> CorpusKind {
        if self.tgt.is_some() {
            CorpusKind::Parallel
        } else {
            CorpusKind::Monolingual
        }
    }

    pub fn record(&self) -> AnnotationRecord {
        AnnotationRecord {
            item_id: self.id.clone(),
            rater_id: self.rater.clone(),
            label: self.label,
            offensive: self.offensive,
            porn: self.porn,
            note: self.note.clone(),
            timestamp: self.ts,
        }
    }

    /// The text the audit tables measure: the sentence, or the target side.
    pub fn audited_text(&self) -> &str {
        self.tgt.as_deref().unwrap_or(&self.src)
    }
}

pub fn write_jsonl<W: Write>(mut w: W, lines: &[ExportLine]) -> Result<()> {
    for line in lines {
        serde_json::to_writer(&mut w, line)?;
        w.write_all(b"\n").map_err(|e| Error::io("<export>", e))?;
    }
    Ok(())
}

/// Parse export lines, skipping blank lines.
pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<ExportLine>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<export>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Malformed(format!("export line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn read_jsonl_file(path: &Path) -> Result<Vec<ExportLine>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(std::io::BufReader::new(file))
}

/// Reduce to one line per item: the lexicographically first rater's.
pub fn single_rater(lines: &[ExportLine]) -> Vec<&ExportLine> {
    let mut by_item: BTreeMap<(&str, &str), &ExportLine> = BTreeMap::new();
    for l in lines {
        by_item
            .entry((l.corpus.as_str(), l.id.as_str()))
            .and_modify(|cur| {
                if l.rater < cur.rater {
                    *cur = l;
                }
            })
            .or_insert(l);
    }
    by_item.into_values().collect()
}

/// Lines of one rater, in input order.
pub fn rater_lines<'a>(lines: &'a [ExportLine], rater: &str) -> Vec<&'a ExportLine> {
    lines.iter().filter(|l| l.rater == rater).collect()
}

/// Per-language statistics for a dataset's export lines. Items labeled by
/// several raters count once, with the first rater by id.
pub fn stats_from_export(lines: &[ExportLine], dataset: &str) -> Result<Vec<CorpusStats>> {
    let mut groups: BTreeMap<&str, Vec<&ExportLine>> = BTreeMap::new();
    for l in single_rater(lines) {
        groups.entry(l.lang.as_str()).or_default().push(l);
    }
    if groups.is_empty() {
        return Err(Error::Empty("export lines"));
    }
    groups
        .into_iter()
        .map(|(lang, ls)| {
            let kind = ls[0].kind();
            if ls.iter().any(|l| l.kind() != kind) {
                return Err(Error::Malformed(format!(
                    "language {lang} mixes monolingual and parallel items"
                )));
            }
            let records: Vec<AnnotationRecord> = ls.iter().map(|l| l.record()).collect();
            let stats = per_language_stats(dataset, lang, kind, &records)?;
            Ok(stats.with_avg_length(
                ls.iter()
                    .filter(|l| l.label != AnnotationLabel::U)
                    .map(|l| l.audited_text()),
            ))
        })
        .collect()
}
