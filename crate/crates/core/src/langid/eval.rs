//! Scoring filter decisions against human labels.
//!
//! Detection treats "kept" as the classifier saying the pair is in its
//! declared languages; the truth is positive for `C` and `X` and negative
//! for `WL` and `NL`. Retention asks how clean the kept set is
//! (kept `C` / kept) and how much of the good data survives
//! (kept `C` / all `C`).

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use super::filter::FilterDecision;
use crate::error::{Error, Result};
use crate::taxonomy::{AnnotationLabel, AnnotationRecord};

/// Raw counts behind one set of metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FilterCounts {
    pub pairs: usize,
    /// Kept and truly in the declared languages.
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub kept_c: usize,
    pub total_c: usize,
}

impl FilterCounts {
    pub fn kept(&self) -> usize {
        self.true_pos + self.false_pos
    }

    fn add(&mut self, kept: bool, label: AnnotationLabel) {
        let positive = label.is_correct() || label == AnnotationLabel::X;
        self.pairs += 1;
        match (kept, positive) {
            (true, true) => self.true_pos += 1,
            (true, false) => self.false_pos += 1,
            (false, true) => self.false_neg += 1,
            (false, false) => self.true_neg += 1,
        }
        if label.is_correct() {
            self.total_c += 1;
            self.kept_c += usize::from(kept);
        }
    }

    pub fn metrics(&self) -> MetricSet {
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        MetricSet {
            pairs: self.pairs,
            c_fraction: ratio(self.total_c, self.pairs),
            detection_precision: ratio(self.true_pos, self.kept()),
            detection_recall: ratio(self.true_pos, self.true_pos + self.false_neg),
            retention_precision: ratio(self.kept_c, self.kept()),
            retention_recall: ratio(self.kept_c, self.total_c),
        }
    }
}

/// `None` marks an undefined value (a zero denominator).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MetricSet {
    pub pairs: usize,
    /// Share of pairs labeled `C` before filtering.
    pub c_fraction: Option<f64>,
    pub detection_precision: Option<f64>,
    pub detection_recall: Option<f64>,
    pub retention_precision: Option<f64>,
    pub retention_recall: Option<f64>,
}

impl MetricSet {
    fn values(&self) -> [Option<f64>; 5] {
        [
            self.c_fraction,
            self.detection_precision,
            self.detection_recall,
            self.retention_precision,
            self.retention_recall,
        ]
    }

    /// Combine per-language sets metric by metric, skipping undefined values.
    fn combine(sets: &[MetricSet], f: impl Fn(&mut [f64]) -> Option<f64>) -> MetricSet {
        let pick = |i: usize| {
            let mut vals: Vec<f64> = sets.iter().filter_map(|s| s.values()[i]).collect();
            f(&mut vals)
        };
        MetricSet {
            pairs: sets.iter().map(|s| s.pairs).sum(),
            c_fraction: pick(0),
            detection_precision: pick(1),
            detection_recall: pick(2),
            retention_precision: pick(3),
            retention_recall: pick(4),
        }
    }
}

fn mean(v: &mut [f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterMetrics {
    /// Pooled over every evaluated pair.
    pub overall: MetricSet,
    /// Unweighted mean over languages.
    pub macro_avg: MetricSet,
    pub per_language: BTreeMap<String, MetricSet>,
    /// Languages with under 50% `C` before filtering.
    pub noisy_languages: Vec<String>,
    /// Median over the noisy languages.
    pub noisy_median: MetricSet,
    /// Decisions skipped because a declared tag was unsupported.
    pub unevaluable: usize,
    /// Decisions skipped because their label is still `U`.
    pub unresolved: usize,
}

/// Score decisions against annotations keyed by item id.
///
/// Languages are the declared pair keys. Unevaluable decisions and `U`
/// labels are counted and left out.
pub fn filter_eval(
    annotations: &HashMap<String, AnnotationRecord>,
    decisions: &[FilterDecision],
) -> Result<FilterMetrics> {
    let mut overall = FilterCounts::default();
    let mut per_lang: BTreeMap<String, FilterCounts> = BTreeMap::new();
    let (mut unevaluable, mut unresolved) = (0, 0);
    for d in decisions {
        let record = annotations
            .get(&d.id)
            .ok_or_else(|| Error::MissingAnnotation(d.id.clone()))?;
        if !d.is_evaluable() {
            unevaluable += 1;
            continue;
        }
        if record.label == AnnotationLabel::U {
            unresolved += 1;
            continue;
        }
        overall.add(d.kept, record.label);
        per_lang.entry(d.pair_key()).or_default().add(d.kept, record.label);
    }

    let per_language: BTreeMap<String, MetricSet> = per_lang.iter().map(|(l, c)| (l.clone(), c.metrics())).collect();
    let sets: Vec<MetricSet> = per_language.values().copied().collect();
    let noisy_languages: Vec<String> = per_lang
        .iter()
        .filter(|(_, c)| 2 * c.total_c < c.pairs)
        .map(|(l, _)| l.clone())
        .collect();
    let noisy_sets: Vec<MetricSet> = noisy_languages.iter().map(|l| per_language[l]).collect();
    Ok(FilterMetrics {
        overall: overall.metrics(),
        macro_avg: MetricSet::combine(&sets, mean),
        noisy_median: MetricSet::combine(&noisy_sets, median),
        per_language,
        noisy_languages,
        unevaluable,
        unresolved,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

impl FilterMetrics {
    /// One row per language, then `overall`, `macro` and `noisy_median`.
    /// Undefined values are written as `NA`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "lang",
            "pairs",
            "c_fraction",
            "detection_precision",
            "detection_recall",
            "retention_precision",
            "retention_recall",
            "noisy",
        ])?;
        let mut row = |name: &str, m: &MetricSet, noisy: &str| -> Result<()> {
            let mut r = vec![name.to_string(), m.pairs.to_string()];
            r.extend(m.values().into_iter().map(cell));
            r.push(noisy.to_string());
            out.write_record(&r)?;
            Ok(())
        };
        for (lang, m) in &self.per_language {
            let noisy = self.noisy_languages.contains(lang);
            row(lang, m, if noisy { "yes" } else { "no" })?;
        }
        row("overall", &self.overall, "")?;
        row("macro", &self.macro_avg, "")?;
        row("noisy_median", &self.noisy_median, "")?;
        out.flush().map_err(|e| Error::io("<eval csv>", e))?;
        Ok(())
    }
}
