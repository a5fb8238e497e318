//! Report files.
//!
//! A [`ReportBundle`] renders everything in memory first, so identical
//! inputs always give byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::langtags::LintReport;
use crate::stats::{
    c_vs_size, default_cdf_grid, macro_average, micro_average, quality_cdf, threshold_summary, write_stats_csv,
    Aggregate, CorpusStats, CorrelationResult, StatKey, ThresholdCounts,
};

/// Per-language results of one dataset plus its sentence counts.
#[derive(Debug, Clone)]
pub struct DatasetInput {
    pub dataset: String,
    pub stats: Vec<CorpusStats>,
    /// Languages without a known size are simply absent.
    pub sizes: BTreeMap<String, u64>,
}

/// Everything derived for one dataset.
#[derive(Debug, Clone)]
pub struct DatasetSummary {
    pub dataset: String,
    pub languages: usize,
    pub macro_avg: Aggregate,
    pub micro_avg: Option<Aggregate>,
    pub thresholds: ThresholdCounts,
    pub cdf: Vec<(f64, f64)>,
    pub c_vs_size: Option<CorrelationResult>,
    /// Why micro or correlation could not be computed.
    pub notes: Vec<String>,
}

pub fn summarize(input: &DatasetInput) -> Result<DatasetSummary> {
    let mut notes = Vec::new();
    let macro_avg = macro_average(&input.stats)?;
    let micro_avg = match micro_average(&input.stats, &input.sizes) {
        Ok(m) => {
            if !m.excluded.is_empty() {
                notes.push(format!(
                    "micro average excludes languages without a size: {}",
                    m.excluded.join(", ")
                ));
            }
            Some(m)
        }
        Err(e) => {
            notes.push(format!("micro average unavailable: {e}"));
            None
        }
    };
    let sized: Vec<CorpusStats> = input
        .stats
        .iter()
        .cloned()
        .map(|mut s| {
            s.sentences = input.sizes.get(&s.lang).copied();
            s
        })
        .collect();
    let corr = match c_vs_size(&sized) {
        Ok(c) => Some(c),
        Err(e) => {
            notes.push(format!("C% vs size correlation unavailable: {e}"));
            None
        }
    };
    Ok(DatasetSummary {
        dataset: input.dataset.clone(),
        languages: input.stats.len(),
        thresholds: threshold_summary(&input.stats),
        cdf: quality_cdf(&input.stats, &default_cdf_grid())?,
        macro_avg,
        micro_avg,
        c_vs_size: corr,
        notes,
    })
}

/// Rendered report files, keyed by file name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportBundle {
    pub files: BTreeMap<String, String>,
}

const AGGREGATE_KEYS: [StatKey; 9] = StatKey::ALL;

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn fmt_p(p: f64) -> String {
    if p == 0.0 {
        "0".into()
    } else if p < 0.01 {
        format!("{p:.2e}")
    } else {
        format!("{p:.2}")
    }
}

impl ReportBundle {
    pub fn build(inputs: &[DatasetInput], lint: &[LintReport]) -> Result<Self> {
        let summaries = inputs.iter().map(summarize).collect::<Result<Vec<_>>>()?;
        let mut files = BTreeMap::new();

        let mut per_language = String::new();
        for (i, input) in inputs.iter().enumerate() {
            let mut buf = Vec::new();
            let rows: Vec<CorpusStats> = input
                .stats
                .iter()
                .cloned()
                .map(|mut s| {
                    s.sentences = input.sizes.get(&s.lang).copied().or(s.sentences);
                    s
                })
                .collect();
            write_stats_csv(&mut buf, &rows)?;
            let text = String::from_utf8(buf).expect("csv output is UTF-8");
            for (j, line) in text.lines().enumerate() {
                if j == 0 {
                    if i == 0 {
                        let _ = writeln!(per_language, "dataset,{line}");
                    }
                } else {
                    let _ = writeln!(per_language, "{},{line}", input.dataset);
                }
            }
        }
        if per_language.is_empty() {
            per_language.push_str("dataset,lang,C,CC,CS,CB,X,WL,NL,porn,sentences,avg_length,offensive,n_annotated\n");
        }
        files.insert("per_language.csv".into(), per_language);

        let mut agg = vec![vec!["dataset".into(), "block".into(), "key".into(), "value".into()]];
        let mut thresholds = vec![["dataset", "zero_c", "under50_c", "over50_nl", "over50_wl"]
            .map(String::from)
            .to_vec()];
        let mut cdf = vec![["dataset", "threshold", "fraction"].map(String::from).to_vec()];
        let mut corr = vec![["dataset", "x", "y", "rho", "p_value", "n"].map(String::from).to_vec()];
        for s in &summaries {
            for (block, a) in [("macro", Some(&s.macro_avg)), ("micro", s.micro_avg.as_ref())] {
                let Some(a) = a else { continue };
                for k in AGGREGATE_KEYS {
                    if let Some(v) = a.get(k) {
                        agg.push(vec![s.dataset.clone(), block.into(), k.to_string(), v.render()]);
                    }
                }
            }
            let t = s.thresholds;
            thresholds.push(vec![
                s.dataset.clone(),
                t.zero_c.to_string(),
                t.under50_c.to_string(),
                t.over50_nl.to_string(),
                t.over50_wl.to_string(),
            ]);
            for (th, f) in &s.cdf {
                cdf.push(vec![s.dataset.clone(), format!("{th:.2}"), format!("{f:.4}")]);
            }
            if let Some(c) = s.c_vs_size {
                corr.push(vec![
                    s.dataset.clone(),
                    "C".into(),
                    "sentences".into(),
                    format!("{:.2}", c.rho),
                    fmt_p(c.p_value),
                    c.n.to_string(),
                ]);
            }
        }
        files.insert("aggregates.csv".into(), csv_string(agg)?);
        files.insert("thresholds.csv".into(), csv_string(thresholds)?);
        files.insert("cdf.csv".into(), csv_string(cdf)?);
        files.insert("correlations.csv".into(), csv_string(corr)?);

        if !lint.is_empty() {
            let mut text = String::new();
            for (i, report) in lint.iter().enumerate() {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                let s = String::from_utf8(buf).expect("csv output is UTF-8");
                let skip = usize::from(i > 0);
                for line in s.lines().skip(skip) {
                    let _ = writeln!(text, "{line}");
                }
            }
            files.insert("lint.csv".into(), text);
        }
        files.insert("summary.md".into(), markdown(&summaries, lint));
        Ok(ReportBundle { files })
    }

    /// Write every file into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, body) in &self.files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn markdown(summaries: &[DatasetSummary], lint: &[LintReport]) -> String {
    let mut md = String::from("# Corpus audit summary\n");
    if !summaries.is_empty() {
        md.push_str("\n## Label shares (%)\n\n| Dataset | Langs | Avg | C | X | WL | NL | porn |\n|---|---:|---|---:|---:|---:|---:|---:|\n");
        for s in summaries {
            for (name, a) in [("macro", Some(&s.macro_avg)), ("micro", s.micro_avg.as_ref())] {
                let Some(a) = a else { continue };
                let cell = |k| a.get(k).map_or_else(|| "-".to_string(), |v| v.render());
                let _ = writeln!(
                    md,
                    "| {} | {} | {name} | {} | {} | {} | {} | {} |",
                    s.dataset,
                    s.languages,
                    cell(StatKey::C),
                    cell(StatKey::X),
                    cell(StatKey::WL),
                    cell(StatKey::NL),
                    cell(StatKey::Porn)
                );
            }
        }
        md.push_str("\n## Languages per threshold\n\n| Dataset | C = 0% | C < 50% | NL > 50% | WL > 50% |\n|---|---:|---:|---:|---:|\n");
        for s in summaries {
            let t = s.thresholds;
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} |",
                s.dataset, t.zero_c, t.under50_c, t.over50_nl, t.over50_wl
            );
        }
        md.push_str("\n## C% vs dataset size (Spearman)\n\n| Dataset | rho | p | n |\n|---|---:|---:|---:|\n");
        for s in summaries {
            match s.c_vs_size {
                Some(c) => {
                    let _ = writeln!(md, "| {} | {:.2} | {} | {} |", s.dataset, c.rho, fmt_p(c.p_value), c.n);
                }
                None => {
                    let _ = writeln!(md, "| {} | - | - | - |", s.dataset);
                }
            }
        }
        let notes: Vec<String> = summaries
            .iter()
            .flat_map(|s| s.notes.iter().map(move |n| format!("- {}: {n}", s.dataset)))
            .collect();
        if !notes.is_empty() {
            md.push_str("\n## Notes\n\n");
            for n in notes {
                md.push_str(&n);
                md.push('\n');
            }
        }
    }
    for report in lint {
        md.push('\n');
        md.push_str(&report.to_markdown());
    }
    md
}
