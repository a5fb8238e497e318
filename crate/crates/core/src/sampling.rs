//! Reproducible audit samples.
//!
//! Index selection uses Robert Floyd's algorithm for sampling without
//! replacement, driven by ChaCha8 seeded from a `u64` through
//! `SeedableRng::seed_from_u64`. Both are fully specified and
//! platform-independent, so a `(total, n, seed)` triple names the same
//! sample everywhere.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus_io::{self, AuditItem, CorpusDescriptor, CorpusKind};
use crate::error::{Error, Result};

/// Audit sample size used throughout the published audit.
pub const DEFAULT_SAMPLE_SIZE: u64 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSample {
    pub corpus: CorpusDescriptor,
    pub seed: u64,
    pub requested_n: u64,
    pub selected_indices: Vec<u64>,
    pub items: Vec<AuditItem>,
}

/// Sorted, distinct indices in `0..total`; everything when `total <= n`.
pub fn select_indices(total: u64, n: u64, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    if total == 0 {
        return Err(Error::Empty("corpus"));
    }
    if total <= n {
        return Ok((0..total).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = BTreeSet::new();
    for j in (total - n)..total {
        let t = rng.random_range(0..=j);
        if !chosen.insert(t) {
            chosen.insert(j);
        }
    }
    Ok(chosen.into_iter().collect())
}

/// Draw `n` items from a stream whose length is `corpus.total_sentences`.
///
/// Stream positions are the sampling indices. A stream that turns out
/// shorter or longer than the declared total is an error.
pub fn draw_sample<I, T>(corpus: CorpusDescriptor, items: I, n: u64, seed: u64) -> Result<AuditSample>
where
    I: IntoIterator<Item = Result<T>>,
    T: Into<AuditItem>,
{
    let total = corpus.total_sentences;
    let indices = select_indices(total, n, seed)?;
    let mut wanted = indices.iter().copied().peekable();
    let mut picked = Vec::with_capacity(indices.len());
    let mut seen = 0u64;
    for (position, item) in items.into_iter().enumerate() {
        let item = item?;
        seen = position as u64 + 1;
        if wanted.peek() == Some(&(position as u64)) {
            wanted.next();
            picked.push(item.into());
        }
    }
    if seen != total {
        return Err(Error::Malformed(format!(
            "corpus {} declared {total} sentences but the stream held {seen}",
            corpus.dataset
        )));
    }
    Ok(AuditSample {
        corpus,
        seed,
        requested_n: n,
        selected_indices: indices,
        items: picked,
    })
}

/// Sample straight from a corpus file: one counting pass, one selecting pass.
/// `langs` is `[lang]` for monolingual and `[src, tgt]` for parallel files.
pub fn sample_file(
    path: &Path,
    dataset: &str,
    kind: CorpusKind,
    langs: &[&str],
    n: u64,
    seed: u64,
) -> Result<AuditSample> {
    match (kind, langs) {
        (CorpusKind::Monolingual, [lang]) => {
            let total = count(corpus_io::read_monolingual(path, lang)?)?;
            let desc = CorpusDescriptor {
                dataset: dataset.to_string(),
                lang: lang.to_string(),
                total_sentences: total,
                kind,
            };
            draw_sample(desc, corpus_io::read_monolingual(path, lang)?, n, seed)
        }
        (CorpusKind::Parallel, [src, tgt]) => {
            let total = count(corpus_io::read_parallel(path, src, tgt)?)?;
            let desc = CorpusDescriptor {
                dataset: dataset.to_string(),
                lang: format!("{src}-{tgt}"),
                total_sentences: total,
                kind,
            };
            draw_sample(desc, corpus_io::read_parallel(path, src, tgt)?, n, seed)
        }
        _ => Err(Error::InvalidArgument(format!(
            "{kind} corpus needs {} language tag(s), got {}",
            if kind == CorpusKind::Parallel { 2 } else { 1 },
            langs.len()
        ))),
    }
}

fn count<T>(items: impl Iterator<Item = Result<T>>) -> Result<u64> {
    let mut total = 0;
    for item in items {
        item?;
        total += 1;
    }
    Ok(total)
}

#[derive(Serialize, Deserialize)]
struct SampleHeader {
    corpus: CorpusDescriptor,
    seed: u64,
    requested_n: u64,
}

#[derive(Serialize, Deserialize)]
struct SampleLine {
    index: u64,
    #[serde(flatten)]
    item: AuditItem,
}

impl AuditSample {
    /// JSONL: a header object, then one line per item in index order.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = SampleHeader {
            corpus: self.corpus.clone(),
            seed: self.seed,
            requested_n: self.requested_n,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(|e| Error::io("<sample>", e))?;
        for (index, item) in self.selected_indices.iter().zip(&self.items) {
            let line = SampleLine {
                index: *index,
                item: item.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io("<sample>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header: SampleHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line.map_err(|e| Error::io("<sample>", e))?)?,
            None => return Err(Error::Empty("sample file")),
        };
        let mut selected_indices = Vec::new();
        let mut items = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::io("<sample>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: SampleLine = serde_json::from_str(&line)?;
            selected_indices.push(parsed.index);
            items.push(parsed.item);
        }
        Ok(AuditSample {
            corpus: header.corpus,
            seed: header.seed,
            requested_n: header.requested_n,
            selected_indices,
            items,
        })
    }
}

/// The `k` smallest languages by sentence count plus `extra`, ordered by
/// count then tag.
pub fn select_languages(sizes: &BTreeMap<String, u64>, k: usize, extra: &[String]) -> Result<Vec<String>> {
    if sizes.is_empty() {
        return Err(Error::Empty("language sizes"));
    }
    if let Some(missing) = extra.iter().find(|l| !sizes.contains_key(*l)) {
        return Err(Error::UnknownLanguage(missing.clone()));
    }
    let mut by_size: Vec<(&String, u64)> = sizes.iter().map(|(l, c)| (l, *c)).collect();
    by_size.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut chosen: BTreeSet<&String> = by_size.iter().take(k).map(|(l, _)| *l).collect();
    chosen.extend(extra.iter());
    Ok(by_size
        .into_iter()
        .filter(|(l, _)| chosen.contains(l))
        .map(|(l, _)| l.clone())
        .collect())
}

/// One row of a `dataset,lang,sentences` size table. `N/A` means unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRow {
    pub dataset: String,
    pub lang: String,
    pub sentences: Option<u64>,
}

pub fn read_sizes<R: std::io::Read>(r: R) -> Result<Vec<SizeRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Malformed(format!("sizes table lacks a {name:?} column")))
    };
    let (d, l, s) = (col("dataset")?, col("lang")?, col("sentences")?);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("").to_string();
        rows.push(SizeRow {
            dataset: field(d),
            lang: field(l),
            sentences: parse_count(&field(s))?,
        });
    }
    Ok(rows)
}

pub fn read_sizes_file(path: &Path) -> Result<Vec<SizeRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_sizes(file)
}

/// Sentence counts as published: plain integers, `N/A`/empty for unknown.
pub fn parse_count(field: &str) -> Result<Option<u64>> {
    let field = field.trim();
    if field.is_empty() || field.eq_ignore_ascii_case("n/a") || field == "-" {
        return Ok(None);
    }
    field
        .replace(',', "")
        .parse()
        .map(Some)
        .map_err(|_| Error::Malformed(format!("bad sentence count {field:?}")))
}

/// Sizes for one dataset (case-insensitive), keyed by language.
pub fn sizes_for(rows: &[SizeRow], dataset: &str) -> BTreeMap<String, Option<u64>> {
    rows.iter()
        .filter(|r| r.dataset.eq_ignore_ascii_case(dataset))
        .map(|r| (r.lang.clone(), r.sentences))
        .collect()
}
