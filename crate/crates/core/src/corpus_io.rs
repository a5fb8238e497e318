//! Corpus ingestion and preprocessing.
//!
//! Corpora are plain UTF-8 text with one sentence per line (optionally
//! gzip-compressed, detected by a `.gz` extension) or two-column TSV for
//! parallel data. Undecodable bytes are a hard error: an audit must never
//! silently rewrite the evidence it is auditing.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    #[serde(alias = "mono")]
    Monolingual,
    Parallel,
}

impl std::str::FromStr for CorpusKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mono" | "monolingual" => Ok(CorpusKind::Monolingual),
            "parallel" | "bitext" => Ok(CorpusKind::Parallel),
            _ => Err(Error::InvalidArgument(format!(
                "unknown corpus kind {s:?} (expected mono or parallel)"
            ))),
        }
    }
}

impl std::fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CorpusKind::Monolingual => "mono",
            CorpusKind::Parallel => "parallel",
        })
    }
}

/// One audited monolingual line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceItem {
    /// `<corpus>:<zero-based line index>`.
    pub id: String,
    /// Declared language tag, exactly as published.
    pub lang: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_uri: Option<String>,
}

/// One audited sentence pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: String,
    pub src_lang: String,
    pub tgt_lang: String,
    pub src_text: String,
    pub tgt_text: String,
}

impl SentencePair {
    /// Both sides declare the same language; legal but worth a warning.
    pub fn has_identical_langs(&self) -> bool {
        self.src_lang == self.tgt_lang
    }

    /// Row key used by the per-language audit tables, e.g. `en-de_DE`.
    pub fn pair_key(&self) -> String {
        format!("{}-{}", self.src_lang, self.tgt_lang)
    }
}

/// Either kind of audit unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AuditItem {
    Sentence(SentenceItem),
    Pair(SentencePair),
}

impl AuditItem {
    pub fn id(&self) -> &str {
        match self {
            AuditItem::Sentence(s) => &s.id,
            AuditItem::Pair(p) => &p.id,
        }
    }

    pub fn kind(&self) -> CorpusKind {
        match self {
            AuditItem::Sentence(_) => CorpusKind::Monolingual,
            AuditItem::Pair(_) => CorpusKind::Parallel,
        }
    }

    /// Language key of the unit: the declared tag, or `src-tgt` for pairs.
    pub fn lang_key(&self) -> String {
        match self {
            AuditItem::Sentence(s) => s.lang.clone(),
            AuditItem::Pair(p) => p.pair_key(),
        }
    }

    /// The text whose length the audit tables report: the sentence itself,
    /// or the target side of a pair.
    pub fn audited_text(&self) -> &str {
        match self {
            AuditItem::Sentence(s) => &s.text,
            AuditItem::Pair(p) => &p.tgt_text,
        }
    }
}

impl From<SentenceItem> for AuditItem {
    fn from(item: SentenceItem) -> Self {
        AuditItem::Sentence(item)
    }
}

impl From<SentencePair> for AuditItem {
    fn from(pair: SentencePair) -> Self {
        AuditItem::Pair(pair)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDescriptor {
    pub dataset: String,
    /// Language code as published by the dataset.
    pub lang: String,
    pub total_sentences: u64,
    pub kind: CorpusKind,
}

/// Corpus identifier derived from a path: the file name without `.gz` and
/// one further extension.
pub fn corpus_id(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = name.strip_suffix(".gz").unwrap_or(&name);
    match name.rsplit_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_string(),
        _ => name.to_string(),
    }
}

fn open_text(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let is_gz = path.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("gz"));
    let reader: Box<dyn Read> = if is_gz {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

/// Strict UTF-8 line reader tracking line numbers and byte offsets.
struct Lines {
    path: PathBuf,
    reader: Box<dyn BufRead>,
    buf: Vec<u8>,
    line: u64,
    offset: u64,
    done: bool,
}

impl Lines {
    fn open(path: &Path) -> Result<Self> {
        Ok(Lines {
            path: path.to_path_buf(),
            reader: open_text(path)?,
            buf: Vec::new(),
            line: 0,
            offset: 0,
            done: false,
        })
    }

    /// Next `(zero-based line index, content)` without the line terminator.
    fn next_line(&mut self) -> Option<Result<(u64, String)>> {
        if self.done {
            return None;
        }
        self.buf.clear();
        let read = match self.reader.read_until(b'\n', &mut self.buf) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Some(Err(Error::io(&self.path, e)));
            }
        };
        if read == 0 {
            self.done = true;
            return None;
        }
        let index = self.line;
        let start = self.offset;
        self.line += 1;
        self.offset += read as u64;

        let mut bytes = &self.buf[..];
        if let Some(rest) = bytes.strip_suffix(b"\n") {
            bytes = rest;
        }
        if let Some(rest) = bytes.strip_suffix(b"\r") {
            bytes = rest;
        }
        match std::str::from_utf8(bytes) {
            Ok(s) => Some(Ok((index, s.to_string()))),
            Err(e) => {
                self.done = true;
                Some(Err(Error::InvalidUtf8 {
                    path: self.path.clone(),
                    line: index + 1,
                    offset: start + e.valid_up_to() as u64,
                }))
            }
        }
    }
}

/// Streaming reader over a one-sentence-per-line corpus.
pub struct MonolingualReader {
    lines: Lines,
    corpus: String,
    lang: String,
    skipped: u64,
}

impl MonolingualReader {
    /// Blank (empty or whitespace-only) lines skipped so far.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl Iterator for MonolingualReader {
    type Item = Result<SentenceItem>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (index, text) = match self.lines.next_line()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e)),
            };
            if text.trim().is_empty() {
                self.skipped += 1;
                continue;
            }
            return Some(Ok(SentenceItem {
                id: format!("{}:{}", self.corpus, index),
                lang: self.lang.clone(),
                text,
                source_uri: None,
            }));
        }
    }
}

pub fn read_monolingual(path: impl AsRef<Path>, lang: &str) -> Result<MonolingualReader> {
    let path = path.as_ref();
    if lang.trim().is_empty() {
        return Err(Error::InvalidArgument("language tag must be non-empty".into()));
    }
    Ok(MonolingualReader {
        lines: Lines::open(path)?,
        corpus: corpus_id(path),
        lang: lang.to_string(),
        skipped: 0,
    })
}

/// Streaming reader over a two-column TSV bitext.
pub struct ParallelReader {
    lines: Lines,
    corpus: String,
    src_lang: String,
    tgt_lang: String,
    skipped: u64,
}

impl ParallelReader {
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
}

impl Iterator for ParallelReader {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (index, line) = match self.lines.next_line()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e)),
            };
            if line.trim().is_empty() {
                self.skipped += 1;
                continue;
            }
            let columns: Vec<&str> = line.split('\t').collect();
            if columns.len() != 2 {
                self.lines.done = true;
                return Some(Err(Error::ColumnCount {
                    path: self.lines.path.clone(),
                    line: index + 1,
                    found: columns.len(),
                }));
            }
            return Some(Ok(SentencePair {
                id: format!("{}:{}", self.corpus, index),
                src_lang: self.src_lang.clone(),
                tgt_lang: self.tgt_lang.clone(),
                src_text: columns[0].to_string(),
                tgt_text: columns[1].to_string(),
            }));
        }
    }
}

pub fn read_parallel(path: impl AsRef<Path>, src_lang: &str, tgt_lang: &str) -> Result<ParallelReader> {
    let path = path.as_ref();
    if src_lang.trim().is_empty() || tgt_lang.trim().is_empty() {
        return Err(Error::InvalidArgument("language tags must be non-empty".into()));
    }
    if src_lang == tgt_lang {
        log::warn!("{}: source and target both declared as {src_lang:?}", path.display());
    }
    Ok(ParallelReader {
        lines: Lines::open(path)?,
        corpus: corpus_id(path),
        src_lang: src_lang.to_string(),
        tgt_lang: tgt_lang.to_string(),
        skipped: 0,
    })
}

const TERMINALS: &[char] = &['.', '!', '?', '\u{589}', '\u{3002}', '\u{61F}', '\u{964}'];

/// Split a document into sentences.
///
/// Lines are split first; within a line a sentence ends at a terminal mark
/// (`. ! ? ։ 。 ؟ ।`) that is directly followed by whitespace. Sentences are
/// trimmed and empty pieces dropped, so only whitespace is ever lost.
pub fn split_sentences(document: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in document.lines() {
        let mut start = 0;
        let mut chars = line.char_indices().peekable();
        while let Some((i, c)) = chars.next() {
            if !TERMINALS.contains(&c) {
                continue;
            }
            let end = i + c.len_utf8();
            if chars.peek().is_some_and(|(_, next)| next.is_whitespace()) {
                push_trimmed(&mut out, &line[start..end]);
                start = end;
            }
        }
        push_trimmed(&mut out, &line[start..]);
    }
    out
}

fn push_trimmed(out: &mut Vec<String>, piece: &str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece.to_string());
    }
}

/// Deduplication key: trimmed text with internal whitespace runs collapsed.
/// No case folding.
pub fn dedup_key(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Iterator adapter keeping the first occurrence of each [`dedup_key`].
pub struct Dedup<I> {
    inner: I,
    seen: HashSet<String>,
    removed: u64,
}

impl<I> Dedup<I> {
    pub fn removed(&self) -> u64 {
        self.removed
    }
}

impl<I: Iterator<Item = SentenceItem>> Iterator for Dedup<I> {
    type Item = SentenceItem;

    fn next(&mut self) -> Option<SentenceItem> {
        for item in self.inner.by_ref() {
            if self.seen.insert(dedup_key(&item.text)) {
                return Some(item);
            }
            self.removed += 1;
        }
        None
    }
}

pub fn deduplicate<I>(items: I) -> Dedup<I::IntoIter>
where
    I: IntoIterator<Item = SentenceItem>,
{
    Dedup {
        inner: items.into_iter(),
        seen: HashSet::new(),
        removed: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn item(text: &str) -> SentenceItem {
        SentenceItem {
            id: text.to_string(),
            lang: "en".into(),
            text: text.into(),
            source_uri: None,
        }
    }

    fn texts(items: &[SentenceItem]) -> Vec<&str> {
        items.iter().map(|i| i.text.as_str()).collect()
    }

    #[test]
    fn reads_nonempty_lines_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sample.txt");
        std::fs::write(&path, "one\ntwo\nthree\n").unwrap();
        let items: Vec<_> = read_monolingual(&path, "en").unwrap().collect::<Result<_>>().unwrap();
        let ids: Vec<_> = items.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["sample:0", "sample:1", "sample:2"]);
        assert_eq!(texts(&items), ["one", "two", "three"]);
    }

    #[test]
    fn skips_and_counts_empty_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "a\nb\n\nc\nd\n").unwrap();
        let mut reader = read_monolingual(&path, "en").unwrap();
        let items: Vec<_> = reader.by_ref().collect::<Result<_>>().unwrap();
        assert_eq!(items.len(), 4);
        assert_eq!(reader.skipped(), 1);
        // ids keep the physical line index
        assert_eq!(items[2].id, "c:3");
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, b"ok\nab\xffcd\n").unwrap();
        let err = read_monolingual(&path, "en")
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        match err {
            Error::InvalidUtf8 { line, offset, .. } => {
                assert_eq!(line, 2);
                assert_eq!(offset, 5);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            read_monolingual("/nonexistent/corpus.txt", "en"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn gzip_matches_plain_text() {
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("big.txt");
        let gz = dir.path().join("big.txt.gz");
        let body: String = (0..1000).map(|i| format!("sentence number {i}\n")).collect();
        std::fs::write(&plain, &body).unwrap();
        let mut enc = flate2::write::GzEncoder::new(File::create(&gz).unwrap(), flate2::Compression::default());
        enc.write_all(body.as_bytes()).unwrap();
        enc.finish().unwrap();

        let a: Vec<_> = read_monolingual(&plain, "en").unwrap().collect::<Result<_>>().unwrap();
        let b: Vec<_> = read_monolingual(&gz, "en").unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(a.len(), 1000);
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_reads_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        std::fs::write(&path, "hello\thallo\nbye\ttschüss\n").unwrap();
        let pairs: Vec<_> = read_parallel(&path, "en", "de_DE")
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].tgt_text, "tschüss");
        assert_eq!(pairs[0].tgt_lang, "de_DE");
    }

    #[test]
    fn parallel_wrong_column_count_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.tsv");
        std::fs::write(&path, "a\tb\nc\td\te\tf\n").unwrap();
        let err = read_parallel(&path, "en", "de")
            .unwrap()
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        assert!(matches!(err, Error::ColumnCount { line: 2, found: 4, .. }));
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn parallel_hundred_line_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ccaligned.en-de.tsv");
        let body: String = (0..100).map(|i| format!("house {i}\tHaus {i}\n")).collect();
        std::fs::write(&path, body).unwrap();
        let pairs: Vec<_> = read_parallel(&path, "en", "de_DE")
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(pairs.len(), 100);
        assert!(pairs.iter().all(|p| p.src_lang == "en" && p.tgt_lang == "de_DE"));
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_sentences("A. B? C!"), ["A.", "B?", "C!"]);
        assert!(split_sentences("").is_empty());
        assert_eq!(split_sentences("No terminal punctuation"), ["No terminal punctuation"]);
    }

    #[test]
    fn split_handles_scripts_and_newlines() {
        assert_eq!(
            split_sentences("Բարև։ Ինչպես ես\nमैं ठीक हूँ। धन्यवाद"),
            ["Բարև։", "Ինչպես ես", "मैं ठीक हूँ।", "धन्यवाद"]
        );
        // no whitespace after the mark, no split
        assert_eq!(split_sentences("3.14 is pi"), ["3.14 is pi"]);
        assert_eq!(split_sentences("Really?! Yes."), ["Really?!", "Yes."]);
    }

    #[test]
    fn dedup_examples() {
        let out: Vec<_> = deduplicate(vec![item("a"), item("a"), item("b")]).collect();
        assert_eq!(texts(&out), ["a", "b"]);

        let mut d = deduplicate(vec![item("a "), item(" a")]);
        let out: Vec<_> = d.by_ref().collect();
        assert_eq!(texts(&out), ["a "]);
        assert_eq!(d.removed(), 1);

        assert_eq!(deduplicate(Vec::new()).count(), 0);
    }

    #[test]
    fn dedup_does_not_case_fold() {
        let out: Vec<_> = deduplicate(vec![item("Hello"), item("hello")]).collect();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn corpus_id_strips_extensions() {
        assert_eq!(corpus_id(Path::new("/x/oscar.tyv.txt.gz")), "oscar.tyv");
        assert_eq!(corpus_id(Path::new("plain")), "plain");
    }
}
