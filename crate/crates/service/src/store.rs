//! On-disk project store.
//!
//! Each project is one directory under the store root:
//!
//! - `manifest.json`: corpus reference and hash, seed, sample size, instructions
//! - `sample.jsonl`: the drawn sample, written once
//! - `annotations.jsonl`: the append-only annotation log
//!
//! Every submission is appended and fsynced before it is acknowledged.
//! Nothing in the log is rewritten; the current label of an `(item, rater)`
//! pair is the record with the greatest `(ts, seq)`. A torn last line left
//! by a crash is dropped when the project is reopened.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use corpaudit_core::export::ExportLine;
use corpaudit_core::sampling::{sample_file, DEFAULT_SAMPLE_SIZE};
use corpaudit_core::taxonomy::{parse_label, validate_annotation, Stage};
use corpaudit_core::{AnnotationLabel, AnnotationRecord, AuditItem, AuditSample, CorpusKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, ServiceError};

pub const MANIFEST_FORMAT: &str = "corpaudit-project v1";
const MANIFEST: &str = "manifest.json";
const SAMPLE: &str = "sample.jsonl";
const LOG: &str = "annotations.jsonl";

/// Guidance shown to raters with every project.
pub const DEFAULT_INSTRUCTIONS: &str = "\
Label every item with exactly one code.
CC: correct, natural sentence in the declared language.
CB: correct but boilerplate (menus, cookie notices, templated text).
CS: correct but a single word or short phrase.
X: the two sides are not translations of each other (parallel data only).
WL: real language, but not the declared one.
NL: not language at all (code, markup, random characters, numbers).
U: unsure; revisit before finishing.
Independently mark offensive or pornographic content.";

/// Source of server timestamps.
pub trait Clock: Send + Sync {
    /// UTC seconds since the Unix epoch.
    fn now(&self) -> i64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateProject {
    pub name: String,
    /// Corpus file on the server's filesystem.
    pub corpus: PathBuf,
    pub dataset: String,
    pub kind: CorpusKind,
    /// `[lang]` for monolingual, `[src, tgt]` for parallel corpora.
    pub langs: Vec<String>,
    #[serde(default = "default_n")]
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub instructions: Option<String>,
}

fn default_n() -> u64 {
    DEFAULT_SAMPLE_SIZE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub id: String,
    pub dataset: String,
    pub kind: CorpusKind,
    pub lang: String,
    pub corpus_path: PathBuf,
    pub corpus_sha256: String,
    pub total_sentences: u64,
    pub seed: u64,
    pub requested_n: u64,
    pub items: usize,
    pub created: i64,
    pub instructions: String,
}

/// One line of the annotation log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    #[serde(flatten)]
    pub record: AnnotationRecord,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Submission {
    pub item: String,
    pub rater: String,
    pub label: String,
    #[serde(default)]
    pub porn: bool,
    #[serde(default)]
    pub offensive: bool,
    #[serde(default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub seq: u64,
    pub ts: i64,
    pub item: String,
    pub rater: String,
    pub label: AnnotationLabel,
}

/// A sample item with its position in the sample and line in the corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub position: usize,
    pub index: u64,
    #[serde(flatten)]
    pub item: AuditItem,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RaterProgress {
    /// Items whose current label is resolved.
    pub labeled: usize,
    /// Items whose current label is `U`.
    pub unresolved: usize,
    pub remaining: usize,
    pub labels: BTreeMap<AnnotationLabel, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub project: String,
    pub items: usize,
    pub records: usize,
    /// Items no rater has resolved yet.
    pub remaining: usize,
    pub raters: BTreeMap<String, RaterProgress>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub project: String,
    pub dataset: String,
    pub kind: CorpusKind,
    pub lang: String,
    pub corpus_sha256: String,
    pub seed: u64,
    pub items: usize,
    pub records: usize,
    pub lines: usize,
    /// Exported lines still labeled `U`.
    pub unresolved: usize,
    pub raters: Vec<String>,
}

struct Project {
    manifest: Manifest,
    sample: AuditSample,
    positions: HashMap<String, usize>,
    log: Vec<LogEntry>,
    writer: File,
    next_seq: u64,
}

impl Project {
    fn open(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&read_file(&dir.join(MANIFEST))?)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(ServiceError::Corrupt(format!(
                "{}: unsupported manifest format {:?}",
                dir.display(),
                manifest.format
            )));
        }
        let sample = AuditSample::read_jsonl(&read_file(&dir.join(SAMPLE))?[..])?;
        let log_path = dir.join(LOG);
        let log = recover_log(&log_path)?;
        let writer = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| ServiceError::io(log_path.display().to_string(), e))?;
        let next_seq = log.iter().map(|e| e.seq + 1).max().unwrap_or(0);
        Ok(Project {
            positions: positions(&sample),
            manifest,
            sample,
            log,
            writer,
            next_seq,
        })
    }

    /// Current record per `(item position, rater)`.
    fn current(&self) -> BTreeMap<(usize, &str), &LogEntry> {
        let mut out: BTreeMap<(usize, &str), &LogEntry> = BTreeMap::new();
        for entry in &self.log {
            let Some(&pos) = self.positions.get(&entry.record.item_id) else {
                continue;
            };
            let key = (pos, entry.record.rater_id.as_str());
            let newer = out
                .get(&key)
                .is_none_or(|cur| (entry.record.timestamp, entry.seq) > (cur.record.timestamp, cur.seq));
            if newer {
                out.insert(key, entry);
            }
        }
        out
    }

    fn append(&mut self, entry: LogEntry) -> Result<()> {
        let mut line = serde_json::to_vec(&entry)?;
        line.push(b'\n');
        let ctx = || format!("{}: annotation log", self.manifest.id);
        self.writer.write_all(&line).map_err(|e| ServiceError::io(ctx(), e))?;
        self.writer.sync_data().map_err(|e| ServiceError::io(ctx(), e))?;
        self.next_seq = entry.seq + 1;
        self.log.push(entry);
        Ok(())
    }
}

fn positions(sample: &AuditSample) -> HashMap<String, usize> {
    sample
        .items
        .iter()
        .enumerate()
        .map(|(i, item)| (item.id().to_string(), i))
        .collect()
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| ServiceError::io(path.display().to_string(), e))
}

/// Parse the log, dropping an unterminated last line that does not parse.
/// A complete last line missing only its newline is kept and terminated.
fn recover_log(path: &Path) -> Result<Vec<LogEntry>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ServiceError::io(path.display().to_string(), e)),
    };
    let complete = bytes.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
    let mut entries = Vec::new();
    for (i, line) in bytes[..complete].split(|b| *b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let entry = serde_json::from_slice(line)
            .map_err(|e| ServiceError::Corrupt(format!("{} line {}: {e}", path.display(), i + 1)))?;
        entries.push(entry);
    }
    let tail = &bytes[complete..];
    if !tail.iter().all(u8::is_ascii_whitespace) {
        let io = |e| ServiceError::io(path.display().to_string(), e);
        match serde_json::from_slice::<LogEntry>(tail) {
            Ok(entry) => {
                let mut f = OpenOptions::new().append(true).open(path).map_err(io)?;
                f.write_all(b"\n").map_err(io)?;
                f.sync_data().map_err(io)?;
                entries.push(entry);
            }
            Err(_) => {
                log::warn!("{}: dropping torn final record ({} bytes)", path.display(), tail.len());
                let f = OpenOptions::new().write(true).open(path).map_err(io)?;
                f.set_len(complete as u64).map_err(io)?;
                f.sync_data().map_err(io)?;
            }
        }
    }
    Ok(entries)
}

fn sha256_file(path: &Path) -> Result<String> {
    let io = |e| ServiceError::io(path.display().to_string(), e);
    let mut reader = BufReader::new(File::open(path).map_err(io)?);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 128
        && !name.starts_with('.')
        && name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
}

fn lock(p: &Mutex<Project>) -> MutexGuard<'_, Project> {
    p.lock().unwrap_or_else(PoisonError::into_inner)
}

/// All projects under one root directory. Writes to a project are
/// serialized by its own lock.
pub struct ProjectStore {
    root: PathBuf,
    clock: Arc<dyn Clock>,
    projects: RwLock<BTreeMap<String, Arc<Mutex<Project>>>>,
}

impl ProjectStore {
    /// Open (creating if needed) a store and load every project in it.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        Self::with_clock(root, Arc::new(SystemClock))
    }

    pub fn with_clock(root: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self> {
        let root = root.into();
        let io = |e| ServiceError::io(root.display().to_string(), e);
        fs::create_dir_all(&root).map_err(io)?;
        let mut projects = BTreeMap::new();
        for entry in fs::read_dir(&root).map_err(io)? {
            let entry = entry.map_err(io)?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if !entry.path().join(MANIFEST).is_file() || !valid_name(&name) {
                continue;
            }
            let project = Project::open(&entry.path())?;
            log::info!("loaded project {name} ({} records)", project.log.len());
            projects.insert(name, Arc::new(Mutex::new(project)));
        }
        Ok(ProjectStore {
            root,
            clock,
            projects: RwLock::new(projects),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .keys()
            .cloned()
            .collect()
    }

    fn project(&self, id: &str) -> Result<Arc<Mutex<Project>>> {
        self.projects
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownProject(id.to_string()))
    }

    /// Draw the sample and persist the project. The project id is its name.
    pub fn create_project(&self, req: &CreateProject) -> Result<Manifest> {
        if !valid_name(&req.name) {
            return Err(ServiceError::BadRequest(format!(
                "invalid project name {:?}: use letters, digits, '-', '_' and '.'",
                req.name
            )));
        }
        let mut projects = self.projects.write().unwrap_or_else(PoisonError::into_inner);
        let dir = self.root.join(&req.name);
        if projects.contains_key(&req.name) || dir.exists() {
            return Err(ServiceError::DuplicateProject(req.name.clone()));
        }
        let langs: Vec<&str> = req.langs.iter().map(String::as_str).collect();
        let sample = sample_file(&req.corpus, &req.dataset, req.kind, &langs, req.n, req.seed)?;
        let manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            id: req.name.clone(),
            dataset: req.dataset.clone(),
            kind: req.kind,
            lang: sample.corpus.lang.clone(),
            corpus_path: req.corpus.clone(),
            corpus_sha256: sha256_file(&req.corpus)?,
            total_sentences: sample.corpus.total_sentences,
            seed: req.seed,
            requested_n: req.n,
            items: sample.items.len(),
            created: self.clock.now(),
            instructions: req
                .instructions
                .clone()
                .unwrap_or_else(|| DEFAULT_INSTRUCTIONS.to_string()),
        };

        // build in a scratch directory so a half-written project is never loaded
        let scratch = self.root.join(format!(".creating-{}", req.name));
        let io = |e| ServiceError::io(scratch.display().to_string(), e);
        if scratch.exists() {
            fs::remove_dir_all(&scratch).map_err(io)?;
        }
        fs::create_dir(&scratch).map_err(io)?;
        let mut sample_bytes = Vec::new();
        sample.write_jsonl(&mut sample_bytes)?;
        fs::write(scratch.join(SAMPLE), sample_bytes).map_err(io)?;
        fs::write(scratch.join(LOG), b"").map_err(io)?;
        fs::write(scratch.join(MANIFEST), serde_json::to_vec_pretty(&manifest)?).map_err(io)?;
        fs::rename(&scratch, &dir).map_err(io)?;

        let project = Project::open(&dir)?;
        log::info!("created project {} with {} items", manifest.id, manifest.items);
        projects.insert(req.name.clone(), Arc::new(Mutex::new(project)));
        Ok(manifest)
    }

    pub fn manifest(&self, id: &str) -> Result<Manifest> {
        let project = self.project(id)?;
        let manifest = lock(&project).manifest.clone();
        Ok(manifest)
    }

    /// Items the rater has not resolved yet, in sample order.
    pub fn next_items(&self, id: &str, rater: &str, limit: usize) -> Result<Vec<ItemView>> {
        let project = self.project(id)?;
        let p = lock(&project);
        let current = p.current();
        Ok(p.sample
            .items
            .iter()
            .enumerate()
            .filter(|(pos, _)| {
                current
                    .get(&(*pos, rater))
                    .is_none_or(|e| e.record.label == AnnotationLabel::U)
            })
            .take(limit)
            .map(|(pos, item)| ItemView {
                position: pos,
                index: p.sample.selected_indices[pos],
                item: item.clone(),
            })
            .collect())
    }

    /// Validate, timestamp and append one annotation.
    pub fn submit(&self, id: &str, sub: &Submission) -> Result<Ack> {
        let label = parse_label(&sub.label)?;
        let project = self.project(id)?;
        let mut p = lock(&project);
        if !p.positions.contains_key(&sub.item) {
            return Err(ServiceError::BadRequest(format!(
                "item {:?} is not part of project {id}",
                sub.item
            )));
        }
        let record = AnnotationRecord {
            item_id: sub.item.clone(),
            rater_id: sub.rater.trim().to_string(),
            label,
            offensive: sub.offensive,
            porn: sub.porn,
            note: sub.note.clone().filter(|n| !n.trim().is_empty()),
            timestamp: self.clock.now(),
        };
        let violations = validate_annotation(&record, p.manifest.kind, None, Stage::Submission);
        if !violations.is_empty() {
            return Err(ServiceError::Rejected(violations));
        }
        let entry = LogEntry {
            seq: p.next_seq,
            record,
        };
        let ack = Ack {
            seq: entry.seq,
            ts: entry.record.timestamp,
            item: entry.record.item_id.clone(),
            rater: entry.record.rater_id.clone(),
            label,
        };
        p.append(entry)?;
        Ok(ack)
    }

    pub fn progress(&self, id: &str) -> Result<Progress> {
        let project = self.project(id)?;
        let p = lock(&project);
        let items = p.sample.items.len();
        let mut raters: BTreeMap<String, RaterProgress> = BTreeMap::new();
        let mut resolved = vec![false; items];
        for ((pos, rater), entry) in p.current() {
            let r = raters.entry(rater.to_string()).or_default();
            *r.labels.entry(entry.record.label).or_default() += 1;
            if entry.record.label == AnnotationLabel::U {
                r.unresolved += 1;
            } else {
                r.labeled += 1;
                resolved[pos] = true;
            }
        }
        for r in raters.values_mut() {
            r.remaining = items - r.labeled;
        }
        Ok(Progress {
            project: id.to_string(),
            items,
            records: p.log.len(),
            remaining: resolved.iter().filter(|r| !**r).count(),
            raters,
        })
    }

    /// Current records as export lines, ordered by sample position then rater.
    pub fn export(&self, id: &str) -> Result<(ExportManifest, Vec<ExportLine>)> {
        let project = self.project(id)?;
        let p = lock(&project);
        let current = p.current();
        let lines: Vec<ExportLine> = current
            .iter()
            .map(|(&(pos, _), entry)| ExportLine::new(&p.manifest.dataset, &p.sample.items[pos], &entry.record))
            .collect();
        let mut raters: Vec<String> = current.keys().map(|(_, r)| r.to_string()).collect();
        raters.sort();
        raters.dedup();
        let manifest = ExportManifest {
            project: id.to_string(),
            dataset: p.manifest.dataset.clone(),
            kind: p.manifest.kind,
            lang: p.manifest.lang.clone(),
            corpus_sha256: p.manifest.corpus_sha256.clone(),
            seed: p.manifest.seed,
            items: p.sample.items.len(),
            records: p.log.len(),
            lines: lines.len(),
            unresolved: lines.iter().filter(|l| l.label == AnnotationLabel::U).count(),
            raters,
        };
        Ok((manifest, lines))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicI64, Ordering};

    struct Ticking(AtomicI64);

    impl Clock for Ticking {
        fn now(&self) -> i64 {
            self.0.fetch_add(1, Ordering::SeqCst)
        }
    }

    fn corpus(dir: &Path, lines: usize) -> PathBuf {
        let path = dir.join("tyv.txt");
        let body: String = (0..lines).map(|i| format!("line {i}\n")).collect();
        fs::write(&path, body).unwrap();
        path
    }

    fn request(name: &str, corpus: PathBuf, n: u64) -> CreateProject {
        CreateProject {
            name: name.into(),
            corpus,
            dataset: "oscar".into(),
            kind: CorpusKind::Monolingual,
            langs: vec!["tyv".into()],
            n,
            seed: 7,
            instructions: None,
        }
    }

    fn store(root: &Path) -> ProjectStore {
        ProjectStore::with_clock(root, Arc::new(Ticking(AtomicI64::new(1_000)))).unwrap()
    }

    fn submit(s: &ProjectStore, item: &str, rater: &str, label: &str) -> Result<Ack> {
        s.submit(
            "p",
            &Submission {
                item: item.into(),
                rater: rater.into(),
                label: label.into(),
                porn: false,
                offensive: false,
                note: None,
            },
        )
    }

    #[test]
    fn small_corpus_gives_every_line() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(&tmp.path().join("root"));
        let m = s.create_project(&request("p", corpus(tmp.path(), 12), 100)).unwrap();
        assert_eq!(m.items, 12);
        assert_eq!(m.corpus_sha256.len(), 64);
    }

    #[test]
    fn names_are_unique_and_safe() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(&tmp.path().join("root"));
        let c = corpus(tmp.path(), 20);
        s.create_project(&request("p", c.clone(), 5)).unwrap();
        assert!(matches!(
            s.create_project(&request("p", c.clone(), 5)),
            Err(ServiceError::DuplicateProject(_))
        ));
        for bad in ["", "../x", ".hidden", "a/b"] {
            assert!(matches!(
                s.create_project(&request(bad, c.clone(), 5)),
                Err(ServiceError::BadRequest(_))
            ));
        }
    }

    #[test]
    fn latest_record_wins_and_survives_reopen() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("root");
        let c = corpus(tmp.path(), 30);
        {
            let s = store(&root);
            s.create_project(&request("p", c, 10)).unwrap();
            let first = s.next_items("p", "a", 1).unwrap()[0].item.id().to_string();
            submit(&s, &first, "a", "NL").unwrap();
            submit(&s, &first, "a", "CC").unwrap();
            assert_eq!(s.progress("p").unwrap().raters["a"].labeled, 1);
        }
        let s = store(&root);
        let (manifest, lines) = s.export("p").unwrap();
        assert_eq!(manifest.records, 2);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].label, AnnotationLabel::CC);
    }

    #[test]
    fn torn_final_line_is_dropped() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("root");
        let c = corpus(tmp.path(), 30);
        let first;
        {
            let s = store(&root);
            s.create_project(&request("p", c, 10)).unwrap();
            first = s.next_items("p", "a", 1).unwrap()[0].item.id().to_string();
            submit(&s, &first, "a", "CC").unwrap();
        }
        let log = root.join("p").join(LOG);
        let mut f = OpenOptions::new().append(true).open(&log).unwrap();
        f.write_all(br#"{"seq":1,"item_id":"tyv:"#).unwrap();
        drop(f);

        let s = store(&root);
        assert_eq!(s.export("p").unwrap().0.records, 1);
        let ack = submit(&s, &first, "a", "WL").unwrap();
        assert_eq!(ack.seq, 1);
        let text = fs::read_to_string(&log).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().all(|l| serde_json::from_str::<LogEntry>(l).is_ok()));
    }

    #[test]
    fn corruption_before_the_tail_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().join("root");
        store(&root)
            .create_project(&request("p", corpus(tmp.path(), 30), 10))
            .unwrap();
        fs::write(root.join("p").join(LOG), "not json\n").unwrap();
        assert!(matches!(ProjectStore::open(&root), Err(ServiceError::Corrupt(_))));
    }

    #[test]
    fn unresolved_items_stay_in_the_queue() {
        let tmp = tempfile::tempdir().unwrap();
        let s = store(&tmp.path().join("root"));
        s.create_project(&request("p", corpus(tmp.path(), 30), 3)).unwrap();
        let ids: Vec<String> = s
            .next_items("p", "a", 10)
            .unwrap()
            .iter()
            .map(|v| v.item.id().to_string())
            .collect();
        submit(&s, &ids[0], "a", "U").unwrap();
        submit(&s, &ids[1], "a", "CS").unwrap();
        let left: Vec<String> = s
            .next_items("p", "a", 10)
            .unwrap()
            .iter()
            .map(|v| v.item.id().to_string())
            .collect();
        assert_eq!(left, vec![ids[0].clone(), ids[2].clone()]);
        let prog = s.progress("p").unwrap();
        assert_eq!(prog.raters["a"].unresolved, 1);
        assert_eq!(prog.raters["a"].remaining, 2);
        assert_eq!(s.export("p").unwrap().0.unresolved, 1);
    }
}
