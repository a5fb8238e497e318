//! Character n-gram language classifier.
//!
//! Each language keeps raw n-gram counts for orders `1..=max_order`.
//! A character's probability given its history is the uniform mixture of
//! the add-α estimates of every order whose history fits in the text so
//! far; a text's score is the mean log of that mixture over its
//! characters. Texts are trimmed, lowercased and framed by one space on
//! each side before scoring.
//!
//! Models serialize to JSON with sorted keys. Only counts and settings are
//! stored, so a saved model reloads to exactly the same predictions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "corpaudit-langid v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LangIdConfig {
    /// Additive smoothing constant.
    pub alpha: f64,
    /// Highest n-gram order; orders `1..=max_order` are mixed.
    pub max_order: usize,
    /// Shorter texts (in characters, after trimming) get a low-confidence result.
    pub min_text_length: usize,
    /// Training text required per language, in characters.
    pub min_training_chars: usize,
}

impl Default for LangIdConfig {
    fn default() -> Self {
        LangIdConfig {
            alpha: 0.5,
            max_order: 4,
            min_text_length: 20,
            min_training_chars: 1000,
        }
    }
}

/// Outcome of classifying one text. Both variants carry the best guess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Prediction {
    Language { lang: String, score: f64 },
    LowConfidence { lang: String, score: f64, chars: usize },
}

impl Prediction {
    pub fn lang(&self) -> &str {
        match self {
            Prediction::Language { lang, .. } | Prediction::LowConfidence { lang, .. } => lang,
        }
    }

    pub fn score(&self) -> f64 {
        match self {
            Prediction::Language { score, .. } | Prediction::LowConfidence { score, .. } => *score,
        }
    }

    pub fn is_confident(&self) -> bool {
        matches!(self, Prediction::Language { .. })
    }

    /// The language, if the prediction is confident.
    pub fn confident_lang(&self) -> Option<&str> {
        self.is_confident().then(|| self.lang())
    }
}

/// Anything that can label a text with a language.
pub trait LanguageClassifier {
    fn predict(&self, text: &str) -> Result<Prediction>;
    fn languages(&self) -> Vec<String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LanguageCounts {
    /// Index `k - 1` holds the order-`k` n-gram counts.
    ngrams: Vec<BTreeMap<String, u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    config: LangIdConfig,
    vocabulary: usize,
    languages: BTreeMap<String, LanguageCounts>,
}

#[derive(Debug, Clone)]
struct Tables {
    ngrams: Vec<HashMap<String, u64>>,
    /// Order-k history counts, index `k - 1`; order 1 has the single empty history.
    histories: Vec<HashMap<String, u64>>,
}

impl Tables {
    fn from_counts(counts: &LanguageCounts) -> Self {
        let mut histories = Vec::with_capacity(counts.ngrams.len());
        for table in &counts.ngrams {
            let mut h: HashMap<String, u64> = HashMap::new();
            for (gram, n) in table {
                let last = gram.char_indices().last().map_or(0, |(i, _)| i);
                *h.entry(gram[..last].to_string()).or_default() += n;
            }
            histories.push(h);
        }
        Tables {
            ngrams: counts
                .ngrams
                .iter()
                .map(|t| t.iter().map(|(k, v)| (k.clone(), *v)).collect())
                .collect(),
            histories,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LangIdModel {
    file: ModelFile,
    tables: Vec<(String, Tables)>,
}

impl PartialEq for LangIdModel {
    fn eq(&self, other: &Self) -> bool {
        self.file == other.file
    }
}

fn prepare(text: &str) -> Vec<char> {
    let mut chars = vec![' '];
    chars.extend(text.trim().chars().flat_map(char::to_lowercase));
    chars.push(' ');
    chars
}

impl LangIdModel {
    /// Train on `(language, sentences)` pairs.
    pub fn train<S: AsRef<str>>(corpora: &[(String, Vec<S>)], config: LangIdConfig) -> Result<Self> {
        if corpora.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 languages to train, got {}",
                corpora.len()
            )));
        }
        if config.alpha.is_nan() || config.alpha <= 0.0 || config.max_order == 0 {
            return Err(Error::InvalidArgument(
                "alpha must be positive and max_order at least 1".into(),
            ));
        }
        let mut vocabulary = BTreeSet::new();
        let mut languages = BTreeMap::new();
        for (lang, sentences) in corpora {
            let chars: usize = sentences.iter().map(|s| s.as_ref().trim().chars().count()).sum();
            if chars < config.min_training_chars {
                return Err(Error::InsufficientData {
                    lang: lang.clone(),
                    chars,
                    required: config.min_training_chars,
                });
            }
            let mut ngrams = vec![BTreeMap::new(); config.max_order];
            for sentence in sentences {
                let text = prepare(sentence.as_ref());
                vocabulary.extend(text.iter().copied());
                // the leading pad is history only
                for i in 1..text.len() {
                    for k in 1..=config.max_order.min(i + 1) {
                        let gram: String = text[i + 1 - k..=i].iter().collect();
                        *ngrams[k - 1].entry(gram).or_insert(0u64) += 1;
                    }
                }
            }
            if languages.insert(lang.clone(), LanguageCounts { ngrams }).is_some() {
                return Err(Error::DuplicateLanguage(lang.clone()));
            }
        }
        Ok(Self::from_file(ModelFile {
            format: MODEL_FORMAT.into(),
            config,
            // one slot for characters never seen in training
            vocabulary: vocabulary.len() + 1,
            languages,
        }))
    }

    fn from_file(file: ModelFile) -> Self {
        let tables = file
            .languages
            .iter()
            .map(|(l, c)| (l.clone(), Tables::from_counts(c)))
            .collect();
        LangIdModel { file, tables }
    }

    pub fn config(&self) -> &LangIdConfig {
        &self.file.config
    }

    /// Mean log-probability of `text` under every language, in language order.
    pub fn scores(&self, text: &str) -> Result<Vec<(String, f64)>> {
        if text.trim().is_empty() {
            return Err(Error::Empty("text"));
        }
        let chars = prepare(text);
        let cfg = &self.file.config;
        let v = self.file.vocabulary as f64;
        let mut totals = vec![0.0; self.tables.len()];
        let mut grams: Vec<(String, String)> = Vec::with_capacity(cfg.max_order);
        for i in 1..chars.len() {
            grams.clear();
            for k in 1..=cfg.max_order.min(i + 1) {
                let gram: String = chars[i + 1 - k..=i].iter().collect();
                let history: String = chars[i + 1 - k..i].iter().collect();
                grams.push((gram, history));
            }
            let weight = 1.0 / grams.len() as f64;
            for (total, (_, t)) in totals.iter_mut().zip(&self.tables) {
                let mut p = 0.0;
                for (k, (gram, history)) in grams.iter().enumerate() {
                    let c = t.ngrams[k].get(gram).copied().unwrap_or(0) as f64;
                    let h = t.histories[k].get(history).copied().unwrap_or(0) as f64;
                    p += weight * (c + cfg.alpha) / (h + cfg.alpha * v);
                }
                *total += p.ln();
            }
        }
        let n = (chars.len() - 1) as f64;
        Ok(self
            .tables
            .iter()
            .zip(totals)
            .map(|((l, _), t)| (l.clone(), t / n))
            .collect())
    }

    pub fn predict(&self, text: &str) -> Result<Prediction> {
        let scores = self.scores(text)?;
        let (lang, score) = scores
            .into_iter()
            .fold(None::<(String, f64)>, |best, (l, s)| match best {
                Some((bl, bs)) if bs >= s => Some((bl, bs)),
                _ => Some((l, s)),
            })
            .expect("model has languages");
        let chars = text.trim().chars().count();
        Ok(if chars < self.file.config.min_text_length {
            Prediction::LowConfidence { lang, score, chars }
        } else {
            Prediction::Language { lang, score }
        })
    }

    pub fn languages(&self) -> Vec<String> {
        self.file.languages.keys().cloned().collect()
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer(w, &self.file)?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.file)?)
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Malformed(format!(
                "model format {:?}, expected {MODEL_FORMAT:?}",
                file.format
            )));
        }
        if file.languages.values().any(|c| c.ngrams.len() != file.config.max_order) {
            return Err(Error::Malformed("model order tables do not match max_order".into()));
        }
        if file.languages.len() < 2 {
            return Err(Error::Malformed("model needs at least 2 languages".into()));
        }
        Ok(Self::from_file(file))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.to_writer(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }
}

impl LanguageClassifier for LangIdModel {
    fn predict(&self, text: &str) -> Result<Prediction> {
        LangIdModel::predict(self, text)
    }

    fn languages(&self) -> Vec<String> {
        LangIdModel::languages(self)
    }
}
