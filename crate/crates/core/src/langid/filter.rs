//! Sentence-pair filtering on predicted languages.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::model::{LanguageClassifier, Prediction};
use crate::corpus_io::SentencePair;
use crate::langtags::{parse_tag, IssueCategory, RulesDatabase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DecisionStatus {
    Evaluated,
    /// A declared tag does not map to any classifier language.
    Unevaluable {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDecision {
    pub id: String,
    /// Declared tags as published.
    pub src_lang: String,
    pub tgt_lang: String,
    /// Declared tags resolved to classifier languages.
    pub src_resolved: Option<String>,
    pub tgt_resolved: Option<String>,
    pub src_prediction: Option<Prediction>,
    pub tgt_prediction: Option<Prediction>,
    pub kept: bool,
    #[serde(flatten)]
    pub status: DecisionStatus,
}

impl FilterDecision {
    pub fn is_evaluable(&self) -> bool {
        self.status == DecisionStatus::Evaluated
    }

    /// Pair key of the declared languages, e.g. `en-de_DE`.
    pub fn pair_key(&self) -> String {
        format!("{}-{}", self.src_lang, self.tgt_lang)
    }
}

/// Keeps a pair only when both sides are confidently predicted as their
/// declared languages.
pub struct LangIdFilter<'a, C: LanguageClassifier> {
    classifier: &'a C,
    languages: BTreeSet<String>,
    rules: Option<&'a RulesDatabase>,
    dataset: String,
}

impl<'a, C: LanguageClassifier> LangIdFilter<'a, C> {
    pub fn new(classifier: &'a C) -> Self {
        LangIdFilter {
            classifier,
            languages: classifier.languages().into_iter().collect(),
            rules: None,
            dataset: String::new(),
        }
    }

    /// Correct declared tags with a rules database before matching.
    pub fn with_rules(mut self, rules: &'a RulesDatabase, dataset: &str) -> Self {
        self.rules = Some(rules);
        self.dataset = dataset.to_string();
        self
    }

    /// Map a declared tag onto a classifier language: the canonical tag,
    /// then its base language, each tried before and after applying a
    /// single-valued rules correction.
    pub fn resolve(&self, declared: &str) -> Option<String> {
        let mut candidates = vec![declared.to_string()];
        if let Some(rules) = self.rules {
            for issue in rules.check_code(declared, &self.dataset) {
                let corrective = matches!(
                    issue.category,
                    IssueCategory::Nonstandard
                        | IssueCategory::Deprecated
                        | IssueCategory::Iso3ForIso2
                        | IssueCategory::SignLanguageMislabel
                        | IssueCategory::MalformedPrivateUse
                );
                if corrective && issue.suggestion.len() == 1 {
                    candidates.push(issue.suggestion[0].clone());
                }
            }
        }
        for c in &candidates {
            let Ok(tag) = parse_tag(c) else { continue };
            let canonical = tag.to_string();
            if self.languages.contains(&canonical) {
                return Some(canonical);
            }
            if self.languages.contains(&tag.language) {
                return Some(tag.language);
            }
        }
        None
    }

    pub fn decide(&self, pair: &SentencePair) -> FilterDecision {
        let src_resolved = self.resolve(&pair.src_lang);
        let tgt_resolved = self.resolve(&pair.tgt_lang);
        let mut decision = FilterDecision {
            id: pair.id.clone(),
            src_lang: pair.src_lang.clone(),
            tgt_lang: pair.tgt_lang.clone(),
            src_resolved: src_resolved.clone(),
            tgt_resolved: tgt_resolved.clone(),
            src_prediction: None,
            tgt_prediction: None,
            kept: false,
            status: DecisionStatus::Evaluated,
        };
        let (Some(src), Some(tgt)) = (src_resolved, tgt_resolved) else {
            let missing: Vec<&str> = [
                (decision.src_resolved.is_none(), pair.src_lang.as_str()),
                (decision.tgt_resolved.is_none(), pair.tgt_lang.as_str()),
            ]
            .into_iter()
            .filter_map(|(m, l)| m.then_some(l))
            .collect();
            decision.status = DecisionStatus::Unevaluable {
                reason: format!("no classifier language for {}", missing.join(", ")),
            };
            return decision;
        };
        // an empty side cannot be identified and counts as a mismatch
        decision.src_prediction = self.classifier.predict(&pair.src_text).ok();
        decision.tgt_prediction = self.classifier.predict(&pair.tgt_text).ok();
        let matches =
            |p: &Option<Prediction>, want: &str| p.as_ref().and_then(Prediction::confident_lang) == Some(want);
        decision.kept = matches(&decision.src_prediction, &src) && matches(&decision.tgt_prediction, &tgt);
        decision
    }
}

/// Decide every pair of a stream.
pub fn filter_corpus<'f, C, I>(filter: &'f LangIdFilter<'f, C>, pairs: I) -> impl Iterator<Item = FilterDecision> + 'f
where
    C: LanguageClassifier,
    I: IntoIterator<Item = SentencePair>,
    I::IntoIter: 'f,
{
    pairs.into_iter().map(move |p| filter.decide(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Result;

    /// Classifies by a language marker word at the start of the text.
    struct Marker;

    impl LanguageClassifier for Marker {
        fn predict(&self, text: &str) -> Result<Prediction> {
            let lang = text.split_whitespace().next().unwrap_or("").to_string();
            Ok(if text.len() < 10 {
                Prediction::LowConfidence {
                    lang,
                    score: -1.0,
                    chars: text.len(),
                }
            } else {
                Prediction::Language { lang, score: -1.0 }
            })
        }

        fn languages(&self) -> Vec<String> {
            vec!["de".into(), "en".into(), "he".into()]
        }
    }

    fn pair(id: usize, src: &str, tgt: &str, tgt_text: &str) -> SentencePair {
        SentencePair {
            id: format!("p:{id}"),
            src_lang: "en".into(),
            tgt_lang: tgt.into(),
            src_text: format!("{src} some english words"),
            tgt_text: tgt_text.into(),
        }
    }

    #[test]
    fn kept_when_both_sides_match() {
        let f = LangIdFilter::new(&Marker);
        let d = f.decide(&pair(0, "en", "de_DE", "de ein deutscher Satz"));
        assert!(d.kept);
        assert_eq!(d.tgt_resolved.as_deref(), Some("de"));
    }

    #[test]
    fn dropped_when_target_is_english() {
        let f = LangIdFilter::new(&Marker);
        let d = f.decide(&pair(0, "en", "de", "en this is english"));
        assert!(!d.kept);
        assert!(d.is_evaluable());
    }

    #[test]
    fn low_confidence_counts_as_mismatch() {
        let f = LangIdFilter::new(&Marker);
        assert!(!f.decide(&pair(0, "en", "de", "de kurz")).kept);
    }

    #[test]
    fn unsupported_declared_language_is_unevaluable() {
        let f = LangIdFilter::new(&Marker);
        let d = f.decide(&pair(0, "en", "zu", "zu enye imisho"));
        assert!(!d.is_evaluable());
        assert!(d.src_prediction.is_none());
    }

    #[test]
    fn rules_correct_declared_tags() {
        let plain = LangIdFilter::new(&Marker);
        assert_eq!(plain.resolve("iw"), None);
        let f = LangIdFilter::new(&Marker).with_rules(RulesDatabase::builtin(), "mc4");
        assert_eq!(f.resolve("iw"), Some("he".into()));
        assert_eq!(f.resolve("de_DE"), Some("de".into()));
    }

    #[test]
    fn synthetic_plants() {
        // every 7th target is planted English, every 11th is too short
        let pairs: Vec<_> = (0..100)
            .map(|i| {
                let text = if i % 7 == 0 {
                    "en planted english line".to_string()
                } else if i % 11 == 0 {
                    "de kurz".to_string()
                } else {
                    format!("de Satz Nummer {i}")
                };
                pair(i, "en", "de", &text)
            })
            .collect();
        let f = LangIdFilter::new(&Marker);
        let kept: Vec<String> = filter_corpus(&f, pairs).filter(|d| d.kept).map(|d| d.id).collect();
        let expected: Vec<String> = (0..100)
            .filter(|i| i % 7 != 0 && i % 11 != 0)
            .map(|i| format!("p:{i}"))
            .collect();
        assert_eq!(kept, expected);
    }
}
