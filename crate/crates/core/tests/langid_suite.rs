mod common;

use std::collections::{BTreeMap, HashMap};

use common::fixture;
use corpaudit_core::langid::{
    filter_corpus, filter_eval, DecisionStatus, FilterDecision, LangIdConfig, LangIdFilter, LangIdModel, MetricSet,
};
use corpaudit_core::{AnnotationLabel, AnnotationRecord, SentencePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LANGS: [&str; 6] = ["de", "el", "en", "es", "fr", "ru"];
const TRAIN_LINES: usize = 32;

fn lines(lang: &str) -> Vec<String> {
    std::fs::read_to_string(fixture(&format!("langid/{lang}.txt")))
        .unwrap()
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

type Corpora = Vec<(String, Vec<String>)>;

fn split() -> (Corpora, Vec<(String, String)>) {
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for lang in LANGS {
        let mut all = lines(lang);
        let rest = all.split_off(TRAIN_LINES);
        train.push((lang.to_string(), all));
        held_out.extend(rest.into_iter().map(|l| (lang.to_string(), l)));
    }
    (train, held_out)
}

fn model() -> LangIdModel {
    LangIdModel::train(&split().0, LangIdConfig::default()).unwrap()
}

#[test]
fn held_out_accuracy_on_long_sentences() {
    let model = model();
    let (_, held_out) = split();
    let long: Vec<_> = held_out.iter().filter(|(_, t)| t.chars().count() >= 50).collect();
    assert!(long.len() >= 60, "only {} long held-out lines", long.len());
    let correct = long
        .iter()
        .filter(|(lang, text)| model.predict(text).unwrap().confident_lang() == Some(lang.as_str()))
        .count();
    let acc = correct as f64 / long.len() as f64;
    assert!(acc >= 0.95, "held-out accuracy {acc:.3}");
}

#[test]
fn disjoint_scripts_are_separated() {
    let train: Vec<(String, Vec<String>)> = ["en", "el"]
        .iter()
        .map(|l| (l.to_string(), lines(l)[..TRAIN_LINES].to_vec()))
        .collect();
    let model = LangIdModel::train(&train, LangIdConfig::default()).unwrap();
    for lang in ["en", "el"] {
        for text in &lines(lang)[TRAIN_LINES..] {
            assert_eq!(model.predict(text).unwrap().lang(), lang, "{text}");
        }
    }
}

#[test]
fn training_is_deterministic_and_serialization_round_trips() {
    let a = model().to_json().unwrap();
    let b = model().to_json().unwrap();
    assert_eq!(a, b);
    let loaded = LangIdModel::from_reader(a.as_bytes()).unwrap();
    assert_eq!(loaded.to_json().unwrap(), a);
    let original = model();
    for (_, text) in split().1 {
        assert_eq!(loaded.scores(&text).unwrap(), original.scores(&text).unwrap());
    }
}

#[test]
fn prediction_ignores_trailing_whitespace() {
    let model = model();
    let text = "Die Kinder spielen nach der Schule im Park hinter dem Rathaus.";
    assert_eq!(
        model.predict(text).unwrap(),
        model.predict(&format!("{text}  \n\t")).unwrap()
    );
}

// -- filter_eval against a brute-force oracle ---------------------------------

const PAIR_KEYS: [&str; 4] = ["en-de", "en-fr", "en-ru", "en-zu"];

fn random_instance(rng: &mut ChaCha8Rng) -> (HashMap<String, AnnotationRecord>, Vec<FilterDecision>) {
    let n = rng.random_range(1..=1000);
    let mut annotations = HashMap::new();
    let mut decisions = Vec::new();
    for i in 0..n {
        let id = format!("p:{i}");
        let key = PAIR_KEYS[rng.random_range(0..PAIR_KEYS.len())];
        let (src, tgt) = key.split_once('-').unwrap();
        let label = AnnotationLabel::ALL[rng.random_range(0..AnnotationLabel::ALL.len())];
        let status = if rng.random_bool(0.05) {
            DecisionStatus::Unevaluable {
                reason: "unsupported".into(),
            }
        } else {
            DecisionStatus::Evaluated
        };
        let kept = status == DecisionStatus::Evaluated && rng.random_bool(0.5);
        annotations.insert(
            id.clone(),
            AnnotationRecord {
                item_id: id.clone(),
                rater_id: "r".into(),
                label,
                offensive: false,
                porn: false,
                note: None,
                timestamp: i as i64,
            },
        );
        decisions.push(FilterDecision {
            id,
            src_lang: src.into(),
            tgt_lang: tgt.into(),
            src_resolved: Some(src.into()),
            tgt_resolved: Some(tgt.into()),
            src_prediction: None,
            tgt_prediction: None,
            kept,
            status,
        });
    }
    (annotations, decisions)
}

/// `table[kept][label]` counts, labels indexed as in `AnnotationLabel::ALL`.
type Table = [[usize; 7]; 2];

fn idx(label: AnnotationLabel) -> usize {
    AnnotationLabel::ALL.iter().position(|l| *l == label).unwrap()
}

fn oracle_metrics(t: &Table) -> MetricSet {
    let pos = |l: AnnotationLabel| {
        matches!(
            l,
            AnnotationLabel::CC | AnnotationLabel::CS | AnnotationLabel::CB | AnnotationLabel::X
        )
    };
    let c = |l: AnnotationLabel| matches!(l, AnnotationLabel::CC | AnnotationLabel::CS | AnnotationLabel::CB);
    let sum = |kept: &[usize], pred: &dyn Fn(AnnotationLabel) -> bool| -> usize {
        let mut s = 0;
        for &k in kept {
            for l in AnnotationLabel::ALL {
                if l != AnnotationLabel::U && pred(l) {
                    s += t[k][idx(l)];
                }
            }
        }
        s
    };
    let any = |_: AnnotationLabel| true;
    let pairs = sum(&[0, 1], &any);
    let kept = sum(&[1], &any);
    let tp = sum(&[1], &pos);
    let all_pos = sum(&[0, 1], &pos);
    let kept_c = sum(&[1], &c);
    let all_c = sum(&[0, 1], &c);
    let div = |a: usize, b: usize| if b == 0 { None } else { Some(a as f64 / b as f64) };
    MetricSet {
        pairs,
        c_fraction: div(all_c, pairs),
        detection_precision: div(tp, kept),
        detection_recall: div(tp, all_pos),
        retention_precision: div(kept_c, kept),
        retention_recall: div(kept_c, all_c),
    }
}

fn oracle_median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    Some(if n % 2 == 0 {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    } else {
        v[n / 2]
    })
}

#[test]
fn filter_eval_matches_brute_force_confusion_tables() {
    let mut rng = ChaCha8Rng::seed_from_u64(20210101);
    for round in 0..100 {
        let (annotations, decisions) = random_instance(&mut rng);
        let got = filter_eval(&annotations, &decisions).unwrap();

        let mut overall: Table = [[0; 7]; 2];
        let mut per_lang: BTreeMap<String, Table> = BTreeMap::new();
        let (mut unevaluable, mut unresolved) = (0, 0);
        for d in &decisions {
            let label = annotations[&d.id].label;
            if d.status != DecisionStatus::Evaluated {
                unevaluable += 1;
            } else if label == AnnotationLabel::U {
                unresolved += 1;
            } else {
                overall[d.kept as usize][idx(label)] += 1;
                per_lang
                    .entry(format!("{}-{}", d.src_lang, d.tgt_lang))
                    .or_insert([[0; 7]; 2])[d.kept as usize][idx(label)] += 1;
            }
        }
        assert_eq!(got.unevaluable, unevaluable, "round {round}");
        assert_eq!(got.unresolved, unresolved, "round {round}");
        assert_eq!(got.overall, oracle_metrics(&overall), "round {round}");
        let want: BTreeMap<String, MetricSet> = per_lang.iter().map(|(k, t)| (k.clone(), oracle_metrics(t))).collect();
        assert_eq!(got.per_language, want, "round {round}");

        let noisy: Vec<String> = want
            .iter()
            .filter(|(_, m)| m.c_fraction.is_some_and(|c| c < 0.5))
            .map(|(k, _)| k.clone())
            .collect();
        assert_eq!(got.noisy_languages, noisy, "round {round}");
        let median_of =
            |f: fn(&MetricSet) -> Option<f64>| oracle_median(noisy.iter().filter_map(|k| f(&want[k])).collect());
        assert_eq!(
            got.noisy_median.retention_precision,
            median_of(|m| m.retention_precision),
            "round {round}"
        );
        assert_eq!(
            got.noisy_median.retention_recall,
            median_of(|m| m.retention_recall),
            "round {round}"
        );
        assert_eq!(
            got.noisy_median.detection_precision,
            median_of(|m| m.detection_precision),
            "round {round}"
        );

        for m in got.per_language.values().chain([&got.overall]) {
            for v in [
                m.detection_precision,
                m.detection_recall,
                m.retention_precision,
                m.retention_recall,
            ]
            .into_iter()
            .flatten()
            {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn nothing_dropped_means_full_retention_recall() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (annotations, mut decisions) = random_instance(&mut rng);
    for d in &mut decisions {
        d.status = DecisionStatus::Evaluated;
        d.kept = true;
    }
    let m = filter_eval(&annotations, &decisions).unwrap();
    assert_eq!(m.overall.retention_recall, Some(1.0));
}

#[test]
fn filtering_raises_retention_precision_on_planted_noise() {
    // en-de pairs: genuine German targets are C, English targets are WL
    let model = model();
    let de = lines("de");
    let en = lines("en");
    let fr = lines("fr");
    let mut pairs = Vec::new();
    let mut annotations = HashMap::new();
    for i in TRAIN_LINES..de.len() {
        for (j, (tgt, label)) in [
            (&de[i], AnnotationLabel::CC),
            (&en[i], AnnotationLabel::WL),
            (&fr[i], AnnotationLabel::WL),
        ]
        .into_iter()
        .enumerate()
        {
            let id = format!("p:{i}:{j}");
            pairs.push(SentencePair {
                id: id.clone(),
                src_lang: "en".into(),
                tgt_lang: "de".into(),
                src_text: en[i].clone(),
                tgt_text: tgt.clone(),
            });
            annotations.insert(
                id.clone(),
                AnnotationRecord {
                    item_id: id,
                    rater_id: "r".into(),
                    label,
                    offensive: false,
                    porn: false,
                    note: None,
                    timestamp: 0,
                },
            );
        }
    }
    let filter = LangIdFilter::new(&model);
    let decisions: Vec<_> = filter_corpus(&filter, pairs).collect();
    let m = filter_eval(&annotations, &decisions).unwrap();
    let before = m.overall.c_fraction.unwrap();
    let after = m.overall.retention_precision.unwrap();
    assert!(after > before, "precision {after} not above base rate {before}");
    assert_eq!(m.noisy_languages, vec!["en-de".to_string()]);
}
