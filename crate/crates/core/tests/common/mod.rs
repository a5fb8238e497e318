#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use corpaudit_core::stats::{read_stats_file, CorpusStats};

pub const DATASETS: [&str; 5] = ["ccaligned", "paracrawl", "wikimatrix", "oscar", "mc4"];

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn audit(dataset: &str) -> Vec<CorpusStats> {
    read_stats_file(&fixture(&format!("audit/{dataset}.csv"))).unwrap()
}

/// `(dataset, block, key) -> value` from the published aggregate table.
pub fn published() -> BTreeMap<(String, String, String), f64> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(fixture("audit/published_aggregates.csv"))
        .unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                (rec[0].to_string(), rec[1].to_string(), rec[2].to_string()),
                rec[3].parse().unwrap(),
            )
        })
        .collect()
}

pub fn codes(dataset: &str) -> Vec<String> {
    let text = std::fs::read_to_string(fixture(&format!("codes/{dataset}.txt"))).unwrap();
    corpaudit_core::langtags::read_code_list(&text)
}

/// Plain float parse of a CSV column, independent of the library reader.
pub fn raw_column(dataset: &str, column: &str) -> Vec<(String, Option<f64>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(fixture(&format!("audit/{dataset}.csv")))
        .unwrap();
    let idx = r.headers().unwrap().iter().position(|h| h == column).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].to_string(), rec[idx].parse().ok())
        })
        .collect()
}
