//! Benchmark support: deterministic synthetic inputs.

use corpaudit_core::SentenceItem;

const WORDS: [&str; 16] = [
    "river", "house", "market", "green", "quickly", "letter", "winter", "road", "number", "light", "table", "garden",
    "small", "open", "pencil", "window",
];

/// A pseudo-random sentence of 6 to 13 words, fixed by `i`.
pub fn sentence(i: u64) -> String {
    let mut x = i.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let len = 6 + (x % 8) as usize;
    let mut words = Vec::with_capacity(len);
    for _ in 0..len {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        words.push(WORDS[(x % WORDS.len() as u64) as usize]);
    }
    words.join(" ")
}

/// `n` sentence items where roughly every `repeat`-th one is a duplicate.
pub fn sentence_items(n: u64, repeat: u64) -> Vec<SentenceItem> {
    (0..n)
        .map(|i| SentenceItem {
            id: format!("bench:{i}"),
            lang: "en".into(),
            text: sentence(if repeat > 0 && i % repeat == 0 { i / repeat } else { i }),
            source_uri: None,
        })
        .collect()
}

/// Two series of length `n` with a monotone trend and ties.
pub fn series(n: usize) -> (Vec<f64>, Vec<f64>) {
    let xs = (0..n).map(|i| (i % 97) as f64 + i as f64 / 10.0).collect();
    let ys = (0..n).map(|i| ((i * 31) % 53) as f64 + i as f64 / 20.0).collect();
    (xs, ys)
}
