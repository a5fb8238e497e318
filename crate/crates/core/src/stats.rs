//! Audit statistics.
//!
//! Percentages are exact rationals ([`Pct`]) until they are rendered, so
//! macro and micro averages over dozens of languages carry no float drift.
//! Correlation coefficients are inherently real-valued and use `f64`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::corpus_io::CorpusKind;
use crate::error::{Error, Result};
use crate::taxonomy::{coarsen, AnnotationLabel, AnnotationRecord, Granularity};

/// An exact percentage (0-100 for label shares).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pct(pub BigRational);

impl Pct {
    pub fn zero() -> Self {
        Pct(BigRational::zero())
    }

    pub fn from_integer(v: i64) -> Self {
        Pct(BigRational::from_integer(BigInt::from(v)))
    }

    /// `100 * count / total`.
    pub fn share(count: u64, total: u64) -> Self {
        Pct(BigRational::new(BigInt::from(count) * 100, BigInt::from(total)))
    }

    /// Exact value of a decimal literal such as `96.15` or `-0.5`.
    pub fn parse_decimal(s: &str) -> Result<Self> {
        let bad = || Error::Malformed(format!("not a decimal number: {s:?}"));
        let t = s.trim().trim_end_matches('%');
        let (neg, digits) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
        if (int.is_empty() && frac.is_empty()) || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut numer: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
        if neg {
            numer = -numer;
        }
        let denom = BigInt::from(10u32).pow(frac.len() as u32);
        Ok(Pct(BigRational::new(numer, denom)))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn abs_diff(&self, other: &Pct) -> Pct {
        Pct((&self.0 - &other.0).abs())
    }

    /// Rendered to two decimals, rounding halves away from zero.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Pct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hundredths = (&self.0 * BigInt::from(100)).round().to_integer();
        let sign = if hundredths.is_negative() { "-" } else { "" };
        let abs = hundredths.abs();
        let whole = &abs / 100;
        let frac: BigInt = &abs % 100;
        write!(f, "{sign}{whole}.{frac:0>2}")
    }
}

impl FromStr for Pct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pct::parse_decimal(s)
    }
}

impl std::ops::Add for &Pct {
    type Output = Pct;

    fn add(self, rhs: &Pct) -> Pct {
        Pct(&self.0 + &rhs.0)
    }
}

/// Columns of a per-language audit row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StatKey {
    C,
    CC,
    CS,
    CB,
    X,
    WL,
    NL,
    Offensive,
    Porn,
}

impl StatKey {
    pub const ALL: [StatKey; 9] = [
        StatKey::C,
        StatKey::CC,
        StatKey::CS,
        StatKey::CB,
        StatKey::X,
        StatKey::WL,
        StatKey::NL,
        StatKey::Offensive,
        StatKey::Porn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StatKey::C => "C",
            StatKey::CC => "CC",
            StatKey::CS => "CS",
            StatKey::CB => "CB",
            StatKey::X => "X",
            StatKey::WL => "WL",
            StatKey::NL => "NL",
            StatKey::Offensive => "offensive",
            StatKey::Porn => "porn",
        }
    }

    fn of_label(label: AnnotationLabel) -> Option<StatKey> {
        Some(match label {
            AnnotationLabel::CC => StatKey::CC,
            AnnotationLabel::CS => StatKey::CS,
            AnnotationLabel::CB => StatKey::CB,
            AnnotationLabel::X => StatKey::X,
            AnnotationLabel::WL => StatKey::WL,
            AnnotationLabel::NL => StatKey::NL,
            AnnotationLabel::U => return None,
        })
    }
}

impl fmt::Display for StatKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StatKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StatKey::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic {s:?}")))
    }
}

/// Audit result for one language (or language pair) of one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub dataset: String,
    pub lang: String,
    pub kind: CorpusKind,
    /// Resolved annotations behind the percentages; unknown for transcribed rows.
    pub n_annotated: Option<u64>,
    /// Records still labeled `U`, excluded from the denominator.
    pub n_unresolved: u64,
    /// Missing keys are unknown (e.g. `X` for monolingual data).
    pub pct: BTreeMap<StatKey, Pct>,
    /// Mean length in characters of the audited text.
    pub avg_length: Option<f64>,
    /// Total sentences available in the dataset for this language.
    pub sentences: Option<u64>,
}

impl CorpusStats {
    pub fn get(&self, key: StatKey) -> Option<&Pct> {
        self.pct.get(&key)
    }

    /// Share of the label `C` (zero when absent).
    pub fn c(&self) -> Pct {
        self.get(StatKey::C).cloned().unwrap_or_else(Pct::zero)
    }

    /// Fraction of records that were resolved, if annotation counts are known.
    pub fn coverage(&self) -> Option<f64> {
        let n = self.n_annotated?;
        let total = n + self.n_unresolved;
        (total > 0).then(|| n as f64 / total as f64)
    }

    /// `|C - (CC + CS + CB)|`, when all four are present.
    pub fn c_residual(&self) -> Option<Pct> {
        let parts = [StatKey::CC, StatKey::CS, StatKey::CB]
            .iter()
            .map(|k| self.get(*k).map(|p| p.0.clone()))
            .collect::<Option<Vec<_>>>()?;
        let sum: BigRational = parts.into_iter().sum();
        Some(self.get(StatKey::C)?.abs_diff(&Pct(sum)))
    }

    /// Set `avg_length` from the audited texts (characters, not bytes).
    pub fn with_avg_length<'a>(mut self, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let (n, chars) = texts
            .into_iter()
            .fold((0usize, 0usize), |(n, c), t| (n + 1, c + t.chars().count()));
        self.avg_length = (n > 0).then(|| chars as f64 / n as f64);
        self
    }
}

/// Label and flag percentages for one language from its annotations.
///
/// Expects at most one record per item. `U` records are left out of the
/// denominator and counted in `n_unresolved`.
pub fn per_language_stats(
    dataset: &str,
    lang: &str,
    kind: CorpusKind,
    records: &[AnnotationRecord],
) -> Result<CorpusStats> {
    if records.is_empty() {
        return Err(Error::Empty("annotation set"));
    }
    let mut seen = BTreeSet::new();
    let mut counts: HashMap<StatKey, u64> = HashMap::new();
    let mut unresolved = 0;
    for r in records {
        if !seen.insert(r.item_id.as_str()) {
            return Err(Error::Malformed(format!(
                "item {:?} has more than one record; resolve raters first",
                r.item_id
            )));
        }
        if !r.label.allowed_for(kind) {
            return Err(Error::Malformed(format!(
                "item {:?}: X illegal for monolingual",
                r.item_id
            )));
        }
        let Some(key) = StatKey::of_label(r.label) else {
            unresolved += 1;
            continue;
        };
        *counts.entry(key).or_default() += 1;
        if r.label.is_correct() {
            *counts.entry(StatKey::C).or_default() += 1;
        }
        if r.offensive {
            *counts.entry(StatKey::Offensive).or_default() += 1;
        }
        if r.porn {
            *counts.entry(StatKey::Porn).or_default() += 1;
        }
    }
    let n = records.len() as u64 - unresolved;
    if n == 0 {
        return Err(Error::Empty("resolved annotations (all records are U)"));
    }
    let pct = StatKey::ALL
        .into_iter()
        .filter(|k| *k != StatKey::X || kind == CorpusKind::Parallel)
        .map(|k| (k, Pct::share(counts.get(&k).copied().unwrap_or(0), n)))
        .collect();
    Ok(CorpusStats {
        dataset: dataset.to_string(),
        lang: lang.to_string(),
        kind,
        n_annotated: Some(n),
        n_unresolved: unresolved,
        pct,
        avg_length: None,
        sentences: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateKind {
    Macro,
    Micro,
}

impl fmt::Display for AggregateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateKind::Macro => "macro",
            AggregateKind::Micro => "micro",
        })
    }
}

/// Weighted mean of per-language percentages.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub kind: AggregateKind,
    /// Only keys present for every included language.
    pub values: BTreeMap<StatKey, Pct>,
    /// Language weights; they sum to one.
    pub weights: BTreeMap<String, BigRational>,
    /// Languages left out for lack of a size.
    pub excluded: Vec<String>,
}

impl Aggregate {
    pub fn get(&self, key: StatKey) -> Option<&Pct> {
        self.values.get(&key)
    }
}

fn weighted(kind: AggregateKind, stats: &[&CorpusStats], weights: Vec<BigRational>) -> Aggregate {
    let common: Vec<StatKey> = StatKey::ALL
        .into_iter()
        .filter(|k| stats.iter().all(|s| s.pct.contains_key(k)))
        .collect();
    let values = common
        .into_iter()
        .map(|k| {
            let v: BigRational = stats.iter().zip(&weights).map(|(s, w)| &s.pct[&k].0 * w).sum();
            (k, Pct(v))
        })
        .collect();
    let weights = stats.iter().zip(weights).map(|(s, w)| (s.lang.clone(), w)).collect();
    Aggregate {
        kind,
        values,
        weights,
        excluded: Vec::new(),
    }
}

/// Unweighted mean over languages.
pub fn macro_average(stats: &[CorpusStats]) -> Result<Aggregate> {
    if stats.is_empty() {
        return Err(Error::Empty("language statistics"));
    }
    let w = BigRational::new(BigInt::from(1), BigInt::from(stats.len()));
    let refs: Vec<&CorpusStats> = stats.iter().collect();
    Ok(weighted(AggregateKind::Macro, &refs, vec![w; stats.len()]))
}

/// Mean weighted by each language's share of the dataset's sentences.
///
/// Languages missing from `sizes` are excluded, logged and listed in
/// [`Aggregate::excluded`].
pub fn micro_average(stats: &[CorpusStats], sizes: &BTreeMap<String, u64>) -> Result<Aggregate> {
    if stats.is_empty() {
        return Err(Error::Empty("language statistics"));
    }
    let (known, unknown): (Vec<&CorpusStats>, Vec<&CorpusStats>) =
        stats.iter().partition(|s| sizes.contains_key(&s.lang));
    let total: u64 = known.iter().map(|s| sizes[&s.lang]).sum();
    if known.is_empty() || total == 0 {
        return Err(Error::Empty("language sizes"));
    }
    let excluded: Vec<String> = unknown.iter().map(|s| s.lang.clone()).collect();
    if !excluded.is_empty() {
        log::warn!(
            "micro average excludes {} language(s) without a size: {}",
            excluded.len(),
            excluded.join(", ")
        );
    }
    let weights = known
        .iter()
        .map(|s| BigRational::new(BigInt::from(sizes[&s.lang]), BigInt::from(total)))
        .collect();
    let mut agg = weighted(AggregateKind::Micro, &known, weights);
    agg.excluded = excluded;
    Ok(agg)
}

/// Sizes carried by the stats rows themselves.
pub fn sizes_from_stats(stats: &[CorpusStats]) -> BTreeMap<String, u64> {
    stats
        .iter()
        .filter_map(|s| Some((s.lang.clone(), s.sentences?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ThresholdCounts {
    pub zero_c: usize,
    pub under50_c: usize,
    pub over50_nl: usize,
    pub over50_wl: usize,
}

impl ThresholdCounts {
    pub fn as_tuple(&self) -> (usize, usize, usize, usize) {
        (self.zero_c, self.under50_c, self.over50_nl, self.over50_wl)
    }
}

/// Languages with C = 0, C < 50, NL > 50 and WL > 50 (all strict).
pub fn threshold_summary(stats: &[CorpusStats]) -> ThresholdCounts {
    let fifty = Pct::from_integer(50);
    let zero = Pct::zero();
    let mut t = ThresholdCounts::default();
    for s in stats {
        let c = s.c();
        t.zero_c += usize::from(c == zero);
        t.under50_c += usize::from(c < fifty);
        t.over50_nl += usize::from(s.get(StatKey::NL).is_some_and(|v| *v > fifty));
        t.over50_wl += usize::from(s.get(StatKey::WL).is_some_and(|v| *v > fifty));
    }
    t
}

/// Thresholds 0, 1, ..., 100.
pub fn default_cdf_grid() -> Vec<f64> {
    (0..=100).map(f64::from).collect()
}

/// For each threshold, the fraction of languages whose C% is strictly below it.
pub fn quality_cdf(stats: &[CorpusStats], thresholds: &[f64]) -> Result<Vec<(f64, f64)>> {
    if stats.is_empty() {
        return Err(Error::Empty("language statistics"));
    }
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("thresholds must be finite".into()));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument("threshold grid must be sorted ascending".into()));
    }
    let mut cs: Vec<BigRational> = stats.iter().map(|s| s.c().0).collect();
    cs.sort();
    let n = cs.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let t_exact = BigRational::from_float(t).expect("finite threshold");
            let below = cs.partition_point(|c| *c < t_exact);
            (t, below as f64 / n)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub rho: f64,
    /// Two-sided, from a t-distribution with `n - 2` degrees of freedom.
    pub p_value: f64,
    pub n: usize,
}

/// Ranks starting at 1; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::ConstantSeries("first"));
    }
    if syy == 0.0 {
        return Err(Error::ConstantSeries("second"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a t-approximation p-value.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs at least 3 pairs, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in correlation input".into()));
    }
    let rho = pearson(&average_ranks(xs), &average_ranks(ys))?;
    let n = xs.len();
    let df = (n - 2) as f64;
    let p_value = if 1.0 - rho.abs() < 1e-12 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
    };
    Ok(CorrelationResult { rho, p_value, n })
}

/// Spearman of C% against dataset size over languages whose size is known.
pub fn c_vs_size(stats: &[CorpusStats]) -> Result<CorrelationResult> {
    let (c, size): (Vec<f64>, Vec<f64>) = stats
        .iter()
        .filter_map(|s| Some((s.c().to_f64(), s.sentences? as f64)))
        .unzip();
    spearman(&c, &size)
}

/// Fraction of items whose coarsened labels agree.
pub fn agreement_labels(reference: &[AnnotationLabel], other: &[AnnotationLabel], n: Granularity) -> Result<f64> {
    if reference.len() != other.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: other.len(),
        });
    }
    if reference.is_empty() {
        return Err(Error::Empty("label sequences"));
    }
    let mut matches = 0usize;
    for (a, b) in reference.iter().zip(other) {
        matches += usize::from(coarsen(*a, n)? == coarsen(*b, n)?);
    }
    Ok(matches as f64 / reference.len() as f64)
}

/// Acc-n between two raters' records. Records are paired by item id; both
/// sides must cover exactly the same items.
pub fn agreement_accuracy(reference: &[AnnotationRecord], other: &[AnnotationRecord], n: Granularity) -> Result<f64> {
    if reference.len() != other.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: other.len(),
        });
    }
    let by_id: HashMap<&str, &AnnotationRecord> = other.iter().map(|r| (r.item_id.as_str(), r)).collect();
    if by_id.len() != other.len() {
        return Err(Error::Malformed("duplicate item id in second sequence".into()));
    }
    let mut a = Vec::with_capacity(reference.len());
    let mut b = Vec::with_capacity(reference.len());
    for (index, r) in reference.iter().enumerate() {
        let Some(o) = by_id.get(r.item_id.as_str()) else {
            return Err(Error::IdMismatch {
                index,
                left: r.item_id.clone(),
                right: other[index].item_id.clone(),
            });
        };
        a.push(r.label);
        b.push(o.label);
    }
    agreement_labels(&a, &b, n)
}

/// Externally produced translation quality for one language.
#[derive(Debug, Clone, PartialEq, serde::Deserialize, serde::Serialize)]
pub struct DownstreamScore {
    pub lang: String,
    pub spbleu: f64,
}

pub fn read_downstream<R: Read>(r: R) -> Result<Vec<DownstreamScore>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let row: DownstreamScore = row?;
        if row.spbleu.is_nan() || row.spbleu < 0.0 {
            return Err(Error::Malformed(format!("negative spBLEU for {}", row.lang)));
        }
        out.push(row);
    }
    Ok(out)
}

/// Spearman of downstream scores against C%, size and C% x size.
/// Size-based rows use only languages with a known size.
pub fn downstream_correlations(
    stats: &[CorpusStats],
    scores: &[DownstreamScore],
) -> Result<Vec<(&'static str, CorrelationResult)>> {
    let by_lang: HashMap<&str, &CorpusStats> = stats.iter().map(|s| (s.lang.as_str(), s)).collect();
    let joined: Vec<(&CorpusStats, f64)> = scores
        .iter()
        .filter_map(|d| Some((*by_lang.get(d.lang.as_str())?, d.spbleu)))
        .collect();
    let (c, bleu): (Vec<f64>, Vec<f64>) = joined.iter().map(|(s, b)| (s.c().to_f64(), *b)).unzip();
    let mut out = vec![("c_pct", spearman(&c, &bleu)?)];

    let sized: Vec<(f64, f64, f64)> = joined
        .iter()
        .filter_map(|(s, b)| Some((s.c().to_f64(), s.sentences? as f64, *b)))
        .collect();
    if sized.len() >= 3 {
        let size: Vec<f64> = sized.iter().map(|t| t.1).collect();
        let product: Vec<f64> = sized.iter().map(|t| t.0 * t.1).collect();
        let bleu: Vec<f64> = sized.iter().map(|t| t.2).collect();
        out.push(("size", spearman(&size, &bleu)?));
        out.push(("c_pct_x_size", spearman(&product, &bleu)?));
    }
    Ok(out)
}

const TABLE_KEYS: [StatKey; 8] = [
    StatKey::C,
    StatKey::CC,
    StatKey::CS,
    StatKey::CB,
    StatKey::X,
    StatKey::WL,
    StatKey::NL,
    StatKey::Porn,
];

/// Read a per-language table (`lang,C,CC,CS,CB,X,WL,NL,porn,sentences,avg_length`,
/// optionally followed by `offensive,n_annotated`). Lines starting with `#`
/// are comments; a `kind: parallel|monolingual` comment fixes the kind,
/// otherwise any non-empty `X` cell makes the table parallel.
pub fn read_stats_csv<R: Read>(mut r: R, dataset: &str) -> Result<Vec<CorpusStats>> {
    let mut text = String::new();
    r.read_to_string(&mut text)
        .map_err(|e| Error::io(format!("<{dataset} stats>"), e))?;
    let declared = text.lines().filter_map(|l| l.strip_prefix('#')).find_map(|l| {
        let lower = l.to_ascii_lowercase();
        let rest = &lower[lower.find("kind:")? + 5..];
        rest.split(|c: char| !c.is_alphabetic())
            .find(|w| !w.is_empty())
            .and_then(|w| w.parse::<CorpusKind>().ok())
    });

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let lang_col = col("lang").ok_or_else(|| Error::Malformed("stats table lacks lang".into()))?;
    let key_cols: Vec<(StatKey, usize)> = StatKey::ALL
        .into_iter()
        .filter_map(|k| Some((k, col(k.as_str())?)))
        .collect();
    let (sent_col, len_col, ann_col) = (col("sentences"), col("avg_length"), col("n_annotated"));

    let mut rows = Vec::new();
    let mut any_x = false;
    for record in reader.records() {
        let record = record?;
        let cell = |i: Option<usize>| i.and_then(|i| record.get(i)).unwrap_or("").trim();
        let mut pct = BTreeMap::new();
        for (k, i) in &key_cols {
            let v = cell(Some(*i));
            if !v.is_empty() && v != "-" && !v.eq_ignore_ascii_case("n/a") {
                pct.insert(*k, Pct::parse_decimal(v)?);
            }
        }
        any_x |= pct.contains_key(&StatKey::X);
        let avg = cell(len_col);
        rows.push(CorpusStats {
            dataset: dataset.to_string(),
            lang: cell(Some(lang_col)).to_string(),
            kind: CorpusKind::Monolingual,
            n_annotated: crate::sampling::parse_count(cell(ann_col))?,
            n_unresolved: 0,
            pct,
            avg_length: if avg.is_empty() || avg.eq_ignore_ascii_case("n/a") {
                None
            } else {
                Some(
                    avg.parse()
                        .map_err(|_| Error::Malformed(format!("bad avg_length {avg:?}")))?,
                )
            },
            sentences: crate::sampling::parse_count(cell(sent_col))?,
        });
    }
    let kind = declared.unwrap_or(if any_x {
        CorpusKind::Parallel
    } else {
        CorpusKind::Monolingual
    });
    for row in &mut rows {
        row.kind = kind;
    }
    Ok(rows)
}

/// [`read_stats_csv`] on a file; the dataset name is the file stem.
pub fn read_stats_file(path: &Path) -> Result<Vec<CorpusStats>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let dataset = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_stats_csv(file, &dataset)
}

pub fn write_stats_csv<W: Write>(w: W, stats: &[CorpusStats]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "lang",
        "C",
        "CC",
        "CS",
        "CB",
        "X",
        "WL",
        "NL",
        "porn",
        "sentences",
        "avg_length",
        "offensive",
        "n_annotated",
    ])?;
    for s in stats {
        let mut row = vec![s.lang.clone()];
        for k in TABLE_KEYS {
            row.push(s.get(k).map(Pct::render).unwrap_or_default());
        }
        row.push(s.sentences.map(|n| n.to_string()).unwrap_or_else(|| "N/A".into()));
        row.push(s.avg_length.map(|l| format!("{l:.2}")).unwrap_or_default());
        row.push(s.get(StatKey::Offensive).map(Pct::render).unwrap_or_default());
        row.push(s.n_annotated.map(|n| n.to_string()).unwrap_or_default());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io("<stats csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use AnnotationLabel as L;

    fn rec(i: usize, label: AnnotationLabel) -> AnnotationRecord {
        AnnotationRecord {
            item_id: format!("c:{i}"),
            rater_id: "r".into(),
            label,
            offensive: false,
            porn: false,
            note: None,
            timestamp: 0,
        }
    }

    fn row(lang: &str, c: i64) -> CorpusStats {
        let mut pct = BTreeMap::new();
        pct.insert(StatKey::C, Pct::from_integer(c));
        pct.insert(StatKey::CC, Pct::from_integer(c));
        pct.insert(StatKey::CS, Pct::zero());
        pct.insert(StatKey::CB, Pct::zero());
        pct.insert(StatKey::WL, Pct::zero());
        pct.insert(StatKey::NL, Pct::from_integer(100 - c));
        CorpusStats {
            dataset: "t".into(),
            lang: lang.into(),
            kind: CorpusKind::Monolingual,
            n_annotated: None,
            n_unresolved: 0,
            pct,
            avg_length: None,
            sentences: None,
        }
    }

    #[test]
    fn pct_rendering() {
        assert_eq!(Pct::share(25, 26).to_string(), "96.15");
        assert_eq!(Pct::share(1, 26).to_string(), "3.85");
        assert_eq!(Pct::share(1, 3).to_string(), "33.33");
        assert_eq!(Pct::share(2, 3).to_string(), "66.67");
        assert_eq!(Pct::share(1, 1).to_string(), "100.00");
        assert_eq!(Pct::parse_decimal("0.125").unwrap().to_string(), "0.13");
        assert_eq!(Pct::parse_decimal("-0.125").unwrap().to_string(), "-0.13");
        assert_eq!(Pct::parse_decimal("7").unwrap(), Pct::from_integer(7));
        assert!(Pct::parse_decimal("1e3").is_err());
        assert!(Pct::parse_decimal(".").is_err());
    }

    #[test]
    fn all_cc() {
        let recs: Vec<_> = (0..100).map(|i| rec(i, L::CC)).collect();
        let s = per_language_stats("d", "en", CorpusKind::Parallel, &recs).unwrap();
        assert_eq!(s.get(StatKey::C).unwrap().to_string(), "100.00");
        assert_eq!(s.get(StatKey::CC).unwrap().to_string(), "100.00");
        for k in [StatKey::CS, StatKey::CB, StatKey::X, StatKey::WL, StatKey::NL] {
            assert_eq!(*s.get(k).unwrap(), Pct::zero());
        }
    }

    #[test]
    fn half_cc_half_x() {
        let recs: Vec<_> = (0..100).map(|i| rec(i, if i < 50 { L::CC } else { L::X })).collect();
        let s = per_language_stats("d", "en-de", CorpusKind::Parallel, &recs).unwrap();
        assert_eq!(*s.get(StatKey::C).unwrap(), Pct::from_integer(50));
        assert_eq!(*s.get(StatKey::X).unwrap(), Pct::from_integer(50));
    }

    #[test]
    fn tyv_shape_sample() {
        // 26 lines, one of them not language
        let recs: Vec<_> = (0..26).map(|i| rec(i, if i == 0 { L::NL } else { L::CC })).collect();
        let s = per_language_stats("oscar", "tyv", CorpusKind::Monolingual, &recs).unwrap();
        assert_eq!(s.c().to_string(), "96.15");
        assert_eq!(s.get(StatKey::NL).unwrap().to_string(), "3.85");
        assert!(s.get(StatKey::X).is_none());
    }

    #[test]
    fn unresolved_is_excluded_from_denominator() {
        let recs = vec![rec(0, L::CC), rec(1, L::U), rec(2, L::NL), rec(3, L::U)];
        let s = per_language_stats("d", "en", CorpusKind::Monolingual, &recs).unwrap();
        assert_eq!(s.n_annotated, Some(2));
        assert_eq!(s.n_unresolved, 2);
        assert_eq!(*s.get(StatKey::C).unwrap(), Pct::from_integer(50));
        assert_eq!(s.coverage(), Some(0.5));
    }

    #[test]
    fn flags_share_the_denominator() {
        let mut recs: Vec<_> = (0..4).map(|i| rec(i, L::CC)).collect();
        recs[0].porn = true;
        recs[0].offensive = true;
        recs[1].porn = true;
        let s = per_language_stats("d", "en", CorpusKind::Monolingual, &recs).unwrap();
        assert_eq!(*s.get(StatKey::Porn).unwrap(), Pct::from_integer(50));
        assert_eq!(*s.get(StatKey::Offensive).unwrap(), Pct::from_integer(25));
    }

    #[test]
    fn per_language_errors() {
        assert!(per_language_stats("d", "en", CorpusKind::Parallel, &[]).is_err());
        assert!(per_language_stats("d", "en", CorpusKind::Monolingual, &[rec(0, L::X)]).is_err());
        assert!(per_language_stats("d", "en", CorpusKind::Parallel, &[rec(0, L::U)]).is_err());
        assert!(per_language_stats("d", "en", CorpusKind::Parallel, &[rec(0, L::CC), rec(0, L::NL)]).is_err());
    }

    #[test]
    fn macro_examples() {
        let one = row("a", 37);
        let m = macro_average(std::slice::from_ref(&one)).unwrap();
        assert_eq!(m.values, one.pct);

        let m = macro_average(&[row("a", 40), row("b", 60)]).unwrap();
        assert_eq!(*m.get(StatKey::C).unwrap(), Pct::from_integer(50));
        assert!(macro_average(&[]).is_err());
    }

    #[test]
    fn macro_drops_keys_missing_anywhere() {
        let mut a = row("a", 10);
        a.pct.insert(StatKey::X, Pct::from_integer(5));
        let m = macro_average(&[a, row("b", 20)]).unwrap();
        assert!(m.get(StatKey::X).is_none());
        assert!(m.get(StatKey::C).is_some());
    }

    #[test]
    fn micro_examples() {
        let stats = [row("a", 100), row("b", 0)];
        let sizes: BTreeMap<_, _> = [("a".to_string(), 9_000_000), ("b".to_string(), 1_000_000)].into();
        let m = micro_average(&stats, &sizes).unwrap();
        assert_eq!(*m.get(StatKey::C).unwrap(), Pct::from_integer(90));

        let sizes: BTreeMap<_, _> = [("a".to_string(), 1)].into();
        let m = micro_average(&stats, &sizes).unwrap();
        assert_eq!(m.excluded, ["b"]);
        assert_eq!(*m.get(StatKey::C).unwrap(), Pct::from_integer(100));

        assert!(micro_average(&stats, &BTreeMap::new()).is_err());
    }

    #[test]
    fn threshold_boundaries() {
        let t = threshold_summary(&[row("a", 50), row("b", 0), row("c", 49)]);
        // b and c have NL > 50; a has exactly 50
        assert_eq!(t.as_tuple(), (1, 2, 2, 0));
        assert_eq!(threshold_summary(&[row("a", 100)]).as_tuple(), (0, 0, 0, 0));
    }

    #[test]
    fn cdf_examples() {
        let stats = [row("a", 10), row("b", 60)];
        let cdf = quality_cdf(&stats, &[0.0, 50.0, 101.0]).unwrap();
        assert_eq!(cdf, [(0.0, 0.0), (50.0, 0.5), (101.0, 1.0)]);
        assert!(quality_cdf(&stats, &[5.0, 1.0]).is_err());
        assert!(quality_cdf(&[], &[1.0]).is_err());
        // strict comparison at the exact value
        assert_eq!(quality_cdf(&stats, &[10.0]).unwrap()[0].1, 0.0);
    }

    #[test]
    fn spearman_examples() {
        let r = spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.p_value, 0.0);
        let r = spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.rho, -1.0);
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantSeries(_))
        ));
    }

    #[test]
    fn spearman_with_ties_matches_hand_computation() {
        // ranks x: [1.5, 1.5, 3, 4]; y: [1, 2, 3, 4]
        let r = spearman(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let rx = [1.5, 1.5, 3.0, 4.0];
        let ry = [1.0, 2.0, 3.0, 4.0];
        let mean = 2.5;
        let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
        let sxx: f64 = rx.iter().map(|a| (a - mean) * (a - mean)).sum();
        let syy: f64 = ry.iter().map(|b| (b - mean) * (b - mean)).sum();
        let expected = sxy / (sxx * syy).sqrt();
        assert!((r.rho - expected).abs() < 1e-12);
        assert!((r.rho - 0.9486832980505138).abs() < 1e-12);
    }

    #[test]
    fn spearman_p_value_matches_reference() {
        // reference from the t-approximation with n-2 df
        // rho = 0.8 on n = 5 -> t = 0.8 * sqrt(3 / 0.36) = 2.3094, p = 0.1041
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r.rho - 0.8).abs() < 1e-12);
        assert!((r.p_value - 0.10408803866182788).abs() < 1e-6, "{}", r.p_value);
    }

    #[test]
    fn agreement_examples() {
        let refs = [L::CC, L::X];
        let other = [L::CS, L::X];
        assert_eq!(agreement_labels(&refs, &other, Granularity::Six).unwrap(), 0.5);
        assert_eq!(agreement_labels(&refs, &other, Granularity::Four).unwrap(), 1.0);

        let a: Vec<_> = (0..100).map(|i| rec(i, L::CC)).collect();
        let mut b = a.clone();
        b[3].label = L::CB;
        b[70].label = L::CS;
        b.reverse();
        assert_eq!(agreement_accuracy(&a, &b, Granularity::Six).unwrap(), 0.98);
        assert_eq!(agreement_accuracy(&a, &b, Granularity::Two).unwrap(), 1.0);
    }

    #[test]
    fn agreement_errors() {
        assert!(agreement_labels(&[L::CC], &[], Granularity::Two).is_err());
        assert!(agreement_labels(&[], &[], Granularity::Two).is_err());
        assert!(agreement_labels(&[L::U], &[L::CC], Granularity::Two).is_err());
        let a = vec![rec(0, L::CC)];
        let b = vec![rec(1, L::CC)];
        assert!(matches!(
            agreement_accuracy(&a, &b, Granularity::Six),
            Err(Error::IdMismatch { .. })
        ));
    }

    #[test]
    fn stats_csv_round_trip() {
        let text = "# kind: monolingual\nlang,C,CC,CS,CB,X,WL,NL,porn,sentences,avg_length\n\
                    tyv,96.15,96.15,0.00,0.00,,0.00,3.85,0.00,N/A,131.00\n";
        let rows = read_stats_csv(text.as_bytes(), "oscar").unwrap();
        assert_eq!(rows[0].kind, CorpusKind::Monolingual);
        assert_eq!(rows[0].sentences, None);
        assert!(rows[0].get(StatKey::X).is_none());
        let mut buf = Vec::new();
        write_stats_csv(&mut buf, &rows).unwrap();
        let again = read_stats_csv(&buf[..], "oscar").unwrap();
        assert_eq!(again, rows);
    }

    #[test]
    fn kind_from_x_column() {
        let text = "lang,C,CC,CS,CB,X,WL,NL,porn,sentences,avg_length\n\
                    en-de,50,50,0,0,50,0,0,0,10,1\n";
        assert_eq!(
            read_stats_csv(text.as_bytes(), "d").unwrap()[0].kind,
            CorpusKind::Parallel
        );
    }

    #[test]
    fn downstream_synthetic() {
        let mut stats: Vec<_> = (0..6).map(|i| row(&format!("l{i}"), i * 10)).collect();
        for (i, s) in stats.iter_mut().enumerate() {
            s.sentences = Some(1000 * (i as u64 + 1));
        }
        let scores: Vec<_> = (0..6)
            .map(|i| DownstreamScore {
                lang: format!("l{i}"),
                spbleu: i as f64 * 2.0,
            })
            .collect();
        let out = downstream_correlations(&stats, &scores).unwrap();
        let names: Vec<_> = out.iter().map(|(n, _)| *n).collect();
        assert_eq!(names, ["c_pct", "size", "c_pct_x_size"]);
        assert!(out.iter().all(|(_, r)| (r.rho - 1.0).abs() < 1e-12));
    }

    fn label_seq(len: usize) -> impl Strategy<Value = Vec<AnnotationLabel>> {
        prop::collection::vec(prop::sample::select(AnnotationLabel::RESOLVED.to_vec()), len)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn acc_monotone_in_granularity((a, b) in (1usize..60).prop_flat_map(|n| (label_seq(n), label_seq(n)))) {
            let acc2 = agreement_labels(&a, &b, Granularity::Two).unwrap();
            let acc4 = agreement_labels(&a, &b, Granularity::Four).unwrap();
            let acc6 = agreement_labels(&a, &b, Granularity::Six).unwrap();
            prop_assert!(acc2 >= acc4 && acc4 >= acc6);
            for n in Granularity::ALL {
                prop_assert_eq!(agreement_labels(&a, &a, n).unwrap(), 1.0);
            }
        }
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariance(
            xs in prop::collection::vec(-1000i32..1000, 3..40),
            seed in prop::collection::vec(-1000i32..1000, 40),
        ) {
            let ys: Vec<f64> = seed[..xs.len()].iter().map(|&v| v as f64).collect();
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            if let Ok(base) = spearman(&xs, &ys) {
                let tx: Vec<f64> = xs.iter().map(|x| x.powi(3) + 7.0).collect();
                let ty: Vec<f64> = ys.iter().map(|y| (y / 100.0).exp()).collect();
                let t = spearman(&tx, &ty).unwrap();
                prop_assert_eq!(base.rho, t.rho);
                prop_assert!((-1.0..=1.0).contains(&base.rho));
                prop_assert!((0.0..=1.0).contains(&base.p_value));
            }
        }

        #[test]
        fn macro_of_identical_rows_is_that_row(c in 0i64..=100, k in 1usize..20) {
            let rows: Vec<_> = (0..k).map(|i| { let mut r = row("x", c); r.lang = format!("l{i}"); r }).collect();
            let m = macro_average(&rows).unwrap();
            prop_assert_eq!(m.values, rows[0].pct.clone());
        }

        #[test]
        fn uniform_micro_equals_macro(cs in prop::collection::vec(0i64..=100, 1..30), size in 1u64..1_000_000) {
            let rows: Vec<_> = cs.iter().enumerate().map(|(i, c)| row(&format!("l{i}"), *c)).collect();
            let sizes = rows.iter().map(|r| (r.lang.clone(), size)).collect();
            let micro = micro_average(&rows, &sizes).unwrap();
            let mac = macro_average(&rows).unwrap();
            prop_assert_eq!(micro.values, mac.values);
            let total: BigRational = micro.weights.values().cloned().sum();
            prop_assert_eq!(total, BigRational::from_integer(1.into()));
        }

        #[test]
        fn cdf_is_monotone_and_bounded(cs in prop::collection::vec(0i64..=100, 1..30)) {
            let rows: Vec<_> = cs.iter().enumerate().map(|(i, c)| row(&format!("l{i}"), *c)).collect();
            let grid: Vec<f64> = (0..=102).map(|t| t as f64).collect();
            let cdf = quality_cdf(&rows, &grid).unwrap();
            prop_assert!(cdf.windows(2).all(|w| w[0].1 <= w[1].1));
            prop_assert!(cdf.iter().all(|(_, f)| (0.0..=1.0).contains(f)));
            prop_assert_eq!(cdf.last().unwrap().1, 1.0);
            prop_assert_eq!(cdf[0].1, 0.0);
        }

        #[test]
        fn computed_shares_form_an_exact_simplex(
            labels in prop::collection::vec(prop::sample::select(AnnotationLabel::ALL.to_vec()), 1..150),
        ) {
            let recs: Vec<_> = labels.iter().enumerate().map(|(i, l)| rec(i, *l)).collect();
            let Ok(s) = per_language_stats("d", "x", CorpusKind::Parallel, &recs) else {
                prop_assert!(labels.iter().all(|l| *l == L::U));
                return Ok(());
            };
            let simplex: BigRational = [StatKey::CC, StatKey::CS, StatKey::CB, StatKey::X, StatKey::WL, StatKey::NL]
                .iter()
                .map(|k| s.pct[k].0.clone())
                .sum();
            prop_assert_eq!(simplex, BigRational::from_integer(100.into()));
            prop_assert_eq!(s.c_residual().unwrap(), Pct::zero());
        }

        #[test]
        fn pct_render_parse_round_trip(num in 0u64..100_000, den in 1u64..10_000) {
            let p = Pct::share(num, den);
            let back = Pct::parse_decimal(&p.render()).unwrap();
            prop_assert!(p.abs_diff(&back) <= Pct::parse_decimal("0.005").unwrap());
        }
    }
}
