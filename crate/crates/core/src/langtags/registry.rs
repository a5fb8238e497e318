//! Snapshot of the ISO code lists used to validate subtags.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

const ISO639: &str = include_str!("../../data/iso639.tsv");
const ISO15924: &str = include_str!("../../data/iso15924.tsv");
const ISO3166: &str = include_str!("../../data/iso3166.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Individual,
    Macrolanguage,
    Collective,
    Special,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageEntry {
    pub alpha3: String,
    pub alpha2: Option<String>,
    pub bibliographic: Option<String>,
    pub scope: Scope,
    pub name: String,
}

/// ISO 639 languages, ISO 15924 scripts and ISO 3166 regions.
#[derive(Debug, Clone)]
pub struct IsoRegistry {
    languages: BTreeMap<String, LanguageEntry>,
    /// alpha2 and bibliographic codes to alpha3.
    aliases: BTreeMap<String, String>,
    scripts: BTreeSet<String>,
    regions: BTreeSet<String>,
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

fn opt(s: Option<&&str>) -> Option<String> {
    s.map(|s| s.trim()).filter(|s| !s.is_empty()).map(str::to_string)
}

impl IsoRegistry {
    /// The snapshot compiled into the crate.
    pub fn builtin() -> &'static IsoRegistry {
        static REGISTRY: std::sync::OnceLock<IsoRegistry> = std::sync::OnceLock::new();
        REGISTRY.get_or_init(|| IsoRegistry::parse(ISO639, ISO15924, ISO3166).expect("bundled ISO snapshot is valid"))
    }

    pub fn parse(iso639: &str, iso15924: &str, iso3166: &str) -> Result<Self> {
        let mut languages = BTreeMap::new();
        let mut aliases = BTreeMap::new();
        for (line, cols) in data_lines(iso639) {
            let alpha3 = cols[0].trim().to_string();
            let scope = match cols.get(3).map(|s| s.trim()) {
                Some("I") => Scope::Individual,
                Some("M") => Scope::Macrolanguage,
                Some("C") => Scope::Collective,
                Some("S") => Scope::Special,
                other => {
                    return Err(Error::Rules {
                        line,
                        message: format!("iso639: bad scope {other:?}"),
                    })
                }
            };
            let entry = LanguageEntry {
                alpha2: opt(cols.get(1)),
                bibliographic: opt(cols.get(2)),
                scope,
                name: opt(cols.get(4)).unwrap_or_default(),
                alpha3: alpha3.clone(),
            };
            for alias in entry.alpha2.iter().chain(&entry.bibliographic) {
                aliases.insert(alias.clone(), alpha3.clone());
            }
            languages.insert(alpha3, entry);
        }
        let scripts = data_lines(iso15924).map(|(_, c)| c[0].trim().to_string()).collect();
        let mut regions = BTreeSet::new();
        for (_, cols) in data_lines(iso3166) {
            regions.insert(cols[0].trim().to_string());
            if let Some(numeric) = opt(cols.get(1)) {
                regions.insert(numeric);
            }
        }
        Ok(IsoRegistry {
            languages,
            aliases,
            scripts,
            regions,
        })
    }

    /// Entry for a 2- or 3-letter language subtag (any case).
    pub fn language(&self, code: &str) -> Option<&LanguageEntry> {
        let code = code.to_ascii_lowercase();
        let alpha3 = self.aliases.get(&code).unwrap_or(&code);
        if code.len() == 2 && !self.aliases.contains_key(&code) {
            return None;
        }
        self.languages.get(alpha3)
    }

    /// Also accepts the `qaa`-`qtz` private-use block.
    pub fn is_language(&self, code: &str) -> bool {
        let lower = code.to_ascii_lowercase();
        if lower.len() == 3 && ("qaa"..="qtz").contains(&lower.as_str()) {
            return true;
        }
        self.language(&lower).is_some()
    }

    /// Title-case 4-letter script code.
    pub fn is_script(&self, code: &str) -> bool {
        self.scripts.contains(code)
    }

    /// Uppercase alpha-2 or 3-digit region. UN M.49 area codes outside
    /// ISO 3166 (e.g. `419`) are accepted.
    pub fn is_region(&self, code: &str) -> bool {
        self.regions.contains(code) || (code.len() == 3 && code.bytes().all(|b| b.is_ascii_digit()))
    }

    pub fn language_count(&self) -> usize {
        self.languages.len()
    }
}
