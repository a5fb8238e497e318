//! BCP-47 subset: `language[-script][-region][-x-private...]`.
//!
//! Extended language subtags, variants and extensions other than private
//! use are rejected. Underscores are read as hyphens and remembered so the
//! linter can point them out.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LanguageTag {
    /// Lowercase, 2-3 letters.
    pub language: String,
    /// Title case, 4 letters.
    pub script: Option<String>,
    /// Uppercase letters or 3 digits.
    pub region: Option<String>,
    /// Lowercase subtags after the `x` singleton.
    pub private: Vec<String>,
    /// Input as given.
    pub raw: String,
    /// The input used `_` as a separator.
    pub underscore: bool,
}

fn invalid(input: &str, component: &'static str, subtag: &str) -> Error {
    Error::InvalidTag {
        input: input.to_string(),
        component,
        subtag: subtag.to_string(),
    }
}

fn is_alpha(s: &str) -> bool {
    s.bytes().all(|b| b.is_ascii_alphabetic())
}

fn is_digit(s: &str) -> bool {
    s.bytes().all(|b| b.is_ascii_digit())
}

/// Parse a tag, case-insensitively.
pub fn parse_tag(s: &str) -> Result<LanguageTag> {
    let input = s.trim();
    if input.is_empty() {
        return Err(invalid(s, "tag", ""));
    }
    let underscore = input.contains('_');
    let subtags: Vec<&str> = input.split(['-', '_']).collect();
    if let Some(empty) = subtags.iter().position(|t| t.is_empty()) {
        let near = subtags.get(empty.saturating_sub(1)).copied().unwrap_or("");
        return Err(invalid(s, "separator", near));
    }

    let language = subtags[0];
    if !(2..=3).contains(&language.len()) || !is_alpha(language) {
        return Err(invalid(s, "language", language));
    }
    let mut tag = LanguageTag {
        language: language.to_ascii_lowercase(),
        script: None,
        region: None,
        private: Vec::new(),
        raw: s.to_string(),
        underscore,
    };

    let mut rest = subtags[1..].iter();
    while let Some(&sub) = rest.next() {
        if sub.eq_ignore_ascii_case("x") {
            for &p in rest.by_ref() {
                if p.len() > 8 || !p.bytes().all(|b| b.is_ascii_alphanumeric()) {
                    return Err(invalid(s, "private", p));
                }
                tag.private.push(p.to_ascii_lowercase());
            }
            if tag.private.is_empty() {
                return Err(invalid(s, "private", sub));
            }
            break;
        }
        if sub.len() == 4 && is_alpha(sub) {
            if tag.script.is_some() || tag.region.is_some() {
                return Err(invalid(s, "script", sub));
            }
            let mut script = sub.to_ascii_lowercase();
            script[..1].make_ascii_uppercase();
            tag.script = Some(script);
        } else if (sub.len() == 2 && is_alpha(sub)) || (sub.len() == 3 && is_digit(sub)) {
            if tag.region.is_some() {
                return Err(invalid(s, "region", sub));
            }
            tag.region = Some(sub.to_ascii_uppercase());
        } else {
            let component = match sub.len() {
                4 => "script",
                2 | 3 => "region",
                _ => "subtag",
            };
            return Err(invalid(s, component, sub));
        }
    }
    Ok(tag)
}

/// Canonical rendering: `ll[-Ssss][-RR][-x-...]`.
pub fn normalize_tag(tag: &LanguageTag) -> String {
    tag.to_string()
}

/// Parse and render canonically in one step.
pub fn normalize(s: &str) -> Result<String> {
    parse_tag(s).map(|t| t.to_string())
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.language)?;
        if let Some(script) = &self.script {
            write!(f, "-{script}")?;
        }
        if let Some(region) = &self.region {
            write!(f, "-{region}")?;
        }
        if !self.private.is_empty() {
            write!(f, "-x-{}", self.private.join("-"))?;
        }
        Ok(())
    }
}

impl FromStr for LanguageTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_tag(s)
    }
}

/// Lookup key used to match published codes against rules: lowercase with
/// `_` replaced by `-`. Works on strings that are not valid tags.
pub fn match_key(code: &str) -> String {
    code.trim().to_ascii_lowercase().replace('_', "-")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_examples() {
        let t = parse_tag("hi-Latn").unwrap();
        assert_eq!((t.language.as_str(), t.script.as_deref()), ("hi", Some("Latn")));
        let t = parse_tag("fr-CA").unwrap();
        assert_eq!((t.language.as_str(), t.region.as_deref()), ("fr", Some("CA")));
        let t = parse_tag("en").unwrap();
        assert!(t.script.is_none() && t.region.is_none() && t.private.is_empty());
        let t = parse_tag("es-419").unwrap();
        assert_eq!(t.region.as_deref(), Some("419"));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("EN-latn").unwrap(), "en-Latn");
        let t = parse_tag("pt_PT").unwrap();
        assert!(t.underscore);
        assert_eq!(normalize_tag(&t), "pt-PT");
        assert_eq!(normalize("naq_x_dmr").unwrap(), "naq-x-dmr");
        assert_eq!(normalize("sr-latn-rs-X-Ekav").unwrap(), "sr-Latn-RS-x-ekav");
    }

    #[test]
    fn rejections_name_the_component() {
        let component = |s: &str| match parse_tag(s) {
            Err(Error::InvalidTag { component, .. }) => component,
            other => panic!("{s}: expected error, got {other:?}"),
        };
        assert_eq!(component(""), "tag");
        assert_eq!(component("english"), "language");
        assert_eq!(component("e"), "language");
        assert_eq!(component("en--US"), "separator");
        assert_eq!(component("en-US-Latn"), "script");
        assert_eq!(component("en-US-GB"), "region");
        assert_eq!(component("te_IN_rom"), "region");
        assert_eq!(component("en-x"), "private");
        assert_eq!(component("en-x-toolongsubtag"), "private");
        assert_eq!(component("de-1996"), "script");
        assert_eq!(component("simple"), "language");
    }

    #[test]
    fn match_key_handles_invalid_codes() {
        assert_eq!(match_key("jw_DMR"), "jw-dmr");
        assert_eq!(match_key("te_IN_rom"), "te-in-rom");
    }

    fn tag_strategy() -> impl Strategy<Value = String> {
        (
            "[a-zA-Z]{2,3}",
            prop::option::of("[a-zA-Z]{4}"),
            prop::option::of(prop_oneof!["[a-zA-Z]{2}", "[0-9]{3}"]),
            prop::collection::vec("[a-zA-Z0-9]{1,8}", 0..3),
            prop::bool::ANY,
        )
            .prop_map(|(l, s, r, p, under)| {
                let sep = if under { "_" } else { "-" };
                let mut parts = vec![l];
                parts.extend(s);
                parts.extend(r);
                if !p.is_empty() {
                    parts.push("x".into());
                    parts.extend(p);
                }
                parts.join(sep)
            })
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent_and_closed(s in tag_strategy()) {
            let once = normalize(&s).unwrap();
            let twice = normalize(&once).unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert!(!parse_tag(&once).unwrap().underscore);
        }

        #[test]
        fn arbitrary_input_never_panics(s in "\\PC{0,20}") {
            if let Ok(t) = parse_tag(&s) {
                prop_assert!(parse_tag(&normalize_tag(&t)).is_ok());
            }
        }
    }
}
