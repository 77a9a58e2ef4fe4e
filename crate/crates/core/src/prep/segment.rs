//! Rule-based sentence splitting in the style of the Moses splitter.
//!
//! Text is split on whitespace into words and a boundary is placed after a
//! word that ends in sentence-final punctuation when the next word starts a
//! sentence. A single period after a known non-breaking prefix does not end
//! a sentence; a numeric-only prefix suppresses the break only before a
//! digit.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

const TERMINATORS: &[char] = &['.', '!', '?', '…'];
const OPENERS: &[char] = &['\'', '"', '(', '[', '{', '¿', '¡', '«', '‹', '“', '‘', '„', '‚'];
const CLOSERS: &[char] = &['\'', '"', ')', ']', '}', '%', '»', '›', '”', '’'];

pub const DEFAULT_LANG: &str = "en";
const NUMERIC_ONLY_MARK: &str = "#NUMERIC_ONLY#";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrefixKind {
    /// Never breaks after `prefix.`.
    Always,
    /// Does not break after `prefix.` when the next word starts with a digit.
    NumericOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmenterProfile {
    pub lang: String,
    /// Prefixes without their trailing period.
    pub nonbreaking_prefixes: BTreeMap<String, PrefixKind>,
    /// Any letter may start a sentence (for scripts without case).
    pub caseless: bool,
    pub fallback_of: Option<String>,
}

impl SegmenterProfile {
    pub fn new(lang: impl Into<String>) -> Self {
        SegmenterProfile {
            lang: lang.into(),
            nonbreaking_prefixes: BTreeMap::new(),
            caseless: false,
            fallback_of: None,
        }
    }

    /// A profile with no rules of its own that defers to `target`.
    pub fn alias(lang: impl Into<String>, target: impl Into<String>) -> Self {
        SegmenterProfile {
            fallback_of: Some(target.into()),
            ..SegmenterProfile::new(lang)
        }
    }

    pub fn with_prefixes_from<R: BufRead>(mut self, input: R) -> Result<Self> {
        self.nonbreaking_prefixes.extend(parse_prefix_file(input)?);
        Ok(self)
    }

    fn is_starter(&self, c: char) -> bool {
        c.is_uppercase() || c.is_ascii_digit() || (self.caseless && c.is_alphabetic())
    }
}

/// Parses a non-breaking prefix file: one prefix per line, `#` comments,
/// and an optional `#NUMERIC_ONLY#` marker after the prefix.
pub fn parse_prefix_file<R: BufRead>(input: R) -> Result<BTreeMap<String, PrefixKind>> {
    let mut out = BTreeMap::new();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (prefix, kind) = match line.find(NUMERIC_ONLY_MARK) {
            Some(pos) => (line[..pos].trim(), PrefixKind::NumericOnly),
            None => (line, PrefixKind::Always),
        };
        let prefix = prefix.strip_suffix('.').unwrap_or(prefix);
        if !prefix.is_empty() {
            out.insert(prefix.to_string(), kind);
        }
    }
    Ok(out)
}

/// Set of available segmenter profiles keyed by language code.
#[derive(Debug, Clone, Default)]
pub struct SegmenterRegistry {
    profiles: BTreeMap<String, SegmenterProfile>,
}

macro_rules! builtin_prefixes {
    ($lang:literal) => {
        include_str!(concat!("nonbreaking/nonbreaking_prefix.", $lang))
    };
}

impl SegmenterRegistry {
    pub fn empty() -> Self {
        SegmenterRegistry::default()
    }

    /// Profiles shipped with the toolkit.
    ///
    /// Languages with their own prefix lists: en, is, ga, ru, es, ka (ka
    /// uses the caseless start rule). Gaelic falls back to Irish, Ukrainian
    /// and Macedonian to Russian, Basque to Spanish; everything else,
    /// including Somali, goes to English.
    pub fn builtin() -> Self {
        let mut reg = SegmenterRegistry::empty();
        let sources = [
            ("en", builtin_prefixes!("en")),
            ("is", builtin_prefixes!("is")),
            ("ga", builtin_prefixes!("ga")),
            ("ru", builtin_prefixes!("ru")),
            ("es", builtin_prefixes!("es")),
            ("ka", builtin_prefixes!("ka")),
        ];
        for (lang, data) in sources {
            let mut profile = SegmenterProfile::new(lang)
                .with_prefixes_from(data.as_bytes())
                .expect("built-in prefix data is valid");
            profile.caseless = lang == "ka";
            reg.profiles.insert(lang.to_string(), profile);
        }
        for (lang, target) in [("gd", "ga"), ("uk", "ru"), ("mk", "ru"), ("eu", "es")] {
            reg.profiles
                .insert(lang.to_string(), SegmenterProfile::alias(lang, target));
        }
        reg
    }

    /// Built-in profiles overlaid with `nonbreaking_prefix.<lang>` files from
    /// `dir` and an optional `fallbacks.tsv` (`lang<TAB>fallback` per line).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut reg = SegmenterRegistry::builtin();
        let mut entries: Vec<_> = fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(lang) = name.strip_prefix("nonbreaking_prefix.") {
                let data = fs::read_to_string(entry.path())?;
                let mut profile = SegmenterProfile::new(lang).with_prefixes_from(data.as_bytes())?;
                profile.caseless = reg.profiles.get(lang).is_some_and(|p| p.caseless);
                reg.profiles.insert(lang.to_string(), profile);
            }
        }
        let fallbacks = dir.join("fallbacks.tsv");
        if fallbacks.exists() {
            for (idx, line) in fs::read_to_string(&fallbacks)?.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (lang, target) = line
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(idx + 1, "expected lang<TAB>fallback"))?;
                reg.profiles
                    .insert(lang.to_string(), SegmenterProfile::alias(lang, target.trim()));
            }
        }
        reg.validate()?;
        Ok(reg)
    }

    pub fn insert(&mut self, profile: SegmenterProfile) -> Result<()> {
        let lang = profile.lang.clone();
        let previous = self.profiles.insert(lang.clone(), profile);
        if let Err(e) = self.validate() {
            match previous {
                Some(p) => self.profiles.insert(lang, p),
                None => self.profiles.remove(&lang),
            };
            return Err(e);
        }
        Ok(())
    }

    pub fn get(&self, lang: &str) -> Option<&SegmenterProfile> {
        self.profiles.get(lang)
    }

    /// Every fallback chain must terminate.
    pub fn validate(&self) -> Result<()> {
        for start in self.profiles.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = start.as_str();
            while let Some(next) = self.profiles.get(cur).and_then(|p| p.fallback_of.as_deref()) {
                if !seen.insert(cur) {
                    return Err(Error::invalid(format!("segmenter fallback cycle through {start:?}")));
                }
                cur = next;
            }
        }
        Ok(())
    }

    /// The profile for `lang`: its own if it has rules, otherwise the first
    /// concrete profile along its fallback chain, otherwise English.
    pub fn resolve_profile(&self, lang: &str) -> SegmenterProfile {
        let mut cur = lang;
        let mut hops = 0;
        while let Some(profile) = self.profiles.get(cur) {
            match &profile.fallback_of {
                None => return profile.clone(),
                Some(next) if hops <= self.profiles.len() => {
                    cur = next;
                    hops += 1;
                }
                Some(_) => break,
            }
        }
        self.profiles
            .get(DEFAULT_LANG)
            .filter(|p| p.fallback_of.is_none())
            .cloned()
            .unwrap_or_else(|| SegmenterProfile::new(DEFAULT_LANG))
    }
}

pub fn resolve_profile(lang: &str, registry: &SegmenterRegistry) -> SegmenterProfile {
    registry.resolve_profile(lang)
}

fn first_starter(profile: &SegmenterProfile, word: &str) -> bool {
    word.chars()
        .find(|c| !OPENERS.contains(c))
        .is_some_and(|c| profile.is_starter(c))
}

fn breaks_after(profile: &SegmenterProfile, word: &str, next: &str) -> bool {
    let core = word.trim_end_matches(CLOSERS);
    let run_start = core.trim_end_matches(TERMINATORS).len();
    let run = &core[run_start..];
    if run.is_empty() || !first_starter(profile, next) {
        return false;
    }
    if run != "." {
        return true;
    }

    let before = &core[..run_start];
    let stripped = before.trim_end_matches(CLOSERS);
    let starting_punct = stripped.len() != before.len();
    let prefix_start = stripped
        .char_indices()
        .rev()
        .take_while(|&(_, c)| c.is_alphanumeric() || c == '.' || c == '-')
        .last()
        .map_or(stripped.len(), |(i, _)| i);
    let prefix = &stripped[prefix_start..];

    if !starting_punct {
        match profile.nonbreaking_prefixes.get(prefix) {
            Some(PrefixKind::Always) => return false,
            Some(PrefixKind::NumericOnly) if next.starts_with(|c: char| c.is_ascii_digit()) => {
                return false;
            }
            _ => {}
        }
    }
    // Acronyms such as "U.S." do not end a sentence.
    if prefix.contains('.') && prefix.chars().any(char::is_alphabetic) {
        return false;
    }
    true
}

/// Splits a paragraph into sentences.
///
/// Whitespace inside sentences is collapsed to single spaces, so joining the
/// output with spaces reproduces the whitespace-normalized input.
pub fn segment(paragraph_text: &str, profile: &SegmenterProfile) -> Vec<String> {
    let words: Vec<&str> = paragraph_text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    for i in 0..words.len() {
        let is_last = i + 1 == words.len();
        if is_last || breaks_after(profile, words[i], words[i + 1]) {
            sentences.push(words[start..=i].join(" "));
            start = i + 1;
        }
    }
    sentences
}
