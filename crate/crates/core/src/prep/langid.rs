//! Character n-gram language identification in the HeLI style.
//!
//! Text is split into words, each padded with a space on both sides. A
//! profile maps n-grams of orders `1..=max_order` to their log relative
//! frequency among n-grams of the same order. Each word is scored at the
//! highest order for which any profile knows at least one of its n-grams;
//! every n-gram at that order costs its negative log frequency, or
//! `penalty` if the profile has not seen it. A text's score is the mean
//! word score, and the lowest score wins.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ORDER: usize = 6;
/// Seven orders of magnitude, in natural-log units.
pub const DEFAULT_PENALTY: f64 = 7.0 * std::f64::consts::LN_10;

/// Whitespace runs are collapsed to this character.
pub const SPACE_MARKER: char = ' ';

#[derive(Debug, Clone, PartialEq)]
pub struct LangProfile {
    pub lang: String,
    pub max_order: usize,
    pub penalty: f64,
    ngram_logfreq: HashMap<String, f64>,
}

impl LangProfile {
    pub fn new(lang: impl Into<String>, max_order: usize, penalty: f64, ngram_logfreq: HashMap<String, f64>) -> Result<Self> {
        let lang = lang.into();
        if max_order == 0 {
            return Err(Error::invalid("max_order must be at least 1"));
        }
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(Error::invalid(format!("penalty must be positive, got {penalty}")));
        }
        if let Some((g, f)) = ngram_logfreq.iter().find(|(_, f)| f.is_nan() || **f > 0.0) {
            return Err(Error::invalid(format!("log frequency of {g:?} in {lang} is {f}, must be <= 0")));
        }
        Ok(LangProfile {
            lang,
            max_order,
            penalty,
            ngram_logfreq,
        })
    }

    pub fn with_penalty(mut self, penalty: f64) -> Result<Self> {
        if !(penalty > 0.0 && penalty.is_finite()) {
            return Err(Error::invalid(format!("penalty must be positive, got {penalty}")));
        }
        self.penalty = penalty;
        Ok(self)
    }

    pub fn logfreq(&self, ngram: &str) -> Option<f64> {
        self.ngram_logfreq.get(ngram).copied()
    }

    pub fn len(&self) -> usize {
        self.ngram_logfreq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ngram_logfreq.is_empty()
    }

    /// N-grams of one order, sorted.
    pub fn ngrams_of_order(&self, order: usize) -> Vec<&str> {
        let mut v: Vec<&str> = self
            .ngram_logfreq
            .keys()
            .filter(|g| g.chars().count() == order)
            .map(String::as_str)
            .collect();
        v.sort_unstable();
        v
    }

    fn knows_any(&self, word: &[char], order: usize) -> bool {
        let mut buf = String::new();
        word.windows(order).any(|w| {
            buf.clear();
            buf.extend(w);
            self.ngram_logfreq.contains_key(&buf)
        })
    }

    /// Mean cost of the `order`-grams of `word`.
    pub fn word_cost(&self, word: &[char], order: usize) -> f64 {
        let mut buf = String::new();
        let windows = word.windows(order);
        let n = windows.len();
        let total: f64 = windows
            .map(|w| {
                buf.clear();
                buf.extend(w);
                self.logfreq(&buf).map_or(self.penalty, |f| -f)
            })
            .sum();
        total / n as f64
    }
}

/// Words of normalized text, each padded with [`SPACE_MARKER`] on both sides.
pub fn padded_words(text: &[char]) -> Vec<Vec<char>> {
    text.split(|c| *c == SPACE_MARKER)
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut v = Vec::with_capacity(w.len() + 2);
            v.push(SPACE_MARKER);
            v.extend_from_slice(w);
            v.push(SPACE_MARKER);
            v
        })
        .collect()
}

/// Scores of normalized, non-empty `text` against every profile, in profile
/// order. Lower is better.
pub fn score_all(text: &[char], profiles: &[LangProfile]) -> Vec<f64> {
    let max_order = profiles.iter().map(|p| p.max_order).min().unwrap_or(1);
    let words = padded_words(text);
    let mut totals = vec![0.0; profiles.len()];
    for word in &words {
        let top = max_order.min(word.len());
        let order = (1..=top)
            .rev()
            .find(|&k| profiles.iter().any(|p| p.knows_any(word, k)))
            .unwrap_or(1);
        for (t, p) in totals.iter_mut().zip(profiles) {
            *t += p.word_cost(word, order);
        }
    }
    totals.iter().map(|t| t / words.len().max(1) as f64).collect()
}

/// Lowercases, trims, and collapses whitespace runs to [`SPACE_MARKER`].
pub fn normalize_text(text: &str) -> Vec<char> {
    let mut out = Vec::with_capacity(text.len());
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            out.push(SPACE_MARKER);
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Builds one profile per language from `(lang, text)` samples.
///
/// Several samples for the same language are pooled. Profiles are returned
/// sorted by language code.
pub fn train_langid<L, T>(corpus: &[(L, T)], max_order: usize) -> Result<Vec<LangProfile>>
where
    L: AsRef<str>,
    T: AsRef<str>,
{
    if max_order == 0 {
        return Err(Error::invalid("max_order must be at least 1"));
    }
    let mut counts: BTreeMap<&str, Vec<HashMap<String, u64>>> = BTreeMap::new();
    for (lang, text) in corpus {
        let lang = lang.as_ref();
        let per_order = counts
            .entry(lang)
            .or_insert_with(|| vec![HashMap::new(); max_order]);
        for word in padded_words(&normalize_text(text.as_ref())) {
            for (k, table) in per_order.iter_mut().enumerate() {
                for w in word.windows(k + 1) {
                    *table.entry(w.iter().collect()).or_insert(0) += 1;
                }
            }
        }
    }
    if counts.len() < 2 {
        return Err(Error::invalid("language identification needs at least two languages"));
    }
    let mut profiles = Vec::with_capacity(counts.len());
    for (lang, per_order) in counts {
        if per_order[0].is_empty() {
            return Err(Error::invalid(format!("no training text for language {lang}")));
        }
        let mut logfreq = HashMap::new();
        for table in per_order {
            let total: u64 = table.values().sum();
            for (g, c) in table {
                logfreq.insert(g, (c as f64 / total as f64).ln().min(0.0));
            }
        }
        profiles.push(LangProfile::new(lang, max_order, DEFAULT_PENALTY, logfreq)?);
    }
    Ok(profiles)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LangVerdict {
    pub lang: String,
    pub score: f64,
    /// Score gap to the runner-up.
    pub margin: f64,
}

/// Scores `sentence` against every profile and returns the best match.
/// Ties go to the smaller language code.
pub fn identify(sentence: &str, profiles: &[LangProfile]) -> Result<LangVerdict> {
    if profiles.len() < 2 {
        return Err(Error::invalid("identification needs at least two profiles"));
    }
    let text = normalize_text(sentence);
    if text.is_empty() {
        return Err(Error::invalid("cannot identify an empty sentence"));
    }
    let mut scored: Vec<(f64, &str)> = score_all(&text, profiles)
        .into_iter()
        .zip(profiles.iter().map(|p| p.lang.as_str()))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let (best, lang) = scored[0];
    Ok(LangVerdict {
        lang: lang.to_string(),
        score: best,
        margin: scored[1].0 - best,
    })
}

#[derive(Debug, Clone)]
pub struct LanguageFilterResult<T> {
    pub kept: Vec<T>,
    /// Dropped items with their verdict, or `None` when the text could not be
    /// identified at all (empty after normalization).
    pub dropped: Vec<(T, Option<LangVerdict>)>,
}

/// Keeps items identified as `expected` with at least `min_margin` to the
/// runner-up. Input order is preserved in both outputs.
pub fn filter_by_language<T>(
    items: Vec<T>,
    expected: &str,
    profiles: &[LangProfile],
    min_margin: f64,
) -> Result<LanguageFilterResult<T>>
where
    T: AsRef<str> + Send + Sync,
{
    use rayon::prelude::*;

    if !profiles.iter().any(|p| p.lang == expected) {
        return Err(Error::invalid(format!("no language profile for {expected}")));
    }
    if profiles.len() < 2 {
        return Err(Error::invalid("identification needs at least two profiles"));
    }
    let verdicts: Vec<Option<LangVerdict>> = items
        .par_iter()
        .map(|item| identify(item.as_ref(), profiles).ok())
        .collect();

    let mut result = LanguageFilterResult {
        kept: Vec::new(),
        dropped: Vec::new(),
    };
    for (item, verdict) in items.into_iter().zip(verdicts) {
        match verdict {
            Some(v) if v.lang == expected && v.margin >= min_margin => result.kept.push(item),
            other => {
                log::debug!("dropping {:?}: {:?}", item.as_ref(), other);
                result.dropped.push((item, other));
            }
        }
    }
    Ok(result)
}

/// Writes profiles as `lang<TAB>max_order<TAB>penalty` headers followed by
/// sorted `ngram<TAB>logfreq` lines.
pub fn write_profiles<W: Write>(profiles: &[LangProfile], mut out: W) -> Result<()> {
    for p in profiles {
        writeln!(out, "{}\t{}\t{}", p.lang, p.max_order, p.penalty)?;
        let mut entries: Vec<_> = p.ngram_logfreq.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        for (g, f) in entries {
            writeln!(out, "{g}\t{f}")?;
        }
    }
    Ok(())
}

pub fn read_profiles<R: BufRead>(input: R) -> Result<Vec<LangProfile>> {
    struct Pending {
        lang: String,
        max_order: usize,
        penalty: f64,
        map: HashMap<String, f64>,
    }
    fn finish(p: Pending) -> Result<LangProfile> {
        LangProfile::new(p.lang, p.max_order, p.penalty, p.map)
    }

    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.as_slice() {
            [lang, order, penalty] => {
                if let Some(p) = current.take() {
                    out.push(finish(p).map_err(|e| Error::parse(lineno, e.to_string()))?);
                }
                current = Some(Pending {
                    lang: lang.to_string(),
                    max_order: order
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad max_order {order:?}")))?,
                    penalty: penalty
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("bad penalty {penalty:?}")))?,
                    map: HashMap::new(),
                });
            }
            [ngram, freq] => {
                let p = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(lineno, "n-gram line before profile header"))?;
                let f: f64 = freq
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("bad log frequency {freq:?}")))?;
                p.map.insert(ngram.to_string(), f);
            }
            _ => return Err(Error::parse(lineno, "expected 2 or 3 tab-separated fields")),
        }
    }
    if let Some(p) = current {
        out.push(finish(p)?);
    }
    Ok(out)
}
