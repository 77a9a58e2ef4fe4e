use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Character (and optional word) n-gram F-score settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChrfParams {
    pub max_char_order: usize,
    pub word_order: usize,
    pub beta: f64,
    pub remove_whitespace: bool,
    pub effective_order: bool,
    pub lowercase: bool,
}

impl Default for ChrfParams {
    fn default() -> Self {
        ChrfParams {
            max_char_order: 6,
            word_order: 0,
            beta: 2.0,
            remove_whitespace: true,
            effective_order: true,
            lowercase: false,
        }
    }
}

impl ChrfParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_char_order == 0 {
            return Err(Error::invalid("max_char_order must be at least 1"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::invalid(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    /// Compact description of the settings in the usual `key:value|...` form.
    pub fn signature(&self) -> String {
        format!(
            "nrefs:1|case:{}|eff:{}|nc:{}|nw:{}|space:{}",
            if self.lowercase { "lc" } else { "mixed" },
            if self.effective_order { "yes" } else { "no" },
            self.max_char_order,
            self.word_order,
            if self.remove_whitespace { "no" } else { "yes" },
        )
    }

    fn orders(&self) -> usize {
        self.max_char_order + self.word_order
    }
}

/// Per-order n-gram totals: hypothesis count, reference count, clipped matches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChrfStats {
    pub orders: Vec<[u64; 3]>,
}

impl ChrfStats {
    fn zero(n: usize) -> Self {
        ChrfStats { orders: vec![[0; 3]; n] }
    }

    fn add(mut self, other: &ChrfStats) -> Self {
        for (a, b) in self.orders.iter_mut().zip(&other.orders) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
        self
    }

    /// Score in [0, 100] from the accumulated counts.
    pub fn score(&self, params: &ChrfParams) -> f64 {
        let b2 = params.beta * params.beta;
        let mut sum = 0.0;
        let mut used = 0usize;
        for &[hyp, reference, matched] in &self.orders {
            if params.effective_order && reference == 0 {
                continue;
            }
            used += 1;
            if hyp == 0 || reference == 0 {
                continue;
            }
            let p = matched as f64 / hyp as f64;
            let r = matched as f64 / reference as f64;
            let denom = b2 * p + r;
            if denom > 0.0 {
                sum += (1.0 + b2) * p * r / denom;
            }
        }
        if used == 0 {
            0.0
        } else {
            100.0 * sum / used as f64
        }
    }
}

fn counts<T: Eq + Hash + Clone>(items: &[T], n: usize) -> HashMap<&[T], u64> {
    let mut map = HashMap::new();
    if n > 0 && items.len() >= n {
        for w in items.windows(n) {
            *map.entry(w).or_insert(0) += 1;
        }
    }
    map
}

fn order_stats<T: Eq + Hash + Clone>(hyp: &[T], reference: &[T], n: usize) -> [u64; 3] {
    let h = counts(hyp, n);
    let r = counts(reference, n);
    let matched = h
        .iter()
        .map(|(g, &c)| c.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    [h.values().sum(), r.values().sum(), matched]
}

fn prepare(text: &str, params: &ChrfParams) -> String {
    if params.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    }
}

/// n-gram statistics for one hypothesis/reference pair.
pub fn chrf_stats(hypothesis: &str, reference: &str, params: &ChrfParams) -> ChrfStats {
    let (hyp, reference) = (prepare(hypothesis, params), prepare(reference, params));
    let chars = |s: &str| -> Vec<char> {
        s.chars()
            .filter(|c| !(params.remove_whitespace && c.is_whitespace()))
            .collect()
    };
    let (hc, rc) = (chars(&hyp), chars(&reference));
    let mut stats = ChrfStats::zero(params.orders());
    for n in 1..=params.max_char_order {
        stats.orders[n - 1] = order_stats(&hc, &rc, n);
    }
    if params.word_order > 0 {
        let hw: Vec<&str> = hyp.split_whitespace().collect();
        let rw: Vec<&str> = reference.split_whitespace().collect();
        for n in 1..=params.word_order {
            stats.orders[params.max_char_order + n - 1] = order_stats(&hw, &rw, n);
        }
    }
    stats
}

/// Sentence-level score.
pub fn chrf(hypothesis: &str, reference: &str, params: &ChrfParams) -> Result<f64> {
    params.validate()?;
    if hypothesis.is_empty() && reference.is_empty() {
        log::debug!("chrf of two empty strings is defined as 0");
        return Ok(0.0);
    }
    Ok(chrf_stats(hypothesis, reference, params).score(params))
}

/// Corpus-level score from n-gram counts summed over all pairs.
pub fn corpus_chrf<H, R>(pairs: &[(H, R)], params: &ChrfParams) -> Result<f64>
where
    H: AsRef<str> + Sync,
    R: AsRef<str> + Sync,
{
    params.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("corpus_chrf needs at least one pair"));
    }
    let n = params.orders();
    let total = pairs
        .par_iter()
        .map(|(h, r)| chrf_stats(h.as_ref(), r.as_ref(), params))
        .reduce(|| ChrfStats::zero(n), |a, b| a.add(&b));
    Ok(total.score(params))
}
