use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

/// Distribution of scores over half-open bins; the last bin is closed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinReport {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub proportions: Vec<f64>,
    pub total: u64,
}

/// `n` equal-width bins over `[lo, hi]`.
pub fn equal_edges(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("cannot split [{lo}, {hi}] into {n} bins")));
    }
    let width = (hi - lo) / n as f64;
    let mut edges: Vec<f64> = (0..n).map(|i| lo + width * i as f64).collect();
    edges.push(hi);
    Ok(edges)
}

pub fn bin_scores(scores: &[f64], edges: &[f64]) -> Result<BinReport> {
    if edges.len() < 2 || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("bin edges must be finite, strictly ascending, and at least two"));
    }
    if scores.is_empty() {
        return Err(Error::invalid("no scores to bin"));
    }
    let (lo, hi) = (edges[0], edges[edges.len() - 1]);
    let mut counts = vec![0u64; edges.len() - 1];
    for (i, &s) in scores.iter().enumerate() {
        if !(lo..=hi).contains(&s) {
            return Err(Error::invalid(format!("score {s} at index {i} is outside [{lo}, {hi}]")));
        }
        // Number of edges <= s, minus one, is the half-open bin index.
        let bin = edges.partition_point(|&e| e <= s).saturating_sub(1).min(counts.len() - 1);
        counts[bin] += 1;
    }
    let total = scores.len() as u64;
    Ok(BinReport {
        proportions: counts.iter().map(|&c| c as f64 / total as f64).collect(),
        edges: edges.to_vec(),
        counts,
        total,
    })
}

/// One line per bin: `bin_start, bin_end, count, proportion`.
pub fn write_bin_report<W: Write>(report: &BinReport, mut out: W) -> Result<()> {
    writeln!(out, "bin_start\tbin_end\tcount\tproportion")?;
    for (i, (&c, &p)) in report.counts.iter().zip(&report.proportions).enumerate() {
        writeln!(out, "{}\t{}\t{}\t{}", report.edges[i], report.edges[i + 1], c, p)?;
    }
    Ok(())
}

/// Bin labels and proportions for external charting.
pub fn write_plot_csv<W: Write>(series: &[(String, BinReport)], mut out: W) -> Result<()> {
    writeln!(out, "series,bin,proportion")?;
    for (name, report) in series {
        for (i, p) in report.proportions.iter().enumerate() {
            let label = format!("{}-{}", report.edges[i], report.edges[i + 1]);
            writeln!(out, "{},{},{}", name.replace(',', " "), label, p)?;
        }
    }
    Ok(())
}
