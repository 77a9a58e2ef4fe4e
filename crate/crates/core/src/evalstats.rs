//! Agreement and correlation statistics for human evaluation.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Annotator-by-item grid of optional scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotationMatrix {
    pub annotators: Vec<String>,
    pub items: Vec<String>,
    /// `values[a][i]` is annotator `a`'s score for item `i`.
    pub values: Vec<Vec<Option<f64>>>,
}

impl AnnotationMatrix {
    /// Real-valued matrix; scores need only be finite.
    pub fn new(annotators: Vec<String>, items: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        if values.len() != annotators.len() {
            return Err(Error::invalid(format!(
                "{} annotators but {} rows",
                annotators.len(),
                values.len()
            )));
        }
        for (name, row) in annotators.iter().zip(&values) {
            if row.len() != items.len() {
                return Err(Error::invalid(format!("row for {name} has {} cells, expected {}", row.len(), items.len())));
            }
            if row.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row for {name} has a non-finite score")));
            }
        }
        Ok(AnnotationMatrix { annotators, items, values })
    }

    /// Matrix of direct-assessment scores, each within [0, 100].
    pub fn from_scores(annotators: Vec<String>, items: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let m = Self::new(annotators, items, values)?;
        for (name, row) in m.annotators.iter().zip(&m.values) {
            if let Some(v) = row.iter().flatten().find(|v| !(0.0..=100.0).contains(*v)) {
                return Err(Error::invalid(format!("score {v} from {name} is outside [0, 100]")));
            }
        }
        Ok(m)
    }

    /// Scores given to item `i`, in annotator order.
    pub fn item_values(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(move |row| row[i])
    }
}

fn sum_sq_dev(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Krippendorff's alpha with the squared-difference metric.
///
/// Only pairable values (items with two or more scores) enter either
/// disagreement term. For `m` values, the sum of `(v_i - v_j)^2` over ordered
/// pairs equals `2m` times their sum of squared deviations.
pub fn krippendorff_alpha_interval(matrix: &AnnotationMatrix) -> Result<f64> {
    if matrix.annotators.len() < 2 {
        return Err(Error::invalid("alpha undefined: fewer than two annotators"));
    }
    let mut pooled = Vec::new();
    let mut within = 0.0;
    for i in 0..matrix.items.len() {
        let vals: Vec<f64> = matrix.item_values(i).collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        within += 2.0 * m as f64 * sum_sq_dev(&vals) / (m - 1) as f64;
        pooled.extend(vals);
    }
    if pooled.is_empty() {
        return Err(Error::invalid("alpha undefined: no item has two or more scores"));
    }
    let n = pooled.len() as f64;
    let d_o = within / n;
    let d_e = 2.0 * n * sum_sq_dev(&pooled) / (n * (n - 1.0));
    if d_e == 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - d_o / d_e)
}

/// Standardizes each annotator's scores with that annotator's mean and
/// population standard deviation.
pub fn zscore_by_annotator(matrix: &AnnotationMatrix) -> Result<AnnotationMatrix> {
    let mut values = Vec::with_capacity(matrix.values.len());
    for (name, row) in matrix.annotators.iter().zip(&matrix.values) {
        let scored: Vec<f64> = row.iter().flatten().copied().collect();
        if scored.len() < 2 {
            return Err(Error::invalid(format!("annotator {name} has fewer than two scores")));
        }
        let n = scored.len() as f64;
        let mean = scored.iter().sum::<f64>() / n;
        let sd = (sum_sq_dev(&scored) / n).sqrt();
        if sd == 0.0 {
            return Err(Error::invalid(format!("annotator {name} gave every item the same score")));
        }
        values.push(row.iter().map(|v| v.map(|x| (x - mean) / sd)).collect());
    }
    AnnotationMatrix::new(matrix.annotators.clone(), matrix.items.clone(), values)
}

pub fn zscored_alpha(matrix: &AnnotationMatrix) -> Result<f64> {
    krippendorff_alpha_interval(&zscore_by_annotator(matrix)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end.
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::invalid("spearman needs at least two pairs"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spearman inputs must be finite"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    // Ranks average to exactly (n + 1) / 2, so centered ranks are multiples
    // of 1/2 and the sums below are exact for any realistic n.
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("spearman undefined for a constant input"));
    }
    Ok(CorrelationResult {
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        n: x.len(),
    })
}

/// Mean score per item over the annotators who scored it.
pub fn aggregate_item_scores(matrix: &AnnotationMatrix) -> Result<Vec<f64>> {
    (0..matrix.items.len())
        .map(|i| {
            let vals: Vec<f64> = matrix.item_values(i).collect();
            if vals.is_empty() {
                Err(Error::invalid(format!("item {} has no scores", matrix.items[i])))
            } else {
                Ok(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        })
        .collect()
}

/// Header `item_id, <annotators...>`; an empty cell is a missing score.
pub fn read_matrix<R: BufRead>(input: R) -> Result<AnnotationMatrix> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    if cols.first() != Some(&"item_id") {
        return Err(Error::parse(1, "first column must be item_id"));
    }
    let annotators: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut items = Vec::new();
    let mut values = vec![Vec::new(); annotators.len()];
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != cols.len() {
            return Err(Error::parse(idx + 2, format!("expected {} columns, found {}", cols.len(), cells.len())));
        }
        items.push(cells[0].to_string());
        for (a, cell) in cells[1..].iter().enumerate() {
            let v = if cell.trim().is_empty() {
                None
            } else {
                Some(
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(idx + 2, format!("bad score {cell:?}")))?,
                )
            };
            values[a].push(v);
        }
    }
    AnnotationMatrix::new(annotators, items, values).map_err(|e| match e {
        Error::Invalid(msg) => Error::parse(1, msg),
        other => other,
    })
}

pub fn write_matrix<W: Write>(matrix: &AnnotationMatrix, mut out: W) -> Result<()> {
    write!(out, "item_id")?;
    for a in &matrix.annotators {
        write!(out, "\t{a}")?;
    }
    out.write_all(b"\n")?;
    for (i, item) in matrix.items.iter().enumerate() {
        write!(out, "{item}")?;
        for row in &matrix.values {
            match row[i] {
                Some(v) => write!(out, "\t{v}")?,
                None => write!(out, "\t")?,
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// One row of the per-pair human evaluation summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub pair: String,
    pub annotators: usize,
    pub z_iaa: Option<f64>,
    /// Correlation with each automatic scorer, by scorer name.
    pub rho: Vec<(String, Option<f64>)>,
}

/// TSV with columns `pair, annotators, z_iaa, rho_<scorer>...`; scorers are
/// taken from the first row and undefined values are written as `-`.
pub fn write_summary<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    let scorers: Vec<&str> = rows
        .first()
        .map(|r| r.rho.iter().map(|(s, _)| s.as_str()).collect())
        .unwrap_or_default();
    write!(out, "pair\tannotators\tz_iaa")?;
    for s in &scorers {
        write!(out, "\trho_{s}")?;
    }
    out.write_all(b"\n")?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for row in rows {
        let names: Vec<&str> = row.rho.iter().map(|(s, _)| s.as_str()).collect();
        if names != scorers {
            return Err(Error::invalid(format!("row {} has a different scorer list", row.pair)));
        }
        write!(out, "{}\t{}\t{}", row.pair, row.annotators, fmt(row.z_iaa))?;
        for (_, v) in &row.rho {
            write!(out, "\t{}", fmt(*v))?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(p: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{p}{i}")).collect()
    }

    fn matrix(rows: Vec<Vec<Option<f64>>>) -> AnnotationMatrix {
        let items = rows[0].len();
        AnnotationMatrix::new(names("a", rows.len()), names("i", items), rows).unwrap()
    }

    /// Sum over ordered pairs of distinct pairable values, written out
    /// directly from the definition.
    fn oracle(m: &AnnotationMatrix) -> f64 {
        let items: Vec<Vec<f64>> = (0..m.items.len())
            .map(|i| m.item_values(i).collect::<Vec<_>>())
            .filter(|v| v.len() >= 2)
            .collect();
        let pooled: Vec<f64> = items.iter().flatten().copied().collect();
        let n = pooled.len() as f64;
        let mut d_o = 0.0;
        for vals in &items {
            let mut s = 0.0;
            for (a, x) in vals.iter().enumerate() {
                for (b, y) in vals.iter().enumerate() {
                    if a != b {
                        s += (x - y).powi(2);
                    }
                }
            }
            d_o += s / (vals.len() - 1) as f64;
        }
        d_o /= n;
        let mut d_e = 0.0;
        for (a, x) in pooled.iter().enumerate() {
            for (b, y) in pooled.iter().enumerate() {
                if a != b {
                    d_e += (x - y).powi(2);
                }
            }
        }
        d_e /= n * (n - 1.0);
        1.0 - d_o / d_e
    }

    #[test]
    fn identical_annotators() {
        let row = vec![Some(10.0), Some(40.0), Some(55.0), Some(90.0), Some(100.0)];
        assert_eq!(krippendorff_alpha_interval(&matrix(vec![row.clone(), row])).unwrap(), 1.0);
    }

    #[test]
    fn single_annotator_is_an_error() {
        assert!(krippendorff_alpha_interval(&matrix(vec![vec![Some(1.0), Some(2.0)]])).is_err());
        let no_overlap = matrix(vec![vec![Some(1.0), None], vec![None, Some(2.0)]]);
        assert!(krippendorff_alpha_interval(&no_overlap).is_err());
    }

    #[test]
    fn three_by_four_with_missing_cell() {
        let m = matrix(vec![
            vec![Some(70.0), Some(20.0), Some(55.0), Some(90.0)],
            vec![Some(65.0), Some(35.0), None, Some(80.0)],
            vec![Some(80.0), Some(10.0), Some(50.0), Some(100.0)],
        ]);
        let a = krippendorff_alpha_interval(&m).unwrap();
        assert!((a - oracle(&m)).abs() < 1e-9);
    }

    #[test]
    fn offset_annotator() {
        let base = vec![Some(20.0), Some(45.0), Some(60.0), Some(75.0), Some(30.0)];
        let shifted = base.iter().map(|v| v.map(|x| x + 10.0)).collect();
        let m = matrix(vec![base, shifted]);
        let raw = krippendorff_alpha_interval(&m).unwrap();
        assert!(raw < 1.0);
        assert!((raw - oracle(&m)).abs() < 1e-9);
        assert!((zscored_alpha(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zscores() {
        let m = matrix(vec![vec![Some(0.0), Some(100.0)]]);
        assert_eq!(zscore_by_annotator(&m).unwrap().values[0], [Some(-1.0), Some(1.0)]);
        let z = matrix(vec![vec![Some(-1.0), Some(1.0), None, Some(1.0), Some(-1.0)]]);
        let again = zscore_by_annotator(&z).unwrap();
        for (a, b) in again.values[0].iter().zip(&z.values[0]) {
            match (a, b) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                _ => panic!("missing cells moved"),
            }
        }
        let constant = AnnotationMatrix::new(
            vec!["x".into(), "flat".into()],
            names("i", 3),
            vec![vec![Some(1.0), Some(2.0), Some(3.0)], vec![Some(5.0), Some(5.0), Some(5.0)]],
        )
        .unwrap();
        let e = zscore_by_annotator(&constant).unwrap_err();
        assert!(e.to_string().contains("flat"), "{e}");
    }

    #[test]
    fn score_range_is_checked() {
        assert!(AnnotationMatrix::from_scores(names("a", 1), names("i", 1), vec![vec![Some(101.0)]]).is_err());
        assert!(AnnotationMatrix::from_scores(names("a", 1), names("i", 1), vec![vec![Some(100.0)]]).is_ok());
    }

    #[test]
    fn spearman_tie_fixture() {
        // Ranks x: 1 2.5 2.5 4 5.5 5.5, y: 2 1 3.5 3.5 6 5.
        // Centered products sum to 14.25; squares to 16.5 and 17.
        let x = [1.0, 2.0, 2.0, 3.0, 4.0, 4.0];
        let y = [2.0, 1.0, 3.0, 3.0, 6.0, 5.0];
        let r = spearman(&x, &y).unwrap();
        assert!((r.rho - 14.25 / (16.5f64 * 17.0).sqrt()).abs() < 1e-12);
        assert_eq!(r.n, 6);
    }

    #[test]
    fn spearman_monotone() {
        let x: Vec<f64> = (1..=9).map(f64::from).collect();
        let sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v.powi(3)).collect();
        assert_eq!(spearman(&x, &sq).unwrap().rho, 1.0);
        assert_eq!(spearman(&x, &neg).unwrap().rho, -1.0);
        assert!(spearman(&x, &x[1..]).is_err());
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn item_means() {
        let m = matrix(vec![vec![Some(40.0), Some(10.0), None], vec![Some(60.0), None, Some(5.0)]]);
        assert_eq!(aggregate_item_scores(&m).unwrap(), [50.0, 10.0, 5.0]);
        let hole = matrix(vec![vec![Some(1.0), None]]);
        assert!(aggregate_item_scores(&hole).is_err());
    }

    #[test]
    fn matrix_roundtrip() {
        let m = matrix(vec![vec![Some(40.0), None], vec![Some(60.5), Some(3.0)]]);
        let mut buf = Vec::new();
        write_matrix(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "item_id\ta0\ta1\ni0\t40\t60.5\ni1\t\t3\n");
        assert_eq!(read_matrix(&buf[..]).unwrap(), m);
        assert!(read_matrix("id\ta\n".as_bytes()).is_err());
        assert!(read_matrix("item_id\ta\nx\t1\t2\n".as_bytes()).is_err());
    }

    #[test]
    fn summary_table() {
        let rows = vec![SummaryRow {
            pair: "en-eu".into(),
            annotators: 2,
            z_iaa: Some(0.49),
            rho: vec![("chrf".into(), Some(0.3)), ("qe".into(), None)],
        }];
        let mut buf = Vec::new();
        write_summary(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pair\tannotators\tz_iaa\trho_chrf\trho_qe\nen-eu\t2\t0.4900\t0.3000\t-\n"
        );
    }

    fn arb_matrix() -> impl Strategy<Value = AnnotationMatrix> {
        (2usize..5, 3usize..12).prop_flat_map(|(a, i)| {
            prop::collection::vec(prop::collection::vec(prop::option::weighted(0.8, 0u8..=100), i), a)
                .prop_map(|rows| matrix(rows.into_iter().map(|r| r.into_iter().map(|v| v.map(f64::from)).collect()).collect()))
        })
    }

    proptest! {
        #[test]
        fn matches_double_summation(m in arb_matrix()) {
            if let Ok(a) = krippendorff_alpha_interval(&m) {
                let o = oracle(&m);
                if o.is_finite() {
                    prop_assert!((a - o).abs() < 1e-9, "{} vs {}", a, o);
                }
            }
        }

        #[test]
        fn permutation_invariant(m in arb_matrix()) {
            if let Ok(a) = krippendorff_alpha_interval(&m) {
                let mut p = m.clone();
                p.values.reverse();
                for row in &mut p.values {
                    row.reverse();
                }
                prop_assert!((krippendorff_alpha_interval(&p).unwrap() - a).abs() < 1e-12);
            }
        }

        #[test]
        fn spearman_monotone_invariance(v in prop::collection::vec(-50i32..50, 3..20), w in prop::collection::vec(-50i32..50, 3..20)) {
            let n = v.len().min(w.len());
            let x: Vec<f64> = v[..n].iter().map(|&a| f64::from(a)).collect();
            let y: Vec<f64> = w[..n].iter().map(|&a| f64::from(a)).collect();
            if let Ok(r) = spearman(&x, &y) {
                let tx: Vec<f64> = x.iter().map(|a| a.powi(3) + 7.0).collect();
                prop_assert!((spearman(&tx, &y).unwrap().rho - r.rho).abs() < 1e-12);
                prop_assert!(r.rho.abs() <= 1.0);
            }
        }
    }
}
