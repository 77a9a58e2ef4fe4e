use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::align::BitextRecord;
use crate::error::{Error, Result};

/// Layout of an externally produced score file (TSV with a header row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSchema {
    pub id_column: String,
    pub score_column: String,
    /// Inclusive `[low, high]` range of the raw scores.
    pub scale: (f64, f64),
}

impl ScoreSchema {
    pub fn new(id_column: impl Into<String>, score_column: impl Into<String>, low: f64, high: f64) -> Result<Self> {
        if !(low.is_finite() && high.is_finite() && low < high) {
            return Err(Error::invalid(format!("invalid score scale [{low}, {high}]")));
        }
        Ok(ScoreSchema {
            id_column: id_column.into(),
            score_column: score_column.into(),
            scale: (low, high),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRecord {
    pub id: String,
    pub raw: f64,
    /// Raw score mapped linearly onto [0, 1].
    pub score: f64,
}

pub fn ingest_external_scores<R: BufRead>(input: R, schema: &ScoreSchema) -> Result<Vec<ScoreRecord>> {
    let (low, high) = schema.scale;
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::parse(1, "missing header row")),
    };
    let columns: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::parse(1, format!("header has no column {name:?}")))
    };
    let (id_col, score_col) = (find(&schema.id_column)?, find(&schema.score_column)?);

    let mut out = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        let lineno = idx + 2;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(Error::parse(lineno, format!("expected {} columns, found {}", columns.len(), cells.len())));
        }
        let raw: f64 = cells[score_col]
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("score {:?} is not a number", cells[score_col])))?;
        if !(low..=high).contains(&raw) {
            return Err(Error::parse(lineno, format!("score {raw} outside declared scale [{low}, {high}]")));
        }
        out.push(ScoreRecord {
            id: cells[id_col].to_string(),
            raw,
            score: (raw - low) / (high - low),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredBitext {
    /// Position of the record in the bitext.
    pub index: usize,
    pub id: String,
    pub score: f64,
}

/// Attaches scores to bitext records by record ID, in bitext order.
pub fn join_scores(scores: &[ScoreRecord], bitext: &[BitextRecord]) -> Result<Vec<ScoredBitext>> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scores.len());
    for s in scores {
        if by_id.insert(s.id.as_str(), s.score).is_some() {
            return Err(Error::integrity(format!("score for {} given twice", s.id)));
        }
    }
    let mut out = Vec::with_capacity(scores.len());
    for (index, rec) in bitext.iter().enumerate() {
        let id = rec.id();
        if let Some(score) = by_id.remove(id.as_str()) {
            out.push(ScoredBitext { index, id, score });
        }
    }
    if let Some(s) = scores.iter().find(|s| by_id.contains_key(s.id.as_str())) {
        return Err(Error::integrity(format!("score for unknown bitext record {}", s.id)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(doc: &str, s: &str, t: &str) -> BitextRecord {
        BitextRecord {
            doc_id: doc.into(),
            para_id: "1".into(),
            src_ids: vec![s.into()],
            tgt_ids: vec![t.into()],
            src_text: "a".into(),
            tgt_text: "b".into(),
            pivot_text: None,
        }
    }

    #[test]
    fn three_rows() {
        let schema = ScoreSchema::new("id", "score", 0.0, 100.0).unwrap();
        let tsv = "id\tscore\textra\nx\t50\tq\ny\t0\tq\nz\t100\tq\n";
        let s = ingest_external_scores(tsv.as_bytes(), &schema).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.iter().map(|r| r.score).collect::<Vec<_>>(), [0.5, 0.0, 1.0]);
    }

    #[test]
    fn out_of_scale() {
        let schema = ScoreSchema::new("id", "s", 0.0, 1.0).unwrap();
        assert!(ingest_external_scores("id\ts\na\t1.5\n".as_bytes(), &schema).is_err());
        assert!(ingest_external_scores("id\ts\na\tx\n".as_bytes(), &schema).is_err());
        assert!(ingest_external_scores("id\tq\na\t1\n".as_bytes(), &schema).is_err());
        assert!(ScoreSchema::new("id", "s", 1.0, 1.0).is_err());
    }

    #[test]
    fn join_by_record_id() {
        let bitext = vec![rec("d", "1.1", "1.1"), rec("d", "1.2", "1.2"), rec("e", "1.1", "1.1")];
        let schema = ScoreSchema::new("id", "s", 0.0, 1.0).unwrap();
        let tsv = "id\ts\ne/1.1/1.1\t0.25\nd/1.1/1.1\t0.5\n";
        let scores = ingest_external_scores(tsv.as_bytes(), &schema).unwrap();
        let joined = join_scores(&scores, &bitext).unwrap();
        assert_eq!(joined.iter().map(|j| j.index).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(joined[1].score, 0.25);

        let unknown = ingest_external_scores("id\ts\nq/1/1\t0.5\n".as_bytes(), &schema).unwrap();
        assert!(join_scores(&unknown, &bitext).is_err());
        let dup = ingest_external_scores("id\ts\nd/1.1/1.1\t0.5\nd/1.1/1.1\t0.5\n".as_bytes(), &schema).unwrap();
        assert!(join_scores(&dup, &bitext).is_err());
    }
}
