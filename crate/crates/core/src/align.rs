//! Length-based sentence alignment within paragraphs, and the bitext TSV
//! format produced from it.
//!
//! Each paragraph is aligned independently by dynamic programming over six
//! bead shapes. A bead costs `-ln(prior)` plus a length penalty
//! `-ln P(|Z| >= |delta|)` for a standard normal `Z`, where
//! `delta = (Lt - c*Ls) / sqrt(Ls * s2)` compares the summed character
//! lengths on both sides.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Paragraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeadType {
    #[serde(rename = "1-1")]
    OneOne,
    #[serde(rename = "1-0")]
    OneZero,
    #[serde(rename = "0-1")]
    ZeroOne,
    #[serde(rename = "2-1")]
    TwoOne,
    #[serde(rename = "1-2")]
    OneTwo,
    #[serde(rename = "2-2")]
    TwoTwo,
}

impl BeadType {
    pub const ALL: [BeadType; 6] = [
        BeadType::OneOne,
        BeadType::OneZero,
        BeadType::ZeroOne,
        BeadType::TwoOne,
        BeadType::OneTwo,
        BeadType::TwoTwo,
    ];

    /// `(source sentences, target sentences)` covered by the bead.
    pub fn lens(self) -> (usize, usize) {
        match self {
            BeadType::OneOne => (1, 1),
            BeadType::OneZero => (1, 0),
            BeadType::ZeroOne => (0, 1),
            BeadType::TwoOne => (2, 1),
            BeadType::OneTwo => (1, 2),
            BeadType::TwoTwo => (2, 2),
        }
    }

    pub fn from_lens(src: usize, tgt: usize) -> Option<BeadType> {
        BeadType::ALL.into_iter().find(|b| b.lens() == (src, tgt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeadPriors {
    pub one_one: f64,
    pub one_zero: f64,
    pub zero_one: f64,
    pub two_one: f64,
    pub one_two: f64,
    pub two_two: f64,
}

impl Default for BeadPriors {
    fn default() -> Self {
        BeadPriors {
            one_one: 0.89,
            one_zero: 0.0099,
            zero_one: 0.0099,
            two_one: 0.0445,
            one_two: 0.0445,
            two_two: 0.011,
        }
    }
}

impl BeadPriors {
    pub fn get(&self, bead: BeadType) -> f64 {
        match bead {
            BeadType::OneOne => self.one_one,
            BeadType::OneZero => self.one_zero,
            BeadType::ZeroOne => self.zero_one,
            BeadType::TwoOne => self.two_one,
            BeadType::OneTwo => self.one_two,
            BeadType::TwoTwo => self.two_two,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignParams {
    pub priors: BeadPriors,
    /// Variance of target length per source character (`s2`).
    pub variance: f64,
    /// Expected target/source character ratio (`c`).
    pub length_ratio: f64,
}

impl Default for AlignParams {
    fn default() -> Self {
        AlignParams {
            priors: BeadPriors::default(),
            variance: 6.8,
            length_ratio: 1.0,
        }
    }
}

impl AlignParams {
    pub fn validate(&self) -> Result<()> {
        for bead in BeadType::ALL {
            let p = self.priors.get(bead);
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!("prior for {bead:?} must be in (0, 1], got {p}")));
            }
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::invalid(format!("variance must be positive, got {}", self.variance)));
        }
        if !(self.length_ratio > 0.0 && self.length_ratio.is_finite()) {
            return Err(Error::invalid(format!("length ratio must be positive, got {}", self.length_ratio)));
        }
        Ok(())
    }
}

/// Natural log of the complementary error function.
///
/// Uses the Chebyshev-fitted rational approximation with fractional error
/// below 1.2e-7, evaluated in log space so large arguments stay finite.
pub fn ln_erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let poly = -z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98 + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77))))))));
    let ln_pos = t.ln() + poly;
    if x >= 0.0 {
        ln_pos
    } else {
        (2.0 - ln_pos.exp()).ln()
    }
}

/// `-ln P(|Z| >= |delta|)` for a standard normal `Z`; symmetric in `delta`.
pub fn length_penalty(delta: f64) -> f64 {
    (-ln_erfc(delta.abs() / std::f64::consts::SQRT_2)).max(0.0)
}

/// Normalized length discrepancy of a bead with `ls` source and `lt` target
/// characters.
///
/// When the source side is empty the expected source length `lt / c` stands
/// in for `ls` in the variance term.
pub fn length_delta(ls: usize, lt: usize, params: &AlignParams) -> f64 {
    let (ls, lt) = (ls as f64, lt as f64);
    let c = params.length_ratio;
    let base = if ls > 0.0 { ls } else { lt / c };
    if base == 0.0 {
        return 0.0;
    }
    (lt - c * ls) / (base * params.variance).sqrt()
}

pub fn bead_cost(bead: BeadType, ls: usize, lt: usize, params: &AlignParams) -> f64 {
    -params.priors.get(bead).ln() + length_penalty(length_delta(ls, lt, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentBead {
    /// Source sentence ordinals (0-based) within the paragraph.
    pub src: Range<usize>,
    pub tgt: Range<usize>,
    pub bead_type: BeadType,
    pub cost: f64,
}

/// Minimum-cost monotone bead cover of two sentence-length sequences.
pub fn align_paragraph(src_lens: &[usize], tgt_lens: &[usize], params: &AlignParams) -> Vec<AlignmentBead> {
    let (n, m) = (src_lens.len(), tgt_lens.len());
    let width = m + 1;
    let mut cost = vec![f64::INFINITY; (n + 1) * width];
    let mut back: Vec<Option<(BeadType, f64)>> = vec![None; (n + 1) * width];
    cost[0] = 0.0;

    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut choice = None;
            for bead in BeadType::ALL {
                let (di, dj) = bead.lens();
                if di > i || dj > j {
                    continue;
                }
                let prev = cost[(i - di) * width + (j - dj)];
                if !prev.is_finite() {
                    continue;
                }
                let ls: usize = src_lens[i - di..i].iter().sum();
                let lt: usize = tgt_lens[j - dj..j].iter().sum();
                let c = bead_cost(bead, ls, lt, params);
                if prev + c < best {
                    best = prev + c;
                    choice = Some((bead, c));
                }
            }
            cost[i * width + j] = best;
            back[i * width + j] = choice;
        }
    }

    let mut beads = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let (bead, c) = back[i * width + j].expect("every cell is reachable");
        let (di, dj) = bead.lens();
        beads.push(AlignmentBead {
            src: i - di..i,
            tgt: j - dj..j,
            bead_type: bead,
            cost: c,
        });
        i -= di;
        j -= dj;
    }
    beads.reverse();
    beads
}

pub fn total_cost(beads: &[AlignmentBead]) -> f64 {
    beads.iter().map(|b| b.cost).sum()
}

/// Checks that `beads` partition `0..n_src` and `0..n_tgt` monotonically.
pub fn check_cover(beads: &[AlignmentBead], n_src: usize, n_tgt: usize) -> Result<()> {
    let (mut s, mut t) = (0, 0);
    for bead in beads {
        if bead.src.start != s || bead.tgt.start != t {
            return Err(Error::integrity(format!("bead {bead:?} does not continue at ({s}, {t})")));
        }
        if BeadType::from_lens(bead.src.len(), bead.tgt.len()) != Some(bead.bead_type) {
            return Err(Error::integrity(format!("bead {bead:?} has inconsistent type")));
        }
        s = bead.src.end;
        t = bead.tgt.end;
    }
    if (s, t) != (n_src, n_tgt) {
        return Err(Error::integrity(format!("beads cover ({s}, {t}) of ({n_src}, {n_tgt})")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParagraphAlignment {
    pub doc_id: String,
    pub para_id: String,
    pub beads: Vec<AlignmentBead>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentAlignment {
    pub alignments: Vec<ParagraphAlignment>,
    /// Source paragraphs that have no target counterpart.
    pub unpaired: Vec<String>,
}

fn lengths(para: &Paragraph) -> Vec<usize> {
    para.sentences.iter().map(|s| s.char_len()).collect()
}

/// Aligns every source paragraph that has a target paragraph with the same
/// `para_id`. Beads never cross paragraph boundaries.
pub fn align_document(src: &Document, tgt: &Document, params: &AlignParams) -> Result<DocumentAlignment> {
    params.validate()?;
    if src.doc_id != tgt.doc_id {
        return Err(Error::integrity(format!(
            "cannot align document {:?} with {:?}",
            src.doc_id, tgt.doc_id
        )));
    }
    let tgt_paras: HashMap<&str, &Paragraph> = tgt.paragraphs.iter().map(|p| (p.para_id.as_str(), p)).collect();
    for para in &tgt.paragraphs {
        if src.paragraph(&para.para_id).is_none() {
            return Err(Error::integrity(format!(
                "target paragraph {}/{} has no source paragraph",
                tgt.doc_id, para.para_id
            )));
        }
    }

    let mut unpaired = Vec::new();
    let mut pairs = Vec::new();
    for para in &src.paragraphs {
        match tgt_paras.get(para.para_id.as_str()) {
            Some(t) => pairs.push((para, *t)),
            None => unpaired.push(para.para_id.clone()),
        }
    }
    let alignments = pairs
        .par_iter()
        .map(|(s, t)| ParagraphAlignment {
            doc_id: src.doc_id.clone(),
            para_id: s.para_id.clone(),
            beads: align_paragraph(&lengths(s), &lengths(t), params),
        })
        .collect();
    Ok(DocumentAlignment { alignments, unpaired })
}

/// Total target characters over total source characters.
pub fn estimate_length_ratio<'a, I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = (&'a Document, &'a Document)>,
{
    let (mut src, mut tgt) = (0usize, 0usize);
    for (s, t) in pairs {
        src += s.paragraphs.iter().flat_map(|p| &p.sentences).map(|x| x.char_len()).sum::<usize>();
        tgt += t.paragraphs.iter().flat_map(|p| &p.sentences).map(|x| x.char_len()).sum::<usize>();
    }
    (src > 0 && tgt > 0).then(|| tgt as f64 / src as f64)
}

// ---------------------------------------------------------------------------
// Bitext records

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitextRecord {
    pub doc_id: String,
    pub para_id: String,
    pub src_ids: Vec<String>,
    pub tgt_ids: Vec<String>,
    pub src_text: String,
    pub tgt_text: String,
    /// Pivot-language text, present only in pivoted pair corpora.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot_text: Option<String>,
}

impl BitextRecord {
    /// Join key: `doc_id/src_ids/tgt_ids` with IDs comma-joined.
    pub fn id(&self) -> String {
        format!("{}/{}/{}", self.doc_id, self.src_ids.join(","), self.tgt_ids.join(","))
    }
}

/// One record per bead; beads with an empty side are skipped when
/// `drop_empty` is set.
pub fn emit_bitext(
    alignments: &[ParagraphAlignment],
    src: &Document,
    tgt: &Document,
    drop_empty: bool,
) -> Result<Vec<BitextRecord>> {
    let mut records = Vec::new();
    for pa in alignments {
        let missing = |side: &str| Error::integrity(format!("{side} paragraph {}/{} not found", pa.doc_id, pa.para_id));
        let sp = src.paragraph(&pa.para_id).ok_or_else(|| missing("source"))?;
        let tp = tgt.paragraph(&pa.para_id).ok_or_else(|| missing("target"))?;
        check_cover(&pa.beads, sp.sentences.len(), tp.sentences.len())?;
        for bead in &pa.beads {
            if drop_empty && (bead.src.is_empty() || bead.tgt.is_empty()) {
                continue;
            }
            let ss = &sp.sentences[bead.src.clone()];
            let ts = &tp.sentences[bead.tgt.clone()];
            records.push(BitextRecord {
                doc_id: pa.doc_id.clone(),
                para_id: pa.para_id.clone(),
                src_ids: ss.iter().map(|s| s.sent_id.clone()).collect(),
                tgt_ids: ts.iter().map(|s| s.sent_id.clone()).collect(),
                src_text: join_texts(ss.iter().map(|s| s.text.as_str())),
                tgt_text: join_texts(ts.iter().map(|s| s.text.as_str())),
                pivot_text: None,
            });
        }
    }
    Ok(records)
}

pub(crate) fn join_texts<'a>(texts: impl Iterator<Item = &'a str>) -> String {
    texts.collect::<Vec<_>>().join(" ")
}

/// Replaces tabs and line breaks with spaces so the text fits in one cell.
pub fn tsv_cell(text: &str) -> String {
    text.chars()
        .map(|c| if matches!(c, '\t' | '\n' | '\r') { ' ' } else { c })
        .collect()
}

fn split_ids(cell: &str) -> Vec<String> {
    if cell.is_empty() {
        Vec::new()
    } else {
        cell.split(',').map(str::to_string).collect()
    }
}

/// Columns: `doc_id, para_id, src_ids, tgt_ids, src_text, tgt_text`, plus
/// `pivot_text` when present.
pub fn write_bitext<W: Write>(records: &[BitextRecord], mut out: W) -> Result<()> {
    for r in records {
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            tsv_cell(&r.doc_id),
            tsv_cell(&r.para_id),
            r.src_ids.join(","),
            r.tgt_ids.join(","),
            tsv_cell(&r.src_text),
            tsv_cell(&r.tgt_text)
        )?;
        if let Some(p) = &r.pivot_text {
            write!(out, "\t{}", tsv_cell(p))?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_bitext<R: BufRead>(input: R) -> Result<Vec<BitextRecord>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 && cols.len() != 7 {
            return Err(Error::parse(idx + 1, format!("expected 6 or 7 columns, found {}", cols.len())));
        }
        out.push(BitextRecord {
            doc_id: cols[0].to_string(),
            para_id: cols[1].to_string(),
            src_ids: split_ids(cols[2]),
            tgt_ids: split_ids(cols[3]),
            src_text: cols[4].to_string(),
            tgt_text: cols[5].to_string(),
            pivot_text: cols.get(6).map(|s| s.to_string()),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_force_min(src: &[usize], tgt: &[usize], p: &AlignParams) -> f64 {
        fn go(i: usize, j: usize, src: &[usize], tgt: &[usize], p: &AlignParams, acc: f64, best: &mut f64) {
            if i == src.len() && j == tgt.len() {
                *best = best.min(acc);
                return;
            }
            for bead in BeadType::ALL {
                let (di, dj) = bead.lens();
                if i + di <= src.len() && j + dj <= tgt.len() {
                    let ls = src[i..i + di].iter().sum();
                    let lt = tgt[j..j + dj].iter().sum();
                    go(i + di, j + dj, src, tgt, p, acc + bead_cost(bead, ls, lt, p), best);
                }
            }
        }
        let mut best = f64::INFINITY;
        go(0, 0, src, tgt, p, 0.0, &mut best);
        best
    }

    fn types(beads: &[AlignmentBead]) -> Vec<BeadType> {
        beads.iter().map(|b| b.bead_type).collect()
    }

    #[test]
    fn single_pair() {
        let p = AlignParams::default();
        let beads = align_paragraph(&[6], &[8], &p);
        assert_eq!(types(&beads), [BeadType::OneOne]);
    }

    #[test]
    fn equal_lengths_align_one_to_one() {
        let p = AlignParams::default();
        let lens = [100, 50, 100, 50];
        let beads = align_paragraph(&lens, &lens, &p);
        assert_eq!(types(&beads), [BeadType::OneOne; 4]);
        assert!((total_cost(&beads) - brute_force_min(&lens, &lens, &p)).abs() < 1e-12);
    }

    #[test]
    fn merge_beats_deletion() {
        let p = AlignParams::default();
        let beads = align_paragraph(&[60, 40], &[100], &p);
        assert_eq!(types(&beads), [BeadType::TwoOne]);
        let merge = bead_cost(BeadType::TwoOne, 100, 100, &p);
        let split = bead_cost(BeadType::OneOne, 60, 100, &p) + bead_cost(BeadType::OneZero, 40, 0, &p);
        assert!(merge < split);
    }

    #[test]
    fn empty_sides() {
        let p = AlignParams::default();
        assert!(align_paragraph(&[], &[], &p).is_empty());
        assert_eq!(types(&align_paragraph(&[], &[3, 4], &p)), [BeadType::ZeroOne; 2]);
        assert_eq!(types(&align_paragraph(&[5], &[], &p)), [BeadType::OneZero]);
    }

    #[test]
    fn erfc_accuracy() {
        for i in 0..=200 {
            let x = -3.0 + i as f64 * 0.05;
            let exact = statrs::function::erf::erfc(x);
            let approx = ln_erfc(x).exp();
            assert!(((approx - exact) / exact).abs() < 1.2e-7, "x={x}: {approx} vs {exact}");
        }
        // Far tail stays finite where erfc itself underflows.
        assert!(ln_erfc(40.0).is_finite());
        assert!(length_penalty(1e3).is_finite());
    }

    #[test]
    fn penalty_properties() {
        assert!(length_penalty(0.0) < 1e-6);
        assert!(length_penalty(1.0) < length_penalty(2.0));
        // P(|Z| >= 1.96) = 0.05
        assert!((length_penalty(1.959_963_985) - (-(0.05f64).ln())).abs() < 1e-5);
    }

    #[test]
    fn params_validation() {
        let mut p = AlignParams::default();
        p.validate().unwrap();
        p.variance = 0.0;
        assert!(p.validate().is_err());
        let mut p = AlignParams::default();
        p.priors.two_two = 0.0;
        assert!(p.validate().is_err());
    }

    fn doc(id: &str, paras: &[(&str, &[&str])]) -> Document {
        let mut d = Document::new(id, "xx");
        for (pid, sents) in paras {
            let mut p = Paragraph::new(*pid, sents.join(" "));
            p.set_sentences(sents.iter().copied());
            d.paragraphs.push(p);
        }
        d
    }

    #[test]
    fn document_alignment_pairs_paragraphs() {
        let src = doc("1", &[("1", &["Hello there."]), ("2", &["Good.", "Bye."]), ("3", &["End."])]);
        let tgt = doc("1", &[("1", &["Kaixo hor."]), ("3", &["Amaia."])]);
        let da = align_document(&src, &tgt, &AlignParams::default()).unwrap();
        assert_eq!(da.alignments.len(), 2);
        assert_eq!(da.alignments[0].para_id, "1");
        assert_eq!(da.alignments[1].para_id, "3");
        assert_eq!(da.unpaired, ["2"]);

        let full = doc("1", &[("1", &["a"]), ("2", &["b", "c"]), ("3", &["d"])]);
        assert_eq!(align_document(&src, &full, &AlignParams::default()).unwrap().alignments.len(), 3);
    }

    #[test]
    fn orphan_target_paragraph_is_an_error() {
        let src = doc("1", &[("1", &["a"])]);
        let tgt = doc("1", &[("1", &["a"]), ("9", &["b"])]);
        assert!(matches!(align_document(&src, &tgt, &AlignParams::default()), Err(Error::Integrity(_))));
    }

    #[test]
    fn bitext_emission_and_drop_empty() {
        let src = doc("7", &[("1", &["One.", "Two."])]);
        let mut tgt = doc("7", &[("1", &["Bat.", "Bi.", "Extra."])]);
        tgt.paragraphs[0].sentences.remove(0);
        let pa = ParagraphAlignment {
            doc_id: "7".into(),
            para_id: "1".into(),
            beads: vec![
                AlignmentBead { src: 0..1, tgt: 0..0, bead_type: BeadType::OneZero, cost: 1.0 },
                AlignmentBead { src: 1..2, tgt: 0..1, bead_type: BeadType::OneOne, cost: 0.1 },
                AlignmentBead { src: 2..2, tgt: 1..2, bead_type: BeadType::ZeroOne, cost: 1.0 },
            ],
        };
        let kept = emit_bitext(std::slice::from_ref(&pa), &src, &tgt, true).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].src_ids, ["1.2"]);
        assert_eq!(kept[0].tgt_ids, ["1.2"]);
        assert_eq!(kept[0].id(), "7/1.2/1.2");
        let all = emit_bitext(&[pa], &src, &tgt, false).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all[0].tgt_ids.is_empty());
    }

    #[test]
    fn bitext_tsv() {
        let r = BitextRecord {
            doc_id: "1".into(),
            para_id: "2".into(),
            src_ids: vec!["2.1".into(), "2.2".into()],
            tgt_ids: vec!["2.1".into()],
            src_text: "a\tb\nc".into(),
            tgt_text: "x".into(),
            pivot_text: None,
        };
        let mut buf = Vec::new();
        write_bitext(std::slice::from_ref(&r), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1\t2\t2.1,2.2\t2.1\ta b c\tx\n");
        let back = read_bitext(buf.as_slice()).unwrap();
        assert_eq!(back[0].src_ids, r.src_ids);
        assert_eq!(back[0].src_text, "a b c");
        assert!(read_bitext("a\tb\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn dp_matches_brute_force(src in prop::collection::vec(1usize..120, 0..5), tgt in prop::collection::vec(1usize..120, 0..5), ratio in 0.7f64..1.4) {
            let p = AlignParams { length_ratio: ratio, ..AlignParams::default() };
            let beads = align_paragraph(&src, &tgt, &p);
            check_cover(&beads, src.len(), tgt.len()).unwrap();
            let best = brute_force_min(&src, &tgt, &p);
            prop_assert!((total_cost(&beads) - best).abs() <= 1e-9 * best.max(1.0));
        }

        #[test]
        fn penalty_is_symmetric(d in -50f64..50.0) {
            prop_assert_eq!(length_penalty(d), length_penalty(-d));
            prop_assert!(length_penalty(d) >= 0.0);
        }
    }
}
