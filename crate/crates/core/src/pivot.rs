//! Transitive alignment through a pivot language.
//!
//! Every language is aligned to the pivot paragraph by a list of beads that
//! partitions the pivot sentences. Two languages are joined by merging
//! adjacent pivot positions whenever any bead of either language spans
//! them, i.e. the finest common coarsening of the pivot-side partitions.
//! The same closure over all languages at once yields multi-way units.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::ops::Range;

use serde::Serialize;

use crate::align::{join_texts, tsv_cell, BitextRecord};
use crate::corpus::{Document, Paragraph};
use crate::error::{Error, Result};

/// A link between a pivot span and a foreign span (ordinals within one
/// paragraph). Either side may be empty, not both.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PivotBead {
    pub pivot: Range<usize>,
    pub foreign: Range<usize>,
}

impl PivotBead {
    pub fn new(pivot: Range<usize>, foreign: Range<usize>) -> Self {
        PivotBead { pivot, foreign }
    }
}

/// Beads of every non-pivot language over one pivot paragraph.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BeadGraph {
    pub pivot_len: usize,
    pub edges: BTreeMap<String, Vec<PivotBead>>,
}

/// Checks that `beads` partition `0..pivot_len` on the pivot side and a
/// prefix of the foreign sentences on the other; returns the foreign count.
pub fn validate_beads(lang: &str, beads: &[PivotBead], pivot_len: usize) -> Result<usize> {
    let (mut p, mut f) = (0, 0);
    for bead in beads {
        if bead.pivot.start != p || bead.foreign.start != f || bead.pivot.end < p || bead.foreign.end < f {
            return Err(Error::integrity(format!(
                "{lang}: bead {bead:?} does not continue at pivot {p}, foreign {f}"
            )));
        }
        if bead.pivot.is_empty() && bead.foreign.is_empty() {
            return Err(Error::integrity(format!("{lang}: empty bead at pivot {p}")));
        }
        p = bead.pivot.end;
        f = bead.foreign.end;
    }
    if p != pivot_len {
        return Err(Error::integrity(format!(
            "{lang}: beads cover pivot 0..{p}, expected 0..{pivot_len}"
        )));
    }
    Ok(f)
}

fn pivot_extent(beads: &[PivotBead]) -> usize {
    beads.last().map_or(0, |b| b.pivot.end)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One block of the common coarsening, with the foreign span each language
/// contributes to it (possibly empty).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub pivot: Range<usize>,
    pub spans: BTreeMap<String, Range<usize>>,
}

/// Finest common coarsening of the pivot partitions of `graph`.
///
/// A language's span in a block is the hull of the foreign spans of its
/// beads inside the block, so foreign-only beads strictly inside a block
/// are absorbed and those on block boundaries belong to no block.
pub fn coarsen(graph: &BeadGraph) -> Result<Vec<Block>> {
    for (lang, beads) in &graph.edges {
        validate_beads(lang, beads, graph.pivot_len)?;
    }
    let n = graph.pivot_len;
    let mut uf = UnionFind::new(n);
    for beads in graph.edges.values() {
        for bead in beads {
            for p in bead.pivot.start + 1..bead.pivot.end {
                uf.union(p - 1, p);
            }
        }
    }

    let mut block_of = vec![0usize; n];
    let mut blocks: Vec<Block> = Vec::new();
    for p in 0..n {
        if p == 0 || uf.find(p) != uf.find(p - 1) {
            blocks.push(Block {
                pivot: p..p + 1,
                spans: BTreeMap::new(),
            });
        } else if let Some(last) = blocks.last_mut() {
            last.pivot.end = p + 1;
        }
        block_of[p] = blocks.len() - 1;
    }

    for (lang, beads) in &graph.edges {
        let mut hulls: Vec<Option<Range<usize>>> = vec![None; blocks.len()];
        for bead in beads.iter().filter(|b| !b.pivot.is_empty()) {
            let hull = &mut hulls[block_of[bead.pivot.start]];
            *hull = Some(match hull.take() {
                None => bead.foreign.clone(),
                Some(h) => {
                    if bead.foreign.is_empty() {
                        h
                    } else if h.is_empty() {
                        bead.foreign.clone()
                    } else {
                        h.start..bead.foreign.end
                    }
                }
            });
        }
        for (block, hull) in blocks.iter_mut().zip(hulls) {
            let span = hull.expect("every block contains a bead of every language");
            block.spans.insert(lang.clone(), span);
        }
    }
    Ok(blocks)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairUnit {
    pub x: Range<usize>,
    pub y: Range<usize>,
    pub pivot: Range<usize>,
}

/// Joins two pivot alignments of the same paragraph. Units where either
/// side is empty are left out.
pub fn project_pair(a: &[PivotBead], b: &[PivotBead]) -> Result<Vec<PairUnit>> {
    let (pa, pb) = (pivot_extent(a), pivot_extent(b));
    if pa != pb {
        return Err(Error::integrity(format!(
            "alignments cover different pivot ranges: 0..{pa} vs 0..{pb}"
        )));
    }
    let graph = BeadGraph {
        pivot_len: pa,
        edges: BTreeMap::from([("x".to_string(), a.to_vec()), ("y".to_string(), b.to_vec())]),
    };
    Ok(coarsen(&graph)?
        .into_iter()
        .map(|blk| PairUnit {
            x: blk.spans["x"].clone(),
            y: blk.spans["y"].clone(),
            pivot: blk.pivot,
        })
        .filter(|u| !u.x.is_empty() && !u.y.is_empty())
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiWayUnit {
    /// `doc_id/para_id/block_index`.
    pub unit_id: String,
    pub pivot: Range<usize>,
    pub spans: BTreeMap<String, Range<usize>>,
}

/// Multi-way units for one pivot paragraph.
pub fn build_multiway(doc_id: &str, para_id: &str, graph: &BeadGraph) -> Result<Vec<MultiWayUnit>> {
    Ok(coarsen(graph)?
        .into_iter()
        .enumerate()
        .map(|(i, blk)| MultiWayUnit {
            unit_id: format!("{doc_id}/{para_id}/{i}"),
            pivot: blk.pivot,
            spans: blk.spans,
        })
        .collect())
}

/// Pairs every new language with every existing one.
pub fn enumerate_new_pairs(existing: &BTreeSet<String>, new: &BTreeSet<String>) -> Result<Vec<(String, String)>> {
    if let Some(lang) = existing.intersection(new).next() {
        return Err(Error::invalid(format!("language {lang} is both existing and new")));
    }
    Ok(existing
        .iter()
        .flat_map(|e| new.iter().map(move |n| (e.clone(), n.clone())))
        .collect())
}

// ---------------------------------------------------------------------------
// Sentence-ID level: alignment files, corpus-wide projection, emission.

/// A bead expressed in sentence IDs, as read from an alignment file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdBead {
    pub pivot_ids: Vec<String>,
    pub foreign_ids: Vec<String>,
}

pub type ParagraphKey = (String, String);

/// Pivot alignments of one language, keyed by `(doc_id, para_id)`.
#[derive(Debug, Clone, Default)]
pub struct LanguageAlignments {
    pub lang: String,
    pub paragraphs: HashMap<ParagraphKey, Vec<IdBead>>,
}

fn split_ids(cell: &str) -> Vec<String> {
    if cell.is_empty() {
        Vec::new()
    } else {
        cell.split(',').map(str::to_string).collect()
    }
}

/// Reads `doc_id, para_id, pivot_ids, foreign_ids` lines; extra columns (as
/// in bitext files) are ignored, so aligner output can be fed in directly.
pub fn read_alignments<R: BufRead>(lang: &str, input: R) -> Result<LanguageAlignments> {
    let mut out = LanguageAlignments {
        lang: lang.to_string(),
        paragraphs: HashMap::new(),
    };
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(Error::parse(idx + 1, format!("expected at least 4 columns, found {}", cols.len())));
        }
        let bead = IdBead {
            pivot_ids: split_ids(cols[2]),
            foreign_ids: split_ids(cols[3]),
        };
        if bead.pivot_ids.is_empty() && bead.foreign_ids.is_empty() {
            return Err(Error::parse(idx + 1, "bead with no sentence ids"));
        }
        out.paragraphs
            .entry((cols[0].to_string(), cols[1].to_string()))
            .or_default()
            .push(bead);
    }
    Ok(out)
}

/// Converts ID beads to ordinal beads over `pivot`.
///
/// Pivot sentences not mentioned by any bead get an implicit pivot-only
/// bead, which is what an aligner run that dropped deletion beads leaves
/// behind. Foreign ordinals follow bead order. Returns the beads and the
/// foreign sentence IDs by ordinal.
pub fn ordinal_beads(doc_id: &str, pivot: &Paragraph, beads: &[IdBead]) -> Result<(Vec<PivotBead>, Vec<String>)> {
    let index: HashMap<&str, usize> = pivot
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.sent_id.as_str(), i))
        .collect();
    let mut out = Vec::new();
    let mut foreign_ids: Vec<String> = Vec::new();
    let mut next_pivot = 0;
    for bead in beads {
        let mut ordinals = Vec::with_capacity(bead.pivot_ids.len());
        for id in &bead.pivot_ids {
            let o = *index.get(id.as_str()).ok_or_else(|| {
                Error::integrity(format!("pivot sentence {doc_id}/{id} is not in paragraph {}", pivot.para_id))
            })?;
            ordinals.push(o);
        }
        if ordinals.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::integrity(format!(
                "pivot span {:?} in {doc_id}/{} is not contiguous",
                bead.pivot_ids, pivot.para_id
            )));
        }
        let start = ordinals.first().copied().unwrap_or(next_pivot);
        if start < next_pivot {
            return Err(Error::integrity(format!(
                "beads out of order at pivot {doc_id}/{}",
                bead.pivot_ids.join(",")
            )));
        }
        for p in next_pivot..start {
            out.push(PivotBead::new(p..p + 1, foreign_ids.len()..foreign_ids.len()));
        }
        let f0 = foreign_ids.len();
        foreign_ids.extend(bead.foreign_ids.iter().cloned());
        out.push(PivotBead::new(start..start + ordinals.len(), f0..foreign_ids.len()));
        next_pivot = start + ordinals.len();
    }
    for p in next_pivot..pivot.sentences.len() {
        out.push(PivotBead::new(p..p + 1, foreign_ids.len()..foreign_ids.len()));
    }
    Ok((out, foreign_ids))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiwayParagraph {
    pub doc_id: String,
    pub para_id: String,
    pub units: Vec<MultiWayUnit>,
    pub pivot_ids: Vec<String>,
    pub foreign_ids: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedParagraph {
    pub doc_id: String,
    pub para_id: String,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MultiwayCorpus {
    pub pivot_lang: String,
    pub langs: Vec<String>,
    pub paragraphs: Vec<MultiwayParagraph>,
    /// Pivot paragraphs that some language has no alignment for.
    pub dropped: Vec<DroppedParagraph>,
}

/// Projects all languages through the pivot corpus, paragraph by paragraph
/// in pivot corpus order.
pub fn project_corpus(pivot_docs: &[Document], langs: &[LanguageAlignments]) -> Result<MultiwayCorpus> {
    let mut names = BTreeSet::new();
    for l in langs {
        if !names.insert(l.lang.as_str()) {
            return Err(Error::invalid(format!("language {} given twice", l.lang)));
        }
    }
    let mut corpus = MultiwayCorpus {
        pivot_lang: pivot_docs.first().map(|d| d.lang.clone()).unwrap_or_default(),
        langs: langs.iter().map(|l| l.lang.clone()).collect(),
        ..MultiwayCorpus::default()
    };
    for doc in pivot_docs {
        for para in &doc.paragraphs {
            let key = (doc.doc_id.clone(), para.para_id.clone());
            let missing: Vec<String> = langs
                .iter()
                .filter(|l| !l.paragraphs.contains_key(&key))
                .map(|l| l.lang.clone())
                .collect();
            if !missing.is_empty() {
                corpus.dropped.push(DroppedParagraph {
                    doc_id: key.0,
                    para_id: key.1,
                    missing,
                });
                continue;
            }
            let mut graph = BeadGraph {
                pivot_len: para.sentences.len(),
                edges: BTreeMap::new(),
            };
            let mut foreign_ids = BTreeMap::new();
            for l in langs {
                let (beads, ids) = ordinal_beads(&doc.doc_id, para, &l.paragraphs[&key])?;
                graph.edges.insert(l.lang.clone(), beads);
                foreign_ids.insert(l.lang.clone(), ids);
            }
            corpus.paragraphs.push(MultiwayParagraph {
                units: build_multiway(&doc.doc_id, &para.para_id, &graph)?,
                doc_id: key.0,
                para_id: key.1,
                pivot_ids: para.sentences.iter().map(|s| s.sent_id.clone()).collect(),
                foreign_ids,
            });
        }
    }
    let known: BTreeSet<(&str, &str)> = pivot_docs
        .iter()
        .flat_map(|d| d.paragraphs.iter().map(move |p| (d.doc_id.as_str(), p.para_id.as_str())))
        .collect();
    for l in langs {
        let mut keys: Vec<_> = l.paragraphs.keys().collect();
        keys.sort();
        if let Some((d, p)) = keys.into_iter().find(|(d, p)| !known.contains(&(d.as_str(), p.as_str()))) {
            return Err(Error::integrity(format!("{} alignment for unknown paragraph {d}/{p}", l.lang)));
        }
    }
    Ok(corpus)
}

/// Sentence text by `(doc_id, sent_id)`.
pub type SentenceTexts = HashMap<(String, String), String>;

pub fn sentence_texts(docs: &[Document]) -> SentenceTexts {
    docs.iter()
        .flat_map(|d| {
            d.paragraphs.iter().flat_map(move |p| {
                p.sentences
                    .iter()
                    .map(move |s| ((d.doc_id.clone(), s.sent_id.clone()), s.text.clone()))
            })
        })
        .collect()
}

fn lookup(texts: &SentenceTexts, lang: &str, doc_id: &str, ids: &[String]) -> Result<String> {
    let mut parts = Vec::with_capacity(ids.len());
    for id in ids {
        let text = texts
            .get(&(doc_id.to_string(), id.clone()))
            .ok_or_else(|| Error::integrity(format!("no {lang} text for sentence {doc_id}/{id}")))?;
        parts.push(text.as_str());
    }
    Ok(join_texts(parts.into_iter()))
}

/// One bitext record per unit with both `lang_x` and `lang_y` non-empty.
/// `texts` maps each language (including the pivot when `pivot_texts` are
/// wanted) to its sentence texts.
pub fn emit_pair_corpus(
    corpus: &MultiwayCorpus,
    lang_x: &str,
    lang_y: &str,
    texts: &HashMap<String, SentenceTexts>,
    include_pivot: bool,
) -> Result<Vec<BitextRecord>> {
    for lang in [lang_x, lang_y] {
        if !corpus.langs.iter().any(|l| l == lang) {
            return Err(Error::invalid(format!("language {lang} is not part of the projection")));
        }
    }
    let texts_for = |lang: &str| {
        texts
            .get(lang)
            .ok_or_else(|| Error::invalid(format!("no sentence texts for {lang}")))
    };
    let (tx, ty) = (texts_for(lang_x)?, texts_for(lang_y)?);
    let tp = if include_pivot { Some(texts_for(&corpus.pivot_lang)?) } else { None };

    let mut records = Vec::new();
    for para in &corpus.paragraphs {
        for unit in &para.units {
            let (sx, sy) = (&unit.spans[lang_x], &unit.spans[lang_y]);
            if sx.is_empty() || sy.is_empty() {
                continue;
            }
            let src_ids = para.foreign_ids[lang_x][sx.clone()].to_vec();
            let tgt_ids = para.foreign_ids[lang_y][sy.clone()].to_vec();
            let pivot_text = match tp {
                Some(t) => Some(lookup(t, &corpus.pivot_lang, &para.doc_id, &para.pivot_ids[unit.pivot.clone()])?),
                None => None,
            };
            records.push(BitextRecord {
                src_text: lookup(tx, lang_x, &para.doc_id, &src_ids)?,
                tgt_text: lookup(ty, lang_y, &para.doc_id, &tgt_ids)?,
                doc_id: para.doc_id.clone(),
                para_id: para.para_id.clone(),
                src_ids,
                tgt_ids,
                pivot_text,
            });
        }
    }
    Ok(records)
}

/// Header `unit_id, <pivot>, <langs...>`, then one row per unit with
/// comma-joined sentence IDs per language.
pub fn write_multiway<W: Write>(corpus: &MultiwayCorpus, mut out: W) -> Result<()> {
    write!(out, "unit_id\t{}", tsv_cell(&corpus.pivot_lang))?;
    for lang in &corpus.langs {
        write!(out, "\t{}", tsv_cell(lang))?;
    }
    out.write_all(b"\n")?;
    for para in &corpus.paragraphs {
        for unit in &para.units {
            write!(out, "{}\t{}", unit.unit_id, para.pivot_ids[unit.pivot.clone()].join(","))?;
            for lang in &corpus.langs {
                write!(out, "\t{}", para.foreign_ids[lang][unit.spans[lang].clone()].join(","))?;
            }
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(p: Range<usize>, f: Range<usize>) -> PivotBead {
        PivotBead::new(p, f)
    }

    fn one_to_one(n: usize) -> Vec<PivotBead> {
        (0..n).map(|i| b(i..i + 1, i..i + 1)).collect()
    }

    #[test]
    fn identical_partitions() {
        let units = project_pair(&one_to_one(4), &one_to_one(4)).unwrap();
        assert_eq!(units.len(), 4);
        assert!(units.iter().all(|u| u.pivot.len() == 1 && u.x.len() == 1 && u.y.len() == 1));
    }

    #[test]
    fn merge_from_one_side() {
        // pivot 0..6; A merges pivot {3,4} into one X sentence.
        let a = vec![b(0..1, 0..1), b(1..2, 1..2), b(2..3, 2..3), b(3..5, 3..4), b(5..6, 4..5)];
        let units = project_pair(&a, &one_to_one(6)).unwrap();
        assert_eq!(units.len(), 5);
        assert_eq!(units[3], PairUnit { x: 3..4, y: 3..5, pivot: 3..5 });
    }

    #[test]
    fn chained_merge() {
        let a = vec![b(0..1, 0..1), b(1..3, 1..2), b(3..4, 2..3)];
        let bb = vec![b(0..2, 0..1), b(2..3, 1..2), b(3..4, 2..3)];
        // A merges pivot {1,2}; B merges {0,1} -> closure {0,1,2}.
        let units = project_pair(&a, &bb).unwrap();
        assert_eq!(units[0], PairUnit { x: 0..2, y: 0..2, pivot: 0..3 });
        assert_eq!(units.len(), 2);
    }

    #[test]
    fn mismatched_pivot_ranges() {
        assert!(matches!(project_pair(&one_to_one(3), &one_to_one(4)), Err(Error::Integrity(_))));
    }

    #[test]
    fn idempotent_on_identical_alignment() {
        let a = vec![b(0..2, 0..1), b(2..3, 1..3), b(3..3, 3..4), b(3..4, 4..4)];
        for u in project_pair(&a, &a).unwrap() {
            assert_eq!(u.x, u.y);
        }
    }

    #[test]
    fn deletion_beads() {
        // X drops pivot 1; Y inserts a sentence between pivots 0 and 1.
        let x = vec![b(0..1, 0..1), b(1..2, 1..1), b(2..3, 1..2)];
        let y = vec![b(0..1, 0..1), b(1..1, 1..2), b(1..2, 2..3), b(2..3, 3..4)];
        let units = project_pair(&x, &y).unwrap();
        assert_eq!(units, vec![
            PairUnit { x: 0..1, y: 0..1, pivot: 0..1 },
            PairUnit { x: 1..2, y: 3..4, pivot: 2..3 },
        ]);
    }

    #[test]
    fn interior_insertions_are_absorbed() {
        // Y merges pivot {0,1}; X has an inserted sentence between them.
        let x = vec![b(0..1, 0..1), b(1..1, 1..2), b(1..2, 2..3)];
        let y = vec![b(0..2, 0..1)];
        let units = project_pair(&x, &y).unwrap();
        assert_eq!(units, vec![PairUnit { x: 0..3, y: 0..1, pivot: 0..2 }]);
    }

    #[test]
    fn multiway_worst_case_covers_paragraph() {
        let mut graph = BeadGraph { pivot_len: 5, edges: BTreeMap::new() };
        graph.edges.insert("a".into(), vec![b(0..2, 0..1), b(2..4, 1..2), b(4..5, 2..3)]);
        graph.edges.insert("b".into(), vec![b(0..1, 0..1), b(1..3, 1..2), b(3..5, 2..3)]);
        let units = build_multiway("d", "p", &graph).unwrap();
        assert_eq!(units.len(), 1);
        assert_eq!(units[0].pivot, 0..5);
        assert_eq!(units[0].unit_id, "d/p/0");
    }

    #[test]
    fn multiway_all_one_to_one() {
        let mut graph = BeadGraph { pivot_len: 3, edges: BTreeMap::new() };
        for l in ["a", "b", "c"] {
            graph.edges.insert(l.into(), one_to_one(3));
        }
        let units = build_multiway("1", "2", &graph).unwrap();
        assert_eq!(units.iter().map(|u| u.pivot.clone()).collect::<Vec<_>>(), [0..1, 1..2, 2..3]);
        assert_eq!(units[2].unit_id, "1/2/2");
    }

    #[test]
    fn invalid_partitions_are_rejected() {
        let mut graph = BeadGraph { pivot_len: 3, edges: BTreeMap::new() };
        graph.edges.insert("a".into(), vec![b(0..1, 0..1), b(2..3, 1..2)]);
        assert!(coarsen(&graph).is_err());
        graph.edges.insert("a".into(), vec![b(0..3, 0..1), b(3..3, 1..1)]);
        assert!(coarsen(&graph).is_err());
    }

    #[test]
    fn pair_enumeration() {
        let set = |n: usize, p: &str| (0..n).map(|i| format!("{p}{i}")).collect::<BTreeSet<_>>();
        assert_eq!(enumerate_new_pairs(&set(21, "e"), &set(7, "n")).unwrap().len(), 147);
        assert!(enumerate_new_pairs(&set(0, "e"), &set(7, "n")).unwrap().is_empty());
        assert!(enumerate_new_pairs(&set(3, "e"), &BTreeSet::new()).unwrap().is_empty());
        let one = enumerate_new_pairs(&set(1, "a"), &set(1, "b")).unwrap();
        assert_eq!(one, [("a0".to_string(), "b0".to_string())]);
        assert!(enumerate_new_pairs(&set(2, "a"), &set(1, "a")).is_err());
    }

    fn para(id: &str, n: usize) -> Paragraph {
        let mut p = Paragraph::new(id, "");
        p.set_sentences((1..=n).map(|i| format!("s{i}")));
        p
    }

    #[test]
    fn ordinal_conversion_fills_gaps() {
        let p = para("2", 4);
        let beads = vec![
            IdBead { pivot_ids: vec!["2.1".into()], foreign_ids: vec!["2.1".into()] },
            IdBead { pivot_ids: vec!["2.3".into(), "2.4".into()], foreign_ids: vec!["2.2".into()] },
        ];
        let (ord, ids) = ordinal_beads("d", &p, &beads).unwrap();
        assert_eq!(ord, vec![b(0..1, 0..1), b(1..2, 1..1), b(2..4, 1..2)]);
        assert_eq!(ids, ["2.1", "2.2"]);
        validate_beads("x", &ord, 4).unwrap();
    }

    #[test]
    fn ordinal_conversion_rejects_bad_ids() {
        let p = para("1", 3);
        let dangling = vec![IdBead { pivot_ids: vec!["1.9".into()], foreign_ids: vec!["a".into()] }];
        assert!(ordinal_beads("d", &p, &dangling).is_err());
        let gap = vec![IdBead { pivot_ids: vec!["1.1".into(), "1.3".into()], foreign_ids: vec![] }];
        assert!(ordinal_beads("d", &p, &gap).is_err());
        let backwards = vec![
            IdBead { pivot_ids: vec!["1.2".into()], foreign_ids: vec!["a".into()] },
            IdBead { pivot_ids: vec!["1.1".into()], foreign_ids: vec!["b".into()] },
        ];
        assert!(ordinal_beads("d", &p, &backwards).is_err());
    }

    #[test]
    fn alignment_file_reading() {
        let text = "1\t1\t1.1\t1.1\n1\t1\t1.2,1.3\t1.2\ttext\tmore\n1\t2\t\t2.1\n";
        let la = read_alignments("fi", text.as_bytes()).unwrap();
        assert_eq!(la.paragraphs[&("1".to_string(), "1".to_string())].len(), 2);
        assert!(la.paragraphs[&("1".to_string(), "2".to_string())][0].pivot_ids.is_empty());
        assert!(read_alignments("fi", "1\t1\t1.1\n".as_bytes()).is_err());
        assert!(read_alignments("fi", "1\t1\t\t\n".as_bytes()).is_err());
    }
}
