//! Corpus-level stage functions and the end-to-end pipeline run.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use pivotforge::align::{align_document, emit_bitext, estimate_length_ratio, write_bitext, AlignParams, BitextRecord};
use pivotforge::align::tsv_cell;
use pivotforge::batch::{custom_id, filter_refusal_lines, ingest_batch, read_manifest, read_responses, IngestReport};
use pivotforge::corpus::{compute_stats, write_canonical, CorpusStats, Document, Paragraph, Sentence};
use pivotforge::prep::{filter_by_language, read_profiles, segment, LangProfile, LangVerdict, SegmenterRegistry};
use pivotforge::Error;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};
use crate::fsio::{self, StagedOutputs};

/// IDs of the paragraphs a batch would contain, in corpus order.
pub fn manifest_ids(docs: &[Document]) -> Vec<String> {
    docs.iter()
        .flat_map(|d| {
            d.paragraphs
                .iter()
                .filter(|p| !p.raw_text.trim().is_empty())
                .map(move |p| custom_id(&d.doc_id, &p.para_id))
        })
        .collect()
}

/// Target-language documents built from ingested translations, with
/// refusal lines removed. Paragraphs keep their source IDs; documents
/// without any translated paragraph are left out. Returns the documents and
/// the number of lines removed.
pub fn translated_documents<S: AsRef<str>>(
    source: &[Document],
    report: &IngestReport,
    target_lang: &str,
    refusal_patterns: &[S],
) -> (Vec<Document>, usize) {
    let translations = report.translation_map();
    let mut dropped_lines = 0;
    let mut docs = Vec::new();
    for src in source {
        let mut doc = Document::new(src.doc_id.clone(), target_lang);
        for para in &src.paragraphs {
            if let Some(text) = translations.get(custom_id(&src.doc_id, &para.para_id).as_str()) {
                let (kept, n) = filter_refusal_lines(text, refusal_patterns);
                if n > 0 {
                    log::info!("{}/{}: removed {n} refusal line(s)", src.doc_id, para.para_id);
                }
                dropped_lines += n;
                let mut p = Paragraph::new(para.para_id.clone(), kept);
                p.speaker = para.speaker.clone();
                doc.paragraphs.push(p);
            }
        }
        if !doc.paragraphs.is_empty() {
            docs.push(doc);
        }
    }
    (docs, dropped_lines)
}

/// Splits every paragraph that has no sentences yet.
pub fn segment_documents(docs: &mut [Document], registry: &SegmenterRegistry) {
    for doc in docs {
        let profile = registry.resolve_profile(&doc.lang);
        for para in &mut doc.paragraphs {
            if para.sentences.is_empty() {
                para.set_sentences(segment(&para.raw_text, &profile));
            }
        }
    }
}

pub fn sentence_count(docs: &[Document]) -> u64 {
    docs.iter().map(|d| d.sentence_count() as u64).sum()
}

struct Located {
    doc: usize,
    para: usize,
    sentence: Sentence,
}

impl AsRef<str> for Located {
    fn as_ref(&self) -> &str {
        &self.sentence.text
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DroppedSentence {
    pub doc_id: String,
    pub sent_id: String,
    pub text: String,
    pub verdict: Option<LangVerdict>,
}

/// Removes sentences not identified as `lang`. Surviving sentences keep
/// their IDs.
pub fn filter_documents(
    docs: &[Document],
    lang: &str,
    profiles: &[LangProfile],
    min_margin: f64,
) -> CliResult<(Vec<Document>, Vec<DroppedSentence>)> {
    let mut items = Vec::new();
    let mut out: Vec<Document> = docs.to_vec();
    for (d, doc) in out.iter_mut().enumerate() {
        for (p, para) in doc.paragraphs.iter_mut().enumerate() {
            for sentence in std::mem::take(&mut para.sentences) {
                items.push(Located { doc: d, para: p, sentence });
            }
        }
    }
    let result = filter_by_language(items, lang, profiles, min_margin)?;
    for item in result.kept {
        out[item.doc].paragraphs[item.para].sentences.push(item.sentence);
    }
    let dropped = result
        .dropped
        .into_iter()
        .map(|(item, verdict)| DroppedSentence {
            doc_id: out[item.doc].doc_id.clone(),
            sent_id: item.sentence.sent_id,
            text: item.sentence.text,
            verdict,
        })
        .collect();
    Ok((out, dropped))
}

/// Aligns every target document with the source document of the same ID
/// and emits records for beads with both sides non-empty. Returns the
/// records and the `doc/para` IDs of source paragraphs without a
/// translation.
pub fn align_corpus(
    source: &[Document],
    target: &[Document],
    params: &AlignParams,
) -> CliResult<(Vec<BitextRecord>, Vec<String>)> {
    let by_id: HashMap<&str, &Document> = source.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    for t in target {
        if !by_id.contains_key(t.doc_id.as_str()) {
            return Err(Error::Integrity(format!("target document {} has no source document", t.doc_id)).into());
        }
    }
    let targets: HashMap<&str, &Document> = target.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    let mut records = Vec::new();
    let mut unpaired = Vec::new();
    for src in source {
        let Some(tgt) = targets.get(src.doc_id.as_str()) else {
            unpaired.extend(src.paragraphs.iter().map(|p| custom_id(&src.doc_id, &p.para_id)));
            continue;
        };
        let aligned = align_document(src, tgt, params)?;
        unpaired.extend(aligned.unpaired.iter().map(|p| custom_id(&src.doc_id, p)));
        records.extend(emit_bitext(&aligned.alignments, src, tgt, true)?);
    }
    Ok((records, unpaired))
}

pub fn length_ratio(source: &[Document], target: &[Document]) -> Option<f64> {
    let by_id: HashMap<&str, &Document> = source.iter().map(|d| (d.doc_id.as_str(), d)).collect();
    estimate_length_ratio(target.iter().filter_map(|t| by_id.get(t.doc_id.as_str()).map(|s| (*s, t))))
}

pub fn write_dropped<W: Write + ?Sized>(dropped: &[DroppedSentence], out: &mut W) -> CliResult<()> {
    writeln!(out, "doc_id\tsent_id\tidentified\tmargin\ttext").map_err(Error::from)?;
    for d in dropped {
        let (lang, margin) = match &d.verdict {
            Some(v) => (v.lang.clone(), format!("{:.4}", v.margin)),
            None => ("-".into(), "-".into()),
        };
        writeln!(out, "{}\t{}\t{}\t{}\t{}", d.doc_id, d.sent_id, lang, margin, tsv_cell(&d.text)).map_err(Error::from)?;
    }
    Ok(())
}

pub fn write_json<W: Write + ?Sized, T: Serialize>(value: &T, out: &mut W) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    out.write_all(b"\n").map_err(Error::from)?;
    Ok(())
}

/// Summary of the ingest and filtering stages.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub requested: usize,
    pub translated: usize,
    pub missing: Vec<String>,
    pub refused: Vec<String>,
    pub errored: Vec<String>,
    pub duplicates_ignored: Vec<String>,
    pub refusal_lines_removed: usize,
    pub langid_dropped: usize,
    pub untranslated_paragraphs: Vec<String>,
    pub length_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub stats: CorpusStats,
    pub report: RunReport,
    pub outputs: Vec<PathBuf>,
}

pub const OUTPUT_FILES: [&str; 6] = [
    "source.jsonl",
    "target.jsonl",
    "langid_dropped.tsv",
    "bitext.tsv",
    "report.json",
    "stats.json",
];

/// Runs ingest, refusal filtering, segmentation, language filtering,
/// alignment and emission. Each stage's output is staged as `.partial` and
/// all are renamed into place once every stage has succeeded.
pub fn run_pipeline(cfg: &PipelineConfig) -> CliResult<PipelineOutcome> {
    let out_dir = &cfg.output_dir;
    let path = |name: &str| out_dir.join(name);
    let mut staged = StagedOutputs::new();

    let registry = match &cfg.segmenter_dir {
        Some(dir) => SegmenterRegistry::load_dir(dir)?,
        None => SegmenterRegistry::builtin(),
    };
    let mut source = fsio::load_corpus(&cfg.source_corpus, &cfg.source_lang, cfg.lenient)?;
    segment_documents(&mut source, &registry);
    staged.write(&path("source.jsonl"), |w| Ok(write_canonical(&source, w)?))?;

    // Ingest.
    let manifest = match &cfg.manifest {
        Some(p) => read_manifest(fsio::open(p)?)?,
        None => manifest_ids(&source),
    };
    let responses = read_responses(fsio::open(&cfg.responses)?)?;
    let ingest = ingest_batch(responses, &manifest, cfg.lenient)?;

    // Refusal filter, then segmentation.
    let (mut target, refusal_lines) = translated_documents(&source, &ingest, &cfg.target_lang, &cfg.refusal_patterns);
    segment_documents(&mut target, &registry);
    let n_seg = sentence_count(&target);

    // Language identification.
    let (target, dropped) = match &cfg.langid_profiles {
        Some(p) => {
            let profiles = read_profiles(fsio::open(p)?)?;
            filter_documents(&target, &cfg.target_lang, &profiles, cfg.min_margin)?
        }
        None => {
            log::warn!("no language profiles configured; skipping language filtering");
            (target, Vec::new())
        }
    };
    let n_langid = sentence_count(&target);
    staged.write(&path("target.jsonl"), |w| Ok(write_canonical(&target, w)?))?;
    staged.write(&path("langid_dropped.tsv"), |w| write_dropped(&dropped, w))?;

    // Alignment.
    let mut params = cfg.aligner;
    if cfg.estimate_length_ratio {
        if let Some(c) = length_ratio(&source, &target) {
            params.length_ratio = c;
        }
    }
    let (bitext, unpaired) = align_corpus(&source, &target, &params)?;
    staged.write(&path("bitext.tsv"), |w| Ok(write_bitext(&bitext, w)?))?;

    let stats = compute_stats(n_seg, n_langid, bitext.len() as u64)?;
    let report = RunReport {
        requested: manifest.len(),
        translated: ingest.translations.len(),
        missing: ingest.missing,
        refused: ingest.refused,
        errored: ingest.errored,
        duplicates_ignored: ingest.duplicates_ignored,
        refusal_lines_removed: refusal_lines,
        langid_dropped: dropped.len(),
        untranslated_paragraphs: unpaired,
        length_ratio: params.length_ratio,
    };
    staged.write(&path("report.json"), |w| write_json(&report, w))?;
    staged.write(&path("stats.json"), |w| write_json(&stats, w))?;
    staged.commit()?;

    Ok(PipelineOutcome {
        stats,
        report,
        outputs: OUTPUT_FILES.iter().map(|f| path(f)).collect(),
    })
}

pub fn read_stats(path: &Path) -> CliResult<CorpusStats> {
    let text = fsio::read_to_string(path)?;
    let raw: CorpusStats = serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    Ok(compute_stats(raw.n_after_segmentation, raw.n_after_langid, raw.n_aligned)?)
}
