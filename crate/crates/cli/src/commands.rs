use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use pivotforge::align::{align_document, emit_bitext, write_bitext, AlignParams};
use pivotforge::annotation::{create_session, Ledger, Session, DEFAULT_GUIDELINES};
use pivotforge::batch::{build_batch, ingest_batch, read_manifest, read_responses, write_manifest, write_requests, DEFAULT_REFUSAL_PATTERN};
use pivotforge::corpus::{compute_stats, read_canonical, write_canonical, Document};
use pivotforge::evalstats::{
    aggregate_item_scores, krippendorff_alpha_interval, read_matrix, spearman, write_summary, zscored_alpha, SummaryRow,
};
use pivotforge::metrics::{
    bin_scores, chrf, corpus_chrf, cumulative_subset, cumulative_subset_shuffled, equal_edges, ingest_external_scores,
    join_scores, write_bin_report, write_plot_csv, ChrfParams, ScoreRecord, ScoreSchema,
};
use pivotforge::pivot::{
    emit_pair_corpus, enumerate_new_pairs, project_corpus, read_alignments, sentence_texts, write_multiway,
    LanguageAlignments,
};
use pivotforge::prep::{read_profiles, train_langid, write_profiles, SegmenterRegistry};
use pivotforge::Error;
use serde::Serialize;

use crate::args::*;
use crate::config::{config_path, PartialConfig, PipelineConfig};
use crate::error::{usage, CliError, CliResult};
use crate::fsio::{self, write_atomic, write_output};
use crate::pipeline::{self, filter_documents, segment_documents, translated_documents, write_dropped, write_json};

fn io(e: std::io::Error) -> CliError {
    Error::from(e).into()
}

fn registry(dir: Option<&Path>) -> CliResult<SegmenterRegistry> {
    Ok(match dir {
        Some(d) => SegmenterRegistry::load_dir(d)?,
        None => SegmenterRegistry::builtin(),
    })
}

fn canonical(path: &Path) -> CliResult<Vec<Document>> {
    Ok(read_canonical(fsio::open(path)?, false)?)
}

pub fn parse(a: ParseArgs) -> CliResult<()> {
    let mut docs = fsio::load_corpus(&a.input, &a.lang, false)?;
    if a.segment {
        segment_documents(&mut docs, &registry(a.segmenter_dir.as_deref())?);
    }
    write_output(a.output.as_deref(), |w| Ok(write_canonical(&docs, w)?))
}

pub fn batch_build(a: BatchBuildArgs) -> CliResult<()> {
    let docs = fsio::load_corpus(&a.input, &a.lang, false)?;
    let requests = build_batch(&docs, &a.target_name, &a.script)?;
    write_atomic(&a.output, |w| Ok(write_requests(&requests, w)?))?;
    write_atomic(&a.manifest, |w| Ok(write_manifest(&requests, w)?))?;
    log::info!("{} requests", requests.len());
    Ok(())
}

pub fn batch_ingest(a: BatchIngestArgs) -> CliResult<()> {
    let source = fsio::load_corpus(&a.source, &a.source_lang, false)?;
    let manifest = read_manifest(fsio::open(&a.manifest)?)?;
    let report = ingest_batch(read_responses(fsio::open(&a.responses)?)?, &manifest, a.lenient)?;
    let patterns: Vec<String> = if a.no_refusal_filter {
        Vec::new()
    } else if a.refusal_patterns.is_empty() {
        vec![DEFAULT_REFUSAL_PATTERN.to_string()]
    } else {
        a.refusal_patterns
    };
    let (docs, removed) = translated_documents(&source, &report, &a.target_lang, &patterns);
    write_atomic(&a.output, |w| Ok(write_canonical(&docs, w)?))?;
    if let Some(path) = &a.report {
        #[derive(Serialize)]
        struct Summary<'a> {
            requested: usize,
            translated: usize,
            missing: &'a [String],
            refused: &'a [String],
            errored: &'a [String],
            duplicates_ignored: &'a [String],
            refusal_lines_removed: usize,
        }
        let summary = Summary {
            requested: manifest.len(),
            translated: report.translations.len(),
            missing: &report.missing,
            refused: &report.refused,
            errored: &report.errored,
            duplicates_ignored: &report.duplicates_ignored,
            refusal_lines_removed: removed,
        };
        write_atomic(path, |w| write_json(&summary, w))?;
    }
    if !report.is_complete() {
        log::warn!(
            "incomplete batch: {} missing, {} refused, {} errored",
            report.missing.len(),
            report.refused.len(),
            report.errored.len()
        );
    }
    Ok(())
}

pub fn segment(a: SegmentArgs) -> CliResult<()> {
    let mut docs = canonical(&a.input)?;
    let reg = registry(a.segmenter_dir.as_deref())?;
    for doc in &mut docs {
        let profile = reg.resolve_profile(a.lang.as_deref().unwrap_or(&doc.lang));
        for para in &mut doc.paragraphs {
            if a.force || para.sentences.is_empty() {
                para.set_sentences(pivotforge::prep::segment(&para.raw_text, &profile));
            }
        }
    }
    write_output(a.output.as_deref(), |w| Ok(write_canonical(&docs, w)?))
}

/// `lang<TAB>text` lines; blank lines and `#` comments are skipped.
fn read_training<R: BufRead>(input: R) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (lang, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse { line: idx + 1, msg: "expected lang<TAB>text".into() })?;
        out.push((lang.trim().to_string(), text.to_string()));
    }
    Ok(out)
}

pub fn langid_train(a: LangidTrainArgs) -> CliResult<()> {
    let corpus = read_training(fsio::open(&a.input)?)?;
    let profiles = train_langid(&corpus, a.max_order)?
        .into_iter()
        .map(|p| p.with_penalty(a.penalty))
        .collect::<Result<Vec<_>, _>>()?;
    write_atomic(&a.output, |w| Ok(write_profiles(&profiles, w)?))
}

pub fn langid_filter(a: LangidFilterArgs) -> CliResult<()> {
    let docs = canonical(&a.input)?;
    let profiles = read_profiles(fsio::open(&a.profiles)?)?;
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    // Documents may differ in language, so filter one language at a time
    // while keeping corpus order.
    for doc in docs {
        let lang = a.lang.clone().unwrap_or_else(|| doc.lang.clone());
        let (mut k, mut d) = filter_documents(std::slice::from_ref(&doc), &lang, &profiles, a.min_margin)?;
        kept.append(&mut k);
        dropped.append(&mut d);
    }
    log::info!("dropped {} sentences", dropped.len());
    write_atomic(&a.output, |w| Ok(write_canonical(&kept, w)?))?;
    if let Some(path) = &a.dropped {
        write_atomic(path, |w| write_dropped(&dropped, w))?;
    }
    Ok(())
}

pub fn align(a: AlignArgs) -> CliResult<()> {
    let base = match config_path(a.config.as_deref()) {
        Some(p) => PartialConfig::load(&p)?.aligner.unwrap_or_default(),
        None => AlignParams::default(),
    };
    let src = canonical(&a.src)?;
    let tgt = canonical(&a.tgt)?;
    let mut params = base;
    if let Some(v) = a.variance {
        params.variance = v;
    }
    if let Some(c) = a.length_ratio {
        params.length_ratio = c;
    }
    if a.estimate_ratio {
        params.length_ratio = pipeline::length_ratio(&src, &tgt)
            .ok_or_else(|| usage("cannot estimate the length ratio from empty corpora"))?;
        log::info!("estimated length ratio {:.4}", params.length_ratio);
    }
    params.validate()?;
    let records = if a.keep_empty {
        let by_id: HashMap<&str, &Document> = src.iter().map(|d| (d.doc_id.as_str(), d)).collect();
        let mut records = Vec::new();
        for t in &tgt {
            let s = by_id
                .get(t.doc_id.as_str())
                .ok_or_else(|| Error::Integrity(format!("target document {} has no source document", t.doc_id)))?;
            let aligned = align_document(s, t, &params)?;
            records.extend(emit_bitext(&aligned.alignments, s, t, false)?);
        }
        records
    } else {
        pipeline::align_corpus(&src, &tgt, &params)?.0
    };
    write_output(a.output.as_deref(), |w| Ok(write_bitext(&records, w)?))
}

fn load_alignments(lang: &str, path: &Path) -> CliResult<LanguageAlignments> {
    Ok(read_alignments(lang, fsio::open(path)?)?)
}

pub fn pivot(cmd: PivotCommand, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        PivotCommand::Project(a) => {
            let pivot = canonical(&a.pivot)?;
            let langs = [load_alignments(&a.x_lang, &a.x_align)?, load_alignments(&a.y_lang, &a.y_align)?];
            let corpus = project_corpus(&pivot, &langs)?;
            for d in &corpus.dropped {
                log::warn!("paragraph {}/{} skipped: no alignment for {}", d.doc_id, d.para_id, d.missing.join(","));
            }
            let mut texts = HashMap::new();
            texts.insert(a.x_lang.clone(), sentence_texts(&canonical(&a.x_corpus)?));
            texts.insert(a.y_lang.clone(), sentence_texts(&canonical(&a.y_corpus)?));
            texts.insert(corpus.pivot_lang.clone(), sentence_texts(&pivot));
            let records = emit_pair_corpus(&corpus, &a.x_lang, &a.y_lang, &texts, a.with_pivot)?;
            write_output(a.output.as_deref(), |w| Ok(write_bitext(&records, w)?))
        }
        PivotCommand::Multiway(a) => {
            let pivot = canonical(&a.pivot)?;
            let mut langs = Vec::new();
            for spec in &a.aligns {
                let (lang, path) = spec
                    .split_once('=')
                    .ok_or_else(|| usage(format!("--align expects LANG=PATH, got {spec:?}")))?;
                langs.push(load_alignments(lang, Path::new(path))?);
            }
            let corpus = project_corpus(&pivot, &langs)?;
            for d in &corpus.dropped {
                log::warn!("paragraph {}/{} skipped: no alignment for {}", d.doc_id, d.para_id, d.missing.join(","));
            }
            write_output(a.output.as_deref(), |w| Ok(write_multiway(&corpus, w)?))
        }
        PivotCommand::Enumerate(a) => {
            let existing = language_set(&a.existing, "x")?;
            let new = language_set(&a.new, "y")?;
            let pairs = enumerate_new_pairs(&existing, &new)?;
            writeln!(out, "{}", pairs.len()).map_err(io)?;
            if a.list {
                for (x, y) in pairs {
                    writeln!(out, "{x}\t{y}").map_err(io)?;
                }
            }
            Ok(())
        }
    }
}

/// A bare count stands for that many placeholder codes.
fn language_set(spec: &str, prefix: &str) -> CliResult<BTreeSet<String>> {
    if let Ok(n) = spec.trim().parse::<usize>() {
        return Ok((1..=n).map(|i| format!("{prefix}{i}")).collect());
    }
    Ok(spec
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect())
}

fn read_lines(path: &Path) -> CliResult<Vec<String>> {
    Ok(fsio::read_to_string(path)?.lines().map(str::to_string).collect())
}

pub fn chrf_cmd(a: ChrfArgs, out: &mut dyn Write) -> CliResult<()> {
    let defaults = ChrfParams::default();
    let params = ChrfParams {
        max_char_order: a.char_order.unwrap_or(defaults.max_char_order),
        word_order: a.word_order.unwrap_or(defaults.word_order),
        beta: a.beta.unwrap_or(defaults.beta),
        remove_whitespace: !a.keep_whitespace,
        effective_order: !a.no_effective_order,
        lowercase: a.lowercase,
    };
    params.validate()?;
    let hyps = read_lines(&a.hyp)?;
    let refs = read_lines(&a.reference)?;
    if hyps.len() != refs.len() {
        return Err(usage(format!("{} hypotheses but {} references", hyps.len(), refs.len())));
    }
    if a.sentence {
        for (h, r) in hyps.iter().zip(&refs) {
            writeln!(out, "{:.4}", chrf(h, r, &params)?).map_err(io)?;
        }
    }
    let pairs: Vec<(&str, &str)> = hyps.iter().map(String::as_str).zip(refs.iter().map(String::as_str)).collect();
    let score = corpus_chrf(&pairs, &params)?;
    let name = if params.word_order > 0 { "chrF++" } else { "chrF" };
    writeln!(out, "{name}{}|{} = {score:.4}", params.beta, params.signature()).map_err(io)?;
    Ok(())
}

fn parse_scale(spec: &str) -> CliResult<(f64, f64)> {
    let (lo, hi) = spec
        .split_once(',')
        .ok_or_else(|| usage(format!("scale must be LOW,HIGH, got {spec:?}")))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad scale bound {s:?}")));
    Ok((num(lo)?, num(hi)?))
}

fn load_scores(path: &Path, id: &str, score: &str, scale: &str) -> CliResult<Vec<ScoreRecord>> {
    let (lo, hi) = parse_scale(scale)?;
    let schema = ScoreSchema::new(id, score, lo, hi)?;
    Ok(ingest_external_scores(fsio::open(path)?, &schema)?)
}

pub fn quality_report(a: QualityReportArgs, out: &mut dyn Write) -> CliResult<()> {
    let f = &a.score_file;
    let scores = load_scores(&f.scores, &f.id_column, &f.score_column, &f.scale)?;
    let values: Vec<f64> = match &a.bitext {
        Some(path) => join_scores(&scores, &fsio::load_bitext(path)?)?
            .into_iter()
            .map(|s| s.score)
            .collect(),
        None => scores.iter().map(|s| s.score).collect(),
    };
    let edges = match a.edges {
        Some(e) => e,
        None => equal_edges(0.0, 1.0, a.bins)?,
    };
    let report = bin_scores(&values, &edges)?;
    match &a.output {
        Some(p) => write_atomic(p, |w| Ok(write_bin_report(&report, w)?))?,
        None => write_bin_report(&report, &mut *out)?,
    }
    if let Some(p) = &a.summary {
        write_atomic(p, |w| write_json(&report, w))?;
    }
    if let Some(p) = &a.plot {
        let series = [(a.name.clone(), report.clone())];
        write_atomic(p, |w| Ok(write_plot_csv(&series, w)?))?;
    }
    Ok(())
}

pub fn subset(a: SubsetArgs) -> CliResult<()> {
    let records = fsio::load_bitext(&a.input)?;
    let chosen = match a.shuffle_seed {
        Some(seed) => cumulative_subset_shuffled(&records, a.fraction, seed)?,
        None => cumulative_subset(&records, a.fraction)?.to_vec(),
    };
    write_output(a.output.as_deref(), |w| Ok(write_bitext(&chosen, w)?))
}

#[derive(Serialize)]
struct IaaResult {
    annotators: usize,
    items: usize,
    alpha: Option<f64>,
    z_alpha: Option<f64>,
}

pub fn iaa(a: IaaArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = read_matrix(fsio::open(&a.matrix)?)?;
    let alpha = krippendorff_alpha_interval(&m)?;
    let z_alpha = match zscored_alpha(&m) {
        Ok(z) => Some(z),
        Err(e) => {
            log::warn!("z-scored alpha undefined: {e}");
            None
        }
    };
    let result = IaaResult {
        annotators: m.annotators.len(),
        items: m.items.len(),
        alpha: Some(alpha),
        z_alpha,
    };
    write_json(&result, out)
}

pub fn spearman_cmd(a: SpearmanArgs, out: &mut dyn Write) -> CliResult<()> {
    let m = read_matrix(fsio::open(&a.matrix)?)?;
    let human = aggregate_item_scores(&m)?;
    let mut rho = Vec::new();
    for spec in &a.auto {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--auto expects NAME=PATH, got {spec:?}")))?;
        let scores = load_scores(Path::new(path), &a.id_column, &a.score_column, &a.scale)?;
        let by_id: HashMap<&str, f64> = scores.iter().map(|s| (s.id.as_str(), s.score)).collect();
        let auto: Vec<f64> = m
            .items
            .iter()
            .map(|item| {
                by_id
                    .get(item.as_str())
                    .copied()
                    .ok_or_else(|| Error::Integrity(format!("{name} has no score for item {item}")))
            })
            .collect::<Result<_, _>>()?;
        rho.push((name.to_string(), Some(spearman(&human, &auto)?.rho)));
    }
    let z_iaa = if m.annotators.len() >= 2 { zscored_alpha(&m).ok() } else { None };
    let row = SummaryRow {
        pair: a.pair.clone(),
        annotators: m.annotators.len(),
        z_iaa,
        rho,
    };
    match &a.output {
        Some(p) => write_atomic(p, |w| Ok(write_summary(std::slice::from_ref(&row), w)?)),
        None => Ok(write_summary(std::slice::from_ref(&row), out)?),
    }
}

pub fn annotate_serve(a: AnnotateServeArgs) -> CliResult<()> {
    let records = fsio::load_bitext(&a.bitext)?;
    let tasks = create_session(&records, &a.lang_pair, a.sample_size, a.seed)?;
    let guidelines = match &a.guidelines {
        Some(p) => fsio::read_to_string(p)?,
        None => DEFAULT_GUIDELINES.to_string(),
    };
    let session = Session::new(&a.lang_pair, tasks, &guidelines, Ledger::open(&a.ledger)?)?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr)
            .await
            .map_err(|e| usage(format!("cannot listen on {}: {e}", a.addr)))?;
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        pivotforge_annotate::serve(listener, session, shutdown)
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

pub fn stats(a: StatsArgs, out: &mut dyn Write) -> CliResult<()> {
    let stats = match (&a.file, &a.counts) {
        (_, Some(c)) if c.len() == 3 => compute_stats(c[0], c[1], c[2])?,
        (_, Some(_)) => return Err(usage("--counts takes exactly three values")),
        (Some(f), None) => pipeline::read_stats(f)?,
        (None, None) => return Err(usage("give a stats file or --counts")),
    };
    write_json(&stats, out)
}

pub fn run(a: RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let file = match config_path(a.config.as_deref()) {
        Some(p) => PartialConfig::load(&p)?,
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        source_corpus: a.source_corpus,
        source_lang: a.source_lang,
        target_lang: a.target_lang,
        manifest: a.manifest,
        responses: a.responses,
        segmenter_dir: a.segmenter_dir,
        langid_profiles: a.langid_profiles,
        min_margin: a.min_margin,
        refusal_patterns: (!a.refusal_patterns.is_empty()).then_some(a.refusal_patterns),
        lenient: a.lenient.then_some(true),
        estimate_length_ratio: a.estimate_length_ratio.then_some(true),
        output_dir: a.output_dir,
        ..PartialConfig::default()
    };
    let cfg = PipelineConfig::resolve(flags.over(file))?;
    let outcome = pipeline::run_pipeline(&cfg)?;
    write_json(&outcome.stats, out)
}
