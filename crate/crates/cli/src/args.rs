use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "pivotforge", version, about = "Build, filter, pivot and evaluate synthetic parallel corpora")]
pub struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a tagged corpus into canonical JSONL.
    Parse(ParseArgs),
    /// Write translation requests and their manifest.
    BatchBuild(BatchBuildArgs),
    /// Match responses to a manifest and write target-language documents.
    BatchIngest(BatchIngestArgs),
    /// Split paragraphs into sentences.
    Segment(SegmentArgs),
    /// Train character n-gram language profiles.
    LangidTrain(LangidTrainArgs),
    /// Drop sentences not identified as the expected language.
    LangidFilter(LangidFilterArgs),
    /// Sentence-align target documents to their sources.
    Align(AlignArgs),
    /// Alignment through a pivot language.
    #[command(subcommand)]
    Pivot(PivotCommand),
    /// Score hypotheses against references.
    Chrf(ChrfArgs),
    /// Bin externally produced quality scores.
    QualityReport(QualityReportArgs),
    /// Take a cumulative subset of a bitext.
    Subset(SubsetArgs),
    /// Inter-annotator agreement of an annotation matrix.
    Iaa(IaaArgs),
    /// Correlate human scores with automatic scores.
    Spearman(SpearmanArgs),
    /// Serve an annotation session over HTTP.
    AnnotateServe(AnnotateServeArgs),
    /// Validate stage counts.
    Stats(StatsArgs),
    /// Run the whole pipeline from a configuration file.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Tagged corpus file.
    pub input: PathBuf,
    #[arg(long, default_value = "en")]
    pub lang: String,
    /// Also split paragraphs into sentences.
    #[arg(long)]
    pub segment: bool,
    #[arg(long)]
    pub segmenter_dir: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BatchBuildArgs {
    /// Source corpus (canonical `.jsonl` or tagged).
    pub input: PathBuf,
    /// Target language name used in the prompt, e.g. Ukrainian.
    #[arg(long)]
    pub target_name: String,
    /// Script code used in the prompt, e.g. Cyrl.
    #[arg(long)]
    pub script: String,
    #[arg(long, default_value = "en")]
    pub lang: String,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Args)]
pub struct BatchIngestArgs {
    /// Source corpus the batch was built from.
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long, default_value = "en")]
    pub source_lang: String,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long)]
    pub target_lang: String,
    /// Remove lines containing this text (repeatable; defaults to "2023").
    #[arg(long = "refusal-pattern")]
    pub refusal_patterns: Vec<String>,
    /// Disable refusal-line filtering.
    #[arg(long, conflicts_with = "refusal_patterns")]
    pub no_refusal_filter: bool,
    /// Keep the first of duplicate responses instead of failing.
    #[arg(long)]
    pub lenient: bool,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Completeness report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    pub input: PathBuf,
    /// Segmentation language; defaults to each document's own.
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long)]
    pub segmenter_dir: Option<PathBuf>,
    /// Re-split paragraphs that already have sentences.
    #[arg(long)]
    pub force: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LangidTrainArgs {
    /// TSV of `lang<TAB>text` lines.
    pub input: PathBuf,
    #[arg(long, default_value_t = pivotforge::prep::langid::DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    #[arg(long, default_value_t = pivotforge::prep::langid::DEFAULT_PENALTY)]
    pub penalty: f64,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct LangidFilterArgs {
    /// Segmented corpus (canonical JSONL).
    pub input: PathBuf,
    #[arg(long)]
    pub profiles: PathBuf,
    /// Expected language; defaults to each document's own.
    #[arg(long)]
    pub lang: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub min_margin: f64,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Dropped sentences with their verdicts (TSV).
    #[arg(long)]
    pub dropped: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub tgt: PathBuf,
    #[arg(long)]
    pub variance: Option<f64>,
    #[arg(long, conflicts_with = "estimate_ratio")]
    pub length_ratio: Option<f64>,
    /// Use total target over total source characters as the length ratio.
    #[arg(long)]
    pub estimate_ratio: bool,
    /// Also emit deletion and insertion beads.
    #[arg(long)]
    pub keep_empty: bool,
    /// Configuration file supplying `[aligner]` defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum PivotCommand {
    /// Bitext between two languages aligned to the same pivot.
    Project(PivotProjectArgs),
    /// Units aligned across all given languages.
    Multiway(PivotMultiwayArgs),
    /// Count (or list) the new language pairs.
    Enumerate(PivotEnumerateArgs),
}

#[derive(Debug, Args)]
pub struct PivotProjectArgs {
    /// Segmented pivot corpus (canonical JSONL).
    #[arg(long)]
    pub pivot: PathBuf,
    #[arg(long)]
    pub x_lang: String,
    /// Pivot-to-X alignment file.
    #[arg(long)]
    pub x_align: PathBuf,
    /// Segmented X corpus.
    #[arg(long)]
    pub x_corpus: PathBuf,
    #[arg(long)]
    pub y_lang: String,
    #[arg(long)]
    pub y_align: PathBuf,
    #[arg(long)]
    pub y_corpus: PathBuf,
    /// Add the pivot text as a seventh column.
    #[arg(long)]
    pub with_pivot: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PivotMultiwayArgs {
    #[arg(long)]
    pub pivot: PathBuf,
    /// `LANG=PATH` alignment file per language (repeatable).
    #[arg(long = "align", required = true)]
    pub aligns: Vec<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PivotEnumerateArgs {
    /// A count or a comma-separated list of language codes.
    #[arg(long)]
    pub existing: String,
    #[arg(long)]
    pub new: String,
    /// Print the pairs after the count.
    #[arg(long)]
    pub list: bool,
}

#[derive(Debug, Args)]
pub struct ChrfArgs {
    /// Hypotheses, one per line.
    #[arg(long)]
    pub hyp: PathBuf,
    /// References, one per line.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Print a score per line as well.
    #[arg(long)]
    pub sentence: bool,
    #[arg(long)]
    pub char_order: Option<usize>,
    #[arg(long)]
    pub word_order: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lowercase: bool,
    #[arg(long)]
    pub keep_whitespace: bool,
    #[arg(long)]
    pub no_effective_order: bool,
}

#[derive(Debug, Args)]
pub struct ScoreFileArgs {
    /// Score file (TSV with a header row).
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    #[arg(long, default_value = "score")]
    pub score_column: String,
    /// Raw score range as `LOW,HIGH`.
    #[arg(long, default_value = "0,1")]
    pub scale: String,
}

#[derive(Debug, Args)]
pub struct QualityReportArgs {
    #[command(flatten)]
    pub score_file: ScoreFileArgs,
    /// Bitext the score IDs refer to.
    #[arg(long)]
    pub bitext: Option<PathBuf>,
    /// Number of equal-width bins over [0, 1].
    #[arg(long, default_value_t = 5, conflicts_with = "edges")]
    pub bins: usize,
    /// Explicit bin edges over the normalized [0, 1] range.
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<f64>>,
    /// Series name in the plot data.
    #[arg(long, default_value = "scores")]
    pub name: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    /// Bitext TSV in corpus order.
    pub input: PathBuf,
    #[arg(long)]
    pub fraction: f64,
    /// Take the subset from a seeded permutation instead of corpus order.
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IaaArgs {
    /// Annotation matrix TSV.
    pub matrix: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpearmanArgs {
    /// Annotation matrix TSV.
    #[arg(long)]
    pub matrix: PathBuf,
    /// `NAME=PATH` automatic score file (repeatable).
    #[arg(long = "auto", required = true)]
    pub auto: Vec<String>,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    #[arg(long, default_value = "score")]
    pub score_column: String,
    #[arg(long, default_value = "0,1")]
    pub scale: String,
    /// Language pair label for the summary row.
    #[arg(long, default_value = "-")]
    pub pair: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateServeArgs {
    #[arg(long)]
    pub bitext: PathBuf,
    #[arg(long)]
    pub lang_pair: String,
    #[arg(long, default_value_t = pivotforge::annotation::DEFAULT_SAMPLE_SIZE)]
    pub sample_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub ledger: PathBuf,
    /// Guidelines text file; the built-in scale is used otherwise.
    #[arg(long)]
    pub guidelines: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Stats file written by `run`.
    #[arg(required_unless_present = "counts")]
    pub file: Option<PathBuf>,
    /// Counts as `SEGMENTED,LANGID,ALIGNED`.
    #[arg(long, value_delimiter = ',', conflicts_with = "file")]
    pub counts: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file (default: $PIVOTFORGE_CONFIG).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub source_corpus: Option<PathBuf>,
    #[arg(long)]
    pub source_lang: Option<String>,
    #[arg(long)]
    pub target_lang: Option<String>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub responses: Option<PathBuf>,
    #[arg(long)]
    pub segmenter_dir: Option<PathBuf>,
    #[arg(long)]
    pub langid_profiles: Option<PathBuf>,
    #[arg(long)]
    pub min_margin: Option<f64>,
    #[arg(long = "refusal-pattern")]
    pub refusal_patterns: Vec<String>,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long)]
    pub estimate_length_ratio: bool,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}
