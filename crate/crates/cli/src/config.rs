//! Pipeline configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use pivotforge::align::AlignParams;
use pivotforge::batch::DEFAULT_REFUSAL_PATTERN;
use pivotforge::metrics::ChrfParams;
use serde::{Deserialize, Serialize};

use crate::error::{usage, CliResult};
use crate::fsio;

pub const CONFIG_ENV: &str = "PIVOTFORGE_CONFIG";

/// Every field optional, as read from a file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub source_corpus: Option<PathBuf>,
    pub source_lang: Option<String>,
    pub target_lang: Option<String>,
    pub target_name: Option<String>,
    pub script: Option<String>,
    pub manifest: Option<PathBuf>,
    pub responses: Option<PathBuf>,
    pub segmenter_dir: Option<PathBuf>,
    pub langid_profiles: Option<PathBuf>,
    pub min_margin: Option<f64>,
    pub refusal_patterns: Option<Vec<String>>,
    pub lenient: Option<bool>,
    pub estimate_length_ratio: Option<bool>,
    pub output_dir: Option<PathBuf>,
    pub aligner: Option<AlignParams>,
    pub chrf: Option<ChrfParams>,
}

macro_rules! overlay {
    ($top:expr, $bottom:expr, $($field:ident),*) => {
        PartialConfig { $($field: $top.$field.or($bottom.$field),)* }
    };
}

impl PartialConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| usage(format!("invalid configuration: {e}")))
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let mut cfg = Self::from_toml(&fsio::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.source_corpus,
            &mut cfg.manifest,
            &mut cfg.responses,
            &mut cfg.segmenter_dir,
            &mut cfg.langid_profiles,
            &mut cfg.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: PartialConfig) -> PartialConfig {
        overlay!(
            self,
            lower,
            source_corpus,
            source_lang,
            target_lang,
            target_name,
            script,
            manifest,
            responses,
            segmenter_dir,
            langid_profiles,
            min_margin,
            refusal_patterns,
            lenient,
            estimate_length_ratio,
            output_dir,
            aligner,
            chrf
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub source_corpus: PathBuf,
    pub source_lang: String,
    pub target_lang: String,
    pub target_name: Option<String>,
    pub script: Option<String>,
    pub manifest: Option<PathBuf>,
    pub responses: PathBuf,
    pub segmenter_dir: Option<PathBuf>,
    pub langid_profiles: Option<PathBuf>,
    pub min_margin: f64,
    pub refusal_patterns: Vec<String>,
    pub lenient: bool,
    pub estimate_length_ratio: bool,
    pub output_dir: PathBuf,
    pub aligner: AlignParams,
    pub chrf: ChrfParams,
}

fn require<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("configuration is missing {name}")))
}

fn must_exist(path: &Path, what: &str) -> CliResult<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(usage(format!("{what} {} does not exist", path.display())))
    }
}

impl PipelineConfig {
    /// Fills defaults and checks that inputs exist and parameters are in range.
    pub fn resolve(p: PartialConfig) -> CliResult<Self> {
        let cfg = PipelineConfig {
            source_corpus: require(p.source_corpus, "source_corpus")?,
            source_lang: p.source_lang.unwrap_or_else(|| "en".into()),
            target_lang: require(p.target_lang, "target_lang")?,
            target_name: p.target_name,
            script: p.script,
            manifest: p.manifest,
            responses: require(p.responses, "responses")?,
            segmenter_dir: p.segmenter_dir,
            langid_profiles: p.langid_profiles,
            min_margin: p.min_margin.unwrap_or(0.0),
            refusal_patterns: p
                .refusal_patterns
                .unwrap_or_else(|| vec![DEFAULT_REFUSAL_PATTERN.to_string()]),
            lenient: p.lenient.unwrap_or(false),
            estimate_length_ratio: p.estimate_length_ratio.unwrap_or(false),
            output_dir: require(p.output_dir, "output_dir")?,
            aligner: p.aligner.unwrap_or_default(),
            chrf: p.chrf.unwrap_or_default(),
        };
        must_exist(&cfg.source_corpus, "source corpus")?;
        must_exist(&cfg.responses, "response file")?;
        for (path, what) in [
            (&cfg.manifest, "manifest"),
            (&cfg.segmenter_dir, "segmenter directory"),
            (&cfg.langid_profiles, "language profiles"),
        ] {
            if let Some(p) = path {
                must_exist(p, what)?;
            }
        }
        if cfg.min_margin.is_nan() || cfg.min_margin < 0.0 {
            return Err(usage(format!("min_margin must be non-negative, got {}", cfg.min_margin)));
        }
        cfg.aligner.validate()?;
        cfg.chrf.validate()?;
        Ok(cfg)
    }
}

/// Config file named by `explicit`, else by the environment variable.
pub fn config_path(explicit: Option<&Path>) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
}
