//! File helpers: input opening with readable errors and atomic output.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use pivotforge::align::{read_bitext, BitextRecord};
use pivotforge::corpus::{parse_tagged_corpus, read_canonical, Document};

use crate::error::{usage, CliError, CliResult};

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| usage(format!("cannot open {}: {e}", path.display())))
}

pub fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn is_canonical(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "json"))
}

/// Reads a corpus: canonical JSONL for `.jsonl`/`.json`, the tagged format
/// otherwise (documents then get language `lang`).
pub fn load_corpus(path: &Path, lang: &str, lenient: bool) -> CliResult<Vec<Document>> {
    if is_canonical(path) {
        Ok(read_canonical(open(path)?, lenient)?)
    } else {
        Ok(parse_tagged_corpus(&read_to_string(path)?, lang)?)
    }
}

pub fn load_bitext(path: &Path) -> CliResult<Vec<BitextRecord>> {
    Ok(read_bitext(open(path)?)?)
}

fn temp_in(dir: &Path) -> CliResult<tempfile::NamedTempFile> {
    tempfile::Builder::new()
        .prefix(".pivotforge-")
        .tempfile_in(dir)
        .map_err(|e| CliError::Internal(format!("cannot create temporary file in {}: {e}", dir.display())))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes `path` through a temporary file in the same directory that is
/// renamed into place only after `fill` succeeds.
pub fn write_atomic<F>(path: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    let tmp = temp_in(&dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(pivotforge::Error::from)?;
    }
    tmp.as_file().sync_all().map_err(pivotforge::Error::from)?;
    tmp.persist(path)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Writes to `path` when given, else to stdout.
pub fn write_output<F>(path: Option<&Path>, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match path {
        Some(p) => write_atomic(p, fill),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush().map_err(pivotforge::Error::from)?;
            Ok(())
        }
    }
}

/// A group of outputs staged under `<name>.partial` and renamed together.
/// If the run fails the staged files stay behind for inspection.
pub struct StagedOutputs {
    staged: Vec<(PathBuf, PathBuf)>,
}

impl StagedOutputs {
    pub fn new() -> Self {
        StagedOutputs { staged: Vec::new() }
    }

    pub fn write<F>(&mut self, path: &Path, fill: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        let mut partial = path.as_os_str().to_owned();
        partial.push(".partial");
        let partial = PathBuf::from(partial);
        write_atomic(&partial, fill)?;
        self.staged.push((partial, path.to_path_buf()));
        Ok(())
    }

    pub fn commit(self) -> CliResult<()> {
        for (partial, fin) in self.staged {
            fs::rename(&partial, &fin)
                .map_err(|e| CliError::Internal(format!("cannot rename {}: {e}", partial.display())))?;
        }
        Ok(())
    }
}

impl Default for StagedOutputs {
    fn default() -> Self {
        Self::new()
    }
}
