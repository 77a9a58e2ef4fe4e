//! Direct-assessment annotation sessions backed by an append-only ledger.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::align::BitextRecord;
use crate::evalstats::AnnotationMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_SIZE: usize = 100;

/// Default guideline text: the 0-100 scale with its band labels.
pub const DEFAULT_GUIDELINES: &str = "\
Rate how well the translation conveys the source sentence, from 0 to 100.

Score   Label
100     Perfect
85-99   Excellent
70-84   Good
50-69   Acceptable
30-49   Poor
1-29    Very poor
0       Incomprehensible
";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub item_id: String,
    pub source_text: String,
    pub translation_text: String,
    pub lang_pair: String,
}

/// A task with its 1-based place in the session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskView {
    #[serde(flatten)]
    pub task: AnnotationTask,
    pub position: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreSubmission {
    pub annotator_id: String,
    pub item_id: String,
    pub score: i64,
    /// Unix time in milliseconds; filled in on receipt when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<u64>,
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedgerEntry {
    pub annotator_id: String,
    pub item_id: String,
    pub score: u8,
    pub submitted_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ack {
    pub ok: bool,
    pub ledger_len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub lang_pair: String,
    pub n_items: usize,
    pub guidelines_text: String,
}

/// `k` distinct indices from `0..n` in seeded random order.
pub fn sample_indices(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k > n {
        return Err(Error::invalid(format!("cannot sample {k} items from {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, n, k).into_vec())
}

/// Seeded sample of bitext records as annotation tasks.
pub fn create_session(records: &[BitextRecord], lang_pair: &str, sample_size: usize, seed: u64) -> Result<Vec<AnnotationTask>> {
    let mut seen = HashSet::new();
    let mut tasks = Vec::with_capacity(sample_size);
    for i in sample_indices(records.len(), sample_size, seed)? {
        let r = &records[i];
        let item_id = r.id();
        if r.src_text.trim().is_empty() || r.tgt_text.trim().is_empty() {
            return Err(Error::integrity(format!("record {item_id} has an empty side")));
        }
        if !seen.insert(item_id.clone()) {
            return Err(Error::integrity(format!("record id {item_id} occurs twice")));
        }
        tasks.push(AnnotationTask {
            item_id,
            source_text: r.src_text.clone(),
            translation_text: r.tgt_text.clone(),
            lang_pair: lang_pair.to_string(),
        });
    }
    Ok(tasks)
}

/// Line-delimited JSON log of submissions, optionally mirrored to a file.
#[derive(Debug, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    file: Option<File>,
    entries: Vec<LedgerEntry>,
}

impl Ledger {
    pub fn in_memory() -> Self {
        Ledger::default()
    }

    /// Opens or creates a ledger file and replays it. A final line cut short
    /// by a crash is discarded and trimmed from the file; any other bad line
    /// is a format error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut entries = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&file);
        let mut line = String::new();
        let mut lineno = 0;
        let mut torn = false;
        loop {
            line.clear();
            let read = reader.read_line(&mut line)?;
            if read == 0 {
                break;
            }
            lineno += 1;
            // Appends write the newline last, so a line without one was
            // never acknowledged.
            if !line.ends_with('\n') {
                torn = true;
                break;
            }
            let body = line.trim_end();
            if !body.is_empty() {
                let entry = serde_json::from_str::<LedgerEntry>(body)
                    .map_err(|e| Error::parse(lineno, format!("bad ledger entry: {e}")))?;
                entries.push(entry);
            }
            good_len += read as u64;
        }
        drop(reader);
        if torn {
            log::warn!("{}: discarding incomplete final ledger line {lineno}", path.display());
            file.set_len(good_len)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok(Ledger {
            path: Some(path.to_path_buf()),
            file: Some(file),
            entries,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn append(&mut self, entry: LedgerEntry) -> Result<()> {
        if let Some(file) = &mut self.file {
            let mut line = serde_json::to_string(&entry).map_err(|e| Error::Io(e.into()))?;
            line.push('\n');
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        self.entries.push(entry);
        Ok(())
    }
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Tasks, guidelines and the ledger of one annotation session.
#[derive(Debug)]
pub struct Session {
    lang_pair: String,
    guidelines: String,
    tasks: Vec<AnnotationTask>,
    index: HashMap<String, usize>,
    ledger: Ledger,
    /// Latest score per (annotator, task index).
    latest: HashMap<(String, usize), u8>,
    /// Annotators in order of first submission.
    annotators: Vec<String>,
}

impl Session {
    /// Builds a session and replays `ledger` into it.
    pub fn new(lang_pair: &str, tasks: Vec<AnnotationTask>, guidelines: &str, ledger: Ledger) -> Result<Self> {
        let mut index = HashMap::with_capacity(tasks.len());
        for (i, t) in tasks.iter().enumerate() {
            if index.insert(t.item_id.clone(), i).is_some() {
                return Err(Error::integrity(format!("item {} occurs twice in the session", t.item_id)));
            }
        }
        let mut session = Session {
            lang_pair: lang_pair.to_string(),
            guidelines: guidelines.to_string(),
            tasks,
            index,
            ledger: Ledger::in_memory(),
            latest: HashMap::new(),
            annotators: Vec::new(),
        };
        for (n, e) in ledger.entries.iter().enumerate() {
            let i = *session
                .index
                .get(&e.item_id)
                .ok_or_else(|| Error::integrity(format!("ledger line {}: unknown item {}", n + 1, e.item_id)))?;
            if e.score > 100 {
                return Err(Error::integrity(format!("ledger line {}: score {} out of range", n + 1, e.score)));
            }
            session.record(e.annotator_id.clone(), i, e.score);
        }
        session.ledger = ledger;
        Ok(session)
    }

    fn record(&mut self, annotator: String, item: usize, score: u8) {
        if !self.annotators.contains(&annotator) {
            self.annotators.push(annotator.clone());
        }
        self.latest.insert((annotator, item), score);
    }

    pub fn info(&self) -> SessionInfo {
        SessionInfo {
            lang_pair: self.lang_pair.clone(),
            n_items: self.tasks.len(),
            guidelines_text: self.guidelines.clone(),
        }
    }

    pub fn tasks(&self) -> &[AnnotationTask] {
        &self.tasks
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    /// First task in session order that `annotator` has not scored.
    pub fn next_task(&self, annotator: &str) -> Option<TaskView> {
        let key = |i: usize| (annotator.to_string(), i);
        (0..self.tasks.len())
            .find(|&i| !self.latest.contains_key(&key(i)))
            .map(|i| TaskView {
                task: self.tasks[i].clone(),
                position: i + 1,
                total: self.tasks.len(),
            })
    }

    /// Validates and appends a score. Later submissions for the same cell
    /// replace earlier ones in the export; the ledger keeps all of them.
    pub fn submit_score(&mut self, sub: ScoreSubmission) -> Result<Ack> {
        if sub.annotator_id.trim().is_empty() {
            return Err(Error::invalid("annotator_id must not be empty"));
        }
        if !(0..=100).contains(&sub.score) {
            return Err(Error::invalid(format!("score {} is outside 0..=100", sub.score)));
        }
        let item = *self
            .index
            .get(&sub.item_id)
            .ok_or_else(|| Error::integrity(format!("unknown item {}", sub.item_id)))?;
        let entry = LedgerEntry {
            annotator_id: sub.annotator_id,
            item_id: sub.item_id,
            score: sub.score as u8,
            submitted_at: sub.submitted_at.unwrap_or_else(now_ms),
        };
        self.ledger.append(entry.clone())?;
        self.record(entry.annotator_id, item, entry.score);
        Ok(Ack {
            ok: true,
            ledger_len: self.ledger.len(),
        })
    }

    /// All ledger entries for one cell, oldest first.
    pub fn history(&self, annotator: &str, item_id: &str) -> Vec<&LedgerEntry> {
        self.ledger
            .entries
            .iter()
            .filter(|e| e.annotator_id == annotator && e.item_id == item_id)
            .collect()
    }

    /// Session items by annotators who submitted anything, latest scores.
    pub fn export_matrix(&self) -> AnnotationMatrix {
        let values = self
            .annotators
            .iter()
            .map(|a| {
                (0..self.tasks.len())
                    .map(|i| self.latest.get(&(a.clone(), i)).map(|&s| f64::from(s)))
                    .collect()
            })
            .collect();
        AnnotationMatrix {
            annotators: self.annotators.clone(),
            items: self.tasks.iter().map(|t| t.item_id.clone()).collect(),
            values,
        }
    }
}
