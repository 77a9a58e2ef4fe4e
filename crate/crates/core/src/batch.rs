//! Bulk translation requests and response ingestion.
//!
//! One request is issued per non-empty paragraph. The batch file is a
//! generic chat-completions batch (`custom_id` plus a single user message);
//! responses are matched back by `custom_id`, which encodes the source
//! `doc_id` and `para_id`.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};

/// Line containing this substring is treated as a model refusal by default.
pub const DEFAULT_REFUSAL_PATTERN: &str = "2023";

/// Renders the translation instruction for one paragraph.
///
/// The instruction names the target language twice and the script once, and
/// the source text follows after a blank line.
pub fn render_prompt(target_lang: &str, script: &str, source_text: &str) -> Result<String> {
    if target_lang.trim().is_empty() {
        return Err(Error::invalid("target language name is empty"));
    }
    if script.trim().is_empty() {
        return Err(Error::invalid("script code is empty"));
    }
    if source_text.trim().is_empty() {
        return Err(Error::invalid("source text is empty"));
    }
    Ok(format!(
        "This is an English to {target_lang} translation, please provide the {target_lang} \
         translation to this sentence in {script} script. Do not provide any explanation or \
         text apart from the translation.\n\n{source_text}"
    ))
}

pub fn custom_id(doc_id: &str, para_id: &str) -> String {
    format!("{doc_id}/{para_id}")
}

/// Splits a custom ID back into `(doc_id, para_id)`.
pub fn split_custom_id(id: &str) -> Option<(&str, &str)> {
    id.rsplit_once('/')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRequest {
    pub custom_id: String,
    pub target_lang: String,
    pub script: String,
    pub source_text: String,
    pub prompt: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResponseStatus {
    Ok,
    Refused,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationResponse {
    pub custom_id: String,
    pub output_text: String,
    pub status: ResponseStatus,
}

impl TranslationResponse {
    pub fn new(custom_id: impl Into<String>, status: ResponseStatus, output_text: impl Into<String>) -> Result<Self> {
        let resp = TranslationResponse {
            custom_id: custom_id.into(),
            output_text: output_text.into(),
            status,
        };
        if resp.status == ResponseStatus::Ok && resp.output_text.is_empty() {
            return Err(Error::invalid(format!("ok response {} has no output text", resp.custom_id)));
        }
        Ok(resp)
    }
}

/// Builds one request per non-empty paragraph, in corpus order.
pub fn build_batch(docs: &[Document], target_lang: &str, script: &str) -> Result<Vec<TranslationRequest>> {
    let mut seen = HashSet::new();
    let mut requests = Vec::new();
    for doc in docs {
        for para in &doc.paragraphs {
            let id = custom_id(&doc.doc_id, &para.para_id);
            if !seen.insert(id.clone()) {
                return Err(Error::integrity(format!("duplicate paragraph {id}")));
            }
            if para.raw_text.trim().is_empty() {
                log::info!("skipping empty paragraph {id}");
                continue;
            }
            requests.push(TranslationRequest {
                prompt: render_prompt(target_lang, script, &para.raw_text)?,
                custom_id: id,
                target_lang: target_lang.to_string(),
                script: script.to_string(),
                source_text: para.raw_text.clone(),
            });
        }
    }
    Ok(requests)
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    messages: [Message<'a>; 1],
}

#[derive(Serialize)]
struct RequestLine<'a> {
    custom_id: &'a str,
    body: RequestBody<'a>,
}

pub fn write_requests<W: Write>(requests: &[TranslationRequest], mut out: W) -> Result<()> {
    for req in requests {
        let line = RequestLine {
            custom_id: &req.custom_id,
            body: RequestBody {
                messages: [Message {
                    role: "user",
                    content: &req.prompt,
                }],
            },
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_manifest<W: Write>(requests: &[TranslationRequest], mut out: W) -> Result<()> {
    for req in requests {
        writeln!(out, "{}", req.custom_id)?;
    }
    Ok(())
}

pub fn read_manifest<R: BufRead>(input: R) -> Result<Vec<String>> {
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let id = line.trim();
        if id.is_empty() {
            continue;
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::parse(idx + 1, format!("duplicate custom_id {id} in manifest")));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

#[derive(Deserialize)]
struct ResponseBody {
    status: ResponseStatus,
    #[serde(default)]
    output_text: String,
}

#[derive(Deserialize)]
struct ResponseLine {
    custom_id: String,
    response: ResponseBody,
}

pub fn read_responses<R: BufRead>(input: R) -> Result<Vec<TranslationResponse>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let record = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ResponseLine =
            serde_json::from_str(&line).map_err(|e| Error::record(record, e.to_string()))?;
        let resp = TranslationResponse::new(parsed.custom_id, parsed.response.status, parsed.response.output_text)
            .map_err(|e| Error::record(record, e.to_string()))?;
        out.push(resp);
    }
    Ok(out)
}

/// Outcome of matching a response file against the issued manifest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    /// `(custom_id, output_text)` for every ok response, in manifest order.
    pub translations: Vec<(String, String)>,
    pub missing: Vec<String>,
    pub refused: Vec<String>,
    pub errored: Vec<String>,
    /// Later duplicates skipped under the lenient flag.
    pub duplicates_ignored: Vec<String>,
}

impl IngestReport {
    pub fn translation_map(&self) -> HashMap<&str, &str> {
        self.translations
            .iter()
            .map(|(id, text)| (id.as_str(), text.as_str()))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.refused.is_empty() && self.errored.is_empty()
    }
}

/// Matches responses to the manifest.
///
/// Every manifest ID ends up in exactly one of `translations`, `missing`,
/// `refused` or `errored`.
pub fn ingest_batch<I>(responses: I, manifest: &[String], lenient: bool) -> Result<IngestReport>
where
    I: IntoIterator<Item = TranslationResponse>,
{
    let expected: HashSet<&str> = manifest.iter().map(String::as_str).collect();
    let mut received: HashMap<String, TranslationResponse> = HashMap::new();
    let mut report = IngestReport::default();

    for resp in responses {
        if !expected.contains(resp.custom_id.as_str()) {
            return Err(Error::integrity(format!("response for unknown custom_id {}", resp.custom_id)));
        }
        if received.contains_key(&resp.custom_id) {
            if lenient {
                log::warn!("ignoring duplicate response for {}", resp.custom_id);
                report.duplicates_ignored.push(resp.custom_id);
                continue;
            }
            return Err(Error::integrity(format!("duplicate response for custom_id {}", resp.custom_id)));
        }
        received.insert(resp.custom_id.clone(), resp);
    }

    for id in manifest {
        match received.remove(id) {
            None => report.missing.push(id.clone()),
            Some(resp) => match resp.status {
                ResponseStatus::Ok => report.translations.push((resp.custom_id, resp.output_text)),
                ResponseStatus::Refused => report.refused.push(resp.custom_id),
                ResponseStatus::Error => report.errored.push(resp.custom_id),
            },
        }
    }
    Ok(report)
}

/// Removes every line containing any of `patterns` as a substring.
///
/// Kept lines are emitted byte-for-byte, each with its original terminator.
/// Empty patterns are ignored.
pub fn filter_refusal_lines<S: AsRef<str>>(paragraph_text: &str, patterns: &[S]) -> (String, usize) {
    let patterns: Vec<&str> = patterns
        .iter()
        .map(AsRef::as_ref)
        .filter(|p| !p.is_empty())
        .collect();
    if patterns.is_empty() {
        return (paragraph_text.to_string(), 0);
    }
    let mut kept = String::with_capacity(paragraph_text.len());
    let mut dropped = 0;
    for line in paragraph_text.split_inclusive('\n') {
        let content = line.strip_suffix('\n').unwrap_or(line);
        if patterns.iter().any(|p| content.contains(p)) {
            dropped += 1;
        } else {
            kept.push_str(line);
        }
    }
    (kept, dropped)
}
