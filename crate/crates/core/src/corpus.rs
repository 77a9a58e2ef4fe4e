//! Document model, the tagged source-corpus reader and the canonical
//! line-delimited interchange format.
//!
//! Documents keep explicit IDs at every level so later stages can join on
//! them: a document per chapter, paragraphs numbered by ordinal within their
//! document, and sentences numbered `"<para_id>.<ordinal>"`. Sentence IDs are
//! assigned once at segmentation time; filtering removes sentences but never
//! renumbers the survivors.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sentence {
    pub sent_id: String,
    pub text: String,
}

impl Sentence {
    pub fn new(sent_id: impl Into<String>, text: impl Into<String>) -> Self {
        Sentence {
            sent_id: sent_id.into(),
            text: text.into(),
        }
    }

    /// Number of non-whitespace characters.
    pub fn char_len(&self) -> usize {
        char_len(&self.text)
    }
}

/// Count of non-whitespace characters, the length unit used by the aligner.
pub fn char_len(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

/// Builds the document-scoped ID of the `ordinal`-th (1-based) sentence.
pub fn sentence_id(para_id: &str, ordinal: usize) -> String {
    format!("{para_id}.{ordinal}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paragraph {
    pub para_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    pub raw_text: String,
    #[serde(default)]
    pub sentences: Vec<Sentence>,
}

impl Paragraph {
    pub fn new(para_id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        Paragraph {
            para_id: para_id.into(),
            speaker: None,
            raw_text: raw_text.into(),
            sentences: Vec::new(),
        }
    }

    /// Replaces the sentence list, numbering sentences from 1.
    pub fn set_sentences<I, S>(&mut self, texts: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.sentences = texts
            .into_iter()
            .enumerate()
            .map(|(i, text)| Sentence::new(sentence_id(&self.para_id, i + 1), text))
            .collect();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: String,
    pub lang: String,
    pub paragraphs: Vec<Paragraph>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, lang: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            lang: lang.into(),
            paragraphs: Vec::new(),
        }
    }

    pub fn paragraph(&self, para_id: &str) -> Option<&Paragraph> {
        self.paragraphs.iter().find(|p| p.para_id == para_id)
    }

    pub fn sentence_count(&self) -> usize {
        self.paragraphs.iter().map(|p| p.sentences.len()).sum()
    }

    /// Checks the structural invariants of the document.
    pub fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::integrity("empty doc_id"));
        }
        let mut seen = HashSet::new();
        for para in &self.paragraphs {
            if !seen.insert(para.para_id.as_str()) {
                return Err(Error::integrity(format!(
                    "duplicate para_id {:?} in document {:?}",
                    para.para_id, self.doc_id
                )));
            }
            let mut last = 0u64;
            for sent in &para.sentences {
                let ordinal = sent
                    .sent_id
                    .strip_prefix(para.para_id.as_str())
                    .and_then(|rest| rest.strip_prefix('.'))
                    .and_then(|n| n.parse::<u64>().ok())
                    .ok_or_else(|| {
                        Error::integrity(format!(
                            "sentence id {:?} does not belong to paragraph {:?}",
                            sent.sent_id, para.para_id
                        ))
                    })?;
                if ordinal <= last {
                    return Err(Error::integrity(format!(
                        "sentence ids not increasing at {:?} in document {:?}",
                        sent.sent_id, self.doc_id
                    )));
                }
                last = ordinal;
            }
        }
        Ok(())
    }
}

/// Sentence counts after each post-processing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_after_segmentation: u64,
    pub n_after_langid: u64,
    pub n_aligned: u64,
}

impl CorpusStats {
    pub fn new(n_after_segmentation: u64, n_after_langid: u64, n_aligned: u64) -> Result<Self> {
        if n_after_segmentation < n_after_langid || n_after_langid < n_aligned {
            return Err(Error::integrity(format!(
                "stage counts must not increase: segmented={n_after_segmentation}, \
                 langid={n_after_langid}, aligned={n_aligned}"
            )));
        }
        Ok(CorpusStats {
            n_after_segmentation,
            n_after_langid,
            n_aligned,
        })
    }
}

/// Builds stats from per-stage counts, enforcing stage monotonicity.
pub fn compute_stats(n_after_segmentation: u64, n_after_langid: u64, n_aligned: u64) -> Result<CorpusStats> {
    CorpusStats::new(n_after_segmentation, n_after_langid, n_aligned)
}

fn validate_lang(lang: &str) -> Result<()> {
    let ok = (2..=3).contains(&lang.len()) && lang.bytes().all(|b| b.is_ascii_lowercase());
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("not a language code: {lang:?}")))
    }
}

// ---------------------------------------------------------------------------
// Tagged source format

#[derive(Debug, PartialEq, Eq)]
enum Markup {
    Chapter(String),
    Speaker(String),
    Paragraph,
    Close(String),
    Other,
}

fn is_tag_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Extracts `key=value` pairs; values may be double-quoted or bare.
fn parse_attributes(mut rest: &str) -> Vec<(String, String)> {
    let mut attrs = Vec::new();
    loop {
        rest = rest.trim_start();
        let Some(eq) = rest.find('=') else { break };
        let key = rest[..eq].trim().to_ascii_lowercase();
        let after = rest[eq + 1..].trim_start();
        let (value, remaining) = if let Some(quoted) = after.strip_prefix('"') {
            match quoted.find('"') {
                Some(end) => (&quoted[..end], &quoted[end + 1..]),
                None => (quoted, ""),
            }
        } else {
            let end = after.find(char::is_whitespace).unwrap_or(after.len());
            (&after[..end], &after[end..])
        };
        // Keys may be preceded by other bare tokens; keep only the last word.
        let key = key.rsplit(char::is_whitespace).next().unwrap_or("").to_string();
        attrs.push((key, value.to_string()));
        rest = remaining;
    }
    attrs
}

fn parse_markup(line: &str, lineno: usize) -> Result<Option<Markup>> {
    let Some(inner) = line.strip_prefix('<').and_then(|l| l.strip_suffix('>')) else {
        return Ok(None);
    };
    if let Some(name) = inner.strip_prefix('/') {
        let name = name.trim();
        if !is_tag_name(name) {
            return Ok(None);
        }
        return Ok(Some(Markup::Close(name.to_ascii_uppercase())));
    }
    let inner = inner.trim_end_matches('/');
    let name_end = inner.find(char::is_whitespace).unwrap_or(inner.len());
    let name = &inner[..name_end];
    if !is_tag_name(name) {
        return Ok(None);
    }
    let name = name.to_ascii_uppercase();
    let id = || -> Result<String> {
        parse_attributes(&inner[name_end..])
            .into_iter()
            .find(|(k, _)| k == "id")
            .map(|(_, v)| v)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::parse(lineno, format!("<{name}> marker without id attribute")))
    };
    let markup = match name.as_str() {
        "CHAPTER" => Markup::Chapter(id()?),
        "SPEAKER" => Markup::Speaker(id()?),
        "P" => Markup::Paragraph,
        _ => Markup::Other,
    };
    Ok(Some(markup))
}

struct DocBuilder {
    doc: Document,
    open: Option<(Paragraph, Vec<String>)>,
}

impl DocBuilder {
    fn close_paragraph(&mut self) {
        if let Some((mut para, lines)) = self.open.take() {
            para.raw_text = lines.join("\n");
            self.doc.paragraphs.push(para);
        }
    }

    fn push_line(&mut self, line: &str, speaker: &Option<String>) {
        if self.open.is_none() {
            let para_id = (self.doc.paragraphs.len() + 1).to_string();
            let mut para = Paragraph::new(para_id, "");
            para.speaker = speaker.clone();
            self.open = Some((para, Vec::new()));
        }
        if let Some((_, lines)) = self.open.as_mut() {
            lines.push(line.to_string());
        }
    }

    fn finish(mut self) -> Document {
        self.close_paragraph();
        self.doc
    }
}

/// Parses the tagged plaintext corpus format into documents.
///
/// Every `<CHAPTER id=..>` starts a document whose ID is the chapter ID.
/// `<SPEAKER id=..>` and `<P>` close the current paragraph; the speaker ID is
/// attached to every following paragraph until the next speaker or chapter.
/// Any other tag is a bare paragraph boundary. Text lines accumulate into the
/// current paragraph, which is opened lazily on the first line.
///
/// Closing `</CHAPTER>` tags are optional, but if the input uses them at all
/// then every chapter must be closed before the next one opens.
pub fn parse_tagged_corpus(text: &str, lang: &str) -> Result<Vec<Document>> {
    validate_lang(lang)?;

    let explicit_close = text
        .lines()
        .any(|l| l.trim().eq_ignore_ascii_case("</CHAPTER>"));

    let mut docs = Vec::new();
    let mut seen_chapters = HashSet::new();
    let mut current: Option<DocBuilder> = None;
    let mut speaker: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_markup(line, lineno)? {
            Some(Markup::Chapter(id)) => {
                if explicit_close && current.is_some() {
                    return Err(Error::parse(lineno, format!("nested <CHAPTER id={id}>")));
                }
                if !seen_chapters.insert(id.clone()) {
                    return Err(Error::parse(lineno, format!("duplicate chapter id {id:?}")));
                }
                if let Some(builder) = current.take() {
                    docs.push(builder.finish());
                }
                speaker = None;
                current = Some(DocBuilder {
                    doc: Document::new(id, lang),
                    open: None,
                });
            }
            Some(Markup::Close(name)) if name == "CHAPTER" => match current.take() {
                Some(builder) => {
                    docs.push(builder.finish());
                    speaker = None;
                }
                None => return Err(Error::parse(lineno, "</CHAPTER> without an open chapter")),
            },
            Some(Markup::Speaker(id)) => {
                if let Some(builder) = current.as_mut() {
                    builder.close_paragraph();
                }
                speaker = Some(id);
            }
            Some(Markup::Paragraph | Markup::Close(_) | Markup::Other) => {
                if let Some(builder) = current.as_mut() {
                    builder.close_paragraph();
                }
            }
            None => match current.as_mut() {
                Some(builder) => builder.push_line(line, &speaker),
                None => return Err(Error::parse(lineno, "text outside of a chapter")),
            },
        }
    }
    if let Some(builder) = current.take() {
        docs.push(builder.finish());
    }
    Ok(docs)
}

// ---------------------------------------------------------------------------
// Canonical interchange format

/// Writes one JSON record per document, newline-terminated.
pub fn write_canonical<W: Write>(docs: &[Document], mut out: W) -> Result<()> {
    for doc in docs {
        serde_json::to_writer(&mut out, doc).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_canonical_string(docs: &[Document]) -> String {
    let mut buf = Vec::new();
    write_canonical(docs, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

const DOC_FIELDS: &[&str] = &["doc_id", "lang", "paragraphs"];
const PARA_FIELDS: &[&str] = &["para_id", "speaker", "raw_text", "sentences"];
const SENT_FIELDS: &[&str] = &["sent_id", "text"];

fn retain_known(value: &mut Value, fields: &[&str]) {
    if let Value::Object(map) = value {
        map.retain(|k, _| fields.contains(&k.as_str()));
    }
}

fn prune_unknown(record: &mut Value) {
    retain_known(record, DOC_FIELDS);
    let Some(Value::Array(paras)) = record.get_mut("paragraphs") else {
        return;
    };
    for para in paras {
        retain_known(para, PARA_FIELDS);
        if let Some(Value::Array(sents)) = para.get_mut("sentences") {
            for sent in sents {
                retain_known(sent, SENT_FIELDS);
            }
        }
    }
}

/// Reads the canonical format. Record numbers in errors are 1-based.
///
/// In strict mode unknown fields are rejected; with `lenient` they are
/// dropped before decoding.
pub fn read_canonical<R: BufRead>(input: R, lenient: bool) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let record = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut value: Value =
            serde_json::from_str(&line).map_err(|e| Error::record(record, e.to_string()))?;
        if lenient {
            prune_unknown(&mut value);
        }
        let doc: Document =
            serde_json::from_value(value).map_err(|e| Error::record(record, e.to_string()))?;
        doc.validate()
            .map_err(|e| Error::record(record, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_P: &str = "<CHAPTER id=\"1\">\n<P>\nFirst paragraph.\n<P>\nSecond paragraph.\n";

    #[test]
    fn empty_input_has_no_documents() {
        assert!(parse_tagged_corpus("", "en").unwrap().is_empty());
    }

    #[test]
    fn chapter_with_two_paragraphs() {
        let docs = parse_tagged_corpus(TWO_P, "en").unwrap();
        assert_eq!(docs.len(), 1);
        let doc = &docs[0];
        assert_eq!(doc.doc_id, "1");
        let ids: Vec<_> = doc.paragraphs.iter().map(|p| p.para_id.as_str()).collect();
        assert_eq!(ids, ["1", "2"]);
        assert_eq!(doc.paragraphs[0].raw_text, "First paragraph.");
        assert_eq!(doc.paragraphs[1].raw_text, "Second paragraph.");
    }

    #[test]
    fn speaker_attaches_to_following_paragraphs() {
        let text = "<CHAPTER id=\"3\">\n<SPEAKER id=\"7\" NAME=\"President\">\n<P>\nHello.\n<P>\nAgain.\n<SPEAKER ID=8>\nBye.\n";
        let docs = parse_tagged_corpus(text, "en").unwrap();
        let paras = &docs[0].paragraphs;
        assert_eq!(paras.len(), 3);
        assert_eq!(paras[0].speaker.as_deref(), Some("7"));
        assert_eq!(paras[1].speaker.as_deref(), Some("7"));
        assert_eq!(paras[2].speaker.as_deref(), Some("8"));
    }

    #[test]
    fn multi_line_paragraph_keeps_lines() {
        let text = "<CHAPTER ID=2>\nline one\nline two\n<P>\nnext\n";
        let docs = parse_tagged_corpus(text, "en").unwrap();
        assert_eq!(docs[0].paragraphs[0].raw_text, "line one\nline two");
        assert_eq!(docs[0].paragraphs.len(), 2);
    }

    #[test]
    fn markers_without_id_are_rejected() {
        let err = parse_tagged_corpus("<CHAPTER id=\"1\">\n<SPEAKER NAME=\"x\">\n", "en").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_tagged_corpus("<CHAPTER>\n", "en").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn nested_chapters_are_rejected_when_closing_tags_are_used() {
        let text = "<CHAPTER id=\"1\">\na\n<CHAPTER id=\"2\">\nb\n</CHAPTER>\n</CHAPTER>\n";
        let err = parse_tagged_corpus(text, "en").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");

        let closed = "<CHAPTER id=\"1\">\na\n</CHAPTER>\n<CHAPTER id=\"2\">\nb\n</CHAPTER>\n";
        assert_eq!(parse_tagged_corpus(closed, "en").unwrap().len(), 2);
    }

    #[test]
    fn unknown_tags_split_paragraphs_and_never_become_text() {
        let text = "<CHAPTER id=\"1\">\nalpha\n<NOTE type=\"x\">\nbeta\n";
        let docs = parse_tagged_corpus(text, "en").unwrap();
        let paras = &docs[0].paragraphs;
        assert_eq!(paras.len(), 2);
        assert!(paras.iter().all(|p| !p.raw_text.contains('<')));
    }

    #[test]
    fn text_before_first_chapter_is_rejected() {
        let err = parse_tagged_corpus("orphan\n<CHAPTER id=\"1\">\n", "en").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn duplicate_chapter_ids_are_rejected() {
        let err = parse_tagged_corpus("<CHAPTER id=\"1\">\na\n<CHAPTER id=\"1\">\nb\n", "en").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn bad_language_code() {
        assert!(parse_tagged_corpus("", "English").is_err());
    }

    fn sample_doc() -> Document {
        let mut doc = Document::new("4", "en");
        let mut p = Paragraph::new("1", "One. Two.");
        p.speaker = Some("12".into());
        p.set_sentences(["One.", "Two."]);
        doc.paragraphs.push(p);
        doc.paragraphs.push(Paragraph::new("2", "Unsegmented"));
        doc
    }

    #[test]
    fn canonical_field_order_is_fixed() {
        let line = to_canonical_string(&[sample_doc()]);
        assert_eq!(
            line,
            concat!(
                r#"{"doc_id":"4","lang":"en","paragraphs":[{"para_id":"1","speaker":"12","raw_text":"One. Two.","#,
                r#""sentences":[{"sent_id":"1.1","text":"One."},{"sent_id":"1.2","text":"Two."}]},"#,
                r#"{"para_id":"2","raw_text":"Unsegmented","sentences":[]}]}"#,
                "\n"
            )
        );
    }

    #[test]
    fn canonical_empty_stream() {
        assert_eq!(to_canonical_string(&[]), "");
        assert!(read_canonical("".as_bytes(), false).unwrap().is_empty());
    }

    #[test]
    fn canonical_missing_doc_id() {
        let err = read_canonical(r#"{"lang":"en","paragraphs":[]}"#.as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::Record { record: 1, .. }), "{err}");
    }

    #[test]
    fn canonical_truncated_record_reports_index() {
        let mut text = to_canonical_string(&[sample_doc(), sample_doc()]);
        text.truncate(text.len() - 10);
        let err = read_canonical(text.as_bytes(), false).unwrap_err();
        assert!(matches!(err, Error::Record { record: 2, .. }), "{err}");
    }

    #[test]
    fn canonical_unknown_fields_strict_and_lenient() {
        let text = r#"{"doc_id":"1","lang":"en","extra":1,"paragraphs":[{"para_id":"1","raw_text":"x","note":"y","sentences":[{"sent_id":"1.1","text":"x","score":0.5}]}]}"#;
        assert!(read_canonical(text.as_bytes(), false).is_err());
        let docs = read_canonical(text.as_bytes(), true).unwrap();
        assert_eq!(docs[0].paragraphs[0].sentences[0].text, "x");
    }

    #[test]
    fn filtered_sentences_keep_gaps() {
        let mut doc = sample_doc();
        let mut p = Paragraph::new("3", "a b c");
        p.set_sentences(["a", "b", "c"]);
        p.sentences.remove(1);
        doc.paragraphs.push(p);
        doc.validate().unwrap();
        let back = read_canonical(to_canonical_string(&[doc.clone()]).as_bytes(), false).unwrap();
        assert_eq!(back, vec![doc]);
    }

    #[test]
    fn stats_monotonicity() {
        let eu = compute_stats(2_167_164, 2_160_061, 2_138_713).unwrap();
        assert_eq!(eu.n_aligned, 2_138_713);
        compute_stats(0, 0, 0).unwrap();
        assert!(matches!(compute_stats(100, 120, 90), Err(Error::Integrity(_))));
    }

    #[test]
    fn char_len_ignores_whitespace() {
        assert_eq!(Sentence::new("1.1", " a b\tc\n").char_len(), 3);
        assert_eq!(char_len("Привіт світ"), 10);
    }
}
