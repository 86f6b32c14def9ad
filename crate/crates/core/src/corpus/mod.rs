//! Document ingestion, text normalization, vocabulary and time bucketing.

mod bucket;
mod preprocess;
mod vocab;

use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, SubsecRound, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bucket::{bucketize, group_by_subject, Bucket, BucketedCorpus};
pub use preprocess::{
    collapse_repetitions, default_stopwords, light_stem, PhraseTable, Preprocessor,
    RepetitionPolicy, PLACEHOLDERS,
};
pub use vocab::{build_vocabulary, Vocabulary};

/// One timestamped short text written by a subject.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub subject_id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

/// A document after normalization. `sentences` holds half-open token
/// spans that partition `tokens`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDocument {
    pub subject_id: String,
    pub timestamp: DateTime<Utc>,
    pub tokens: Vec<String>,
    pub sentences: Vec<(usize, usize)>,
}

impl TokenizedDocument {
    pub fn sentence_tokens(&self) -> impl Iterator<Item = &[String]> + '_ {
        self.sentences.iter().map(move |&(s, e)| &self.tokens[s..e])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// Guess from the file extension: `.csv` is CSV, everything else JSONL.
    pub fn from_path(path: &Path) -> InputFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => InputFormat::Csv,
            _ => InputFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    /// 1-based line (JSONL) or record (CSV) number.
    pub record: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub documents: Vec<Document>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Deserialize)]
struct RawRecord {
    subject_id: Option<serde_json::Value>,
    timestamp: Option<String>,
    text: Option<String>,
}

/// Parse an ISO-8601 instant, truncated to whole seconds. Offsets are
/// converted to UTC; naive forms are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc).trunc_subsecs(0));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc().trunc_subsecs(0));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn make_document(
    subject_id: Option<String>,
    timestamp: Option<&str>,
    text: Option<String>,
) -> std::result::Result<Document, String> {
    let subject_id = subject_id
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or("missing subject_id")?;
    let raw_ts = timestamp.ok_or("missing timestamp")?;
    let timestamp = parse_timestamp(raw_ts).ok_or_else(|| format!("bad timestamp `{raw_ts}`"))?;
    let text = text.ok_or("missing text")?;
    if text.trim().is_empty() {
        return Err("empty text".into());
    }
    Ok(Document {
        subject_id,
        timestamp,
        text,
    })
}

fn ingest_jsonl(content: &str) -> (Vec<Document>, Vec<SkippedRecord>) {
    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let outcome = serde_json::from_str::<RawRecord>(line)
            .map_err(|e| format!("invalid JSON: {e}"))
            .and_then(|r| {
                let subject = r.subject_id.map(|v| match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                });
                make_document(subject, r.timestamp.as_deref(), r.text)
            });
        match outcome {
            Ok(d) => docs.push(d),
            Err(reason) => skipped.push(SkippedRecord {
                record: i + 1,
                reason,
            }),
        }
    }
    (docs, skipped)
}

fn ingest_csv(content: &str) -> Result<(Vec<Document>, Vec<SkippedRecord>)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(content.as_bytes());
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(si), Some(ti), Some(xi)) = (column("subject_id"), column("timestamp"), column("text"))
    else {
        return Err(Error::format(
            "CSV header",
            "expected columns subject_id,timestamp,text",
        ));
    };
    let mut docs = Vec::new();
    let mut skipped = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let outcome = rec.map_err(|e| e.to_string()).and_then(|r| {
            make_document(
                r.get(si).map(str::to_string),
                r.get(ti),
                r.get(xi).map(str::to_string),
            )
        });
        match outcome {
            Ok(d) => docs.push(d),
            Err(reason) => skipped.push(SkippedRecord {
                record: i + 1,
                reason,
            }),
        }
    }
    Ok((docs, skipped))
}

/// Read every valid record. Invalid records are reported in
/// [`IngestReport::skipped`]; only a file with no valid record is an error.
pub fn ingest(path: &Path, format: InputFormat) -> Result<IngestReport> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (documents, skipped) = match format {
        InputFormat::Jsonl => ingest_jsonl(&content),
        InputFormat::Csv => ingest_csv(&content)?,
    };
    if documents.is_empty() {
        return Err(Error::NoValidRecords {
            path: path.to_path_buf(),
            skipped: skipped.len(),
        });
    }
    for s in &skipped {
        log::warn!("{}: skipped record {}: {}", path.display(), s.record, s.reason);
    }
    Ok(IngestReport { documents, skipped })
}
