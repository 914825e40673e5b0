//! Summary and training-example records shared across modules, plus their
//! JSONL encodings.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::transcript::normalize_text;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: malformed JSON: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A generated or reference summary bound to a conversation.
///
/// `origin` is the annotator id for references and the run id for
/// generated summaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub conv_id: String,
    pub origin: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage1_pieces: Option<Vec<String>>,
}

impl SummaryRecord {
    pub fn new(conv_id: impl Into<String>, origin: impl Into<String>, text: &str) -> Self {
        Self {
            conv_id: conv_id.into(),
            origin: origin.into(),
            text: normalize_text(text),
            stage1_pieces: None,
        }
    }
}

/// Wire form of one reference-summary JSONL line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceLine {
    pub conv_id: String,
    pub annotator_id: String,
    pub summary: String,
}

impl From<ReferenceLine> for SummaryRecord {
    fn from(line: ReferenceLine) -> Self {
        SummaryRecord::new(line.conv_id, line.annotator_id, &line.summary)
    }
}

impl From<&SummaryRecord> for ReferenceLine {
    fn from(rec: &SummaryRecord) -> Self {
        ReferenceLine {
            conv_id: rec.conv_id.clone(),
            annotator_id: rec.origin.clone(),
            summary: rec.text.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Single,
    Chunking,
    Sentbert,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Single => "single",
            Method::Chunking => "chunking",
            Method::Sentbert => "sentbert",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Method::Single),
            "chunking" => Ok(Method::Chunking),
            "sentbert" => Ok(Method::Sentbert),
            other => Err(format!(
                "unknown method {other:?} (expected single, chunking or sentbert)"
            )),
        }
    }
}

/// One fine-tuning pair with provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub conv_id: String,
    pub piece_id: String,
    pub source: String,
    pub target: String,
    pub method: Method,
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, RecordError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| RecordError::Json {
            line: idx + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, W, I>(mut writer: W, items: I) -> std::io::Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn parse_references<R: BufRead>(reader: R) -> Result<Vec<SummaryRecord>, RecordError> {
    Ok(read_jsonl::<ReferenceLine, _>(reader)?
        .into_iter()
        .map(SummaryRecord::from)
        .collect())
}
