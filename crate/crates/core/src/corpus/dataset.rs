use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One question paired with its answer passage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    #[serde(rename = "index")]
    pub id: u64,
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<String>,
}

impl QaPair {
    pub fn new(id: u64, question: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            id,
            question: question.into(),
            answer: answer.into(),
            link: None,
        }
    }
}

/// Reads one JSON object per line. Blank lines are skipped; line numbers in
/// errors are 1-based.
pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<QaPair>> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let pair: QaPair = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if crate::corpus::normalize(&pair.question).is_empty()
            || crate::corpus::normalize(&pair.answer).is_empty()
        {
            return Err(Error::MalformedLine {
                line: line_no,
                message: "question and answer must be non-empty".into(),
            });
        }
        if !seen.insert(pair.id) {
            return Err(Error::DuplicateId(pair.id));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_jsonl(path: &Path) -> Result<Vec<QaPair>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file))
}

pub fn write_jsonl<W: Write>(mut out: W, pairs: &[QaPair]) -> std::io::Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_jsonl(path: &Path, pairs: &[QaPair]) -> Result<()> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, pairs).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
