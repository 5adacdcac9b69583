//! Stage 1: shrink each answer passage to the sentences that best match its
//! guide question under BM25.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{normalize, split_sentences, Preprocessor, QaPair, TokenizedText};
use crate::error::{Error, Result};
use crate::sparse::{bm25_score, Bm25Params, InvertedIndex};

pub const DEFAULT_SENTENCES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondensedPassage {
    #[serde(rename = "index")]
    pub doc_id: u64,
    #[serde(rename = "guide")]
    pub guide_id: Option<u64>,
    #[serde(rename = "sentences")]
    pub kept_sentences: Vec<String>,
}

impl CondensedPassage {
    pub fn text(&self) -> String {
        self.kept_sentences.join(" ")
    }
}

/// Returns the positions of the `k` best-scoring sentences in passage order.
/// Higher score wins; equal scores prefer the earlier sentence.
pub(crate) fn select_top(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Scores every sentence of `passage` against `guide` over an index built
/// from the passage's own sentences, then keeps the top `k` in original order.
///
/// Without a guide, or when nothing matches, the first `k` sentences are kept.
pub fn condense(
    pre: &Preprocessor,
    params: Bm25Params,
    doc_id: u64,
    passage: &str,
    guide: Option<&TokenizedText>,
    k: usize,
) -> Result<CondensedPassage> {
    if k == 0 {
        return Err(Error::invalid("condenser K must be >= 1"));
    }
    let normalized = normalize(passage);
    let sentences = split_sentences(&normalized);
    if sentences.is_empty() {
        return Err(Error::Empty("passage"));
    }
    let kept = match guide {
        Some(guide) if sentences.len() > k => {
            let docs: Vec<TokenizedText> = sentences
                .iter()
                .enumerate()
                .map(|(i, s)| pre.tokenize_normalized(s, i as u64))
                .collect();
            let mini = InvertedIndex::build(&docs)?;
            let scores = (0..sentences.len())
                .map(|i| bm25_score(&mini, params, guide, i as u64))
                .collect::<Result<Vec<f64>>>()?;
            select_top(&scores, k)
        }
        _ => (0..sentences.len().min(k)).collect(),
    };
    Ok(CondensedPassage {
        doc_id,
        guide_id: guide.map(|g| g.source_id),
        kept_sentences: kept.into_iter().map(|i| sentences[i].to_owned()).collect(),
    })
}

/// Condenses every answer against its own question. Output order follows input.
pub fn condense_corpus(
    pre: &Preprocessor,
    params: Bm25Params,
    pairs: &[QaPair],
    k: usize,
) -> Result<Vec<CondensedPassage>> {
    pairs
        .iter()
        .map(|pair| {
            let guide = pre.process(&pair.question, pair.id);
            condense(pre, params, pair.id, &pair.answer, Some(&guide), k).map_err(|e| Error::Pair {
                id: pair.id,
                source: Box::new(e),
            })
        })
        .collect()
}

pub fn write_condensed<W: Write>(mut out: W, passages: &[CondensedPassage]) -> std::io::Result<()> {
    for p in passages {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_condensed<R: BufRead>(reader: R) -> Result<Vec<CondensedPassage>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

pub fn save_condensed(path: &Path, passages: &[CondensedPassage]) -> Result<()> {
    let mut buf = Vec::new();
    write_condensed(&mut buf, passages).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_condensed(path: &Path) -> Result<Vec<CondensedPassage>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_condensed(std::io::BufReader::new(file))
}
