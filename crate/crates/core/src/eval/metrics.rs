use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankedList;

pub type Rankings = BTreeMap<u64, RankedList>;
pub type Gold = BTreeMap<u64, u64>;

pub const DEFAULT_MAP_DEPTH: usize = 100;

fn gold_ranks(rankings: &Rankings, gold: &Gold) -> Result<Vec<(u64, Option<usize>)>> {
    if gold.is_empty() {
        return Err(Error::Empty("gold set"));
    }
    if let Some(&q) = rankings.keys().find(|q| !gold.contains_key(q)) {
        return Err(Error::MissingGold(q));
    }
    gold.iter()
        .map(|(&q, &doc)| {
            let ranking = rankings.get(&q).ok_or(Error::MissingRanking(q))?;
            Ok((q, ranking.rank_of(doc)))
        })
        .collect()
}

/// Percentage of questions whose gold document is among the first `k` results.
pub fn precision_at_k(rankings: &Rankings, gold: &Gold, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("K must be >= 1"));
    }
    let ranks = gold_ranks(rankings, gold)?;
    let hits = ranks
        .iter()
        .filter(|(_, r)| r.is_some_and(|r| r <= k))
        .count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Mean average precision with one relevant document per question, which is
/// mean reciprocal rank. Gold documents missing from a ranking contribute 0.
pub fn mean_average_precision(rankings: &Rankings, gold: &Gold) -> Result<f64> {
    let ranks = gold_ranks(rankings, gold)?;
    let total: f64 = ranks
        .iter()
        .map(|(_, r)| r.map_or(0.0, |r| 1.0 / r as f64))
        .sum();
    Ok(100.0 * total / ranks.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionOutcome {
    pub question_id: u64,
    /// 1-based, `None` when the gold document is outside the evaluated depth.
    pub gold_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub method: String,
    pub questions: usize,
    /// K mapped to P@K as a percentage.
    pub p_at_k: BTreeMap<usize, f64>,
    #[serde(rename = "map")]
    pub map_score: f64,
    pub map_depth: usize,
    pub per_question: Vec<QuestionOutcome>,
}

/// P@K for each of `ks` and mAP over rankings cut to `map_depth`.
pub fn evaluate(
    method: &str,
    rankings: &Rankings,
    gold: &Gold,
    ks: &[usize],
    map_depth: usize,
) -> Result<EvalResult> {
    if map_depth == 0 {
        return Err(Error::invalid("mAP depth must be >= 1"));
    }
    let mut p_at_k = BTreeMap::new();
    for &k in ks {
        p_at_k.insert(k, precision_at_k(rankings, gold, k)?);
    }
    let truncated: Rankings = rankings
        .iter()
        .map(|(&q, r)| {
            (
                q,
                RankedList::from_scores(r.hits().iter().map(|h| (h.doc_id, h.score)), map_depth),
            )
        })
        .collect();
    let map_score = mean_average_precision(&truncated, gold)?;
    let per_question = gold_ranks(rankings, gold)?
        .into_iter()
        .map(|(question_id, gold_rank)| QuestionOutcome {
            question_id,
            gold_rank,
        })
        .collect();
    Ok(EvalResult {
        method: method.to_owned(),
        questions: gold.len(),
        p_at_k,
        map_score,
        map_depth,
        per_question,
    })
}
