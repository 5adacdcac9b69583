use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedText;
use crate::error::{Error, Result};
use crate::ranking::RankedList;

use super::index::InvertedIndex;

/// Term saturation `k` and length normalization `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bm25Params {
    pub k: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn new(k: f64, b: f64) -> Result<Self> {
        let p = Self { k, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::invalid(format!(
                "bm25 k must be > 0, got {}",
                self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::invalid(format!(
                "bm25 b must be in [0, 1], got {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// Jelinek-Mercer interpolation weight on the collection model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LmParams {
    pub alpha: f64,
}

impl Default for LmParams {
    fn default() -> Self {
        Self { alpha: 0.1 }
    }
}

impl LmParams {
    pub fn new(alpha: f64) -> Result<Self> {
        let p = Self { alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid(format!(
                "lm alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scorer {
    Bm25(Bm25Params),
    TfIdfCosine,
    QueryLikelihood(LmParams),
}

pub type SparseVector = BTreeMap<String, f64>;

fn distinct_terms(query: &TokenizedText) -> Vec<&str> {
    let mut seen = HashSet::new();
    query
        .tokens
        .iter()
        .map(String::as_str)
        .filter(|t| seen.insert(*t))
        .collect()
}

#[inline]
fn bm25_term(idf: f64, tf: u32, doc_len: u32, avg_len: f64, p: Bm25Params) -> f64 {
    let tf = tf as f64;
    let norm = p.k * (1.0 - p.b + p.b * doc_len as f64 / avg_len);
    idf * (tf * (p.k + 1.0)) / (tf + norm)
}

/// BM25 summed over the distinct query terms; repeated query terms count once.
pub fn bm25_score(
    index: &InvertedIndex,
    params: Bm25Params,
    query: &TokenizedText,
    doc_id: u64,
) -> Result<f64> {
    let pos = index.require_position(doc_id)?;
    let n = index.doc_count() as u64;
    let mut score = 0.0;
    for term in distinct_terms(query) {
        let Some(tid) = index.term_id(term) else {
            continue;
        };
        let tf = index.tf_at(tid, pos);
        if tf == 0 {
            continue;
        }
        let idf = super::smoothed_idf(n, index.postings[tid as usize].len() as u64);
        score += bm25_term(idf, tf, index.doc_len[pos], index.avg_len, params);
    }
    Ok(score)
}

/// `tf(t, text) * idf(t)` for every term of `text`. Unseen terms get the
/// `df = 0` IDF.
pub fn tfidf_vector(index: &InvertedIndex, text: &TokenizedText) -> SparseVector {
    let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
    for t in &text.tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(t, tf)| (t.to_owned(), tf as f64 * index.idf(t)))
        .collect()
}

/// The TF-IDF vector of an indexed document.
pub fn document_vector(index: &InvertedIndex, doc_id: u64) -> Result<SparseVector> {
    let pos = index.require_position(doc_id)?;
    let n = index.doc_count() as u64;
    let mut v = SparseVector::new();
    for (tid, term) in index.terms.iter().enumerate() {
        let tf = index.tf_at(tid as u32, pos);
        if tf > 0 {
            let idf = super::smoothed_idf(n, index.postings[tid].len() as u64);
            v.insert(term.clone(), tf as f64 * idf);
        }
    }
    Ok(v)
}

fn norm(v: &SparseVector) -> f64 {
    v.values().map(|w| w * w).sum::<f64>().sqrt()
}

/// Cosine similarity; 0 when either vector has zero norm.
///
/// The dot product runs over shared keys in key order, so the result is
/// bit-identical under argument swap.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> f64 {
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    let (mut a, mut b) = (u.iter().peekable(), v.iter().peekable());
    while let (Some((ka, wa)), Some((kb, wb))) = (a.peek(), b.peek()) {
        match ka.cmp(kb) {
            std::cmp::Ordering::Less => {
                a.next();
            }
            std::cmp::Ordering::Greater => {
                b.next();
            }
            std::cmp::Ordering::Equal => {
                dot += *wa * *wb;
                a.next();
                b.next();
            }
        }
    }
    dot / (nu * nv)
}

pub fn tfidf_cosine_score(
    index: &InvertedIndex,
    query: &TokenizedText,
    doc_id: u64,
) -> Result<f64> {
    Ok(cosine(
        &tfidf_vector(index, query),
        &document_vector(index, doc_id)?,
    ))
}

fn lm_at(index: &InvertedIndex, params: LmParams, query: &TokenizedText, pos: usize) -> f64 {
    let doc_len = index.doc_len[pos];
    let total = index.total_tokens;
    let alpha = params.alpha;
    query
        .tokens
        .iter()
        .map(|t| {
            let (tf, cf) = match index.term_id(t) {
                Some(tid) => (index.tf_at(tid, pos), index.collection_tf[tid as usize]),
                None => (0, 0),
            };
            let p_doc = if doc_len == 0 {
                0.0
            } else {
                tf as f64 / doc_len as f64
            };
            let p_coll = if total == 0 {
                0.0
            } else {
                cf as f64 / total as f64
            };
            // ln(0) is -inf: a token unseen in both models sinks the document.
            ((1.0 - alpha) * p_doc + alpha * p_coll).ln()
        })
        .sum()
}

/// Log query likelihood under a Jelinek-Mercer smoothed unigram model.
/// Every query token counts, including repeats.
pub fn lm_score(
    index: &InvertedIndex,
    params: LmParams,
    query: &TokenizedText,
    doc_id: u64,
) -> Result<f64> {
    let pos = index.require_position(doc_id)?;
    Ok(lm_at(index, params, query, pos))
}

/// Scores every document and keeps the top `k`.
pub fn rank(index: &InvertedIndex, scorer: Scorer, query: &TokenizedText, k: usize) -> RankedList {
    let n = index.doc_count();
    let scores: Vec<f64> = match scorer {
        Scorer::Bm25(params) => {
            let mut acc = vec![0.0; n];
            for term in distinct_terms(query) {
                let Some(tid) = index.term_id(term) else {
                    continue;
                };
                let plist = &index.postings[tid as usize];
                let idf = super::smoothed_idf(n as u64, plist.len() as u64);
                for p in plist {
                    let pos = p.doc as usize;
                    acc[pos] += bm25_term(idf, p.tf, index.doc_len[pos], index.avg_len, params);
                }
            }
            acc
        }
        Scorer::TfIdfCosine => {
            let q = tfidf_vector(index, query);
            let qn = norm(&q);
            let mut dot = vec![0.0; n];
            for (term, qw) in &q {
                let Some(tid) = index.term_id(term) else {
                    continue;
                };
                let plist = &index.postings[tid as usize];
                let idf = super::smoothed_idf(n as u64, plist.len() as u64);
                for p in plist {
                    dot[p.doc as usize] += qw * (p.tf as f64 * idf);
                }
            }
            dot.into_iter()
                .zip(&index.tfidf_norms)
                .map(|(d, &dn)| {
                    if qn == 0.0 || dn == 0.0 {
                        0.0
                    } else {
                        d / (qn * dn)
                    }
                })
                .collect()
        }
        Scorer::QueryLikelihood(params) => {
            (0..n).map(|pos| lm_at(index, params, query, pos)).collect()
        }
    };
    RankedList::from_scores(index.doc_ids.iter().copied().zip(scores), k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(words: &str) -> TokenizedText {
        TokenizedText::from_words(0, words)
    }

    fn two_doc_index() -> InvertedIndex {
        InvertedIndex::build(&[
            TokenizedText::from_words(1, "a b a"),
            TokenizedText::from_words(2, "b c"),
        ])
        .unwrap()
    }

    #[test]
    fn bm25_hand_value() {
        let idx = two_doc_index();
        let p = Bm25Params::default();
        let expected = 2f64.ln() * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / 2.5));
        let got = bm25_score(&idx, p, &q("a"), 1).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.9023).abs() < 1e-4);
        assert_eq!(bm25_score(&idx, p, &q("a a"), 1).unwrap(), got);
    }

    #[test]
    fn bm25_absent_terms_score_zero() {
        let idx = two_doc_index();
        let p = Bm25Params::default();
        assert_eq!(bm25_score(&idx, p, &q("a"), 2).unwrap(), 0.0);
        assert_eq!(bm25_score(&idx, p, &q("zz yy"), 1).unwrap(), 0.0);
        assert!(matches!(
            bm25_score(&idx, p, &q("a"), 9),
            Err(Error::UnknownDocument(9))
        ));
    }

    #[test]
    fn tfidf_vector_values() {
        let idx = two_doc_index();
        assert!(tfidf_vector(&idx, &q("")).is_empty());
        let v = tfidf_vector(&idx, &q("a a"));
        assert!((v["a"] - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!((v["a"] - 1.3863).abs() < 1e-4);
        let unseen = tfidf_vector(&idx, &q("zz"));
        assert_eq!(unseen["zz"], (2.5f64 / 0.5 + 1.0).ln());
    }

    #[test]
    fn cosine_values() {
        let u: SparseVector = [("a".to_owned(), 1.0), ("b".to_owned(), 1.0)].into();
        let v: SparseVector = [("a".to_owned(), 1.0)].into();
        let w: SparseVector = [("c".to_owned(), 3.0)].into();
        assert!((cosine(&u, &v) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((cosine(&u, &u) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&u, &w), 0.0);
        assert_eq!(cosine(&u, &SparseVector::new()), 0.0);
    }

    #[test]
    fn lm_hand_value() {
        let idx = InvertedIndex::build(&[
            TokenizedText::from_words(1, "a b"),
            TokenizedText::from_words(2, "b"),
        ])
        .unwrap();
        let got = lm_score(&idx, LmParams::new(0.1).unwrap(), &q("a"), 1).unwrap();
        let expected = (0.9f64 * 0.5 + 0.1 * (1.0 / 3.0)).ln();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - (-0.7270)).abs() < 1e-4);
    }

    #[test]
    fn lm_alpha_one_ignores_document() {
        let idx = two_doc_index();
        let p = LmParams::new(1.0).unwrap();
        let a = lm_score(&idx, p, &q("a c"), 1).unwrap();
        let b = lm_score(&idx, p, &q("a c"), 2).unwrap();
        assert_eq!(a, b);
        let ids: Vec<_> = rank(&idx, Scorer::QueryLikelihood(p), &q("a c"), 5)
            .doc_ids()
            .collect();
        assert_eq!(ids, [1, 2]);
    }

    #[test]
    fn lm_unseen_token_is_neg_infinity() {
        let idx = two_doc_index();
        let s = lm_score(&idx, LmParams::default(), &q("zz"), 1).unwrap();
        assert_eq!(s, f64::NEG_INFINITY);
    }

    #[test]
    fn rank_contracts() {
        let idx = two_doc_index();
        let p = Bm25Params::default();
        let all = rank(&idx, Scorer::Bm25(p), &q("a"), 10);
        assert_eq!(all.len(), 2);
        assert_eq!(all.top().unwrap().doc_id, 1);
        // no overlap: both zero, lower id first
        let tie = rank(&idx, Scorer::Bm25(p), &q("zz"), 10);
        assert_eq!(tie.doc_ids().collect::<Vec<_>>(), [1, 2]);
        assert_eq!(
            rank(&idx, Scorer::TfIdfCosine, &q("c"), 1)
                .top()
                .unwrap()
                .doc_id,
            2
        );
    }

    #[test]
    fn params_validate() {
        assert!(Bm25Params::new(0.0, 0.5).is_err());
        assert!(Bm25Params::new(1.2, 1.5).is_err());
        assert!(LmParams::new(-0.1).is_err());
        assert!(LmParams::new(1.0).is_ok());
    }
}
