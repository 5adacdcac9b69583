use std::collections::{BTreeMap, HashMap};

use crate::corpus::TokenizedText;
use crate::error::{Error, Result};

/// Smoothed IDF, `ln((N - df + 0.5) / (df + 0.5) + 1)`. Positive for every
/// `df <= N`.
pub fn smoothed_idf(n: u64, df: u64) -> f64 {
    let n = n as f64;
    let df = df as f64;
    ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Posting {
    /// Position in `InvertedIndex::doc_ids`, not the external id.
    pub doc: u32,
    pub tf: u32,
}

/// Term postings, document lengths and collection statistics over a set of
/// tokenized documents.
///
/// Documents are stored in ascending id order and terms in ascending byte
/// order, so two indexes built from the same documents are identical
/// regardless of input order.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    pub(crate) doc_ids: Vec<u64>,
    pub(crate) doc_len: Vec<u32>,
    pub(crate) avg_len: f64,
    pub(crate) terms: Vec<String>,
    pub(crate) term_ids: HashMap<String, u32>,
    pub(crate) postings: Vec<Vec<Posting>>,
    pub(crate) collection_tf: Vec<u64>,
    pub(crate) total_tokens: u64,
    /// Euclidean norm of each document's TF-IDF vector.
    pub(crate) tfidf_norms: Vec<f64>,
}

impl InvertedIndex {
    pub fn build(docs: &[TokenizedText]) -> Result<Self> {
        let mut order: Vec<&TokenizedText> = docs.iter().collect();
        order.sort_by_key(|d| d.source_id);
        for w in order.windows(2) {
            if w[0].source_id == w[1].source_id {
                return Err(Error::DuplicateId(w[0].source_id));
            }
        }

        let mut by_term: BTreeMap<&str, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(order.len());
        let mut doc_len = Vec::with_capacity(order.len());
        for (pos, doc) in order.iter().enumerate() {
            doc_ids.push(doc.source_id);
            doc_len.push(doc.tokens.len() as u32);
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &doc.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
            for (term, tf) in counts {
                by_term.entry(term).or_default().push(Posting {
                    doc: pos as u32,
                    tf,
                });
            }
        }

        let total: u64 = doc_len.iter().map(|&l| l as u64).sum();
        let avg_len = if doc_ids.is_empty() {
            0.0
        } else {
            total as f64 / doc_ids.len() as f64
        };
        let (terms, postings): (Vec<String>, Vec<Vec<Posting>>) =
            by_term.into_iter().map(|(t, p)| (t.to_owned(), p)).unzip();
        Ok(Self::assemble(doc_ids, doc_len, avg_len, terms, postings))
    }

    /// Derives the lookup tables and statistics that are not persisted.
    pub(crate) fn assemble(
        doc_ids: Vec<u64>,
        doc_len: Vec<u32>,
        avg_len: f64,
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
    ) -> Self {
        let term_ids = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let collection_tf: Vec<u64> = postings
            .iter()
            .map(|p| p.iter().map(|e| e.tf as u64).sum())
            .collect();
        let total_tokens = doc_len.iter().map(|&l| l as u64).sum();
        let n = doc_ids.len() as u64;
        let mut sq = vec![0.0f64; doc_ids.len()];
        for plist in &postings {
            let idf = smoothed_idf(n, plist.len() as u64);
            for p in plist {
                let w = p.tf as f64 * idf;
                sq[p.doc as usize] += w * w;
            }
        }
        let tfidf_norms = sq.into_iter().map(f64::sqrt).collect();
        Self {
            doc_ids,
            doc_len,
            avg_len,
            terms,
            term_ids,
            postings,
            collection_tf,
            total_tokens,
            tfidf_norms,
        }
    }

    /// Number of documents, `N`.
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    /// Mean document length, 0 for an empty index.
    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Ascending.
    pub fn doc_ids(&self) -> &[u64] {
        &self.doc_ids
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub(crate) fn term_id(&self, term: &str) -> Option<u32> {
        self.term_ids.get(term).copied()
    }

    pub(crate) fn position(&self, doc_id: u64) -> Option<usize> {
        self.doc_ids.binary_search(&doc_id).ok()
    }

    pub(crate) fn require_position(&self, doc_id: u64) -> Result<usize> {
        self.position(doc_id).ok_or(Error::UnknownDocument(doc_id))
    }

    pub fn contains_doc(&self, doc_id: u64) -> bool {
        self.position(doc_id).is_some()
    }

    pub fn doc_len(&self, doc_id: u64) -> Option<u32> {
        self.position(doc_id).map(|p| self.doc_len[p])
    }

    /// Document frequency, 0 for unseen terms.
    pub fn df(&self, term: &str) -> u64 {
        self.term_id(term)
            .map_or(0, |id| self.postings[id as usize].len() as u64)
    }

    pub fn collection_tf(&self, term: &str) -> u64 {
        self.term_id(term)
            .map_or(0, |id| self.collection_tf[id as usize])
    }

    pub(crate) fn tf_at(&self, term_id: u32, pos: usize) -> u32 {
        let plist = &self.postings[term_id as usize];
        plist
            .binary_search_by_key(&(pos as u32), |p| p.doc)
            .map_or(0, |i| plist[i].tf)
    }

    /// Occurrences of `term` in `doc_id`; 0 when either is unknown.
    pub fn tf(&self, term: &str, doc_id: u64) -> u32 {
        match (self.term_id(term), self.position(doc_id)) {
            (Some(t), Some(p)) => self.tf_at(t, p),
            _ => 0,
        }
    }

    /// `(doc_id, tf)` for every document containing `term`, ascending by id.
    pub fn postings(&self, term: &str) -> Vec<(u64, u32)> {
        self.term_id(term).map_or_else(Vec::new, |id| {
            self.postings[id as usize]
                .iter()
                .map(|p| (self.doc_ids[p.doc as usize], p.tf))
                .collect()
        })
    }

    pub fn idf(&self, term: &str) -> f64 {
        smoothed_idf(self.doc_count() as u64, self.df(term))
    }
}
