use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Preprocessor, QaPair, TokenizedText};

use super::metrics::Rankings;

pub const MAX_BUCKET: usize = 10;

/// Number of distinct token types shared by the two texts.
pub fn lexical_overlap(question: &TokenizedText, passage: &TokenizedText) -> usize {
    let q: HashSet<&str> = question.tokens.iter().map(String::as_str).collect();
    let p: HashSet<&str> = passage.tokens.iter().map(String::as_str).collect();
    q.intersection(&p).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub overlap: usize,
    pub count: usize,
    /// `None` for an empty bucket.
    pub p_at_1: Option<f64>,
}

/// P@1 per lexical-overlap value `X = 0..=10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapBucketReport {
    pub method: String,
    pub buckets: Vec<Bucket>,
    /// Questions with `X > 10`, left out of every bucket.
    pub excluded: usize,
}

impl OverlapBucketReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("X,count,p_at_1\n");
        for b in &self.buckets {
            let p = b.p_at_1.map(|p| format!("{p:.2}")).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", b.overlap, b.count, p));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "lexical overlap, method {}\n{:>3} {:>7} {:>7}\n",
            self.method, "X", "count", "P@1"
        );
        for b in &self.buckets {
            let p = b
                .p_at_1
                .map(|p| format!("{p:.2}"))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!("{:>3} {:>7} {:>7}\n", b.overlap, b.count, p));
        }
        if self.excluded > 0 {
            out.push_str(&format!(
                "({} questions with X > {MAX_BUCKET} not shown)\n",
                self.excluded
            ));
        }
        out
    }

    pub fn bucket(&self, overlap: usize) -> Option<&Bucket> {
        self.buckets.get(overlap)
    }
}

/// Buckets every pair by the overlap between its question and its own answer
/// passage, and scores P@1 per bucket from `rankings` (keyed by pair id).
pub fn overlap_bucket_eval(
    method: &str,
    pairs: &[QaPair],
    pre: &Preprocessor,
    rankings: &Rankings,
) -> OverlapBucketReport {
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut excluded = 0;
    for pair in pairs {
        let x = lexical_overlap(
            &pre.process(&pair.question, pair.id),
            &pre.process(&pair.answer, pair.id),
        );
        if x > MAX_BUCKET {
            excluded += 1;
            continue;
        }
        let hit = rankings
            .get(&pair.id)
            .and_then(|r| r.top())
            .is_some_and(|h| h.doc_id == pair.id);
        let e = counts.entry(x).or_default();
        e.0 += 1;
        e.1 += hit as usize;
    }
    let buckets = (0..=MAX_BUCKET)
        .map(|x| {
            let (count, hits) = counts.get(&x).copied().unwrap_or_default();
            Bucket {
                overlap: x,
                count,
                p_at_1: (count > 0).then(|| 100.0 * hits as f64 / count as f64),
            }
        })
        .collect();
    OverlapBucketReport {
        method: method.to_owned(),
        buckets,
        excluded,
    }
}
