use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub doc_id: u64,
    pub score: f64,
}

/// Results ordered by descending score, ties by ascending doc id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    hits: Vec<Hit>,
}

impl RankedList {
    /// Sorts `scores` and keeps the first `k`. Doc ids are assumed unique.
    pub fn from_scores<I>(scores: I, k: usize) -> Self
    where
        I: IntoIterator<Item = (u64, f64)>,
    {
        let mut hits: Vec<Hit> = scores
            .into_iter()
            .map(|(doc_id, score)| Hit {
                doc_id,
                // -0.0 and 0.0 must tie
                score: if score == 0.0 { 0.0 } else { score },
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        hits.truncate(k);
        Self { hits }
    }

    pub fn hits(&self) -> &[Hit] {
        &self.hits
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn top(&self) -> Option<&Hit> {
        self.hits.first()
    }

    /// 1-based rank of `doc_id`, if present.
    pub fn rank_of(&self, doc_id: u64) -> Option<usize> {
        self.hits
            .iter()
            .position(|h| h.doc_id == doc_id)
            .map(|p| p + 1)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.hits.iter().map(|h| h.doc_id)
    }

    /// One `{"rank", "doc_id", "score"}` object per line.
    pub fn to_jsonl(&self) -> String {
        #[derive(Serialize)]
        struct Line {
            rank: usize,
            doc_id: u64,
            score: f64,
        }
        let mut out = String::new();
        for (i, h) in self.hits.iter().enumerate() {
            let line = Line {
                rank: i + 1,
                doc_id: h.doc_id,
                score: h.score,
            };
            out.push_str(&serde_json::to_string(&line).expect("serializable"));
            out.push('\n');
        }
        out
    }
}
