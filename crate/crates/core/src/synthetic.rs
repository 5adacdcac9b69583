//! Seeded synthetic QA corpora with controlled lexical overlap.
//!
//! Every pair gets its own topic: a set of answer words used only in its
//! passage and a set of question words never used in its passage. Overlap
//! pairs borrow a few answer words into the question; gap pairs borrow none,
//! so their question shares no token with the gold passage.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::QaPair;

const SYLLABLES: [&str; 24] = [
    "ba", "ko", "mi", "tu", "ne", "sa", "lo", "ri", "vu", "da", "pe", "ho", "ga", "fi", "zu", "me",
    "to", "la", "ky", "no", "xa", "qe", "wi", "ju",
];

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub pairs: usize,
    pub seed: u64,
    /// Share of pairs whose question shares no token with its passage.
    pub gap_fraction: f64,
    /// Plant each gap-question word in some other passage, so bag-of-words
    /// scorers find a non-gold match for every gap question.
    pub decoys: bool,
    pub sentences: (usize, usize),
    pub words_per_sentence: (usize, usize),
    pub question_words: usize,
    /// Answer words copied into overlap questions.
    pub overlap_words: usize,
    pub answer_vocab: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            pairs: 50,
            seed: 7,
            gap_fraction: 0.3,
            decoys: false,
            sentences: (6, 9),
            words_per_sentence: (4, 7),
            question_words: 5,
            overlap_words: 3,
            answer_vocab: 14,
        }
    }
}

struct WordMint {
    rng: ChaCha8Rng,
    used: HashSet<String>,
}

impl WordMint {
    fn word(&mut self) -> String {
        loop {
            let n = self.rng.gen_range(2..=4);
            let w: String = (0..n)
                .map(|_| *SYLLABLES.choose(&mut self.rng).expect("non-empty"))
                .collect();
            if self.used.insert(w.clone()) {
                return w;
            }
        }
    }
}

/// Generates the corpus. Pair ids are `0..pairs`.
pub fn generate(config: &SyntheticConfig) -> Vec<QaPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mint = WordMint {
        rng: ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15),
        used: HashSet::new(),
    };
    let n = config.pairs;
    let gap_count = (config.gap_fraction * n as f64).round() as usize;
    let mut is_gap = vec![false; n];
    for g in is_gap.iter_mut().take(gap_count) {
        *g = true;
    }
    is_gap.shuffle(&mut rng);

    let answer_vocab: Vec<Vec<String>> = (0..n)
        .map(|_| (0..config.answer_vocab).map(|_| mint.word()).collect())
        .collect();
    let question_vocab: Vec<Vec<String>> = (0..n)
        .map(|_| (0..config.question_words).map(|_| mint.word()).collect())
        .collect();

    let mut sentences: Vec<Vec<Vec<String>>> = answer_vocab
        .iter()
        .map(|vocab| {
            let count = rng.gen_range(config.sentences.0..=config.sentences.1);
            (0..count)
                .map(|_| {
                    let len =
                        rng.gen_range(config.words_per_sentence.0..=config.words_per_sentence.1);
                    (0..len)
                        .map(|_| vocab.choose(&mut rng).expect("non-empty").clone())
                        .collect()
                })
                .collect()
        })
        .collect();

    let mut questions: Vec<Vec<String>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut q = question_vocab[i].clone();
        if !is_gap[i] {
            // borrow words that actually occur in the passage
            let mut present: Vec<&String> = sentences[i].iter().flatten().collect();
            present.sort();
            present.dedup();
            for w in present.choose_multiple(&mut rng, config.overlap_words) {
                q.push((*w).clone());
            }
        } else if config.decoys && n > 1 {
            for w in &question_vocab[i] {
                let mut host = rng.gen_range(0..n - 1);
                if host >= i {
                    host += 1;
                }
                let first = &mut sentences[host][0];
                let at = rng.gen_range(0..=first.len());
                first.insert(at, w.clone());
            }
        }
        q.shuffle(&mut rng);
        questions.push(q);
    }

    (0..n)
        .map(|i| {
            let answer: Vec<String> = sentences[i]
                .iter()
                .map(|s| format!("{}.", s.join(" ")))
                .collect();
            QaPair::new(
                i as u64,
                format!("{}?", questions[i].join(" ")),
                answer.join(" "),
            )
        })
        .collect()
}
