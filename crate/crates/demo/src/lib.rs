//! Browser demo for qaret. Every operation takes plain values and returns a
//! JSON string, so the same functions run natively under `cargo test` and in
//! the page through the `#[wasm_bindgen]` wrappers at the bottom.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qaret::condenser::{condense, condense_corpus};
use qaret::corpus::{normalize, split_sentences, Preprocessor, TokenizedText};
use qaret::encoder::TrainConfig;
use qaret::eval::{gold_from_pairs, lexical_overlap, precision_at_k};
use qaret::pipeline::{train_encoder, Method, Pipeline, PipelineConfig};
use qaret::sparse::{bm25_score, rank, Bm25Params, InvertedIndex, LmParams, Scorer};
use qaret::synthetic::{generate, SyntheticConfig};

/// Limits for the training demo, so a click stays under a few seconds.
pub const MAX_PAIRS: usize = 200;
pub const MAX_EPOCHS: usize = 100;
pub const MAX_DIM: usize = 64;

#[derive(Serialize)]
struct RankedPassage<'a> {
    rank: usize,
    doc_id: u64,
    /// `null` when the score is -infinity (query-likelihood with an unseen term).
    score: f64,
    passage: &'a str,
}

#[derive(Serialize)]
struct RankResponse<'a> {
    method: &'static str,
    query_tokens: Vec<String>,
    hits: Vec<RankedPassage<'a>>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Ranks passages, one per non-empty line, ids starting at 1.
pub fn rank_passages(
    passages: &str,
    question: &str,
    method: &str,
    k: f64,
    b: f64,
    alpha: f64,
    top_k: usize,
) -> Result<String, String> {
    let method: Method = method.parse().map_err(|e: qaret::Error| e.to_string())?;
    let scorer = match method {
        Method::Bm25 => Scorer::Bm25(Bm25Params::new(k, b).map_err(|e| e.to_string())?),
        Method::TfidfCos => Scorer::TfIdfCosine,
        Method::Lm => Scorer::QueryLikelihood(LmParams::new(alpha).map_err(|e| e.to_string())?),
        _ => {
            return Err(format!(
                "{method} needs a trained model; use the training panel"
            ))
        }
    };
    if top_k == 0 {
        return Err("top_k must be >= 1".into());
    }
    let lines: Vec<&str> = passages
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err("enter at least one passage".into());
    }
    let pre = Preprocessor::default();
    let docs: Vec<TokenizedText> = lines
        .iter()
        .enumerate()
        .map(|(i, l)| pre.process(l, i as u64 + 1))
        .collect();
    let index = InvertedIndex::build(&docs).map_err(|e| e.to_string())?;
    let query = pre.process(question, 0);
    if query.is_empty() {
        return Err("the question has no tokens".into());
    }
    let ranked = rank(&index, scorer, &query, top_k);
    let hits = ranked
        .hits()
        .iter()
        .enumerate()
        .map(|(i, h)| RankedPassage {
            rank: i + 1,
            doc_id: h.doc_id,
            score: h.score,
            passage: lines[h.doc_id as usize - 1],
        })
        .collect();
    to_json(&RankResponse {
        method: method.as_str(),
        query_tokens: query.tokens,
        hits,
    })
}

#[derive(Serialize)]
struct ScoredSentence {
    text: String,
    score: f64,
    kept: bool,
}

#[derive(Serialize)]
struct CondenseResponse {
    sentences: Vec<ScoredSentence>,
    original_tokens: usize,
    kept_tokens: usize,
}

/// Splits `passage` into sentences, scores each against `question` with BM25
/// over the passage's own sentences, and marks the `k` that are kept.
pub fn condense_passage(passage: &str, question: &str, k: usize) -> Result<String, String> {
    let pre = Preprocessor::default();
    let guide = pre.process(question, 0);
    let guide = (!guide.is_empty()).then_some(guide);
    let params = Bm25Params::default();
    let condensed =
        condense(&pre, params, 0, passage, guide.as_ref(), k).map_err(|e| e.to_string())?;

    let normalized = normalize(passage);
    let sentences = split_sentences(&normalized);
    let docs: Vec<TokenizedText> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| pre.tokenize_normalized(s, i as u64))
        .collect();
    let scores: Vec<f64> = match &guide {
        Some(g) => {
            let mini = InvertedIndex::build(&docs).map_err(|e| e.to_string())?;
            (0..docs.len())
                .map(|i| bm25_score(&mini, params, g, i as u64).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?
        }
        None => vec![0.0; docs.len()],
    };

    // kept sentences come back in passage order
    let mut kept = condensed.kept_sentences.iter().peekable();
    let sentences = sentences
        .iter()
        .zip(scores)
        .map(|(s, score)| {
            let is_kept = kept.peek().is_some_and(|k| k.as_str() == *s);
            if is_kept {
                kept.next();
            }
            ScoredSentence {
                text: (*s).to_owned(),
                score,
                kept: is_kept,
            }
        })
        .collect();
    to_json(&CondenseResponse {
        sentences,
        original_tokens: docs.iter().map(TokenizedText::len).sum(),
        kept_tokens: pre.process(&condensed.text(), 0).len(),
    })
}

#[derive(Serialize)]
struct MethodScore {
    method: &'static str,
    /// P@1 over every pair.
    p_at_1: f64,
    /// P@1 over pairs whose question shares no token with its passage.
    p_at_1_gap: Option<f64>,
}

#[derive(Serialize)]
struct TrainResponse {
    pairs: usize,
    gap_pairs: usize,
    example_question: String,
    example_answer: String,
    loss: Vec<f64>,
    methods: Vec<MethodScore>,
}

/// Generates a synthetic corpus, trains the encoder and reports P@1 on the
/// training questions for every method.
pub fn train_demo(
    pairs: usize,
    gap_fraction: f64,
    epochs: usize,
    dim: usize,
    seed: u64,
) -> Result<String, String> {
    if !(2..=MAX_PAIRS).contains(&pairs) {
        return Err(format!("pairs must be in 2..={MAX_PAIRS}"));
    }
    if epochs > MAX_EPOCHS || !(1..=MAX_DIM).contains(&dim) {
        return Err(format!(
            "epochs must be <= {MAX_EPOCHS} and dim in 1..={MAX_DIM}"
        ));
    }
    if !(0.0..=1.0).contains(&gap_fraction) {
        return Err("gap fraction must be in [0, 1]".into());
    }
    let data = generate(&SyntheticConfig {
        pairs,
        seed,
        gap_fraction,
        decoys: true,
        ..SyntheticConfig::default()
    });
    let pre = Preprocessor::default();
    let config = PipelineConfig::default();
    let condensed =
        condense_corpus(&pre, config.bm25, &data, config.condenser_k).map_err(|e| e.to_string())?;
    let train = TrainConfig {
        epochs,
        dim,
        init_seed: seed,
        shuffle_seed: seed.wrapping_add(1),
        ..TrainConfig::default()
    };
    let outcome = train_encoder(&pre, &data, &condensed, &train).map_err(|e| e.to_string())?;
    let (pipeline, _) =
        Pipeline::build(&data, Some(outcome.model), pre, config).map_err(|e| e.to_string())?;

    let pre = pipeline.preprocessor();
    let gap: Vec<_> = data
        .iter()
        .filter(|p| {
            lexical_overlap(
                &pre.process(&p.question, p.id),
                &pre.process(&p.answer, p.id),
            ) == 0
        })
        .cloned()
        .collect();
    let mut methods = Vec::new();
    for method in Method::ALL {
        let rankings = pipeline
            .retrieve_all(&data, method, 1)
            .map_err(|e| e.to_string())?;
        let p_at_1 =
            precision_at_k(&rankings, &gold_from_pairs(&data), 1).map_err(|e| e.to_string())?;
        let p_at_1_gap = if gap.is_empty() {
            None
        } else {
            let hits = gap
                .iter()
                .filter(|p| rankings[&p.id].top().is_some_and(|h| h.doc_id == p.id))
                .count();
            Some(100.0 * hits as f64 / gap.len() as f64)
        };
        methods.push(MethodScore {
            method: method.as_str(),
            p_at_1,
            p_at_1_gap,
        });
    }
    to_json(&TrainResponse {
        pairs,
        gap_pairs: gap.len(),
        example_question: data[0].question.clone(),
        example_answer: data[0].answer.clone(),
        loss: outcome.loss_history,
        methods,
    })
}

#[wasm_bindgen(js_name = rankPassages)]
pub fn rank_passages_js(
    passages: &str,
    question: &str,
    method: &str,
    k: f64,
    b: f64,
    alpha: f64,
    top_k: usize,
) -> Result<String, JsError> {
    rank_passages(passages, question, method, k, b, alpha, top_k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = condensePassage)]
pub fn condense_passage_js(passage: &str, question: &str, k: usize) -> Result<String, JsError> {
    condense_passage(passage, question, k).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = trainDemo)]
pub fn train_demo_js(
    pairs: usize,
    gap_fraction: f64,
    epochs: usize,
    dim: usize,
    seed: u32,
) -> Result<String, JsError> {
    train_demo(pairs, gap_fraction, epochs, dim, seed as u64).map_err(|e| JsError::new(&e))
}
