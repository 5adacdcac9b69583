//! The retrieval system end to end: stage 1 condenses each answer passage
//! with BM25, stage 2 encodes the condensed passages and answers questions by
//! cosine similarity. Sparse baselines share the same preprocessing.

mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::condenser::{condense, condense_corpus, CondensedPassage, DEFAULT_SENTENCES};
use crate::corpus::{Preprocessor, QaPair, TokenizedText, Vocabulary};
use crate::encoder::{cosine, train, EncoderModel, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::ranking::RankedList;
use crate::sparse::{rank, Bm25Params, InvertedIndex, LmParams, Scorer};

pub use store::{import_external_embeddings, EmbeddingStore, STORE_MAGIC, STORE_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bm25,
    TfidfCos,
    Lm,
    /// Bi-encoder over full passages.
    Dense,
    /// Bi-encoder over BM25-condensed passages.
    TwoStage,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Bm25,
        Method::TfidfCos,
        Method::Lm,
        Method::Dense,
        Method::TwoStage,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Bm25 => "bm25",
            Method::TfidfCos => "tfidf-cos",
            Method::Lm => "lm",
            Method::Dense => "dense",
            Method::TwoStage => "two-stage",
        }
    }

    pub fn is_sparse(self) -> bool {
        matches!(self, Method::Bm25 | Method::TfidfCos | Method::Lm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown method {s:?}; expected one of bm25, tfidf-cos, lm, dense, two-stage"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Sentences kept per passage by stage 1.
    pub condenser_k: usize,
    pub method: Method,
    pub top_k: usize,
    pub bm25: Bm25Params,
    pub lm: LmParams,
    /// Tokens per text fed to the encoder.
    pub max_tokens: usize,
    /// Largest tolerated share of corpus tokens unknown to the model.
    pub max_unknown_rate: f64,
    /// Two-stage re-condenses every passage against the incoming question
    /// instead of reading the store built at index time. Needs the passage
    /// texts, see [`Pipeline::with_passages`].
    pub condense_per_query: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            condenser_k: DEFAULT_SENTENCES,
            method: Method::TwoStage,
            top_k: 10,
            bm25: Bm25Params::default(),
            lm: LmParams::default(),
            max_tokens: 256,
            max_unknown_rate: 0.5,
            condense_per_query: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.condenser_k == 0 {
            return Err(Error::invalid("condenser K must be >= 1"));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("top_k must be >= 1"));
        }
        if self.max_tokens == 0 {
            return Err(Error::invalid("max_tokens must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.max_unknown_rate) {
            return Err(Error::invalid("max_unknown_rate must be in [0, 1]"));
        }
        self.bm25.validate()?;
        self.lm.validate()
    }
}

/// Encodes `tokens` as stored precision. Texts with no known token become the
/// zero vector, which scores 0 against every query.
pub fn encode_for_store(model: &EncoderModel, tokens: &[String], max_tokens: usize) -> Vec<f32> {
    model
        .encode_tokens(tokens, max_tokens)
        .map(|v| v.into_iter().map(|x| x as f32).collect())
        .unwrap_or_else(|| vec![0.0; model.dim()])
}

/// Ranks every stored vector by cosine against `query`.
pub fn dense_rank(store: &EmbeddingStore, query: &[f64], k: usize) -> RankedList {
    let mut buf = vec![0.0f64; store.dim()];
    RankedList::from_scores(
        store.iter().map(|(id, v)| {
            for (b, &x) in buf.iter_mut().zip(v) {
                *b = x as f64;
            }
            (id, cosine(query, &buf))
        }),
        k,
    )
}

/// Ranks `passages` for every vector in `queries`, keyed by query id. Both
/// stores come from the same external encoder.
pub fn rank_external(
    passages: &EmbeddingStore,
    queries: &EmbeddingStore,
    k: usize,
) -> Result<BTreeMap<u64, RankedList>> {
    if passages.dim() != queries.dim() {
        return Err(Error::DimensionMismatch {
            expected: passages.dim(),
            found: queries.dim(),
        });
    }
    Ok(queries
        .iter()
        .map(|(qid, v)| {
            let q: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            (qid, dense_rank(passages, &q, k))
        })
        .collect())
}

/// Vocabulary over every question and full answer passage of `pairs`.
pub fn corpus_vocabulary(pre: &Preprocessor, pairs: &[QaPair]) -> Vocabulary {
    let texts: Vec<TokenizedText> = pairs
        .iter()
        .flat_map(|p| {
            [
                pre.process_dense(&p.question, p.id),
                pre.process_dense(&p.answer, p.id),
            ]
        })
        .collect();
    Vocabulary::from_texts(&texts)
}

/// Trains the encoder on (question, condensed passage) pairs. `condensed`
/// must follow the order of `pairs`. Pairs with an empty side are skipped.
pub fn train_encoder(
    pre: &Preprocessor,
    pairs: &[QaPair],
    condensed: &[CondensedPassage],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_encoder_with_vocab(pre, corpus_vocabulary(pre, pairs), pairs, condensed, config)
}

/// As [`train_encoder`], over a caller-chosen vocabulary.
pub fn train_encoder_with_vocab(
    pre: &Preprocessor,
    vocab: Vocabulary,
    pairs: &[QaPair],
    condensed: &[CondensedPassage],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    if pairs.len() != condensed.len() {
        return Err(Error::invalid(format!(
            "{} pairs but {} condensed passages",
            pairs.len(),
            condensed.len()
        )));
    }
    let mut examples = Vec::with_capacity(pairs.len());
    for (pair, c) in pairs.iter().zip(condensed) {
        if c.doc_id != pair.id {
            return Err(Error::invalid(format!(
                "condensed passage {} does not match pair {}",
                c.doc_id, pair.id
            )));
        }
        let q = vocab.encode(&pre.process_dense(&pair.question, pair.id).tokens);
        let a = vocab.encode(&pre.process_dense(&c.text(), c.doc_id).tokens);
        if !q.is_empty() && !a.is_empty() {
            examples.push((q, a));
        }
    }
    train(vocab, &examples, config)
}

/// A built retrieval system over one collection of answer passages.
#[derive(Debug)]
pub struct Pipeline {
    pre: Preprocessor,
    config: PipelineConfig,
    index: InvertedIndex,
    model: Option<EncoderModel>,
    dense: Option<EmbeddingStore>,
    two_stage: Option<EmbeddingStore>,
    passages: Option<Vec<(u64, String)>>,
}

fn passage_texts(pairs: &[QaPair]) -> Vec<(u64, String)> {
    pairs.iter().map(|p| (p.id, p.answer.clone())).collect()
}

/// Fraction of corpus tokens the model does not know, as `(unknown, total)`.
fn unknown_tokens<'a, I>(model: &EncoderModel, texts: I) -> (usize, usize)
where
    I: IntoIterator<Item = &'a TokenizedText>,
{
    texts.into_iter().fold((0, 0), |(u, t), text| {
        (
            u + model.vocab().unknown_count(&text.tokens),
            t + text.len(),
        )
    })
}

impl Pipeline {
    /// Builds the sparse index over full passages and, when a model is
    /// given, the dense stores over full and condensed passages.
    pub fn build(
        pairs: &[QaPair],
        model: Option<EncoderModel>,
        pre: Preprocessor,
        config: PipelineConfig,
    ) -> Result<(Self, Vec<CondensedPassage>)> {
        config.validate()?;
        if pairs.is_empty() {
            return Err(Error::Empty("pairs"));
        }
        let passages: Vec<TokenizedText> =
            pairs.iter().map(|p| pre.process(&p.answer, p.id)).collect();
        let index = InvertedIndex::build(&passages)?;
        let condensed = condense_corpus(&pre, config.bm25, pairs, config.condenser_k)?;

        let (dense, two_stage) = match &model {
            None => (None, None),
            Some(model) => {
                let condensed_tokens: Vec<TokenizedText> = condensed
                    .iter()
                    .map(|c| pre.process_dense(&c.text(), c.doc_id))
                    .collect();
                let full_tokens: Vec<TokenizedText> = if pre.dense_stopwords() {
                    passages.clone()
                } else {
                    pairs
                        .iter()
                        .map(|p| pre.process_dense(&p.answer, p.id))
                        .collect()
                };
                let (unknown, total) = unknown_tokens(model, &condensed_tokens);
                let rate = if total == 0 {
                    1.0
                } else {
                    unknown as f64 / total as f64
                };
                if rate > config.max_unknown_rate {
                    return Err(Error::VocabularyMismatch {
                        unknown,
                        total,
                        rate: rate * 100.0,
                    });
                }
                let encode_all = |texts: &[TokenizedText]| {
                    EmbeddingStore::from_entries(
                        model.dim(),
                        texts.iter().map(|t| {
                            (
                                t.source_id,
                                encode_for_store(model, &t.tokens, config.max_tokens),
                            )
                        }),
                    )
                };
                (
                    Some(encode_all(&full_tokens)?),
                    Some(encode_all(&condensed_tokens)?),
                )
            }
        };

        Ok((
            Self {
                pre,
                config,
                index,
                model,
                dense,
                two_stage,
                passages: Some(passage_texts(pairs)),
            },
            condensed,
        ))
    }

    /// Reassembles a pipeline from persisted artifacts.
    pub fn from_parts(
        pre: Preprocessor,
        config: PipelineConfig,
        index: InvertedIndex,
        model: Option<EncoderModel>,
        dense: Option<EmbeddingStore>,
        two_stage: Option<EmbeddingStore>,
    ) -> Result<Self> {
        config.validate()?;
        for store in dense.iter().chain(&two_stage) {
            match &model {
                Some(m) if m.dim() != store.dim() => {
                    return Err(Error::DimensionMismatch {
                        expected: m.dim(),
                        found: store.dim(),
                    })
                }
                None => return Err(Error::invalid("embedding store given without a model")),
                _ => {}
            }
        }
        Ok(Self {
            pre,
            config,
            index,
            model,
            dense,
            two_stage,
            passages: None,
        })
    }

    /// Attaches the raw passage texts used by per-query condensing.
    pub fn with_passages(mut self, pairs: &[QaPair]) -> Self {
        self.passages = Some(passage_texts(pairs));
        self
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.pre
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn model(&self) -> Option<&EncoderModel> {
        self.model.as_ref()
    }

    pub fn store(&self, method: Method) -> Option<&EmbeddingStore> {
        match method {
            Method::Dense => self.dense.as_ref(),
            Method::TwoStage => self.two_stage.as_ref(),
            _ => None,
        }
    }

    pub fn doc_count(&self) -> usize {
        self.index.doc_count()
    }

    /// Preprocesses a question for `method`'s side of the pipeline.
    pub fn query_tokens(&self, question: &str, id: u64, method: Method) -> TokenizedText {
        if method.is_sparse() {
            self.pre.process(question, id)
        } else {
            self.pre.process_dense(question, id)
        }
    }

    /// Scores a question already preprocessed by [`Pipeline::query_tokens`].
    pub fn retrieve_tokens(
        &self,
        query: &TokenizedText,
        method: Method,
        top_k: usize,
    ) -> Result<RankedList> {
        if top_k == 0 {
            return Err(Error::invalid("top_k must be >= 1"));
        }
        if query.is_empty() {
            return Err(Error::Empty("question after preprocessing"));
        }
        let scorer = match method {
            Method::Bm25 => Scorer::Bm25(self.config.bm25),
            Method::TfidfCos => Scorer::TfIdfCosine,
            Method::Lm => Scorer::QueryLikelihood(self.config.lm),
            Method::Dense | Method::TwoStage => {
                let (Some(model), Some(store)) = (&self.model, self.store(method)) else {
                    return Err(Error::invalid(format!(
                        "method {method} needs a trained model"
                    )));
                };
                let q = model
                    .encode_tokens(&query.tokens, self.config.max_tokens)
                    .ok_or(Error::Empty("question after vocabulary lookup"))?;
                if method == Method::TwoStage && self.config.condense_per_query {
                    return self.condense_and_rank(model, query, &q, top_k);
                }
                return Ok(dense_rank(store, &q, top_k));
            }
        };
        Ok(rank(&self.index, scorer, query, top_k))
    }

    fn condense_and_rank(
        &self,
        model: &EncoderModel,
        query: &TokenizedText,
        q: &[f64],
        top_k: usize,
    ) -> Result<RankedList> {
        let passages = self
            .passages
            .as_ref()
            .ok_or_else(|| Error::invalid("per-query condensing needs the passage texts"))?;
        // the guide matches the sparse side, as at index time
        let stopwords = self.pre.stopwords();
        let guide = TokenizedText::new(
            query.source_id,
            query
                .tokens
                .iter()
                .filter(|t| !stopwords.contains(t))
                .cloned()
                .collect(),
        );
        let guide = (!guide.is_empty()).then_some(guide);
        let mut buf = Vec::with_capacity(model.dim());
        let scores = passages
            .iter()
            .map(|(id, text)| {
                let c = condense(
                    &self.pre,
                    self.config.bm25,
                    *id,
                    text,
                    guide.as_ref(),
                    self.config.condenser_k,
                )?;
                let tokens = self.pre.process_dense(&c.text(), *id);
                buf.clear();
                buf.extend(
                    encode_for_store(model, &tokens.tokens, self.config.max_tokens)
                        .into_iter()
                        .map(f64::from),
                );
                Ok((*id, cosine(q, &buf)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RankedList::from_scores(scores, top_k))
    }

    pub fn retrieve(&self, question: &str, method: Method, top_k: usize) -> Result<RankedList> {
        self.retrieve_tokens(&self.query_tokens(question, 0, method), method, top_k)
    }

    /// Rankings for every pair's question, keyed by pair id.
    pub fn retrieve_all(
        &self,
        pairs: &[QaPair],
        method: Method,
        depth: usize,
    ) -> Result<BTreeMap<u64, RankedList>> {
        pairs
            .iter()
            .map(|p| {
                self.retrieve_tokens(&self.query_tokens(&p.question, p.id, method), method, depth)
                    .map(|r| (p.id, r))
                    .map_err(|e| Error::Pair {
                        id: p.id,
                        source: Box::new(e),
                    })
            })
            .collect()
    }
}
