//! Inverted index and the bag-of-words scorers: BM25, TF-IDF cosine and
//! smoothed unigram query likelihood.

mod index;
mod persist;
mod scoring;

pub use index::{smoothed_idf, InvertedIndex};
pub use persist::{INDEX_MAGIC, INDEX_VERSION};
pub use scoring::{
    bm25_score, cosine, document_vector, lm_score, rank, tfidf_cosine_score, tfidf_vector,
    Bm25Params, LmParams, Scorer, SparseVector,
};
