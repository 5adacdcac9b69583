//! Dataset ingestion and the shared text preprocessing path.

mod dataset;
mod sentences;
mod stopwords;
mod text;
mod vocab;

pub use dataset::{load_jsonl, read_jsonl, save_jsonl, write_jsonl, QaPair};
pub use sentences::{mean_sentence_count, split_sentences};
pub use stopwords::{extract_stopwords, StopwordSet};
pub use text::{
    normalize, tokenize, tokenize_with, Preprocessor, TokenizedText, Tokenizer, WhitespaceTokenizer,
};
pub use vocab::Vocabulary;
