use serde::{Deserialize, Serialize};

use super::stopwords::StopwordSet;

/// A token sequence tagged with the id of the record it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub source_id: u64,
}

impl TokenizedText {
    pub fn new(source_id: u64, tokens: Vec<String>) -> Self {
        Self { tokens, source_id }
    }

    /// Convenience for tests and fixtures: splits on whitespace, no other processing.
    pub fn from_words(source_id: u64, words: &str) -> Self {
        Self::new(
            source_id,
            words.split_whitespace().map(str::to_owned).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_uninterpretable(c: char) -> bool {
    c.is_control() || c == char::REPLACEMENT_CHARACTER
}

/// Lowercases, drops control and replacement characters, and collapses
/// whitespace runs to single spaces.
///
/// Whitespace controls (`\n`, `\t`, ...) act as separators rather than being
/// deleted, so `"A\tB"` becomes `"a b"`.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = true;
            continue;
        }
        if is_uninterpretable(c) {
            continue;
        }
        if pending_space && !out.is_empty() {
            out.push(' ');
        }
        pending_space = false;
        out.extend(c.to_lowercase());
    }
    out
}

/// Splits normalized text into raw tokens. Stop-word removal happens afterwards,
/// so implementations only decide where the token boundaries are.
pub trait Tokenizer: Send + Sync {
    fn split(&self, text: &str) -> Vec<String>;
}

/// Whitespace split followed by stripping non-alphanumeric characters from
/// both token edges. Tokens that strip to nothing are dropped.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn split(&self, text: &str) -> Vec<String> {
        text.split_whitespace()
            .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
            .filter(|w| !w.is_empty())
            .map(str::to_owned)
            .collect()
    }
}

/// Tokenizes already-normalized text with the default tokenizer and removes
/// members of `stopwords`.
pub fn tokenize(text: &str, stopwords: &StopwordSet, source_id: u64) -> TokenizedText {
    tokenize_with(&WhitespaceTokenizer, text, stopwords, source_id)
}

pub fn tokenize_with(
    tokenizer: &dyn Tokenizer,
    text: &str,
    stopwords: &StopwordSet,
    source_id: u64,
) -> TokenizedText {
    let tokens = tokenizer
        .split(text)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect();
    TokenizedText::new(source_id, tokens)
}

/// The shared preprocessing path: normalize, tokenize, drop stop-words.
///
/// Every retrieval method sees text through the same `Preprocessor`, so
/// baselines differ only in the scorer. Stop-words apply to the encoder side
/// too unless `set_dense_stopwords(false)`.
pub struct Preprocessor {
    tokenizer: Box<dyn Tokenizer>,
    stopwords: StopwordSet,
    dense_stopwords: bool,
}

impl std::fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preprocessor")
            .field("stopwords", &self.stopwords.len())
            .field("dense_stopwords", &self.dense_stopwords)
            .finish()
    }
}

impl Default for Preprocessor {
    fn default() -> Self {
        Self::new(StopwordSet::empty())
    }
}

impl Preprocessor {
    pub fn new(stopwords: StopwordSet) -> Self {
        Self::with_tokenizer(Box::new(WhitespaceTokenizer), stopwords)
    }

    pub fn with_tokenizer(tokenizer: Box<dyn Tokenizer>, stopwords: StopwordSet) -> Self {
        Self {
            tokenizer,
            stopwords,
            dense_stopwords: true,
        }
    }

    pub fn stopwords(&self) -> &StopwordSet {
        &self.stopwords
    }

    pub fn set_stopwords(&mut self, stopwords: StopwordSet) {
        self.stopwords = stopwords;
    }

    /// Tokenizes text that is already normalized.
    pub fn tokenize_normalized(&self, text: &str, source_id: u64) -> TokenizedText {
        tokenize_with(self.tokenizer.as_ref(), text, &self.stopwords, source_id)
    }

    pub fn process(&self, text: &str, source_id: u64) -> TokenizedText {
        self.tokenize_normalized(&normalize(text), source_id)
    }

    pub fn dense_stopwords(&self) -> bool {
        self.dense_stopwords
    }

    pub fn set_dense_stopwords(&mut self, on: bool) {
        self.dense_stopwords = on;
    }

    /// Tokens as the encoder sees them.
    pub fn process_dense(&self, text: &str, source_id: u64) -> TokenizedText {
        if self.dense_stopwords {
            self.process(text, source_id)
        } else {
            tokenize_with(
                self.tokenizer.as_ref(),
                &normalize(text),
                &StopwordSet::empty(),
                source_id,
            )
        }
    }
}
