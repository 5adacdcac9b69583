use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::smoothed_idf;

use super::text::TokenizedText;

/// Stop-words chosen as the `cutoff` terms with the lowest smoothed IDF.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordSet {
    words: BTreeSet<String>,
    cutoff: usize,
}

impl StopwordSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// A hand-specified set. `cutoff` is recorded as the set size.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: BTreeSet<String> = words.into_iter().map(Into::into).collect();
        let cutoff = words.len();
        Self { words, cutoff }
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// The requested `M`; may exceed `len()` on small corpora.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// Sorted ascending.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// One token per line, sorted, UTF-8.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for w in &self.words {
            out.push_str(w);
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Self {
        Self::from_words(text.lines().filter(|l| !l.is_empty()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(&text))
    }
}

/// Picks the `m` distinct terms with the lowest smoothed IDF over `docs`,
/// ties broken by ascending term. Asking for more terms than exist returns
/// the whole vocabulary.
pub fn extract_stopwords(docs: &[TokenizedText], m: usize) -> StopwordSet {
    let mut df: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        let distinct: HashSet<&str> = doc.tokens.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_default() += 1;
        }
    }
    let n = docs.len() as u64;
    let mut ranked: Vec<(f64, &str)> = df
        .into_iter()
        .map(|(term, df)| (smoothed_idf(n, df), term))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
    let words = ranked
        .into_iter()
        .take(m)
        .map(|(_, t)| t.to_owned())
        .collect();
    StopwordSet { words, cutoff: m }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: u64, words: &str) -> TokenizedText {
        TokenizedText::from_words(id, words)
    }

    #[test]
    fn term_in_every_doc_is_selected_first() {
        let docs: Vec<_> = (0..10)
            .map(|i| doc(i, &format!("common w{i} x{i}")))
            .collect();
        let set = extract_stopwords(&docs, 1);
        assert_eq!(set.iter().collect::<Vec<_>>(), ["common"]);
    }

    #[test]
    fn zero_cutoff_is_empty() {
        let docs = [doc(0, "a b")];
        assert!(extract_stopwords(&docs, 0).is_empty());
    }

    #[test]
    fn lowest_idf_by_hand() {
        // IDF(a) = ln(0.5/2.5 + 1), IDF(b) = IDF(c) = ln(1.5/1.5 + 1)
        let idf_a = (0.5f64 / 2.5 + 1.0).ln();
        let idf_b = (1.5f64 / 1.5 + 1.0).ln();
        assert!(idf_a < idf_b);
        let docs = [doc(1, "a b"), doc(2, "a c")];
        let set = extract_stopwords(&docs, 1);
        assert_eq!(set.iter().collect::<Vec<_>>(), ["a"]);
        // b and c tie; lexicographic order decides
        let set = extract_stopwords(&docs, 2);
        assert_eq!(set.iter().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn oversized_cutoff_returns_vocabulary() {
        let docs = [doc(1, "a b"), doc(2, "a c")];
        let set = extract_stopwords(&docs, 100);
        assert_eq!(set.iter().collect::<Vec<_>>(), ["a", "b", "c"]);
        assert_eq!(set.cutoff(), 100);
    }

    #[test]
    fn text_round_trip_is_sorted() {
        let set = StopwordSet::from_words(["z", "a", "m"]);
        assert_eq!(set.to_text(), "a\nm\nz\n");
        assert_eq!(StopwordSet::from_text(&set.to_text()), set);
    }
}
