use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

use super::text::TokenizedText;

/// Dense bijection between token strings and ids in `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<String>,
}

impl Vocabulary {
    /// Builds a vocabulary with ids assigned in ascending token order.
    pub fn from_texts<'a, I>(texts: I) -> Self
    where
        I: IntoIterator<Item = &'a TokenizedText>,
    {
        let distinct: BTreeSet<&str> = texts
            .into_iter()
            .flat_map(|t| t.tokens.iter().map(String::as_str))
            .collect();
        Self::from_ordered(distinct.into_iter().map(str::to_owned).collect())
            .expect("distinct tokens")
    }

    /// Keeps the given id order. Fails on duplicates.
    pub fn from_ordered(tokens: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(Error::format(format!("duplicate vocabulary token {t:?}")));
            }
        }
        Ok(Self { ids, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Maps tokens to ids, dropping out-of-vocabulary tokens.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }

    /// Number of `tokens` that are not in the vocabulary.
    pub fn unknown_count(&self, tokens: &[String]) -> usize {
        tokens.iter().filter(|t| !self.ids.contains_key(*t)).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_dense_and_sorted() {
        let texts = [
            TokenizedText::from_words(0, "b a c"),
            TokenizedText::from_words(1, "c d"),
        ];
        let v = Vocabulary::from_texts(&texts);
        assert_eq!(v.len(), 4);
        for (i, t) in ["a", "b", "c", "d"].iter().enumerate() {
            assert_eq!(v.id(t), Some(i as u32));
            assert_eq!(v.token(i as u32), Some(*t));
        }
        assert_eq!(v.encode(&["d".into(), "zz".into(), "a".into()]), [3, 0]);
        assert_eq!(v.unknown_count(&["d".into(), "zz".into()]), 1);
    }

    #[test]
    fn duplicate_rejected() {
        assert!(Vocabulary::from_ordered(vec!["a".into(), "a".into()]).is_err());
    }
}
