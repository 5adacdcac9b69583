const TERMINATORS: [char; 4] = ['.', '?', '!', ';'];
const MIN_SENTENCE_TOKENS: usize = 2;

fn token_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Splits normalized text after `.`, `?`, `!` or `;` when the terminator is
/// followed by whitespace or the end of input.
///
/// Fragments with fewer than two whitespace tokens are merged into the
/// neighbouring sentence (the previous one, or the next one for a leading
/// fragment). Returned slices borrow from `passage`, so every sentence occurs
/// verbatim in it.
pub fn split_sentences(passage: &str) -> Vec<&str> {
    let mut pieces: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    let mut chars = passage.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if !TERMINATORS.contains(&c) {
            continue;
        }
        let at_boundary = match chars.peek() {
            None => true,
            Some(&(_, next)) => next.is_whitespace(),
        };
        if at_boundary {
            let end = i + c.len_utf8();
            pieces.push((start, end));
            start = end;
        }
    }
    if start < passage.len() {
        pieces.push((start, passage.len()));
    }

    let mut sentences: Vec<(usize, usize)> = Vec::new();
    for (s, e) in pieces {
        let piece = &passage[s..e];
        let trimmed = piece.trim_start();
        let s = s + (piece.len() - trimmed.len());
        let e = s + trimmed.trim_end().len();
        if s >= e {
            continue;
        }
        match sentences.last_mut() {
            Some(last)
                if token_count(&passage[s..e]) < MIN_SENTENCE_TOKENS
                    || token_count(&passage[last.0..last.1]) < MIN_SENTENCE_TOKENS =>
            {
                last.1 = e;
            }
            _ => sentences.push((s, e)),
        }
    }
    sentences.into_iter().map(|(s, e)| &passage[s..e]).collect()
}

/// Mean number of sentences per passage.
pub fn mean_sentence_count<S: AsRef<str>>(passages: &[S]) -> f64 {
    if passages.is_empty() {
        return 0.0;
    }
    let total: usize = passages
        .iter()
        .map(|p| split_sentences(p.as_ref()).len())
        .sum();
    total as f64 / passages.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basic_split() {
        assert_eq!(split_sentences("a b. c d? e f"), ["a b.", "c d?", "e f"]);
        assert_eq!(
            split_sentences("no punctuation here"),
            ["no punctuation here"]
        );
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn terminator_inside_token_does_not_split() {
        assert_eq!(
            split_sentences("dose 2.5 mg daily. ok then"),
            ["dose 2.5 mg daily.", "ok then"]
        );
    }

    #[test]
    fn short_fragments_merge() {
        assert_eq!(split_sentences("a b c. yes. d e"), ["a b c. yes.", "d e"]);
        assert_eq!(split_sentences("hi. a b c"), ["hi. a b c"]);
        assert_eq!(split_sentences("a b; c d! e f."), ["a b;", "c d!", "e f."]);
    }

    fn non_space_multiset(s: &str) -> Vec<char> {
        let mut v: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        v.sort_unstable();
        v
    }

    proptest! {
        #[test]
        fn no_characters_lost(words in proptest::collection::vec("[a-z]{1,4}[.?!;,]?", 0..30)) {
            let text = words.join(" ");
            let sentences = split_sentences(&text);
            prop_assert_eq!(non_space_multiset(&sentences.concat()), non_space_multiset(&text));
            for s in &sentences {
                prop_assert!(text.contains(s));
            }
        }
    }
}
