//! Text primitives shared by every quality component: tokenization,
//! stop-word filtering, coarse POS tagging, n-grams and similarity.

mod pos;
mod similarity;

pub use pos::{pos_tag, PosLexicon, PosTag, TaggedToken, TAGGER_VERSION};
pub use similarity::{
    cosine, trigram_jaccard, CorpusStats, ProviderKind, SimilarityError, SimilarityProvider,
    TermVector,
};

use std::collections::HashSet;
use std::sync::OnceLock;

use thiserror::Error;

pub const STOPWORD_LIST_VERSION: &str = "stopwords-v1";

static STOPWORDS_RAW: &str = include_str!("../../data/stopwords.txt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("n-gram order must be 2 or 3, got {0}")]
    BadN(usize),
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Lowercases and splits `text` on anything that is not a letter, digit or
/// apostrophe. Leading and trailing apostrophes are stripped from each piece.
pub fn tokenize(text: &str) -> Vec<String> {
    token_spans(text).into_iter().map(|(_, _, t)| t).collect()
}

/// Tokens together with their byte span in `text`.
pub fn token_spans(text: &str) -> Vec<(usize, usize, String)> {
    let is_apos = |c: char| c == '\'' || c == '\u{2019}';
    let mut out = Vec::new();
    let mut run: Option<usize> = None;
    let mut emit = |s: usize, e: usize| {
        let piece = &text[s..e];
        let trimmed = piece.trim_start_matches(is_apos);
        let s = e - trimmed.len();
        let trimmed = trimmed.trim_end_matches(is_apos);
        if !trimmed.is_empty() {
            let token = trimmed.replace('\u{2019}', "'").to_lowercase();
            out.push((s, s + trimmed.len(), token));
        }
    };
    for (i, c) in text.char_indices() {
        if is_word_char(c) || is_apos(c) {
            run.get_or_insert(i);
        } else if let Some(s) = run.take() {
            emit(s, i);
        }
    }
    if let Some(s) = run {
        emit(s, text.len());
    }
    out
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

/// Drops stop words, keeping order.
pub fn content_tokens(tokens: &[String]) -> Vec<String> {
    tokens.iter().filter(|t| !is_stopword(t)).cloned().collect()
}

pub fn ngrams(tokens: &[String], n: usize) -> Result<Vec<String>, TextError> {
    if !(2..=3).contains(&n) {
        return Err(TextError::BadN(n));
    }
    Ok(tokens.windows(n).map(|w| w.join(" ")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_basic() {
        assert_eq!(toks("A man smiles."), ["a", "man", "smiles"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("  ...  ").len(), 0);
        assert_eq!(toks("Don't stop 'quoted' words"), ["don't", "stop", "quoted", "words"]);
        assert_eq!(toks("woman\u{2019}s feet"), ["woman's", "feet"]);
    }

    #[test]
    fn treadmill_sentence_has_twelve_tokens() {
        let text = "A woman, in a green shirt, preparing to run on a treadmill.";
        // independent count: maximal runs of alphanumerics
        let oracle = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|p| !p.is_empty())
            .count();
        assert_eq!(oracle, 12);
        assert_eq!(toks(text).len(), oracle);
    }

    #[test]
    fn spans_cover_tokens() {
        let text = "The Dog's 'toy', naïve café!";
        for (s, e, t) in token_spans(text) {
            assert_eq!(text[s..e].to_lowercase().replace('\u{2019}', "'"), t);
        }
    }

    #[test]
    fn content_filtering() {
        assert_eq!(content_tokens(&toks("a man smiles")), ["man", "smiles"]);
        assert!(content_tokens(&toks("a the of in on")).is_empty());
        let s1 = "A woman, in a green shirt, preparing to run on a treadmill. A woman is preparing to sleep on a treadmill.";
        let content = content_tokens(&toks(s1));
        let unique: HashSet<_> = content.iter().collect();
        assert_eq!(unique.len(), 7);
        for w in ["woman", "green", "shirt", "preparing", "run", "treadmill", "sleep"] {
            assert!(unique.contains(&w.to_string()), "{w}");
        }
    }

    #[test]
    fn ngram_rules() {
        assert_eq!(ngrams(&toks("a man smiles"), 2).unwrap(), ["a man", "man smiles"]);
        assert!(ngrams(&toks("man"), 2).unwrap().is_empty());
        assert_eq!(ngrams(&toks("a b"), 4), Err(TextError::BadN(4)));
        assert_eq!(ngrams(&toks("a b"), 1), Err(TextError::BadN(1)));
    }

    #[test]
    fn treadmill_pair_bigrams_and_trigrams() {
        let p = toks("A woman, in a green shirt, preparing to run on a treadmill.");
        let h = toks("A woman is preparing to sleep on a treadmill.");
        let distinct = |n| {
            let mut set = HashSet::new();
            set.extend(ngrams(&p, n).unwrap());
            set.extend(ngrams(&h, n).unwrap());
            set.len()
        };
        assert_eq!(distinct(2), 15);
        assert_eq!(distinct(3), 16);
    }

    proptest! {
        #[test]
        fn tokenize_join_idempotent(text in "[a-zA-Z0-9 ,.'!?-]{0,60}") {
            let t = tokenize(&text);
            prop_assert_eq!(tokenize(&t.join(" ")), t.clone());
            for tok in &t {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(is_word_char));
                prop_assert!(!tok.starts_with('\'') && !tok.ends_with('\''));
            }
        }
    }
}
