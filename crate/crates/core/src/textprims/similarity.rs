use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("cannot read vector file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vector file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    VectorFile,
    LexicalFallback,
}

/// Word and sentence similarity, both symmetric and bounded in `[0, 1]`.
///
/// Words use stored vectors when both have one (cosine mapped from `[-1, 1]`
/// onto `[0, 1]`) and padded character-trigram Jaccard otherwise. Sentences
/// use IDF-weighted term-frequency cosine over the corpus in [`CorpusStats`].
#[derive(Debug, Clone)]
pub struct SimilarityProvider {
    kind: ProviderKind,
    source: Option<PathBuf>,
    vectors: HashMap<String, Vec<f64>>,
}

impl Default for SimilarityProvider {
    fn default() -> Self {
        Self::lexical()
    }
}

impl SimilarityProvider {
    pub fn lexical() -> Self {
        SimilarityProvider {
            kind: ProviderKind::LexicalFallback,
            source: None,
            vectors: HashMap::new(),
        }
    }

    pub fn from_vectors(vectors: HashMap<String, Vec<f64>>) -> Self {
        SimilarityProvider {
            kind: ProviderKind::VectorFile,
            source: None,
            vectors,
        }
    }

    /// Reads the plain-text word vector format: a word followed by its
    /// whitespace-separated components, one word per line. A leading
    /// `count dim` header line is skipped.
    pub fn load_vector_file(path: &Path) -> Result<Self, SimilarityError> {
        let text = fs::read_to_string(path).map_err(|source| SimilarityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut provider = Self::parse_vectors(&text)?;
        provider.source = Some(path.to_path_buf());
        Ok(provider)
    }

    pub fn parse_vectors(text: &str) -> Result<Self, SimilarityError> {
        let mut vectors = HashMap::new();
        let mut dim = None;
        for (n, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
            let values = values.map_err(|e| SimilarityError::Malformed {
                line: n + 1,
                reason: e.to_string(),
            })?;
            if n == 0 && values.len() == 1 && word.parse::<usize>().is_ok() {
                continue;
            }
            if values.is_empty() {
                return Err(SimilarityError::Malformed {
                    line: n + 1,
                    reason: "word without components".into(),
                });
            }
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(SimilarityError::Malformed {
                        line: n + 1,
                        reason: format!("expected {d} components, found {}", values.len()),
                    })
                }
                _ => {}
            }
            vectors.insert(word.to_lowercase(), values);
        }
        Ok(Self::from_vectors(vectors))
    }

    pub fn kind(&self) -> ProviderKind {
        self.kind
    }

    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    pub fn word_similarity(&self, w1: &str, w2: &str) -> f64 {
        if w1 == w2 {
            return 1.0;
        }
        if self.kind == ProviderKind::VectorFile {
            if let (Some(a), Some(b)) = (self.vectors.get(w1), self.vectors.get(w2)) {
                let (dot, na, nb) = a
                    .iter()
                    .zip(b)
                    .fold((0.0, 0.0, 0.0), |(d, x, y), (p, q)| (d + p * q, x + p * p, y + q * q));
                if na > 0.0 && nb > 0.0 {
                    let cos = dot / (na.sqrt() * nb.sqrt());
                    return ((cos + 1.0) / 2.0).clamp(0.0, 1.0);
                }
            }
        }
        trigram_jaccard(w1, w2)
    }

    pub fn sentence_similarity(&self, s1: &[String], s2: &[String], stats: &CorpusStats) -> f64 {
        cosine(&stats.vectorize(s1), &stats.vectorize(s2))
    }
}

fn trigrams(word: &str) -> HashSet<String> {
    let padded: Vec<char> = std::iter::once('#')
        .chain(word.chars())
        .chain(std::iter::once('#'))
        .collect();
    padded.windows(3).map(|w| w.iter().collect()).collect()
}

/// Jaccard overlap of the character trigrams of `#w1#` and `#w2#`.
pub fn trigram_jaccard(w1: &str, w2: &str) -> f64 {
    if w1 == w2 {
        return 1.0;
    }
    let a = trigrams(w1);
    let b = trigrams(w2);
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

/// Document frequencies over the sentences of a corpus.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusStats {
    documents: usize,
    df: HashMap<String, usize>,
}

/// Sparse IDF-weighted term vector, sorted by term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermVector {
    terms: Vec<(String, f64)>,
    norm: f64,
}

impl CorpusStats {
    pub fn from_sentences<'a, I>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut stats = CorpusStats::default();
        for sentence in sentences {
            stats.documents += 1;
            let unique: HashSet<&String> = sentence.iter().collect();
            for t in unique {
                *stats.df.entry(t.clone()).or_default() += 1;
            }
        }
        stats
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.df.get(term).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency, always positive.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.documents as f64;
        let df = self.document_frequency(term) as f64;
        ((n + 1.0) / (df + 1.0)).ln() + 1.0
    }

    pub fn vectorize(&self, tokens: &[String]) -> TermVector {
        let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_str()).or_default() += 1.0;
        }
        let terms: Vec<(String, f64)> = tf
            .into_iter()
            .map(|(t, f)| (t.to_string(), f * self.idf(t)))
            .collect();
        let norm = terms.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        TermVector { terms, norm }
    }
}

/// Cosine of two term vectors, clamped to `[0, 1]`; 0 when either is empty.
pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    if a.norm == 0.0 || b.norm == 0.0 {
        return 0.0;
    }
    if a.terms == b.terms {
        return 1.0;
    }
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.terms.len() && j < b.terms.len() {
        match a.terms[i].0.cmp(&b.terms[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.terms[i].1 * b.terms[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    (dot / (a.norm * b.norm)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprims::tokenize;
    use proptest::prelude::*;

    #[test]
    fn word_fallback() {
        let p = SimilarityProvider::lexical();
        assert_eq!(p.word_similarity("man", "man"), 1.0);
        assert_eq!(p.word_similarity("abc", "xyz"), 0.0);
        // #ca cat at# vs #ca cat ats ts#: 2 shared of 5 distinct
        let expected = {
            let a = ["#ca", "cat", "at#"];
            let b = ["#ca", "cat", "ats", "ts#"];
            let shared = a.iter().filter(|x| b.contains(x)).count() as f64;
            let union = (a.len() + b.len()) as f64 - shared;
            shared / union
        };
        assert!((p.word_similarity("cat", "cats") - expected).abs() < 1e-15);
        assert!((expected - 0.4).abs() < 1e-15);
    }

    #[test]
    fn vector_file_words() {
        let p = SimilarityProvider::parse_vectors("2 2\ncat 1 0\ndog 0 1\nkitten 1 0\nanti -1 0\n").unwrap();
        assert_eq!(p.kind(), ProviderKind::VectorFile);
        assert!((p.word_similarity("cat", "dog") - 0.5).abs() < 1e-12);
        assert!((p.word_similarity("cat", "kitten") - 1.0).abs() < 1e-12);
        assert!(p.word_similarity("cat", "anti").abs() < 1e-12);
        // missing vector falls back to trigrams
        assert_eq!(p.word_similarity("cat", "cats"), trigram_jaccard("cat", "cats"));
        assert!(SimilarityProvider::parse_vectors("a 1 2\nb 1\n").is_err());
    }

    #[test]
    fn sentence_edges() {
        let a = tokenize("a man smiles");
        let b = tokenize("dogs bark loudly");
        let stats = CorpusStats::from_sentences([a.as_slice(), b.as_slice()]);
        let p = SimilarityProvider::lexical();
        assert_eq!(p.sentence_similarity(&a, &a, &stats), 1.0);
        assert_eq!(p.sentence_similarity(&a, &b, &stats), 0.0);
        assert_eq!(p.sentence_similarity(&[], &[], &stats), 0.0);
    }

    #[test]
    fn sentence_matches_dense_oracle() {
        let sents: Vec<Vec<String>> = [
            "a man smiles at a man",
            "the man is smiling",
            "a dog runs on the beach",
            "two dogs run",
        ]
        .iter()
        .map(|s| tokenize(s))
        .collect();
        let stats = CorpusStats::from_sentences(sents.iter().map(|s| s.as_slice()));
        let p = SimilarityProvider::lexical();
        let mut vocab: Vec<String> = sents.iter().flatten().cloned().collect();
        vocab.sort();
        vocab.dedup();
        let n = sents.len() as f64;
        let dense = |s: &[String]| -> Vec<f64> {
            vocab
                .iter()
                .map(|v| {
                    let tf = s.iter().filter(|t| *t == v).count() as f64;
                    let df = sents.iter().filter(|d| d.contains(v)).count() as f64;
                    tf * (((n + 1.0) / (df + 1.0)).ln() + 1.0)
                })
                .collect()
        };
        for x in &sents {
            for y in &sents {
                let (u, v) = (dense(x), dense(y));
                let dot: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
                let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                let oracle = dot / (nu * nv);
                assert!((p.sentence_similarity(x, y, &stats) - oracle).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn word_similarity_symmetric_bounded(a in "[a-z]{0,8}", b in "[a-z]{0,8}") {
            let p = SimilarityProvider::lexical();
            let ab = p.word_similarity(&a, &b);
            prop_assert_eq!(ab.to_bits(), p.word_similarity(&b, &a).to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
            if !a.is_empty() {
                prop_assert_eq!(p.word_similarity(&a, &a), 1.0);
            }
        }

        #[test]
        fn sentence_similarity_symmetric_bounded(
            a in proptest::collection::vec("[a-e]{1,2}", 0..8),
            b in proptest::collection::vec("[a-e]{1,2}", 0..8),
        ) {
            let stats = CorpusStats::from_sentences([a.as_slice(), b.as_slice()]);
            let p = SimilarityProvider::lexical();
            let ab = p.sentence_similarity(&a, &b, &stats);
            prop_assert_eq!(ab.to_bits(), p.sentence_similarity(&b, &a, &stats).to_bits());
            prop_assert!((0.0..=1.0).contains(&ab));
            if !a.is_empty() {
                let mut shuffled = a.clone();
                shuffled.reverse();
                prop_assert_eq!(p.sentence_similarity(&a, &shuffled, &stats), 1.0);
            }
        }
    }
}
