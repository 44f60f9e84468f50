use std::collections::BTreeMap;

use crate::corpus::{Dataset, Label, Sample};
use crate::textprims::{content_tokens, ngrams, CorpusStats, PosLexicon, PosTag};

use super::Granularity;

/// Tokenized view of one sentence.
#[derive(Debug, Clone)]
pub struct SentenceText {
    pub tokens: Vec<String>,
    pub content: Vec<String>,
    pub tags: Vec<PosTag>,
}

impl SentenceText {
    pub fn new(text: &str) -> SentenceText {
        let tokens = crate::textprims::tokenize(text);
        let lex = PosLexicon::bundled();
        let tags = tokens.iter().map(|t| lex.tag(t)).collect();
        let content = content_tokens(&tokens);
        SentenceText { tokens, content, tags }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Units this sentence contributes at granularity `g`, with repeats.
    pub fn units(&self, g: Granularity) -> Vec<String> {
        let by_tag = |tag: PosTag| {
            self.tokens
                .iter()
                .zip(&self.tags)
                .filter(|(_, t)| **t == tag)
                .map(|(w, _)| w.clone())
                .collect()
        };
        match g {
            Granularity::Words => self.content.clone(),
            Granularity::Adjectives => by_tag(PosTag::Adjective),
            Granularity::Adverbs => by_tag(PosTag::Adverb),
            Granularity::Verbs => by_tag(PosTag::Verb),
            Granularity::Nouns => by_tag(PosTag::Noun),
            Granularity::Bigrams => ngrams(&self.tokens, 2).unwrap_or_default(),
            Granularity::Trigrams => ngrams(&self.tokens, 3).unwrap_or_default(),
            Granularity::Sentences => {
                if self.tokens.is_empty() {
                    Vec::new()
                } else {
                    vec![self.tokens.join(" ")]
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SampleText {
    pub premise: SentenceText,
    pub hypothesis: SentenceText,
}

impl SampleText {
    pub fn new(sample: &Sample) -> SampleText {
        SampleText {
            premise: SentenceText::new(&sample.premise),
            hypothesis: SentenceText::new(&sample.hypothesis),
        }
    }

    /// Premise tokens followed by hypothesis tokens.
    pub fn joined_tokens(&self) -> Vec<String> {
        let mut out = self.premise.tokens.clone();
        out.extend(self.hypothesis.tokens.iter().cloned());
        out
    }

    pub fn length_gap(&self) -> f64 {
        (self.premise.len() as f64 - self.hypothesis.len() as f64).abs()
    }
}

/// Per-unit counts split by label, in `Label::ALL` order.
pub type LabelCounts = [usize; 3];

/// A dataset with its tokenization and document frequencies computed once.
#[derive(Debug, Clone)]
pub struct Prepared<'a> {
    pub dataset: &'a Dataset,
    pub texts: Vec<SampleText>,
    pub stats: CorpusStats,
}

impl<'a> Prepared<'a> {
    pub fn new(dataset: &'a Dataset) -> Prepared<'a> {
        let texts: Vec<SampleText> = dataset.samples().iter().map(SampleText::new).collect();
        let stats = CorpusStats::from_sentences(
            texts
                .iter()
                .flat_map(|t| [t.premise.tokens.as_slice(), t.hypothesis.tokens.as_slice()]),
        );
        Prepared { dataset, texts, stats }
    }

    /// Uses externally supplied document frequencies instead of the
    /// dataset's own.
    pub fn with_stats(dataset: &'a Dataset, stats: CorpusStats) -> Prepared<'a> {
        let texts = dataset.samples().iter().map(SampleText::new).collect();
        Prepared { dataset, texts, stats }
    }

    pub fn samples(&self) -> &[Sample] {
        self.dataset.samples()
    }

    /// All sentences, premise then hypothesis per sample.
    pub fn sentences(&self) -> impl Iterator<Item = &SentenceText> {
        self.texts.iter().flat_map(|t| [&t.premise, &t.hypothesis])
    }

    pub fn frequency_table(&self, g: Granularity) -> BTreeMap<String, usize> {
        let mut table = BTreeMap::new();
        for s in self.sentences() {
            for u in s.units(g) {
                *table.entry(u).or_insert(0) += 1;
            }
        }
        table
    }

    pub fn label_table(&self, g: Granularity) -> BTreeMap<String, LabelCounts> {
        let mut table: BTreeMap<String, LabelCounts> = BTreeMap::new();
        for (sample, text) in self.samples().iter().zip(&self.texts) {
            for s in [&text.premise, &text.hypothesis] {
                for u in s.units(g) {
                    table.entry(u).or_default()[sample.label.index()] += 1;
                }
            }
        }
        table
    }

    pub fn label_of(&self, idx: usize) -> Label {
        self.samples()[idx].label
    }
}
