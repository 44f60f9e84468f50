//! Quality-guided synonym substitution on a sample's hypothesis.
//!
//! Content words are ranked by how much deleting them would pull the
//! sample's non-green values toward green. Walking that ranking, each word
//! is tried against its lexicon candidates and the first replacement that
//! strictly lowers `(reds, yellows)` is kept.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{BandSpec, Color, FlagPanel};
use crate::corpus::{Dataset, Sample};
use crate::engine::HyperParams;
use crate::review::{sample_panel, ReviewError};
use crate::textprims::{is_stopword, token_spans, SimilarityProvider};

static BUNDLED_SYNONYMS: &str = include_str!("../data/synonyms.tsv");

const NUMBER_WORDS: &[&str] = &[
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
    "hundred", "thousand", "million", "billion", "dozen", "first", "second", "third", "half",
];

#[derive(Debug, Error)]
pub enum AutofixError {
    #[error("hypothesis has no content words")]
    NoContentTokens,
    #[error("synonym lexicon is empty")]
    EmptyLexicon,
    #[error("max_edits must be at least 1")]
    BadMaxEdits,
    #[error("lexicon line {line}: {reason}")]
    BadLexicon { line: usize, reason: String },
    #[error("cannot read lexicon {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Review(#[from] ReviewError),
}

/// Word → ordered replacement candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    /// Parses `word<TAB>cand1,cand2,...` lines. Blank lines and `#`
    /// comments are ignored; candidates equal to the key are dropped.
    pub fn parse(text: &str) -> Result<SynonymLexicon, AutofixError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| AutofixError::BadLexicon {
                line: n + 1,
                reason: reason.to_string(),
            };
            let (key, cands) = line.split_once('\t').ok_or_else(|| bad("expected key<TAB>candidates"))?;
            let key = key.trim().to_lowercase();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(bad("key must be a single word"));
            }
            let mut list: Vec<String> = Vec::new();
            for c in cands.split(',').map(|c| c.trim().to_lowercase()) {
                if c.is_empty() || c == key || list.contains(&c) {
                    continue;
                }
                if c.contains(|ch: char| !(ch.is_alphanumeric() || ch == '\'')) {
                    return Err(bad("candidates must be single tokens"));
                }
                list.push(c);
            }
            if !list.is_empty() {
                entries.insert(key, list);
            }
        }
        Ok(SynonymLexicon { entries })
    }

    pub fn bundled() -> &'static SynonymLexicon {
        static LEX: OnceLock<SynonymLexicon> = OnceLock::new();
        LEX.get_or_init(|| SynonymLexicon::parse(BUNDLED_SYNONYMS).expect("bundled lexicon parses"))
    }

    pub fn load(path: &Path) -> Result<SynonymLexicon, AutofixError> {
        let text = fs::read_to_string(path).map_err(|source| AutofixError::Io {
            path: path.display().to_string(),
            source,
        })?;
        SynonymLexicon::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn candidates(&self, word: &str) -> &[String] {
        self.entries.get(word).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    /// Token index in the hypothesis.
    pub position: usize,
    pub old: String,
    pub new: String,
    pub colors: BTreeMap<String, Color>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixStatus {
    AllGreen,
    Improved,
    NoFixFound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixTrace {
    pub original: String,
    pub edits: Vec<Edit>,
    pub status: FixStatus,
    pub initial_colors: BTreeMap<String, Color>,
    pub max_edits: usize,
}

pub fn is_number_word(token: &str) -> bool {
    token.chars().all(|c| c.is_ascii_digit()) || NUMBER_WORDS.contains(&token)
}

/// Token positions autofix may touch: content words that are neither
/// numbers nor capitalized mid-sentence (taken as proper nouns).
pub fn editable_positions(hypothesis: &str) -> Vec<usize> {
    token_spans(hypothesis)
        .iter()
        .enumerate()
        .filter(|(i, (s, _, tok))| {
            let capitalized = hypothesis[*s..].chars().next().is_some_and(char::is_uppercase);
            !is_stopword(tok) && !is_number_word(tok) && !(capitalized && *i > 0)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Swaps token `position` for `word`, keeping an initial capital.
pub fn replace_token(text: &str, position: usize, word: &str) -> Option<String> {
    let spans = token_spans(text);
    let (s, e, _) = spans.get(position)?;
    let capital = text[*s..].chars().next().is_some_and(char::is_uppercase);
    let mut replacement = word.to_string();
    if capital {
        let mut chars = word.chars();
        if let Some(first) = chars.next() {
            replacement = first.to_uppercase().chain(chars).collect();
        }
    }
    Some(format!("{}{}{}", &text[..*s], replacement, &text[*e..]))
}

fn delete_token(text: &str, position: usize) -> Option<String> {
    let spans = token_spans(text);
    let (s, e, _) = spans.get(position)?;
    let out = format!("{} {}", text[..*s].trim_end(), text[*e..].trim_start());
    Some(out.trim().to_string())
}

/// Applies `edits` in order to `original`.
pub fn replay(original: &str, edits: &[Edit]) -> Option<String> {
    edits
        .iter()
        .try_fold(original.to_string(), |text, e| replace_token(&text, e.position, &e.new))
}

fn total_distance(panel: &FlagPanel, bands: &BandSpec, keys: &[String]) -> f64 {
    keys.iter()
        .map(|k| match (bands.get(k), panel.values.get(k)) {
            (Some(b), Some(v)) => b.distance_to_green(*v),
            _ => 0.0,
        })
        .filter(|d| d.is_finite())
        .sum()
}

/// Editable hypothesis positions, most damaging first, with their scores.
pub fn rank_importance(
    sample: &Sample,
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
    bands: &BandSpec,
) -> Result<Vec<(usize, f64)>, AutofixError> {
    let tokens = token_spans(&sample.hypothesis);
    if tokens.iter().all(|(_, _, t)| is_stopword(t)) {
        return Err(AutofixError::NoContentTokens);
    }
    let base = sample_panel(dataset, sample, provider, params, bands)?;
    let flagged: Vec<String> = base
        .colors
        .iter()
        .filter(|(_, c)| **c != Color::Green)
        .map(|(k, _)| k.clone())
        .collect();
    let base_distance = total_distance(&base, bands, &flagged);

    let mut ranked = Vec::new();
    for pos in editable_positions(&sample.hypothesis) {
        let mut score = 0.0;
        if !flagged.is_empty() {
            if let Some(h) = delete_token(&sample.hypothesis, pos).filter(|h| !h.is_empty()) {
                let trial = Sample {
                    hypothesis: h,
                    ..sample.clone()
                };
                let panel = sample_panel(dataset, &trial, provider, params, bands)?;
                score = base_distance - total_distance(&panel, bands, &flagged);
            }
        }
        ranked.push((pos, score));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Rewrites the hypothesis of `sample`; premise and label are never
/// touched. `max_edits` defaults to the hypothesis content length.
pub fn autofix(
    sample: &Sample,
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
    bands: &BandSpec,
    lexicon: &SynonymLexicon,
    max_edits: Option<usize>,
) -> Result<(Sample, FixTrace), AutofixError> {
    if lexicon.is_empty() {
        return Err(AutofixError::EmptyLexicon);
    }
    let content_len = token_spans(&sample.hypothesis)
        .iter()
        .filter(|(_, _, t)| !is_stopword(t))
        .count();
    let max_edits = match max_edits {
        Some(0) => return Err(AutofixError::BadMaxEdits),
        Some(n) => n,
        None => content_len.max(1),
    };
    let mut current = sample.clone();
    let mut panel = sample_panel(dataset, &current, provider, params, bands)?;
    let mut trace = FixTrace {
        original: sample.hypothesis.clone(),
        edits: Vec::new(),
        status: FixStatus::NoFixFound,
        initial_colors: panel.colors.clone(),
        max_edits,
    };
    if panel.all_green() {
        trace.status = FixStatus::AllGreen;
        return Ok((current, trace));
    }

    let ranked = rank_importance(sample, dataset, provider, params, bands)?;
    let words: Vec<String> = token_spans(&sample.hypothesis).into_iter().map(|(_, _, t)| t).collect();
    for (pos, _) in ranked {
        if trace.edits.len() >= max_edits || panel.all_green() {
            break;
        }
        for cand in lexicon.candidates(&words[pos]) {
            let Some(h) = replace_token(&current.hypothesis, pos, cand) else { continue };
            let trial = Sample {
                hypothesis: h,
                ..current.clone()
            };
            let next = sample_panel(dataset, &trial, provider, params, bands)?;
            if next.badness() < panel.badness() {
                trace.edits.push(Edit {
                    position: pos,
                    old: words[pos].clone(),
                    new: cand.clone(),
                    colors: next.colors.clone(),
                });
                current = trial;
                panel = next;
                break;
            }
        }
    }
    trace.status = if panel.all_green() {
        FixStatus::AllGreen
    } else if trace.edits.is_empty() {
        FixStatus::NoFixFound
    } else {
        FixStatus::Improved
    };
    Ok((current, trace))
}
