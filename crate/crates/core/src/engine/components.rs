//! The seven component formulas over a [`Prepared`] dataset.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::{Label, Split};
use crate::stats::{mean, sample_std, sample_std_or_zero, sign};
use crate::textprims::{cosine, SimilarityProvider};

use super::prepared::{Prepared, SampleText};
use super::report::{ComponentReport, SkipReason, SkippedGranularity, TestMatch};
use super::{Component, EngineError, Granularity, HyperParams};

fn require_samples(prep: &Prepared) -> Result<(), EngineError> {
    if prep.texts.is_empty() {
        Err(EngineError::EmptyDataset)
    } else {
        Ok(())
    }
}

pub(crate) fn c1(prep: &Prepared, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    require_samples(prep)?;
    let mut r = ComponentReport::new(Component::C1);
    let vocab: BTreeSet<&str> = prep
        .sentences()
        .flat_map(|s| s.content.iter().map(String::as_str))
        .collect();
    let lengths: Vec<f64> = prep.sentences().map(|s| s.len() as f64).collect();
    let t3 = lengths
        .iter()
        .map(|s| sign((s - params.length_min) * (params.length_max - s)))
        .sum::<f64>()
        / lengths.len() as f64;
    r.set("T1", vocab.len() as f64 / prep.texts.len() as f64);
    r.set("T2", sample_std_or_zero(&lengths));
    r.set("T3", t3);
    Ok(r.finish())
}

/// Frequency-spread and in-range terms for one table of unit counts.
/// Returns `Err(reason)` when the granularity must be skipped.
fn frequency_terms(
    counts: &[usize],
    g: Granularity,
    lo: f64,
    hi: f64,
    params: &HyperParams,
) -> Result<(f64, f64), SkipReason> {
    let mass: usize = counts.iter().sum();
    if g.mass_gated() && (mass as f64) < params.min_granularity_mass {
        return Err(SkipReason::BelowMass);
    }
    if counts.len() < 2 {
        return Err(SkipReason::TooFewUnits);
    }
    let u = counts.len() as f64;
    let normalized: Vec<f64> = counts.iter().map(|&n| n as f64 / u).collect();
    let sigma = sample_std(&normalized).unwrap_or(0.0);
    if sigma < params.sigma_epsilon || sigma == 0.0 {
        return Err(SkipReason::ZeroVariance);
    }
    let t2 = counts
        .iter()
        .map(|&n| sign((n as f64 - lo) * (hi - n as f64)))
        .sum::<f64>()
        / u;
    Ok((1.0 / sigma, t2))
}

pub(crate) fn c2(prep: &Prepared, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    require_samples(prep)?;
    let mut r = ComponentReport::new(Component::C2);
    for g in Granularity::ALL {
        let table = prep.frequency_table(g);
        let counts: Vec<usize> = table.values().copied().collect();
        if !counts.is_empty() {
            let mass: usize = counts.iter().sum();
            r.set(format!("{g}.mean_frequency"), mass as f64 / counts.len() as f64);
        }
        let b = params.bounds_for(g);
        match frequency_terms(&counts, g, b.c, b.d, params) {
            Ok((t1, t2)) => {
                r.set(format!("{g}.T1"), t1);
                r.set(format!("{g}.T2"), t2);
            }
            Err(reason) => r.skipped.push(SkippedGranularity {
                label: None,
                granularity: g,
                term: "T1T2".into(),
                reason,
            }),
        }
    }
    Ok(r.finish())
}

/// Number of penalties summed per sentence.
pub(crate) fn top_count(fraction: f64, others: usize) -> usize {
    ((fraction * others as f64) - 1e-12).ceil().max(0.0) as usize
}

pub(crate) fn sentence_similarity_matrix(prep: &Prepared) -> Vec<Vec<f64>> {
    let vectors: Vec<_> = prep.sentences().map(|s| prep.stats.vectorize(&s.tokens)).collect();
    let n = vectors.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][i] = cosine(&vectors[i], &vectors[i]);
        for j in (i + 1)..n {
            let s = cosine(&vectors[i], &vectors[j]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    m
}

pub(crate) fn c3(prep: &Prepared, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    let matrix = sentence_similarity_matrix(prep);
    let n = matrix.len();
    if n < 2 {
        return Err(EngineError::TooFewSentences);
    }
    let sim = params.min_similarity;
    let k = top_count(params.top_fraction, n - 1);
    let mut below = Vec::with_capacity(n);
    let mut penalty_total = 0.0;
    for (l, row) in matrix.iter().enumerate() {
        let others = row.iter().enumerate().filter(|(m, _)| *m != l).map(|(_, v)| *v);
        below.push(others.clone().filter(|v| *v < sim).count() as f64);
        let mut penalties: Vec<f64> = others.map(|v| (v - sim).abs() - (v - sim)).collect();
        penalties.sort_by(|a, b| b.total_cmp(a));
        penalty_total += penalties.iter().take(k).sum::<f64>();
    }
    let mut r = ComponentReport::new(Component::C3);
    r.set("T1", n as f64 / (sample_std_or_zero(&below) + 1.0));
    r.set("T2", 2.0 * n as f64 / (penalty_total + 1.0));
    Ok(r.finish())
}

/// Mean similarity of each content word to the other content positions of
/// its sentence. Empty for sentences with fewer than two content words.
pub(crate) fn word_means(words: &[String], provider: &SimilarityProvider) -> Vec<f64> {
    let len = words.len();
    if len < 2 {
        return Vec::new();
    }
    (0..len)
        .map(|l| {
            let total: f64 = (0..len)
                .filter(|m| *m != l)
                .map(|m| provider.word_similarity(&words[l], &words[m]))
                .sum();
            total / (len - 1) as f64
        })
        .collect()
}

pub(crate) fn c4(
    prep: &Prepared,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    require_samples(prep)?;
    let deviation: f64 = prep
        .sentences()
        .flat_map(|s| word_means(&s.content, provider))
        .map(|m| (m - params.word_similarity_target).abs())
        .sum();
    let size_s = prep.sentences().count() as f64;
    let mut r = ComponentReport::new(Component::C4);
    r.set("deviation", deviation);
    r.set("T1", size_s / (deviation + 1.0));
    Ok(r.finish())
}

pub(crate) fn pair_similarity(prep: &Prepared, text: &SampleText) -> f64 {
    cosine(
        &prep.stats.vectorize(&text.premise.tokens),
        &prep.stats.vectorize(&text.hypothesis.tokens),
    )
}

/// `(premise + hypothesis content length) / max(shared unique content words, floor)`.
pub fn overlap_ratio(text: &SampleText, floor: f64) -> f64 {
    let p: BTreeSet<&String> = text.premise.content.iter().collect();
    let h: BTreeSet<&String> = text.hypothesis.content.iter().collect();
    let shared = p.intersection(&h).count() as f64;
    let total = (text.premise.content.len() + text.hypothesis.content.len()) as f64;
    total / shared.max(floor)
}

/// Reciprocal of the summed best premise match of each hypothesis word.
pub fn alignment_ratio(text: &SampleText, provider: &SimilarityProvider, floor: f64) -> f64 {
    let h: BTreeSet<&String> = text.hypothesis.content.iter().collect();
    let total: f64 = h
        .iter()
        .map(|w| {
            text.premise
                .content
                .iter()
                .map(|p| provider.word_similarity(w, p))
                .fold(0.0, f64::max)
        })
        .sum();
    1.0 / total.max(floor)
}

pub(crate) fn c5(
    prep: &Prepared,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    require_samples(prep)?;
    let n = prep.texts.len() as f64;
    let sims: Vec<f64> = prep.texts.iter().map(|t| pair_similarity(prep, t)).collect();
    let gaps: Vec<f64> = prep.texts.iter().map(SampleText::length_gap).collect();
    let overlap: Vec<f64> = prep
        .texts
        .iter()
        .map(|t| overlap_ratio(t, params.overlap_floor))
        .collect();
    let align: Vec<f64> = prep
        .texts
        .iter()
        .map(|t| alignment_ratio(t, provider, params.overlap_floor))
        .collect();
    let isim = params.pair_similarity_target;
    let mut r = ComponentReport::new(Component::C5);
    r.set("T1", n / (sims.iter().map(|s| (s - isim).abs()).sum::<f64>() + 1.0));
    r.set("T2", n / (gaps.iter().sum::<f64>() + 1.0));
    r.set("T3", sample_std_or_zero(&gaps) / n);
    r.set("T4", sample_std_or_zero(&sims) / n);
    r.set("T5", mean(&overlap).unwrap_or(0.0));
    r.set("T6", mean(&align).unwrap_or(0.0));
    Ok(r.finish())
}

pub(crate) fn c6(prep: &Prepared, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    require_samples(prep)?;
    let mut r = ComponentReport::new(Component::C6);
    let present: BTreeSet<Label> = prep.samples().iter().map(|s| s.label).collect();
    let tables: Vec<(Granularity, BTreeMap<String, [usize; 3]>)> = Granularity::ALL
        .into_iter()
        .map(|g| (g, prep.label_table(g)))
        .collect();

    for label in Label::ALL {
        if !present.contains(&label) {
            r.notes.push(format!("label {label} has no samples and contributes 0"));
            continue;
        }
        let li = label.index();
        for (g, table) in &tables {
            let counts: Vec<usize> = table.values().map(|c| c[li]).filter(|n| *n > 0).collect();
            match frequency_terms(&counts, *g, 0.0, params.label_cap, params) {
                Ok((t1, t2)) => {
                    r.set(format!("{label}.{g}.T1"), t1);
                    r.set(format!("{label}.{g}.T2"), t2);
                }
                Err(reason) => r.skipped.push(SkippedGranularity {
                    label: Some(label),
                    granularity: *g,
                    term: "T1T2".into(),
                    reason,
                }),
            }
        }
        let gaps: Vec<f64> = prep
            .texts
            .iter()
            .enumerate()
            .filter(|(i, _)| prep.label_of(*i) == label)
            .map(|(_, t)| t.length_gap())
            .collect();
        let size = gaps.len() as f64;
        r.set(format!("{label}.T3"), size / (gaps.iter().sum::<f64>() + 1.0));
        r.set(format!("{label}.T4"), sample_std_or_zero(&gaps) / size);
    }

    for (g, table) in &tables {
        let mass: usize = table.values().map(|c| c.iter().sum::<usize>()).sum();
        if g.mass_gated() && (mass as f64) < params.min_granularity_mass {
            r.skipped.push(SkippedGranularity {
                label: None,
                granularity: *g,
                term: "T5".into(),
                reason: SkipReason::BelowMass,
            });
            continue;
        }
        let spread: f64 = table
            .values()
            .filter(|c| c.iter().sum::<usize>() >= 2)
            .map(|c| {
                let excess: Vec<f64> = c.iter().map(|&k| k.saturating_sub(1) as f64).collect();
                sample_std_or_zero(&excess)
            })
            .sum();
        r.set(format!("{g}.T5"), table.len() as f64 / (spread + 1.0));
    }
    Ok(r.finish())
}

pub(crate) fn c7(prep: &Prepared, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    let pick = |split: Split| -> Vec<usize> {
        prep.samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.split == split)
            .map(|(i, _)| i)
            .collect()
    };
    let train = pick(Split::Train);
    let test = pick(Split::Test);
    if train.is_empty() || test.is_empty() {
        return Err(EngineError::MissingSplit);
    }
    let vectors: Vec<_> = prep
        .texts
        .iter()
        .map(|t| prep.stats.vectorize(&t.joined_tokens()))
        .collect();
    let mut r = ComponentReport::new(Component::C7);
    let mut deviation = 0.0;
    for &ti in &test {
        let mut best = (train[0], f64::NEG_INFINITY);
        for &tr in &train {
            let s = cosine(&vectors[ti], &vectors[tr]);
            if s > best.1 {
                best = (tr, s);
            }
        }
        deviation += (best.1 - params.split_similarity).abs();
        r.matches.push(TestMatch {
            test_id: prep.samples()[ti].id.clone(),
            train_id: prep.samples()[best.0].id.clone(),
            similarity: best.1,
        });
    }
    r.set("deviation", deviation);
    r.set("T1", test.len() as f64 / (deviation + 1.0));
    Ok(r.finish())
}
