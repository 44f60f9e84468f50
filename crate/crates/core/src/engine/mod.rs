//! Data quality index: seven components, cold start and per-sample impact.

mod components;
mod params;
mod prepared;
mod report;

pub use components::{alignment_ratio, overlap_ratio};
pub use params::{Component, FrequencyBounds, Granularity, HyperParams};
pub use prepared::{LabelCounts, Prepared, SampleText, SentenceText};
pub use report::{
    ComponentReport, DqiReport, ImpactReport, SkipReason, SkippedGranularity, TestMatch,
};

pub(crate) use components::{pair_similarity, sentence_similarity_matrix, word_means};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::corpus::{CorpusError, Dataset, Sample};
use crate::textprims::{CorpusStats, SimilarityProvider, STOPWORD_LIST_VERSION, TAGGER_VERSION};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("at least two sentences are needed")]
    TooFewSentences,
    #[error("dataset needs at least one train and one test sample")]
    MissingSplit,
    #[error("invalid hyperparameters: {0}")]
    BadParams(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn compute_c1(dataset: &Dataset, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    components::c1(&Prepared::new(dataset), params)
}

pub fn compute_c2(dataset: &Dataset, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    components::c2(&Prepared::new(dataset), params)
}

pub fn compute_c3(
    dataset: &Dataset,
    _provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    components::c3(&Prepared::new(dataset), params)
}

pub fn compute_c4(
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    components::c4(&Prepared::new(dataset), provider, params)
}

pub fn compute_c5(
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    components::c5(&Prepared::new(dataset), provider, params)
}

pub fn compute_c6(dataset: &Dataset, params: &HyperParams) -> Result<ComponentReport, EngineError> {
    components::c6(&Prepared::new(dataset), params)
}

pub fn compute_c7(
    dataset: &Dataset,
    _provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ComponentReport, EngineError> {
    components::c7(&Prepared::new(dataset), params)
}

fn assemble(
    prep: &Prepared,
    reports: Vec<ComponentReport>,
    params: &HyperParams,
) -> DqiReport {
    let aggregate = reports.iter().map(|r| params.weight(r.component) * r.value).sum();
    DqiReport {
        components: reports.into_iter().map(|r| (r.component, r)).collect(),
        aggregate,
        samples: prep.texts.len(),
        stopword_list: STOPWORD_LIST_VERSION.to_string(),
        tagger: TAGGER_VERSION.to_string(),
    }
}

/// Runs c1..c7 on a prepared dataset. A dataset without both a train and a
/// test sample gets c7 = 0 with a note rather than an error.
pub fn compute_prepared(
    prep: &Prepared,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<DqiReport, EngineError> {
    params.validate()?;
    let c7 = match components::c7(prep, params) {
        Ok(r) => r,
        Err(EngineError::MissingSplit) => {
            let mut r = ComponentReport::new(Component::C7);
            r.set("T1", 0.0);
            r.notes.push("no train/test pair available; value set to 0".into());
            r.finish()
        }
        Err(e) => return Err(e),
    };
    let reports = vec![
        components::c1(prep, params)?,
        components::c2(prep, params)?,
        components::c3(prep, params)?,
        components::c4(prep, provider, params)?,
        components::c5(prep, provider, params)?,
        components::c6(prep, params)?,
        c7,
    ];
    Ok(assemble(prep, reports, params))
}

pub fn compute_all(
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<DqiReport, EngineError> {
    compute_prepared(&Prepared::new(dataset), provider, params)
}

/// Component values for a lone sample, using its own two sentences as the
/// corpus.
pub fn cold_start(
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<DqiReport, EngineError> {
    let ds = Dataset::from_samples(vec![sample.clone()])?;
    Ok(cold_start_prepared(&Prepared::new(&ds), provider, params))
}

/// Like [`cold_start`] but weighting terms by `stats`, typically the
/// document frequencies of the dataset the sample is joining.
pub fn cold_start_with_stats(
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &HyperParams,
    stats: CorpusStats,
) -> Result<DqiReport, EngineError> {
    let ds = Dataset::from_samples(vec![sample.clone()])?;
    Ok(cold_start_prepared(&Prepared::with_stats(&ds, stats), provider, params))
}

fn cold_start_prepared(prep: &Prepared, provider: &SimilarityProvider, params: &HyperParams) -> DqiReport {
    let text = &prep.texts[0];
    let sim = pair_similarity(prep, text);

    let c1 = components::c1(prep, params).expect("one sample");
    let c2 = components::c2(prep, params).expect("one sample");
    let c4 = components::c4(prep, provider, params).expect("one sample");

    let mut c3 = ComponentReport::new(Component::C3);
    c3.set("T1", sim);
    c3.set("T2", 2.0);
    c3.notes.push("cold start: T1 is the pair similarity, T2 fixed at 2".into());

    let mut c5 = components::c5(prep, provider, params).expect("one sample");
    c5.set("T3", 0.0);
    c5.set("T4", sim);
    c5.notes.push("cold start: T3 fixed at 0, T4 is the pair similarity".into());

    let mut c6 = components::c6(prep, params).expect("one sample");
    let t5_keys: Vec<String> = c6.terms.keys().filter(|k| k.ends_with(".T5")).cloned().collect();
    for k in t5_keys {
        c6.set(k, 0.0);
    }
    c6.notes.push("cold start: cross-label terms fixed at 0".into());

    let mut c7 = ComponentReport::new(Component::C7);
    c7.set("T1", 0.0);
    c7.notes.push("cold start: not applicable, fixed at 0".into());

    let reports = [c1, c2, c3.finish(), c4, c5.finish(), c6.finish(), c7.finish()];
    assemble(prep, reports.into(), params)
}

/// `x1` from `dataset`, `x2` after appending `sample`.
pub fn impact(
    dataset: &Dataset,
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<ImpactReport, EngineError> {
    if dataset.is_empty() {
        return Err(EngineError::EmptyDataset);
    }
    let after = dataset.add_trial_sample(sample.clone())?;
    let x1 = compute_all(dataset, provider, params)?.flatten();
    let x2 = compute_all(&after, provider, params)?.flatten();
    Ok(ImpactReport::from_maps(x1, x2))
}

/// Flattened values keyed like band entries.
pub type ValueMap = BTreeMap<String, f64>;
