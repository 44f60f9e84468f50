//! Flag-panel values for a single draft sample measured against a dataset.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{assign_colors, scale_bands, BandError, BandSpec, FlagPanel};
use crate::corpus::{Dataset, Sample};
use crate::engine::{cold_start_with_stats, impact, EngineError, ImpactReport, SampleText, ValueMap};
use crate::textprims::{CorpusStats, SimilarityProvider};

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Band(#[from] BandError),
}

/// Document frequencies over `dataset` (minus any sample sharing the
/// draft's id) together with the draft's own two sentences.
pub fn context_stats(dataset: &Dataset, sample: &Sample) -> CorpusStats {
    let mut texts: Vec<SampleText> = dataset
        .samples()
        .iter()
        .filter(|s| s.id != sample.id)
        .map(SampleText::new)
        .collect();
    texts.push(SampleText::new(sample));
    CorpusStats::from_sentences(
        texts
            .iter()
            .flat_map(|t| [t.premise.tokens.as_slice(), t.hypothesis.tokens.as_slice()]),
    )
}

/// The draft's own cold-start values, weighted by the dataset's
/// document frequencies.
pub fn sample_values(
    dataset: &Dataset,
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &crate::engine::HyperParams,
) -> Result<ValueMap, ReviewError> {
    let stats = context_stats(dataset, sample);
    Ok(cold_start_with_stats(sample, provider, params, stats)?.flatten())
}

/// Colors for every banded key of the draft's values. Size-scaled bands
/// are scaled to the dataset size after the draft joins.
pub fn sample_panel(
    dataset: &Dataset,
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &crate::engine::HyperParams,
    bands: &BandSpec,
) -> Result<FlagPanel, ReviewError> {
    let values = sample_values(dataset, sample, provider, params)?;
    let size = dataset.samples().iter().filter(|s| s.id != sample.id).count() + 1;
    let scaled = scale_bands(bands, size)?;
    Ok(assign_colors(&scaled.select(&values)?, &scaled)?)
}

/// What a worker sees after pressing review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub panel: FlagPanel,
    /// Dataset-level change from adding the draft; absent for an empty
    /// dataset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub impact: Option<ImpactReport>,
}

pub fn review_sample(
    dataset: &Dataset,
    sample: &Sample,
    provider: &SimilarityProvider,
    params: &crate::engine::HyperParams,
    bands: &BandSpec,
) -> Result<Review, ReviewError> {
    let panel = sample_panel(dataset, sample, provider, params, bands)?;
    let impact = if dataset.is_empty() {
        None
    } else {
        Some(impact(dataset, sample, provider, params)?)
    };
    Ok(Review { panel, impact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::corpus::Label;

    #[test]
    fn panel_has_every_band_key() {
        let cfg = Config::bundled();
        let ds = Dataset::from_samples(vec![Sample::new(
            "a",
            "Two dogs run through a field.",
            "Animals are outside.",
            Label::Entailment,
        )])
        .unwrap();
        let draft = Sample::new("d", "A man in a green apron smiles.", "A man smiles.", Label::Entailment);
        let r = review_sample(&ds, &draft, &SimilarityProvider::lexical(), &cfg.params, &cfg.bands).unwrap();
        assert_eq!(r.panel.colors.len(), cfg.bands.entries.len());
        assert!((0.0..=1.0).contains(&r.panel.accept_probability));
        assert!(r.impact.is_some());
        let again = review_sample(&ds, &draft, &SimilarityProvider::lexical(), &cfg.params, &cfg.bands).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn own_id_excluded_from_context() {
        let s = Sample::new("a", "A dog runs.", "A dog sleeps.", Label::Contradiction);
        let ds = Dataset::from_samples(vec![s.clone()]).unwrap();
        assert_eq!(context_stats(&ds, &s).documents(), 2);
    }
}
