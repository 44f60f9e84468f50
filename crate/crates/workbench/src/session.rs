//! Single-session state for the live worker/analyst loop.
//!
//! A [`Session`] is an immutable value. The service keeps the current one
//! behind a lock and swaps in a modified clone on every mutation, so reads
//! work on a consistent snapshot without blocking writers.

use std::collections::{BTreeMap, BTreeSet};

use dqi_core::autofix::{autofix, AutofixError, FixTrace, SynonymLexicon};
use dqi_core::config::Config;
use dqi_core::corpus::{CorpusError, Dataset, Label, Sample};
use dqi_core::review::{review_sample, sample_panel, Review, ReviewError};
use dqi_core::splitkit::{
    per_sample_values, randomize_split, retune_from_errors, Ratios, RetuneOutcome, SplitAssignment,
    SplitError,
};
use dqi_core::textprims::{content_tokens, tokenize, SimilarityProvider};
use serde::{Deserialize, Serialize};

/// Minimum hypothesis content words for an analyst accept.
pub const MIN_ACCEPT_CONTENT_WORDS: usize = 3;

/// How a failed session operation maps onto the HTTP status space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    BadRequest,
    NotFound,
    Conflict,
}

#[derive(Debug)]
pub struct SessionError {
    pub kind: Kind,
    pub message: String,
}

impl SessionError {
    pub fn not_found(message: impl Into<String>) -> SessionError {
        SessionError::new(Kind::NotFound, message)
    }

    fn new(kind: Kind, message: impl Into<String>) -> SessionError {
        SessionError {
            kind,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for SessionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<CorpusError> for SessionError {
    fn from(e: CorpusError) -> Self {
        let kind = match e {
            CorpusError::UnknownId(_) | CorpusError::MissingId(_) => Kind::NotFound,
            CorpusError::NothingToUndo | CorpusError::SplitFrozen | CorpusError::DuplicateId(_) => {
                Kind::Conflict
            }
            _ => Kind::BadRequest,
        };
        SessionError::new(kind, e.to_string())
    }
}

impl From<ReviewError> for SessionError {
    fn from(e: ReviewError) -> Self {
        SessionError::new(Kind::BadRequest, e.to_string())
    }
}

impl From<AutofixError> for SessionError {
    fn from(e: AutofixError) -> Self {
        let kind = match e {
            AutofixError::NoContentTokens => Kind::Conflict,
            _ => Kind::BadRequest,
        };
        SessionError::new(kind, e.to_string())
    }
}

impl From<SplitError> for SessionError {
    fn from(e: SplitError) -> Self {
        let kind = match e {
            SplitError::Corpus(c) => return c.into(),
            SplitError::UnknownId(_) => Kind::NotFound,
            SplitError::UnsatisfiableConstraints { .. } | SplitError::EmptyDataset => Kind::Conflict,
            _ => Kind::BadRequest,
        };
        SessionError::new(kind, e.to_string())
    }
}

type Result<T> = std::result::Result<T, SessionError>;

/// A worker's draft as posted to the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draft {
    #[serde(default)]
    pub id: Option<String>,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    #[serde(default)]
    pub annotator_id: Option<String>,
}

impl Draft {
    pub fn into_sample(self, fallback_id: String) -> Sample {
        Sample {
            id: self.id.unwrap_or(fallback_id),
            premise: self.premise,
            hypothesis: self.hypothesis,
            label: self.label,
            annotator_id: self.annotator_id,
            split: Default::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub accepted: usize,
    pub rejected: usize,
    /// Accepted only after an automatic fix.
    pub autofixed: usize,
}

impl Tally {
    pub fn reviewed(&self) -> usize {
        self.accepted + self.rejected + self.autofixed
    }

    /// Share of reviewed samples accepted as written.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let n = self.reviewed();
        (n > 0).then(|| self.accepted as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Accepted,
    Rejected,
    Autofixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionEvent {
    pub sample_id: String,
    pub decision: Decision,
    /// Session generation at which the decision was recorded.
    pub generation: u64,
}

/// Pie, line and rank data for one annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorStats {
    pub annotator_id: String,
    pub submitted: usize,
    pub pending: usize,
    pub tally: Tally,
    pub acceptance_rate: Option<f64>,
    /// Running acceptance rate after each decision, oldest first.
    pub history: Vec<f64>,
    /// Acceptance rates of every annotator with at least one decision,
    /// for the rank box plot.
    pub cohort_rates: Vec<f64>,
    /// 1-based position by acceptance rate, highest first.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub dataset: Dataset,
    pub config: Config,
    pub provider: SimilarityProvider,
    pub lexicon: SynonymLexicon,
    /// Bumped on every successful mutation.
    pub generation: u64,
    pub pending: Vec<String>,
    pub autofixed: BTreeSet<String>,
    pub submitted: BTreeMap<String, usize>,
    pub tallies: BTreeMap<String, Tally>,
    pub events: BTreeMap<String, Vec<DecisionEvent>>,
    pub last_split: Option<SplitAssignment>,
    next_id: usize,
}

fn annotator_of(s: &Sample) -> String {
    s.annotator_id.clone().unwrap_or_else(|| "anonymous".into())
}

impl Session {
    pub fn new(dataset: Dataset, config: Config, provider: SimilarityProvider, lexicon: SynonymLexicon) -> Session {
        let mut submitted = BTreeMap::new();
        for s in dataset.samples() {
            if let Some(a) = &s.annotator_id {
                submitted.entry(a.clone()).or_insert(0);
            }
        }
        Session {
            dataset,
            config,
            provider,
            lexicon,
            generation: 0,
            pending: Vec::new(),
            autofixed: BTreeSet::new(),
            submitted,
            tallies: BTreeMap::new(),
            events: BTreeMap::new(),
            last_split: None,
            next_id: 1,
        }
    }

    fn fresh_id(&mut self) -> String {
        loop {
            let id = format!("u{:04}", self.next_id);
            self.next_id += 1;
            if !self.dataset.contains(&id) {
                return id;
            }
        }
    }

    fn bump(&mut self) {
        self.generation += 1;
    }

    /// Flag panel and dataset impact for a draft; no state change.
    pub fn review(&self, draft: Draft) -> Result<Review> {
        let sample = draft.into_sample("draft".into());
        sample.validate()?;
        Ok(review_sample(
            &self.dataset,
            &sample,
            &self.provider,
            &self.config.params,
            &self.config.bands,
        )?)
    }

    /// Adds the draft as a trial sample and queues it for analyst review.
    pub fn submit(&mut self, draft: Draft) -> Result<Sample> {
        let id = match &draft.id {
            Some(id) => id.clone(),
            None => self.fresh_id(),
        };
        let sample = draft.into_sample(id);
        self.dataset = self.dataset.add_trial_sample(sample.clone())?;
        self.pending.push(sample.id.clone());
        *self.submitted.entry(annotator_of(&sample)).or_default() += 1;
        self.bump();
        Ok(sample)
    }

    fn sample(&self, id: &str) -> Result<&Sample> {
        self.dataset
            .get(id)
            .ok_or_else(|| SessionError::new(Kind::NotFound, format!("unknown sample id {id:?}")))
    }

    pub fn next_pending(&self) -> Option<&Sample> {
        self.pending.first().and_then(|id| self.dataset.get(id))
    }

    /// Rewrites the hypothesis of a stored sample in place.
    pub fn autofix(&mut self, id: &str, max_edits: Option<usize>) -> Result<(Sample, FixTrace)> {
        let sample = self.sample(id)?.clone();
        let (fixed, trace) = autofix(
            &sample,
            &self.dataset,
            &self.provider,
            &self.config.params,
            &self.config.bands,
            &self.lexicon,
            max_edits,
        )?;
        if !trace.edits.is_empty() {
            self.dataset = self.dataset.replace_sample(fixed.clone())?;
            self.autofixed.insert(id.to_string());
        }
        self.bump();
        Ok((fixed, trace))
    }

    fn take_pending(&mut self, id: &str) -> Result<()> {
        self.sample(id)?;
        let pos = self
            .pending
            .iter()
            .position(|p| p == id)
            .ok_or_else(|| SessionError::new(Kind::Conflict, format!("sample {id:?} is not pending review")))?;
        self.pending.remove(pos);
        Ok(())
    }

    fn record(&mut self, sample: &Sample, decision: Decision) {
        let who = annotator_of(sample);
        let tally = self.tallies.entry(who.clone()).or_default();
        match decision {
            Decision::Accepted => tally.accepted += 1,
            Decision::Rejected => tally.rejected += 1,
            Decision::Autofixed => tally.autofixed += 1,
        }
        self.events.entry(who).or_default().push(DecisionEvent {
            sample_id: sample.id.clone(),
            decision,
            generation: self.generation + 1,
        });
        self.bump();
    }

    /// Accepts a pending sample. Hypotheses with fewer than three content
    /// words cannot be accepted.
    pub fn accept(&mut self, id: &str) -> Result<Decision> {
        let sample = self.sample(id)?.clone();
        let content = content_tokens(&tokenize(&sample.hypothesis)).len();
        if content < MIN_ACCEPT_CONTENT_WORDS {
            return Err(SessionError::new(
                Kind::Conflict,
                format!(
                    "hypothesis of {id:?} has {content} content words; at least {MIN_ACCEPT_CONTENT_WORDS} are required"
                ),
            ));
        }
        self.take_pending(id)?;
        let decision = if self.autofixed.contains(id) {
            Decision::Autofixed
        } else {
            Decision::Accepted
        };
        self.record(&sample, decision);
        Ok(decision)
    }

    /// Rejects a pending sample and drops it from the dataset.
    pub fn reject(&mut self, id: &str) -> Result<()> {
        let sample = self.sample(id)?.clone();
        self.take_pending(id)?;
        self.dataset = self.dataset.remove_sample(id)?;
        self.autofixed.remove(id);
        self.record(&sample, Decision::Rejected);
        Ok(())
    }

    pub fn randomize_split(&mut self, seed: u64, ratios: Ratios) -> Result<SplitAssignment> {
        if self.dataset.is_split_frozen() {
            return Err(CorpusError::SplitFrozen.into());
        }
        let assignment = randomize_split(&self.dataset, seed, ratios)?;
        self.dataset = self.dataset.apply_splits(&assignment.assignments)?;
        self.last_split = Some(assignment.clone());
        self.bump();
        Ok(assignment)
    }

    pub fn undo_split(&mut self) -> Result<()> {
        self.dataset = self.dataset.undo_split()?;
        self.last_split = None;
        self.bump();
        Ok(())
    }

    pub fn save_split(&mut self) -> Result<()> {
        if self.dataset.is_split_frozen() {
            return Err(SessionError::new(Kind::Conflict, "split is already saved"));
        }
        self.dataset = self.dataset.save_split();
        self.bump();
        Ok(())
    }

    /// Shrinks the green bands that flagged the error samples as good.
    pub fn retune(&mut self, error_ids: &BTreeSet<String>, margin: f64, factor: f64) -> Result<RetuneOutcome> {
        let reports = per_sample_values(&self.dataset, &self.provider, &self.config.params)?;
        let outcome = retune_from_errors(error_ids, &reports, &self.config.bands, margin, factor)?;
        self.config.bands = outcome.bands.clone();
        self.bump();
        Ok(outcome)
    }

    fn rate(&self, who: &str) -> Option<f64> {
        self.tallies.get(who).and_then(Tally::acceptance_rate)
    }

    pub fn annotator_stats(&self, who: &str) -> Result<AnnotatorStats> {
        let known = self.submitted.contains_key(who)
            || self.tallies.contains_key(who)
            || self.dataset.samples().iter().any(|s| s.annotator_id.as_deref() == Some(who));
        if !known {
            return Err(SessionError::new(Kind::NotFound, format!("unknown annotator {who:?}")));
        }
        let tally = self.tallies.get(who).copied().unwrap_or_default();
        let mut history = Vec::new();
        let mut running = Tally::default();
        for e in self.events.get(who).map(Vec::as_slice).unwrap_or_default() {
            match e.decision {
                Decision::Accepted => running.accepted += 1,
                Decision::Rejected => running.rejected += 1,
                Decision::Autofixed => running.autofixed += 1,
            }
            history.push(running.acceptance_rate().unwrap_or(0.0));
        }
        let mut cohort: Vec<(String, f64)> = self
            .tallies
            .keys()
            .filter_map(|a| self.rate(a).map(|r| (a.clone(), r)))
            .collect();
        cohort.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let rank = cohort.iter().position(|(a, _)| a == who).map(|p| p + 1);
        let pending = self
            .pending
            .iter()
            .filter_map(|id| self.dataset.get(id))
            .filter(|s| annotator_of(s) == who)
            .count();
        Ok(AnnotatorStats {
            annotator_id: who.to_string(),
            submitted: self.submitted.get(who).copied().unwrap_or(0),
            pending,
            tally,
            acceptance_rate: tally.acceptance_rate(),
            history,
            cohort_rates: cohort.into_iter().map(|(_, r)| r).collect(),
            rank,
        })
    }

    /// Flag panel for a stored sample measured against the rest.
    pub fn panel_for(&self, id: &str) -> Result<dqi_core::bands::FlagPanel> {
        let s = self.sample(id)?;
        Ok(sample_panel(
            &self.dataset,
            s,
            &self.provider,
            &self.config.params,
            &self.config.bands,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        let ds = Dataset::from_samples(vec![
            Sample::new("a", "Two dogs run through a field.", "Animals are outside.", Label::Entailment)
                .with_annotator("w1"),
            Sample::new("b", "A man plays a guitar on stage.", "The man is sleeping.", Label::Contradiction)
                .with_annotator("w2"),
        ])
        .unwrap();
        Session::new(ds, Config::bundled(), SimilarityProvider::lexical(), SynonymLexicon::bundled().clone())
    }

    fn draft(h: &str) -> Draft {
        Draft {
            id: None,
            premise: "A woman in a red coat walks her dog in the park.".into(),
            hypothesis: h.into(),
            label: Label::Entailment,
            annotator_id: Some("w1".into()),
        }
    }

    #[test]
    fn tallies_sum_to_reviewed() {
        let mut s = session();
        let a = s.submit(draft("A woman walks her dog outside today.")).unwrap();
        let b = s.submit(draft("A woman is outside.")).unwrap();
        assert_eq!(s.pending.len(), 2);
        s.accept(&a.id).unwrap();
        s.reject(&b.id).unwrap();
        let st = s.annotator_stats("w1").unwrap();
        assert_eq!(st.tally.reviewed(), 2);
        assert_eq!(st.history, vec![1.0, 0.5]);
        assert_eq!(st.submitted, 2);
        assert!(!s.dataset.contains(&b.id));
        assert_eq!(s.generation, 4);
    }

    #[test]
    fn short_hypothesis_cannot_be_accepted() {
        let mut s = session();
        let d = s.submit(draft("A woman walks.")).unwrap();
        let err = s.accept(&d.id).unwrap_err();
        assert_eq!(err.kind, Kind::Conflict);
        assert_eq!(s.pending.len(), 1);
        s.reject(&d.id).unwrap();
    }

    #[test]
    fn accept_requires_pending() {
        let mut s = session();
        assert_eq!(s.accept("zz").unwrap_err().kind, Kind::NotFound);
        let err = s.reject("a").unwrap_err();
        assert_eq!(err.kind, Kind::Conflict);
    }

    #[test]
    fn split_undo_and_freeze() {
        let mut s = session();
        assert_eq!(s.undo_split().unwrap_err().kind, Kind::Conflict);
        s.randomize_split(3, Ratios::default()).unwrap();
        s.undo_split().unwrap();
        s.save_split().unwrap();
        assert_eq!(s.randomize_split(3, Ratios::default()).unwrap_err().kind, Kind::Conflict);
    }
}
