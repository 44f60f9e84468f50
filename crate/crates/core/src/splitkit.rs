//! Split randomization, good/bad partition comparison and error-driven band
//! retuning.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bands::{shrink_green, BandError, BandSpec, Color};
use crate::corpus::{Dataset, Partition, PartitionMembership, Sample, Split};
use crate::engine::{compute_all, DqiReport, EngineError, HyperParams, ValueMap};
use crate::review::{sample_values, ReviewError};
use crate::textprims::{tokenize, SimilarityProvider};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("dataset has no samples")]
    EmptyDataset,
    #[error("a group of {group} linked samples exceeds the largest split target of {capacity}")]
    UnsatisfiableConstraints { group: usize, capacity: usize },
    #[error("split ratios must be non-negative with a positive sum")]
    BadRatios,
    #[error("the {0} side of the partition has no samples")]
    EmptySide(&'static str),
    #[error("error set is empty")]
    NoErrors,
    #[error("no per-sample values for id {0:?}")]
    UnknownId(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Band(#[from] BandError),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for Ratios {
    fn default() -> Self {
        Ratios {
            train: 0.7,
            dev: 0.1,
            test: 0.2,
        }
    }
}

impl Ratios {
    /// Target sizes for `n` samples: train and dev rounded, test takes the
    /// remainder.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn targets(&self, n: usize) -> Result<[usize; 3], SplitError> {
        let sum = self.train + self.dev + self.test;
        if [self.train, self.dev, self.test].iter().any(|r| !(*r >= 0.0)) || !(sum > 0.0) {
            return Err(SplitError::BadRatios);
        }
        let share = |r: f64| ((r / sum) * n as f64).round() as usize;
        let train = share(self.train).min(n);
        let dev = share(self.dev).min(n - train);
        Ok([train, dev, n - train - dev])
    }
}

/// Allowed gap between achieved and target split sizes.
pub fn tolerance(n: usize) -> f64 {
    (0.02 * n as f64).max(5.0)
}

const SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub annotator_disjoint: bool,
    pub premise_grouped: bool,
    pub sizes: [usize; 3],
    pub targets: [usize; 3],
    pub achieved_ratios: [f64; 3],
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub assignments: BTreeMap<String, Split>,
    pub report: ConstraintReport,
}

impl SplitAssignment {
    /// `id,split` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "split"]).expect("in-memory write");
        for (id, split) in &self.assignments {
            w.write_record([id.as_str(), split.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

pub fn normalized_premise(s: &Sample) -> String {
    tokenize(&s.premise).join(" ")
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Sample indices linked by a shared annotator or a shared premise, in
/// order of first appearance.
pub fn linked_groups(samples: &[Sample]) -> Vec<Vec<usize>> {
    let mut uf = UnionFind((0..samples.len()).collect());
    let mut by_annotator: HashMap<&str, usize> = HashMap::new();
    let mut by_premise: HashMap<String, usize> = HashMap::new();
    for (i, s) in samples.iter().enumerate() {
        if let Some(a) = s.annotator_id.as_deref() {
            let first = *by_annotator.entry(a).or_insert(i);
            uf.union(first, i);
        }
        let first = *by_premise.entry(normalized_premise(s)).or_insert(i);
        uf.union(first, i);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..samples.len() {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Checks both grouping constraints on a set of tags.
pub fn check_constraints(samples: &[Sample], split_of: impl Fn(&Sample) -> Split) -> (bool, bool) {
    let mut annotator: HashMap<&str, Split> = HashMap::new();
    let mut premise: HashMap<String, Split> = HashMap::new();
    let (mut a_ok, mut p_ok) = (true, true);
    for s in samples {
        let split = split_of(s);
        if let Some(a) = s.annotator_id.as_deref() {
            a_ok &= *annotator.entry(a).or_insert(split) == split;
        }
        p_ok &= *premise.entry(normalized_premise(s)).or_insert(split) == split;
    }
    (a_ok, p_ok)
}

/// Deterministic grouped split: groups are shuffled by `seed`, placed
/// largest first, each into the split with the most room left.
pub fn randomize_split(dataset: &Dataset, seed: u64, ratios: Ratios) -> Result<SplitAssignment, SplitError> {
    let samples = dataset.samples();
    if samples.is_empty() {
        return Err(SplitError::EmptyDataset);
    }
    let n = samples.len();
    let targets = ratios.targets(n)?;
    let mut groups = linked_groups(samples);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..groups.len()).rev() {
        let j = rng.random_range(0..=i as u64) as usize;
        groups.swap(i, j);
    }
    groups.sort_by_key(|g| std::cmp::Reverse(g.len()));

    let capacity = *targets.iter().max().unwrap_or(&0);
    if let Some(g) = groups.iter().find(|g| g.len() > capacity) {
        return Err(SplitError::UnsatisfiableConstraints {
            group: g.len(),
            capacity,
        });
    }

    let mut sizes = [0usize; 3];
    let mut assignments = BTreeMap::new();
    for g in &groups {
        let room = |k: usize| targets[k] as i64 - sizes[k] as i64;
        let mut best = 0;
        for k in 1..3 {
            if room(k) > room(best) {
                best = k;
            }
        }
        sizes[best] += g.len();
        for &i in g {
            assignments.insert(samples[i].id.clone(), SPLITS[best]);
        }
    }

    let (annotator_disjoint, premise_grouped) = check_constraints(samples, |s| assignments[&s.id]);
    let tol = tolerance(n);
    let report = ConstraintReport {
        annotator_disjoint,
        premise_grouped,
        sizes,
        targets,
        achieved_ratios: sizes.map(|s| s as f64 / n as f64),
        within_tolerance: (0..3).all(|k| (sizes[k] as f64 - targets[k] as f64).abs() <= tol),
    };
    Ok(SplitAssignment {
        seed,
        assignments,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinnerRow {
    pub component: String,
    pub granularity: String,
    pub term: String,
    pub good: f64,
    pub bad: f64,
    pub winner: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionComparison {
    pub good: DqiReport,
    pub bad: DqiReport,
    pub winners: Vec<WinnerRow>,
}

impl PartitionComparison {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["component", "granularity", "term", "good", "bad", "winner"])
            .expect("in-memory write");
        for r in &self.winners {
            w.write_record([
                r.component.clone(),
                r.granularity.clone(),
                r.term.clone(),
                format_value(r.good),
                format_value(r.bad),
                r.winner.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn row(&self, component: &str, granularity: &str, term: &str) -> Option<&WinnerRow> {
        self.winners
            .iter()
            .find(|r| r.component == component && r.granularity == granularity && r.term == term)
    }
}

/// Shortest round-trip text of a value; used by every CSV writer.
pub fn format_value(v: f64) -> String {
    format!("{v:?}")
}

fn winner_rows(good: &DqiReport, bad: &DqiReport) -> Vec<WinnerRow> {
    let g_rows = good.rows();
    let b_rows = bad.rows();
    let key = |r: &(String, String, String, f64)| (r.0.clone(), r.1.clone(), r.2.clone());
    let mut merged: BTreeMap<(String, String, String), (f64, f64)> = BTreeMap::new();
    for r in &g_rows {
        merged.entry(key(r)).or_insert((f64::NAN, f64::NAN)).0 = r.3;
    }
    for r in &b_rows {
        merged.entry(key(r)).or_insert((f64::NAN, f64::NAN)).1 = r.3;
    }
    merged
        .into_iter()
        .map(|((component, granularity, term), (g, b))| {
            let winner = if g > b {
                "good"
            } else if b > g {
                "bad"
            } else if g == b {
                "tie"
            } else {
                "n/a"
            };
            WinnerRow {
                component,
                granularity,
                term,
                good: g,
                bad: b,
                winner: winner.into(),
            }
        })
        .collect()
}

/// Scores the good and bad sides separately and tabulates which side is
/// higher on every term.
pub fn compare_partitions(
    dataset: &Dataset,
    membership: &PartitionMembership,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<PartitionComparison, SplitError> {
    let side = |p: Partition| dataset.subset(|s| membership.get(&s.id) == Some(p));
    let good = side(Partition::Good)?;
    let bad = side(Partition::Bad)?;
    if good.is_empty() {
        return Err(SplitError::EmptySide("good"));
    }
    if bad.is_empty() {
        return Err(SplitError::EmptySide("bad"));
    }
    let good = compute_all(&good, provider, params)?;
    let bad = compute_all(&bad, provider, params)?;
    let winners = winner_rows(&good, &bad);
    Ok(PartitionComparison { good, bad, winners })
}

/// Cold-start values of every sample against the rest of the dataset.
pub fn per_sample_values(
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
) -> Result<BTreeMap<String, ValueMap>, SplitError> {
    dataset
        .samples()
        .iter()
        .map(|s| Ok((s.id.clone(), sample_values(dataset, s, provider, params)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetuneOutcome {
    pub sensitive: BTreeSet<String>,
    /// Green share per band key among error samples and among all samples.
    pub green_share: BTreeMap<String, (f64, f64)>,
    pub bands: BandSpec,
}

pub const DEFAULT_SENSITIVITY_MARGIN: f64 = 0.2;
pub const DEFAULT_SHRINK: f64 = 0.2;

/// Marks a band key sensitive when the share of green among error samples
/// beats the overall share by at least `margin`, then shrinks those green
/// bands by `factor`. With nothing sensitive the bands come back as is.
pub fn retune_from_errors(
    error_ids: &BTreeSet<String>,
    reports: &BTreeMap<String, ValueMap>,
    bands: &BandSpec,
    margin: f64,
    factor: f64,
) -> Result<RetuneOutcome, SplitError> {
    if error_ids.is_empty() {
        return Err(SplitError::NoErrors);
    }
    if let Some(id) = error_ids.iter().find(|id| !reports.contains_key(*id)) {
        return Err(SplitError::UnknownId(id.clone()));
    }
    let share = |ids: &mut dyn Iterator<Item = &String>, key: &str, band: &crate::bands::Band| {
        let colors: Vec<Color> = ids
            .filter_map(|id| reports.get(id).and_then(|m| m.get(key)))
            .map(|v| band.color(*v))
            .collect();
        if colors.is_empty() {
            0.0
        } else {
            colors.iter().filter(|c| **c == Color::Green).count() as f64 / colors.len() as f64
        }
    };
    let mut sensitive = BTreeSet::new();
    let mut green_share = BTreeMap::new();
    for (key, band) in &bands.entries {
        let errs = share(&mut error_ids.iter(), key, band);
        let all = share(&mut reports.keys(), key, band);
        green_share.insert(key.clone(), (errs, all));
        if errs - all >= margin - 1e-12 {
            sensitive.insert(key.clone());
        }
    }
    let bands = if sensitive.is_empty() {
        bands.clone()
    } else {
        shrink_green(bands, &sensitive, factor)?
    };
    Ok(RetuneOutcome {
        sensitive,
        green_share,
        bands,
    })
}

/// File name for a saved band generation.
pub fn generation_file_name(generation: u32) -> String {
    format!("bands_B{generation}.toml")
}
