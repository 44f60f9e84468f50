//! NLI sample model, dataset snapshots and ingestion.
//!
//! A [`Dataset`] is an immutable value. Every mutating operation returns a
//! new snapshot and leaves its input untouched; trial additions keep a link
//! to their predecessor so they can be undone.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("unknown label {label:?} at line {line}")]
    UnknownLabel { line: usize, label: String },
    #[error("dataset file is empty")]
    EmptyFile,
    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("unknown sample id {0:?}")]
    UnknownId(String),
    #[error("partition file does not map sample id {0:?}")]
    MissingId(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("the split is frozen")]
    SplitFrozen,
    #[error("i/o error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Neutral,
    Contradiction,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Neutral => "neutral",
            Label::Contradiction => "contradiction",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "entailment" => Ok(Label::Entailment),
            "neutral" => Ok(Label::Neutral),
            "contradiction" => Ok(Label::Contradiction),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "" | "unassigned" => Ok(Split::Unassigned),
            _ => Err(()),
        }
    }
}

/// One premise/hypothesis record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator_id: Option<String>,
    #[serde(default)]
    pub split: Split,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        premise: impl Into<String>,
        hypothesis: impl Into<String>,
        label: Label,
    ) -> Self {
        Sample {
            id: id.into(),
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            label,
            annotator_id: None,
            split: Split::Unassigned,
        }
    }

    pub fn with_annotator(mut self, annotator: impl Into<String>) -> Self {
        self.annotator_id = Some(annotator.into());
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.premise.trim().is_empty() {
            return Err(CorpusError::InvalidSample(format!("{}: empty premise", self.id)));
        }
        if self.hypothesis.trim().is_empty() {
            return Err(CorpusError::InvalidSample(format!("{}: empty hypothesis", self.id)));
        }
        Ok(())
    }
}

/// An immutable snapshot of samples.
///
/// `generation` grows with every mutation along a history chain. Undo hands
/// back the stored predecessor, so its generation is the predecessor's.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Arc<Vec<Sample>>,
    generation: u64,
    split_frozen: bool,
    trial_parent: Option<Arc<Dataset>>,
    split_undo: Option<Arc<Vec<Split>>>,
}

impl Dataset {
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for s in &samples {
            s.validate()?;
            if !seen.insert(s.id.as_str()) {
                return Err(CorpusError::DuplicateId(s.id.clone()));
            }
        }
        Ok(Dataset {
            samples: Arc::new(samples),
            generation: 0,
            split_frozen: false,
            trial_parent: None,
            split_undo: None,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of sentences, two per sample.
    pub fn sentence_count(&self) -> usize {
        2 * self.samples.len()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn is_split_frozen(&self) -> bool {
        self.split_frozen
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn can_undo_trial(&self) -> bool {
        self.trial_parent.is_some()
    }

    pub fn can_undo_split(&self) -> bool {
        self.split_undo.is_some()
    }

    fn derive(&self, samples: Vec<Sample>) -> Dataset {
        Dataset {
            samples: Arc::new(samples),
            generation: self.generation + 1,
            split_frozen: self.split_frozen,
            trial_parent: self.trial_parent.clone(),
            split_undo: self.split_undo.clone(),
        }
    }

    /// Appends `sample` as an undoable trial addition.
    pub fn add_trial_sample(&self, sample: Sample) -> Result<Dataset> {
        sample.validate()?;
        if self.contains(&sample.id) {
            return Err(CorpusError::DuplicateId(sample.id));
        }
        let mut samples = self.samples.as_ref().clone();
        samples.push(sample);
        let mut next = self.derive(samples);
        next.trial_parent = Some(Arc::new(self.clone()));
        Ok(next)
    }

    pub fn undo_trial(&self) -> Result<Dataset> {
        self.trial_parent
            .as_deref()
            .cloned()
            .ok_or(CorpusError::NothingToUndo)
    }

    /// Replaces the sample carrying the same id. Not undoable.
    pub fn replace_sample(&self, sample: Sample) -> Result<Dataset> {
        sample.validate()?;
        let pos = self
            .samples
            .iter()
            .position(|s| s.id == sample.id)
            .ok_or_else(|| CorpusError::UnknownId(sample.id.clone()))?;
        let mut samples = self.samples.as_ref().clone();
        samples[pos] = sample;
        Ok(self.derive(samples))
    }

    pub fn remove_sample(&self, id: &str) -> Result<Dataset> {
        let pos = self
            .samples
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| CorpusError::UnknownId(id.to_string()))?;
        let mut samples = self.samples.as_ref().clone();
        samples.remove(pos);
        let mut next = self.derive(samples);
        next.trial_parent = None;
        Ok(next)
    }

    /// Retags splits from `assignment`. Trial history is cleared: once the
    /// split is reshuffled a trial sample can no longer be taken back out.
    pub fn apply_splits(&self, assignment: &BTreeMap<String, Split>) -> Result<Dataset> {
        if self.split_frozen {
            return Err(CorpusError::SplitFrozen);
        }
        let previous: Vec<Split> = self.samples.iter().map(|s| s.split).collect();
        let mut samples = self.samples.as_ref().clone();
        for s in &mut samples {
            s.split = *assignment
                .get(&s.id)
                .ok_or_else(|| CorpusError::MissingId(s.id.clone()))?;
        }
        let mut next = self.derive(samples);
        next.trial_parent = None;
        next.split_undo = Some(Arc::new(previous));
        Ok(next)
    }

    /// Restores the split tags in force before the latest randomization.
    pub fn undo_split(&self) -> Result<Dataset> {
        let previous = self.split_undo.as_ref().ok_or(CorpusError::NothingToUndo)?;
        let mut samples = self.samples.as_ref().clone();
        for (s, split) in samples.iter_mut().zip(previous.iter()) {
            s.split = *split;
        }
        let mut next = self.derive(samples);
        next.split_undo = None;
        Ok(next)
    }

    /// Freezes the current split tags.
    pub fn save_split(&self) -> Dataset {
        let mut next = self.derive(self.samples.as_ref().clone());
        next.split_frozen = true;
        next.split_undo = None;
        next
    }

    /// A fresh snapshot holding the samples whose ids satisfy `keep`.
    pub fn subset(&self, mut keep: impl FnMut(&Sample) -> bool) -> Result<Dataset> {
        Dataset::from_samples(self.samples.iter().filter(|s| keep(s)).cloned().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Tsv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: Option<String>,
    premise: Option<String>,
    hypothesis: Option<String>,
    label: Option<String>,
    annotator_id: Option<String>,
    split: Option<String>,
}

fn auto_id(index: usize) -> String {
    format!("{index:06}")
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: Format) -> Result<Dataset> {
    let samples = match format {
        Format::Jsonl => parse_jsonl(text)?,
        Format::Tsv => parse_tsv(text)?,
    };
    if samples.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Dataset::from_samples(samples)
}

#[allow(clippy::too_many_arguments)]
fn build_sample(
    line: usize,
    index: usize,
    id: Option<String>,
    premise: Option<String>,
    hypothesis: Option<String>,
    label: Option<String>,
    annotator: Option<String>,
    split: Option<String>,
) -> Result<Sample> {
    let malformed = |reason: &str| CorpusError::MalformedRecord {
        line,
        reason: reason.to_string(),
    };
    let premise = premise.filter(|p| !p.trim().is_empty()).ok_or_else(|| malformed("missing premise"))?;
    let hypothesis = hypothesis
        .filter(|h| !h.trim().is_empty())
        .ok_or_else(|| malformed("missing hypothesis"))?;
    let raw_label = label.ok_or_else(|| malformed("missing label"))?;
    let label = raw_label.parse::<Label>().map_err(|_| CorpusError::UnknownLabel {
        line,
        label: raw_label.clone(),
    })?;
    let split = match split {
        None => Split::Unassigned,
        Some(s) => s.parse().map_err(|_| malformed(&format!("unknown split {s:?}")))?,
    };
    Ok(Sample {
        id: id.filter(|i| !i.is_empty()).unwrap_or_else(|| auto_id(index)),
        premise,
        hypothesis,
        label,
        annotator_id: annotator.filter(|a| !a.is_empty()),
        split,
    })
}

fn parse_jsonl(text: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = n + 1;
        let rec: JsonRecord = serde_json::from_str(raw).map_err(|e| CorpusError::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        let index = out.len();
        out.push(build_sample(
            line,
            index,
            rec.id,
            rec.premise,
            rec.hypothesis,
            rec.label,
            rec.annotator_id,
            rec.split,
        )?);
    }
    Ok(out)
}

fn parse_tsv(text: &str) -> Result<Vec<Sample>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let line = n + 1;
        let cols: Vec<&str> = raw.split('\t').collect();
        if out.is_empty() && cols.len() >= 3 && cols[0] == "premise" && cols[1] == "hypothesis" {
            continue;
        }
        if cols.len() < 3 || cols.len() > 5 {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: format!("expected 3 to 5 tab-separated columns, found {}", cols.len()),
            });
        }
        let col = |i: usize| cols.get(i).map(|c| c.to_string());
        let index = out.len();
        out.push(build_sample(line, index, None, col(0), col(1), col(2), col(3), col(4))?);
    }
    Ok(out)
}

pub fn write_tsv(dataset: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    for s in dataset.samples() {
        let fields = [
            s.premise.as_str(),
            s.hypothesis.as_str(),
            s.label.as_str(),
            s.annotator_id.as_deref().unwrap_or(""),
            s.split.as_str(),
        ];
        if fields.iter().any(|f| f.contains(['\t', '\n', '\r'])) {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("sample {} contains a tab or newline", s.id),
            ));
        }
        writeln!(out, "{}", fields.join("\t"))?;
    }
    Ok(())
}

pub fn write_jsonl(dataset: &Dataset, mut out: impl Write) -> std::io::Result<()> {
    for s in dataset.samples() {
        serde_json::to_writer(&mut out, s)?;
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Good,
    Bad,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Good => "good",
            Partition::Bad => "bad",
        }
    }
}

/// Total mapping from sample id to good/bad.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMembership {
    map: BTreeMap<String, Partition>,
}

impl PartitionMembership {
    /// Checks totality against `dataset`.
    pub fn new(map: BTreeMap<String, Partition>, dataset: &Dataset) -> Result<Self> {
        if let Some(unknown) = map.keys().find(|id| !dataset.contains(id)) {
            return Err(CorpusError::UnknownId(unknown.clone()));
        }
        if let Some(missing) = dataset.samples().iter().find(|s| !map.contains_key(&s.id)) {
            return Err(CorpusError::MissingId(missing.id.clone()));
        }
        Ok(PartitionMembership { map })
    }

    pub fn get(&self, id: &str) -> Option<Partition> {
        self.map.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Partition)> {
        self.map.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn load_partition(path: &Path, dataset: &Dataset) -> Result<PartitionMembership> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_partition(&text, dataset)
}

pub fn parse_partition(text: &str, dataset: &Dataset) -> Result<PartitionMembership> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut map = BTreeMap::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 1;
        let rec = rec.map_err(|e| CorpusError::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(CorpusError::MalformedRecord {
                line,
                reason: format!("expected 2 columns, found {}", rec.len()),
            });
        }
        if line == 1 && rec[0].eq_ignore_ascii_case("id") {
            continue;
        }
        let part = match rec[1].to_ascii_lowercase().as_str() {
            "good" => Partition::Good,
            "bad" => Partition::Bad,
            other => {
                return Err(CorpusError::MalformedRecord {
                    line,
                    reason: format!("unknown partition {other:?}"),
                })
            }
        };
        map.insert(rec[0].to_string(), part);
    }
    PartitionMembership::new(map, dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JSONL: &str = r#"{"premise":"A man smiles.","hypothesis":"A man is happy.","label":"entailment"}
{"premise":"A dog runs.","hypothesis":"A cat sleeps.","label":"contradiction","annotator_id":"w1","split":"train"}
{"premise":"Kids play.","hypothesis":"Children are outside.","label":"neutral"}
"#;

    fn sample(id: &str) -> Sample {
        Sample::new(id, "A man smiles.", "A man is happy.", Label::Entailment)
    }

    #[test]
    fn jsonl_counts() {
        let ds = parse_dataset(JSONL, Format::Jsonl).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.sentence_count(), 6);
        assert_eq!(ds.samples()[0].id, "000000");
        assert_eq!(ds.samples()[1].annotator_id.as_deref(), Some("w1"));
        assert_eq!(ds.samples()[1].split, Split::Train);
    }

    #[test]
    fn unknown_label_rejected() {
        let text = r#"{"premise":"a","hypothesis":"b","label":"maybe"}"#;
        match parse_dataset(text, Format::Jsonl) {
            Err(CorpusError::UnknownLabel { line: 1, label }) => assert_eq!(label, "maybe"),
            other => panic!("unexpected {other:?}"),
        }
        let text = "a\tb\t-\n";
        assert!(matches!(
            parse_dataset(text, Format::Tsv),
            Err(CorpusError::UnknownLabel { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_and_empty() {
        assert!(matches!(parse_dataset("", Format::Jsonl), Err(CorpusError::EmptyFile)));
        assert!(matches!(
            parse_dataset("{not json}\n", Format::Jsonl),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("only\tone\n", Format::Tsv),
            Err(CorpusError::MalformedRecord { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("  \tb\tneutral\n", Format::Tsv),
            Err(CorpusError::MalformedRecord { .. })
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let text = "premise\thypothesis\tlabel\tannotator_id\tsplit\n\
                    A man smiles.\tA man is happy.\tentailment\tw1\ttrain\n\
                    A dog runs.\tA cat sleeps.\tcontradiction\t\tdev\n\
                    Kids play.\tChildren are outside.\tneutral\tw2\t\n\
                    Two women talk.\tPeople chat.\tentailment\tw1\ttest\n\
                    A bird sings.\tThe bird is silent.\tcontradiction\tw3\tunassigned\n";
        let first = parse_dataset(text, Format::Tsv).unwrap();
        assert_eq!(first.len(), 5);
        let mut buf = Vec::new();
        write_tsv(&first, &mut buf).unwrap();
        let second = parse_dataset(std::str::from_utf8(&buf).unwrap(), Format::Tsv).unwrap();
        assert_eq!(first.samples(), second.samples());
    }

    #[test]
    fn trial_add_and_undo() {
        let base = Dataset::from_samples((0..100).map(|i| sample(&format!("s{i}"))).collect()).unwrap();
        let snapshot = base.clone();
        let added = base.add_trial_sample(sample("new")).unwrap();
        assert_eq!(added.len(), 101);
        assert_eq!(base.len(), 100);
        assert_eq!(base, snapshot);
        assert_eq!(added.generation(), base.generation() + 1);
        assert_eq!(added.undo_trial().unwrap(), base);
        assert!(matches!(base.add_trial_sample(sample("s3")), Err(CorpusError::DuplicateId(_))));
        assert!(matches!(base.undo_trial(), Err(CorpusError::NothingToUndo)));
    }

    #[test]
    fn undo_pops_one_addition() {
        let base = Dataset::from_samples(vec![sample("a")]).unwrap();
        let two = base.add_trial_sample(sample("s1")).unwrap().add_trial_sample(sample("s2")).unwrap();
        let one = two.undo_trial().unwrap();
        let ids: Vec<_> = one.samples().iter().map(|s| s.id.as_str()).collect();
        assert_eq!(ids, ["a", "s1"]);
    }

    #[test]
    fn split_undo_and_freeze() {
        let base = Dataset::from_samples(vec![sample("a"), sample("b")]).unwrap();
        let mut m = BTreeMap::new();
        m.insert("a".to_string(), Split::Train);
        m.insert("b".to_string(), Split::Test);
        let split = base.apply_splits(&m).unwrap();
        assert_eq!(split.get("b").unwrap().split, Split::Test);
        let undone = split.undo_split().unwrap();
        assert_eq!(undone.samples(), base.samples());
        assert!(matches!(undone.undo_split(), Err(CorpusError::NothingToUndo)));
        let frozen = split.save_split();
        assert!(matches!(frozen.apply_splits(&m), Err(CorpusError::SplitFrozen)));
        let grown = frozen.add_trial_sample(sample("c").with_split(Split::Train)).unwrap();
        assert_eq!(grown.get("b").unwrap().split, Split::Test);
    }

    #[test]
    fn partition_totality() {
        let ds = parse_dataset(JSONL, Format::Jsonl).unwrap();
        let full = parse_partition("000000,good\n000001,bad\n000002,good\n", &ds).unwrap();
        assert_eq!(full.len(), 3);
        assert_eq!(full.get("000001"), Some(Partition::Bad));
        assert!(matches!(
            parse_partition("000000,good\n000001,bad\n", &ds),
            Err(CorpusError::MissingId(id)) if id == "000002"
        ));
        assert!(matches!(
            parse_partition("000000,good\n000001,bad\n000002,good\nzzz,bad\n", &ds),
            Err(CorpusError::UnknownId(id)) if id == "zzz"
        ));
        let with_header = parse_partition("id,partition\n000000,good\n000001,bad\n000002,good\n", &ds);
        assert!(with_header.is_ok());
    }

    #[test]
    fn loading_is_deterministic() {
        let a = parse_dataset(JSONL, Format::Jsonl).unwrap();
        let b = parse_dataset(JSONL, Format::Jsonl).unwrap();
        assert_eq!(a, b);
    }
}
