//! Plot-ready data series for each component view.
//!
//! Every series is a list of keyed points. A point is highlighted when the
//! latest trial sample changed it: it is new, or its values differ from the
//! same series computed without that sample.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Label, Split};
use crate::engine::{
    pair_similarity, sentence_similarity_matrix, word_means, Component, EngineError, Granularity,
    HyperParams, Prepared,
};
use crate::stats::{mean, quantile_sorted, sample_std};
use crate::textprims::{cosine, SimilarityProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub key: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub highlighted: bool,
}

impl Point {
    fn new(key: impl Into<String>, values: Vec<f64>) -> Point {
        Point {
            key: key.into(),
            values,
            label: None,
            highlighted: false,
        }
    }

    fn labeled(mut self, label: impl Into<String>) -> Point {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VizSeries {
    pub component: Component,
    pub granularity: Granularity,
    pub bins: usize,
    /// Sample whose detail views (top-similar, heatmap) are shown.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub focus: Option<String>,
    pub series: BTreeMap<String, Vec<Point>>,
}

impl VizSeries {
    pub fn highlighted(&self) -> impl Iterator<Item = (&str, &Point)> {
        self.series
            .iter()
            .flat_map(|(name, pts)| pts.iter().map(move |p| (name.as_str(), p)))
            .filter(|(_, p)| p.highlighted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VizOptions {
    pub bins: usize,
    pub granularity: Granularity,
    pub focus: Option<String>,
}

impl Default for VizOptions {
    fn default() -> Self {
        VizOptions {
            bins: 10,
            granularity: Granularity::Words,
            focus: None,
        }
    }
}

/// Histogram edges fixed from the current dataset so the before/after
/// comparison bins identically.
#[derive(Debug, Clone, Copy)]
struct Frame {
    length_lo: f64,
    length_hi: f64,
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<Point> {
    let bins = bins.max(1);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values {
        let idx = (((v - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let a = lo + i as f64 * width;
            Point::new(format!("bin{i:03}"), vec![a, a + width, *c as f64])
        })
        .collect()
}

/// Gaussian kernel density on `[0, 1]` with a rule-of-thumb bandwidth.
fn density(values: &[f64], points: usize) -> Vec<Point> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = values.len() as f64;
    let sd = sample_std(values).unwrap_or(0.0);
    let h = if sd > 0.0 { 1.06 * sd * n.powf(-0.2) } else { 0.05 };
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    (0..points)
        .map(|i| {
            let x = i as f64 / (points - 1) as f64;
            let y: f64 = values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>() * norm;
            Point::new(format!("x{i:03}"), vec![x, y])
        })
        .collect()
}

fn five_numbers(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    [0.0, 0.25, 0.5, 0.75, 1.0]
        .iter()
        .map(|q| quantile_sorted(&v, *q).unwrap_or(0.0))
        .collect()
}

fn sentence_keys(prep: &Prepared) -> Vec<String> {
    prep.samples()
        .iter()
        .flat_map(|s| [format!("{}:p", s.id), format!("{}:h", s.id)])
        .collect()
}

fn build(
    component: Component,
    prep: &Prepared,
    provider: &SimilarityProvider,
    params: &HyperParams,
    opts: &VizOptions,
    focus: Option<&str>,
    frame: Frame,
) -> BTreeMap<String, Vec<Point>> {
    let mut out = BTreeMap::new();
    let focus_idx = focus.and_then(|f| prep.samples().iter().position(|s| s.id == f));
    match component {
        Component::C1 => {
            let mut vocab: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
            for (s, t) in prep.samples().iter().zip(&prep.texts) {
                let set = vocab.entry(s.split.as_str()).or_default();
                for w in t.premise.content.iter().chain(&t.hypothesis.content) {
                    set.insert(w);
                }
            }
            let bars = [Split::Train, Split::Dev, Split::Test, Split::Unassigned]
                .iter()
                .map(|sp| {
                    let n = vocab.get(sp.as_str()).map_or(0, BTreeSet::len);
                    Point::new(sp.as_str(), vec![n as f64])
                })
                .collect();
            out.insert("vocabulary".into(), bars);
            let lengths: Vec<f64> = prep.sentences().map(|s| s.len() as f64).collect();
            out.insert(
                "lengths".into(),
                histogram(&lengths, frame.length_lo, frame.length_hi, opts.bins),
            );
        }
        Component::C2 => {
            let table = prep.frequency_table(opts.granularity);
            let pts = table.iter().map(|(u, n)| Point::new(u.clone(), vec![*n as f64])).collect();
            out.insert("frequency".into(), pts);
        }
        Component::C3 => {
            let m = sentence_similarity_matrix(prep);
            let keys = sentence_keys(prep);
            let mut links = Vec::new();
            for i in 0..m.len() {
                for j in (i + 1)..m.len() {
                    if m[i][j] >= params.min_similarity {
                        links.push(Point::new(format!("{}|{}", keys[i], keys[j]), vec![m[i][j]]));
                    }
                }
            }
            out.insert("links".into(), links);
            let mut top = Vec::new();
            if let Some(f) = focus_idx {
                for l in [2 * f, 2 * f + 1] {
                    let mut others: Vec<(usize, f64)> =
                        (0..m.len()).filter(|j| *j != l).map(|j| (j, m[l][j])).collect();
                    others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                    for (rank, (j, s)) in others.into_iter().take(10).enumerate() {
                        top.push(Point::new(format!("{}>{}", keys[l], keys[j]), vec![s, rank as f64 + 1.0]));
                    }
                }
            }
            out.insert("top_similar".into(), top);
        }
        Component::C4 => {
            let tree = prep
                .samples()
                .iter()
                .zip(&prep.texts)
                .map(|(s, t)| {
                    let mut means = word_means(&t.premise.content, provider);
                    means.extend(word_means(&t.hypothesis.content, provider));
                    Point::new(s.id.clone(), vec![mean(&means).unwrap_or(0.0)])
                })
                .collect();
            out.insert("treemap".into(), tree);
            let mut heat = Vec::new();
            if let Some(f) = focus_idx {
                let words = &prep.texts[f].hypothesis.content;
                for (i, a) in words.iter().enumerate() {
                    for (j, b) in words.iter().enumerate() {
                        heat.push(
                            Point::new(format!("{i:02}|{j:02}"), vec![provider.word_similarity(a, b)])
                                .labeled(format!("{a}|{b}")),
                        );
                    }
                }
            }
            out.insert("heatmap".into(), heat);
        }
        Component::C5 => {
            let sims: Vec<f64> = prep.texts.iter().map(|t| pair_similarity(prep, t)).collect();
            out.insert("histogram".into(), histogram(&sims, 0.0, 1.0, opts.bins));
            out.insert("density".into(), density(&sims, 50));
        }
        Component::C6 => {
            let table = prep.label_table(opts.granularity);
            let mut pts = Vec::new();
            let mut summary = Vec::new();
            for label in Label::ALL {
                let li = label.index();
                let counts: Vec<f64> = table
                    .iter()
                    .filter(|(_, c)| c[li] > 0)
                    .map(|(u, c)| {
                        pts.push(Point::new(format!("{label}|{u}"), vec![c[li] as f64]));
                        c[li] as f64
                    })
                    .collect();
                if !counts.is_empty() {
                    summary.push(Point::new(label.as_str(), five_numbers(counts)));
                }
            }
            out.insert("points".into(), pts);
            out.insert("summary".into(), summary);
        }
        Component::C7 => {
            let vectors: Vec<_> = prep
                .texts
                .iter()
                .map(|t| prep.stats.vectorize(&t.joined_tokens()))
                .collect();
            let idx = |sp: Split| -> Vec<usize> {
                prep.samples()
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.split == sp)
                    .map(|(i, _)| i)
                    .collect()
            };
            let train = idx(Split::Train);
            let mut pairs = Vec::new();
            if !train.is_empty() {
                for t in idx(Split::Test) {
                    let mut best = (train[0], f64::NEG_INFINITY);
                    for &tr in &train {
                        let s = cosine(&vectors[t], &vectors[tr]);
                        if s > best.1 {
                            best = (tr, s);
                        }
                    }
                    pairs.push(
                        Point::new(prep.samples()[t].id.clone(), vec![best.1])
                            .labeled(prep.samples()[best.0].id.clone()),
                    );
                }
            }
            out.insert("pairs".into(), pairs);
        }
    }
    out
}

fn normalized_sigma(points: &[Point]) -> f64 {
    let u = points.len() as f64;
    let v: Vec<f64> = points.iter().map(|p| p.values[0] / u).collect();
    sample_std(&v).unwrap_or(0.0)
}

/// Series for `component` on `dataset`, highlighting what the latest trial
/// addition changed.
pub fn viz(
    component: Component,
    dataset: &Dataset,
    provider: &SimilarityProvider,
    params: &HyperParams,
    opts: &VizOptions,
) -> Result<VizSeries, EngineError> {
    params.validate()?;
    let focus = match &opts.focus {
        Some(f) if dataset.contains(f) => Some(f.clone()),
        Some(f) => return Err(EngineError::Corpus(crate::corpus::CorpusError::UnknownId(f.clone()))),
        None => dataset.samples().last().map(|s| s.id.clone()),
    };
    let prep = Prepared::new(dataset);
    let lengths: Vec<f64> = prep.sentences().map(|s| s.len() as f64).collect();
    let frame = Frame {
        length_lo: lengths.iter().copied().fold(f64::INFINITY, f64::min).min(0.0),
        length_hi: lengths.iter().copied().fold(0.0, f64::max) + 1.0,
    };
    let mut series = build(component, &prep, provider, params, opts, focus.as_deref(), frame);

    let before = dataset.undo_trial().ok();
    let prior = before.as_ref().map(|b| {
        let prep = Prepared::new(b);
        build(component, &prep, provider, params, opts, focus.as_deref(), frame)
    });
    if let Some(prior) = &prior {
        for (name, pts) in series.iter_mut() {
            let old: BTreeMap<&str, &Point> = prior
                .get(name)
                .map(|v| v.iter().map(|p| (p.key.as_str(), p)).collect())
                .unwrap_or_default();
            for p in pts.iter_mut() {
                p.highlighted = old
                    .get(p.key.as_str())
                    .is_none_or(|o| o.values != p.values || o.label != p.label);
            }
        }
    }
    if component == Component::C2 {
        let after = normalized_sigma(&series["frequency"]);
        let mut bullet = vec![Point::new("after", vec![after])];
        if let Some(prior) = &prior {
            bullet.insert(0, Point::new("before", vec![normalized_sigma(&prior["frequency"])]));
        }
        series.insert("bullet".into(), bullet);
    }
    Ok(VizSeries {
        component,
        granularity: opts.granularity,
        bins: opts.bins.max(1),
        focus,
        series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sample, Split};

    fn base() -> Dataset {
        Dataset::from_samples(vec![
            Sample::new("a", "A man plays a guitar on stage.", "The man is sleeping.", Label::Contradiction)
                .with_split(Split::Train),
            Sample::new("b", "Two dogs run through a field.", "Animals are outside.", Label::Entailment)
                .with_split(Split::Test),
            Sample::new("c", "A woman reads a book.", "The woman is reading.", Label::Neutral)
                .with_split(Split::Train),
        ])
        .unwrap()
    }

    fn long_draft() -> Sample {
        Sample::new(
            "new",
            "A very tall man in a bright red coat walks slowly down the long crowded street at night.",
            "A man walks.",
            Label::Entailment,
        )
    }

    #[test]
    fn fresh_dataset_has_no_highlights() {
        let ds = base();
        for c in Component::ALL {
            let v = viz(c, &ds, &SimilarityProvider::lexical(), &HyperParams::default(), &VizOptions::default())
                .unwrap();
            assert_eq!(v.highlighted().count(), 0, "{c}");
        }
    }

    #[test]
    fn new_length_bin_is_highlighted() {
        let ds = base().add_trial_sample(long_draft()).unwrap();
        let v = viz(
            Component::C1,
            &ds,
            &SimilarityProvider::lexical(),
            &HyperParams::default(),
            &VizOptions::default(),
        )
        .unwrap();
        let new_len = 18.0;
        let bin = v.series["lengths"]
            .iter()
            .find(|p| p.values[0] <= new_len && new_len < p.values[1])
            .unwrap();
        assert!(bin.highlighted);
        assert_eq!(v.series["lengths"].len(), 10);
        let total: f64 = v.series["lengths"].iter().map(|p| p.values[2]).sum();
        assert_eq!(total, 8.0);
    }

    #[test]
    fn c2_bullet_and_c7_pairs() {
        let ds = base().add_trial_sample(long_draft()).unwrap();
        let p = SimilarityProvider::lexical();
        let v = viz(Component::C2, &ds, &p, &HyperParams::default(), &VizOptions::default()).unwrap();
        assert_eq!(v.series["bullet"].len(), 2);
        assert!(v.series["frequency"].iter().any(|pt| pt.key == "walks" && pt.highlighted));
        let v = viz(Component::C7, &ds, &p, &HyperParams::default(), &VizOptions::default()).unwrap();
        assert_eq!(v.series["pairs"].len(), 1);
        assert_eq!(v.series["pairs"][0].key, "b");
    }

    #[test]
    fn unknown_focus_rejected() {
        let opts = VizOptions {
            focus: Some("zzz".into()),
            ..VizOptions::default()
        };
        assert!(viz(Component::C4, &base(), &SimilarityProvider::lexical(), &HyperParams::default(), &opts).is_err());
    }

    #[test]
    fn density_integrates_near_one() {
        let pts = density(&[0.4, 0.5, 0.6], 200);
        let dx = 1.0 / 199.0;
        let area: f64 = pts.iter().map(|p| p.values[1] * dx).sum();
        assert!((area - 1.0).abs() < 0.05, "{area}");
    }
}
