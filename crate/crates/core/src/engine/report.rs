use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Component, Granularity};
use crate::corpus::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    /// Fewer than two distinct units, so no spread can be measured.
    TooFewUnits,
    ZeroVariance,
    BelowMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedGranularity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    pub granularity: Granularity,
    /// `T1T2` for the frequency pair, `T5` for the cross-label term.
    pub term: String,
    pub reason: SkipReason,
}

/// Best training match for one test sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMatch {
    pub test_id: String,
    pub train_id: String,
    pub similarity: f64,
}

/// One component's value with its named terms.
///
/// Term keys are relative to the component: `T1`, `words.T1`,
/// `entailment.nouns.T2`, `bigrams.T5`, and a few auxiliary keys such as
/// `deviation` or `nouns.mean_frequency` that feed no formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub component: Component,
    pub value: f64,
    pub terms: BTreeMap<String, f64>,
    #[serde(default)]
    pub skipped: Vec<SkippedGranularity>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matches: Vec<TestMatch>,
}

fn term_at(terms: &BTreeMap<String, f64>, key: &str) -> f64 {
    terms.get(key).copied().unwrap_or(0.0)
}

impl ComponentReport {
    pub fn new(component: Component) -> ComponentReport {
        ComponentReport {
            component,
            value: 0.0,
            terms: BTreeMap::new(),
            skipped: Vec::new(),
            notes: Vec::new(),
            matches: Vec::new(),
        }
    }

    pub fn term(&self, key: &str) -> f64 {
        term_at(&self.terms, key)
    }

    pub fn set(&mut self, key: impl Into<String>, v: f64) {
        self.terms.insert(key.into(), v);
    }

    /// The component value rebuilt from `terms` alone.
    pub fn recompute_value(&self) -> f64 {
        let t = |k: &str| term_at(&self.terms, k);
        match self.component {
            Component::C1 => t("T1") + t("T2") * t("T3"),
            Component::C3 => t("T1") + t("T2"),
            Component::C4 | Component::C7 => t("T1"),
            Component::C5 => ["T1", "T2", "T3", "T4", "T5", "T6"].iter().map(|k| t(k)).sum(),
            Component::C2 | Component::C6 => {
                let mut total = 0.0;
                for (key, v) in &self.terms {
                    let parts: Vec<&str> = key.split('.').collect();
                    match parts.as_slice() {
                        [.., last] if *last == "T1" => {
                            let partner = format!("{}.T2", &key[..key.len() - 3]);
                            total += v * t(&partner);
                        }
                        [_, "T3"] | [_, "T4"] | [_, "T5"] => total += v,
                        _ => {}
                    }
                }
                total
            }
        }
    }

    pub(crate) fn finish(mut self) -> ComponentReport {
        self.value = self.recompute_value();
        self
    }

    /// Flat `c2.words.T1`-style map including the bare component key.
    pub fn flatten_into(&self, out: &mut BTreeMap<String, f64>) {
        let c = self.component.key();
        out.insert(c.to_string(), self.value);
        for (k, v) in &self.terms {
            out.insert(format!("{c}.{k}"), *v);
        }
    }
}

/// All seven components plus the weighted aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqiReport {
    pub components: BTreeMap<Component, ComponentReport>,
    pub aggregate: f64,
    pub samples: usize,
    pub stopword_list: String,
    pub tagger: String,
}

impl DqiReport {
    pub fn component(&self, c: Component) -> &ComponentReport {
        &self.components[&c]
    }

    pub fn value(&self, c: Component) -> f64 {
        self.components.get(&c).map_or(0.0, |r| r.value)
    }

    /// Every component value and term under its dotted key, plus `dqi`.
    pub fn flatten(&self) -> BTreeMap<String, f64> {
        let mut out = BTreeMap::new();
        for r in self.components.values() {
            r.flatten_into(&mut out);
        }
        out.insert("dqi".into(), self.aggregate);
        out
    }

    /// Per-granularity rows of (component, granularity or "-", term, value),
    /// sorted, for tabular export.
    pub fn rows(&self) -> Vec<(String, String, String, f64)> {
        let mut rows = Vec::new();
        for r in self.components.values() {
            rows.push((r.component.key().to_string(), "-".into(), "value".into(), r.value));
            for (k, v) in &r.terms {
                let (scope, term) = match k.rsplit_once('.') {
                    Some((scope, term)) => (scope.to_string(), term.to_string()),
                    None => ("-".to_string(), k.clone()),
                };
                rows.push((r.component.key().to_string(), scope, term, *v));
            }
        }
        rows.push(("dqi".into(), "-".into(), "value".into(), self.aggregate));
        rows
    }
}

/// Values before (`x1`) and after (`x2`) adding a sample, and their
/// difference `delta = x1 - x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub x1: BTreeMap<String, f64>,
    pub x2: BTreeMap<String, f64>,
    pub delta: BTreeMap<String, f64>,
}

impl ImpactReport {
    pub fn from_maps(x1: BTreeMap<String, f64>, x2: BTreeMap<String, f64>) -> ImpactReport {
        let mut delta = BTreeMap::new();
        for k in x1.keys().chain(x2.keys()) {
            let a = x1.get(k).copied().unwrap_or(0.0);
            let b = x2.get(k).copied().unwrap_or(0.0);
            delta.insert(k.clone(), a - b);
        }
        ImpactReport { x1, x2, delta }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recompute_sums_pairs_and_singles() {
        let mut r = ComponentReport::new(Component::C6);
        r.set("entailment.words.T1", 2.0);
        r.set("entailment.words.T2", 0.5);
        r.set("entailment.T3", 1.0);
        r.set("entailment.T4", 0.25);
        r.set("words.T5", 3.0);
        r.set("words.mean_frequency", 100.0);
        assert_eq!(r.recompute_value(), 2.0 * 0.5 + 1.0 + 0.25 + 3.0);

        let mut r = ComponentReport::new(Component::C2);
        r.set("words.T1", 4.0);
        r.set("words.T2", -0.5);
        r.set("nouns.T1", 1.0);
        r.set("nouns.T2", 1.0);
        assert_eq!(r.recompute_value(), -1.0);
    }

    #[test]
    fn delta_covers_union() {
        let x1 = BTreeMap::from([("a".to_string(), 1.0), ("b".to_string(), 2.0)]);
        let x2 = BTreeMap::from([("b".to_string(), 0.5), ("c".to_string(), 4.0)]);
        let imp = ImpactReport::from_maps(x1, x2);
        assert_eq!(imp.delta["a"], 1.0);
        assert_eq!(imp.delta["b"], 1.5);
        assert_eq!(imp.delta["c"], -4.0);
    }
}
