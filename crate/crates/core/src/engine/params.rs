use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    C1,
    C2,
    C3,
    C4,
    C5,
    C6,
    C7,
}

impl Component {
    pub const ALL: [Component; 7] = [
        Component::C1,
        Component::C2,
        Component::C3,
        Component::C4,
        Component::C5,
        Component::C6,
        Component::C7,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Component::C1 => "c1",
            Component::C2 => "c2",
            Component::C3 => "c3",
            Component::C4 => "c4",
            Component::C5 => "c5",
            Component::C6 => "c6",
            Component::C7 => "c7",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Component::C1 => "Vocabulary",
            Component::C2 => "Inter-sample n-gram frequency",
            Component::C3 => "Inter-sample similarity",
            Component::C4 => "Intra-sample word similarity",
            Component::C5 => "Premise-hypothesis similarity",
            Component::C6 => "N-gram frequency per label",
            Component::C7 => "Train-test similarity",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Component::ALL
            .into_iter()
            .find(|c| c.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown component {s:?}"))
    }
}

/// Unit classes over which frequency statistics are taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Words,
    Adjectives,
    Adverbs,
    Verbs,
    Nouns,
    Bigrams,
    Trigrams,
    Sentences,
}

impl Granularity {
    pub const ALL: [Granularity; 8] = [
        Granularity::Words,
        Granularity::Adjectives,
        Granularity::Adverbs,
        Granularity::Verbs,
        Granularity::Nouns,
        Granularity::Bigrams,
        Granularity::Trigrams,
        Granularity::Sentences,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Granularity::Words => "words",
            Granularity::Adjectives => "adjectives",
            Granularity::Adverbs => "adverbs",
            Granularity::Verbs => "verbs",
            Granularity::Nouns => "nouns",
            Granularity::Bigrams => "bigrams",
            Granularity::Trigrams => "trigrams",
            Granularity::Sentences => "sentences",
        }
    }

    /// Sentence and n-gram granularities stay inactive until their total
    /// frequency mass reaches `min_granularity_mass`.
    pub fn mass_gated(self) -> bool {
        matches!(self, Granularity::Bigrams | Granularity::Trigrams | Granularity::Sentences)
    }

    pub fn is_pos(self) -> bool {
        matches!(
            self,
            Granularity::Adjectives | Granularity::Adverbs | Granularity::Verbs | Granularity::Nouns
        )
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Granularity::ALL
            .into_iter()
            .find(|g| g.key().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown granularity {s:?}"))
    }
}

/// Lower/upper unit-frequency bounds for one granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBounds {
    pub c: f64,
    pub d: f64,
}

/// Every threshold the quality formulas consume.
///
/// Serialized field names follow the short names used in the config file
/// (`a`, `b`, `sim`, `e`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    /// Lower sentence-length bound in tokens.
    #[serde(rename = "a")]
    pub length_min: f64,
    /// Upper sentence-length bound in tokens.
    #[serde(rename = "b")]
    pub length_max: f64,
    #[serde(deserialize_with = "bounds_with_defaults")]
    pub bounds: BTreeMap<Granularity, FrequencyBounds>,
    /// Minimum inter-sentence similarity.
    #[serde(rename = "sim")]
    pub min_similarity: f64,
    /// Fraction of the other sentences whose penalties are summed.
    #[serde(rename = "e")]
    pub top_fraction: f64,
    /// Target mean word similarity inside a sentence.
    #[serde(rename = "wsim")]
    pub word_similarity_target: f64,
    /// Target premise-hypothesis similarity.
    #[serde(rename = "isim")]
    pub pair_similarity_target: f64,
    /// Per-label unit frequency cap.
    #[serde(rename = "g")]
    pub label_cap: f64,
    /// Train-test similarity allowance.
    #[serde(rename = "ssim")]
    pub split_similarity: f64,
    pub sigma_epsilon: f64,
    pub min_granularity_mass: f64,
    pub overlap_floor: f64,
    #[serde(deserialize_with = "weights_with_defaults")]
    pub weights: BTreeMap<Component, f64>,
}

// Sections given in a config override the defaults key by key.
fn bounds_with_defaults<'de, D: Deserializer<'de>>(
    d: D,
) -> Result<BTreeMap<Granularity, FrequencyBounds>, D::Error> {
    let mut out = HyperParams::default().bounds;
    out.extend(BTreeMap::<Granularity, FrequencyBounds>::deserialize(d)?);
    Ok(out)
}

fn weights_with_defaults<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Component, f64>, D::Error> {
    let mut out = HyperParams::default().weights;
    out.extend(BTreeMap::<Component, f64>::deserialize(d)?);
    Ok(out)
}

impl Default for HyperParams {
    fn default() -> Self {
        let bounds = Granularity::ALL
            .into_iter()
            .map(|g| {
                let d = match g {
                    Granularity::Words => 50.0,
                    Granularity::Sentences => 3.0,
                    Granularity::Bigrams | Granularity::Trigrams => 10.0,
                    _ => 20.0,
                };
                (g, FrequencyBounds { c: 0.0, d })
            })
            .collect();
        HyperParams {
            length_min: 3.0,
            length_max: 30.0,
            bounds,
            min_similarity: 0.4,
            top_fraction: 0.5,
            word_similarity_target: 0.5,
            pair_similarity_target: 0.5,
            label_cap: 20.0,
            split_similarity: 0.4,
            sigma_epsilon: 1e-9,
            min_granularity_mass: 20.0,
            overlap_floor: 0.1,
            weights: Component::ALL.into_iter().map(|c| (c, 1.0)).collect(),
        }
    }
}

impl HyperParams {
    // Negated comparisons so that NaN fails every check.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: String| Err(EngineError::BadParams(msg));
        if !(self.length_min < self.length_max) {
            return bad(format!("a ({}) must be below b ({})", self.length_min, self.length_max));
        }
        for (g, b) in &self.bounds {
            if !(b.c < b.d) {
                return bad(format!("bounds.{g}: c ({}) must be below d ({})", b.c, b.d));
            }
        }
        for (name, v) in [
            ("sim", self.min_similarity),
            ("wsim", self.word_similarity_target),
            ("isim", self.pair_similarity_target),
            ("ssim", self.split_similarity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.top_fraction > 0.0 && self.top_fraction <= 1.0) {
            return bad(format!("e must lie in (0, 1], got {}", self.top_fraction));
        }
        if let Some((c, w)) = self.weights.iter().find(|(_, w)| !(**w >= 0.0)) {
            return bad(format!("weight for {c} must be non-negative, got {w}"));
        }
        if !(self.overlap_floor > 0.0) {
            return bad("overlap_floor must be positive".into());
        }
        if !(self.sigma_epsilon >= 0.0) || !(self.min_granularity_mass >= 0.0) {
            return bad("sigma_epsilon and min_granularity_mass must be non-negative".into());
        }
        Ok(())
    }

    pub fn bounds_for(&self, g: Granularity) -> FrequencyBounds {
        self.bounds
            .get(&g)
            .copied()
            .unwrap_or(FrequencyBounds { c: 0.0, d: f64::INFINITY })
    }

    pub fn weight(&self, c: Component) -> f64 {
        self.weights.get(&c).copied().unwrap_or(0.0)
    }

    /// POS frequency bounds and the per-label cap scaled linearly by
    /// `dataset_size / reference_size`.
    pub fn scaled_for(&self, dataset_size: usize, reference_size: usize) -> HyperParams {
        let factor = dataset_size as f64 / reference_size.max(1) as f64;
        let mut out = self.clone();
        for (g, b) in out.bounds.iter_mut() {
            if g.is_pos() {
                b.c *= factor;
                b.d *= factor;
            }
        }
        out.label_cap *= factor;
        out
    }
}
