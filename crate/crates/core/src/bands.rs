//! Traffic-light bands over component values and terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{quantile_sorted, sample_std_or_zero};

#[derive(Debug, Error, PartialEq)]
pub enum BandError {
    #[error("no band configured for {0:?}")]
    MissingBand(String),
    #[error("no value supplied for band {0:?}")]
    MissingValue(String),
    #[error("shrink factor must lie in [0, 1), got {0}")]
    BadFactor(f64),
    #[error("band {key:?}: {reason}")]
    BadBand { key: String, reason: String },
    #[error("dataset size must be at least 1")]
    BadSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Yellow,
    Green,
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Color::Red => "red",
            Color::Yellow => "yellow",
            Color::Green => "green",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    CenterGreen,
    HighGreen,
    LowGreen,
}

/// Green interval with optional yellow margins on either side.
///
/// A missing green bound means green is unbounded on that side. A missing
/// yellow bound means that side has no yellow zone: values past green are
/// red straight away. Bounds are inclusive, so a value on a boundary takes
/// the greener color.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub orientation: Orientation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub green_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yellow_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yellow_max: Option<f64>,
    /// Bounds grow linearly with dataset size (frequency-valued keys).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub scales_with_size: bool,
}

impl Band {
    pub fn center(yellow_min: f64, green_min: f64, green_max: f64, yellow_max: f64) -> Band {
        Band {
            orientation: Orientation::CenterGreen,
            green_min: Some(green_min),
            green_max: Some(green_max),
            yellow_min: Some(yellow_min),
            yellow_max: Some(yellow_max),
            scales_with_size: false,
        }
    }

    /// Red below `yellow_min`, yellow up to `green_min`, green above.
    pub fn high(yellow_min: f64, green_min: f64) -> Band {
        Band {
            orientation: Orientation::HighGreen,
            green_min: Some(green_min),
            green_max: None,
            yellow_min: Some(yellow_min),
            yellow_max: None,
            scales_with_size: false,
        }
    }

    /// Green up to `green_max`, yellow up to `yellow_max`, red above.
    pub fn low(green_max: f64, yellow_max: f64) -> Band {
        Band {
            orientation: Orientation::LowGreen,
            green_min: None,
            green_max: Some(green_max),
            yellow_min: None,
            yellow_max: Some(yellow_max),
            scales_with_size: false,
        }
    }

    pub fn validate(&self, key: &str) -> Result<(), BandError> {
        let bad = |reason: &str| {
            Err(BandError::BadBand {
                key: key.to_string(),
                reason: reason.to_string(),
            })
        };
        let finite = [self.green_min, self.green_max, self.yellow_min, self.yellow_max]
            .into_iter()
            .flatten()
            .all(f64::is_finite);
        if !finite {
            return bad("bounds must be finite");
        }
        match self.orientation {
            Orientation::CenterGreen if self.green_min.is_none() || self.green_max.is_none() => {
                return bad("center_green needs both green bounds")
            }
            Orientation::HighGreen if self.green_min.is_none() || self.green_max.is_some() => {
                return bad("high_green needs green_min only")
            }
            Orientation::LowGreen if self.green_max.is_none() || self.green_min.is_some() => {
                return bad("low_green needs green_max only")
            }
            _ => {}
        }
        if let (Some(lo), Some(hi)) = (self.green_min, self.green_max) {
            if lo > hi {
                return bad("green_min exceeds green_max");
            }
        }
        if let Some(y) = self.yellow_min {
            match self.green_min {
                Some(g) if y <= g => {}
                _ => return bad("yellow_min must sit at or below a finite green_min"),
            }
        }
        if let Some(y) = self.yellow_max {
            match self.green_max {
                Some(g) if y >= g => {}
                _ => return bad("yellow_max must sit at or above a finite green_max"),
            }
        }
        Ok(())
    }

    pub fn color(&self, v: f64) -> Color {
        if v.is_nan() {
            return Color::Red;
        }
        if let Some(lo) = self.green_min {
            if v < lo {
                return match self.yellow_min {
                    Some(y) if v >= y => Color::Yellow,
                    _ => Color::Red,
                };
            }
        }
        if let Some(hi) = self.green_max {
            if v > hi {
                return match self.yellow_max {
                    Some(y) if v <= y => Color::Yellow,
                    _ => Color::Red,
                };
            }
        }
        Color::Green
    }

    /// How far `v` lies outside green; 0 inside.
    pub fn distance_to_green(&self, v: f64) -> f64 {
        if v.is_nan() {
            return f64::INFINITY;
        }
        let below = self.green_min.map_or(0.0, |lo| (lo - v).max(0.0));
        let above = self.green_max.map_or(0.0, |hi| (v - hi).max(0.0));
        below + above
    }

    fn scaled(&self, factor: f64) -> Band {
        let s = |b: Option<f64>| b.map(|x| x * factor);
        Band {
            green_min: s(self.green_min),
            green_max: s(self.green_max),
            yellow_min: s(self.yellow_min),
            yellow_max: s(self.yellow_max),
            ..self.clone()
        }
    }

    fn shrunk(&self, f: f64) -> Band {
        let mut out = self.clone();
        match (self.green_min, self.green_max) {
            (Some(lo), Some(hi)) => {
                let cut = f * (hi - lo) / 2.0;
                out.green_min = Some(lo + cut);
                out.green_max = Some(hi - cut);
                // the evicted slices must read yellow, never red
                out.yellow_min = Some(self.yellow_min.map_or(lo, |y| y.min(lo)));
                out.yellow_max = Some(self.yellow_max.map_or(hi, |y| y.max(hi)));
            }
            (Some(lo), None) => {
                let width = self.yellow_min.map_or(0.0, |y| lo - y);
                out.green_min = Some(lo + f * width);
                out.yellow_min = Some(self.yellow_min.unwrap_or(lo));
            }
            (None, Some(hi)) => {
                let width = self.yellow_max.map_or(0.0, |y| y - hi);
                out.green_max = Some(hi - f * width);
                out.yellow_max = Some(self.yellow_max.unwrap_or(hi));
            }
            (None, None) => {}
        }
        out
    }

    pub fn green_width(&self) -> f64 {
        match (self.green_min, self.green_max) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => f64::INFINITY,
        }
    }
}

/// Bands keyed by flattened value key (`c5`, `c5.T5`, `c2.nouns.T1`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    /// Dataset size the bounds of size-scaled bands were set for.
    pub reference_size: usize,
    /// Number of green shrinks applied so far.
    #[serde(default)]
    pub generation: u32,
    pub entries: BTreeMap<String, Band>,
}

impl BandSpec {
    pub fn new(reference_size: usize, entries: BTreeMap<String, Band>) -> BandSpec {
        BandSpec {
            reference_size,
            generation: 0,
            entries,
        }
    }

    pub fn validate(&self) -> Result<(), BandError> {
        if self.reference_size == 0 {
            return Err(BandError::BadSize);
        }
        self.entries.iter().try_for_each(|(k, b)| b.validate(k))
    }

    pub fn get(&self, key: &str) -> Option<&Band> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// The values of `all` under this spec's keys.
    pub fn select(&self, all: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, BandError> {
        self.entries
            .keys()
            .map(|k| {
                all.get(k)
                    .map(|v| (k.clone(), *v))
                    .ok_or_else(|| BandError::MissingValue(k.clone()))
            })
            .collect()
    }

    /// Default bands for a set of reference value maps: each key gets a
    /// centered green band of one standard deviation around the median and
    /// yellow out to two.
    pub fn from_reference<'a>(
        keys: &[&str],
        samples: impl IntoIterator<Item = &'a BTreeMap<String, f64>> + Clone,
        reference_size: usize,
    ) -> BandSpec {
        let mut entries = BTreeMap::new();
        for key in keys {
            let mut vals: Vec<f64> = samples
                .clone()
                .into_iter()
                .filter_map(|m| m.get(*key).copied())
                .filter(|v| v.is_finite())
                .collect();
            if vals.is_empty() {
                continue;
            }
            vals.sort_by(f64::total_cmp);
            let median = quantile_sorted(&vals, 0.5).unwrap_or(0.0);
            let sd = sample_std_or_zero(&vals).max(1e-6 * median.abs().max(1.0));
            entries.insert(
                key.to_string(),
                Band::center(median - 2.0 * sd, median - sd, median + sd, median + 2.0 * sd),
            );
        }
        BandSpec::new(reference_size, entries)
    }
}

/// Colors for a set of values plus the acceptance estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlagPanel {
    pub colors: BTreeMap<String, Color>,
    pub values: BTreeMap<String, f64>,
    /// `(2 * greens + yellows) / (2 * keys)`; a plain heuristic, not a
    /// calibrated probability.
    pub accept_probability: f64,
}

impl FlagPanel {
    pub fn count(&self, color: Color) -> usize {
        self.colors.values().filter(|c| **c == color).count()
    }

    /// `(reds, yellows)`; lexicographically smaller is better.
    pub fn badness(&self) -> (usize, usize) {
        (self.count(Color::Red), self.count(Color::Yellow))
    }

    pub fn all_green(&self) -> bool {
        self.colors.values().all(|c| *c == Color::Green)
    }
}

pub fn assign_colors(values: &BTreeMap<String, f64>, bands: &BandSpec) -> Result<FlagPanel, BandError> {
    let mut colors = BTreeMap::new();
    for (k, v) in values {
        let band = bands.get(k).ok_or_else(|| BandError::MissingBand(k.clone()))?;
        colors.insert(k.clone(), band.color(*v));
    }
    let greens = colors.values().filter(|c| **c == Color::Green).count();
    let yellows = colors.values().filter(|c| **c == Color::Yellow).count();
    let accept_probability = if colors.is_empty() {
        1.0
    } else {
        (2 * greens + yellows) as f64 / (2 * colors.len()) as f64
    };
    Ok(FlagPanel {
        colors,
        values: values.clone(),
        accept_probability,
    })
}

/// Multiplies the bounds of size-scaled bands by
/// `dataset_size / reference_size`; other bands are copied as is.
pub fn scale_bands(bands: &BandSpec, dataset_size: usize) -> Result<BandSpec, BandError> {
    if dataset_size == 0 || bands.reference_size == 0 {
        return Err(BandError::BadSize);
    }
    let factor = dataset_size as f64 / bands.reference_size as f64;
    let entries = bands
        .entries
        .iter()
        .map(|(k, b)| {
            let b = if b.scales_with_size { b.scaled(factor) } else { b.clone() };
            (k.clone(), b)
        })
        .collect();
    Ok(BandSpec {
        reference_size: dataset_size,
        generation: bands.generation,
        entries,
    })
}

/// Narrows the green interval of every key in `sensitive` by `factor`.
///
/// A two-sided green band of width `w` loses `factor * w / 2` at each end.
/// A one-sided band moves its finite green bound inward by `factor` times
/// the width of the adjacent yellow zone. Evicted values become yellow.
pub fn shrink_green(
    bands: &BandSpec,
    sensitive: &BTreeSet<String>,
    factor: f64,
) -> Result<BandSpec, BandError> {
    if !(0.0..1.0).contains(&factor) {
        return Err(BandError::BadFactor(factor));
    }
    let mut out = bands.clone();
    for key in sensitive {
        let band = out
            .entries
            .get_mut(key)
            .ok_or_else(|| BandError::MissingBand(key.clone()))?;
        *band = band.shrunk(factor);
    }
    out.generation += 1;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(entries: &[(&str, Band)]) -> BandSpec {
        BandSpec::new(
            100,
            entries.iter().map(|(k, b)| (k.to_string(), b.clone())).collect(),
        )
    }

    #[test]
    fn overlap_band_colors() {
        let b = Band::high(3.9375, 9.8333);
        assert_eq!(b.color(2.0), Color::Red);
        assert_eq!(b.color(3.9375), Color::Yellow);
        assert_eq!(b.color(5.0), Color::Yellow);
        assert_eq!(b.color(9.8333), Color::Green);
        assert_eq!(b.color(70.0), Color::Green);
        assert_eq!(b.color(f64::NAN), Color::Red);
    }

    #[test]
    fn center_band_colors() {
        let b = Band::center(5.0, 10.0, 20.0, 25.0);
        assert_eq!(b.color(10.0), Color::Green);
        assert_eq!(b.color(20.0), Color::Green);
        assert_eq!(b.color(22.0), Color::Yellow);
        assert_eq!(b.color(25.0), Color::Yellow);
        assert_eq!(b.color(25.1), Color::Red);
        assert_eq!(b.color(4.0), Color::Red);
        assert_eq!(b.distance_to_green(4.0), 6.0);
        assert_eq!(b.distance_to_green(15.0), 0.0);
    }

    #[test]
    fn panel_probability() {
        let bands = spec(&[("c1", Band::center(0.0, 1.0, 2.0, 3.0)), ("c2", Band::low(1.0, 2.0))]);
        let vals = BTreeMap::from([("c1".to_string(), 1.5), ("c2".to_string(), 0.0)]);
        assert_eq!(assign_colors(&vals, &bands).unwrap().accept_probability, 1.0);
        let vals = BTreeMap::from([("c1".to_string(), 2.5), ("c2".to_string(), 5.0)]);
        let p = assign_colors(&vals, &bands).unwrap();
        assert_eq!(p.accept_probability, 0.25);
        assert_eq!(p.badness(), (1, 1));
        let vals = BTreeMap::from([("c9".to_string(), 1.0)]);
        assert_eq!(assign_colors(&vals, &bands), Err(BandError::MissingBand("c9".into())));
    }

    #[test]
    fn shrink_arithmetic() {
        let bands = spec(&[("c5", Band::center(5.0, 10.0, 20.0, 25.0)), ("c1", Band::center(0.0, 1.0, 2.0, 3.0))]);
        let sens = BTreeSet::from(["c5".to_string()]);
        let once = shrink_green(&bands, &sens, 0.2).unwrap();
        let b = &once.entries["c5"];
        assert!((b.green_min.unwrap() - 11.0).abs() < 1e-12);
        assert!((b.green_max.unwrap() - 19.0).abs() < 1e-12);
        assert_eq!(once.entries["c1"], bands.entries["c1"]);
        assert_eq!(once.generation, 1);
        let twice = shrink_green(&once, &sens, 0.2).unwrap();
        assert!((twice.entries["c5"].green_width() - 6.4).abs() < 1e-12);
        assert_eq!(shrink_green(&bands, &sens, 0.0).unwrap().entries, bands.entries);
        assert_eq!(shrink_green(&bands, &sens, 1.0), Err(BandError::BadFactor(1.0)));
    }

    #[test]
    fn one_sided_shrink() {
        let bands = spec(&[("c5.T5", Band::high(4.0, 10.0))]);
        let sens = BTreeSet::from(["c5.T5".to_string()]);
        let b = &shrink_green(&bands, &sens, 0.5).unwrap().entries["c5.T5"];
        assert_eq!(b.green_min, Some(13.0));
        assert_eq!(b.color(11.0), Color::Yellow);
    }

    #[test]
    fn scaling() {
        let mut freq = Band::center(0.0, 10.0, 20.0, 30.0);
        freq.scales_with_size = true;
        let bands = spec(&[("c2.nouns.mean_frequency", freq), ("c1", Band::center(0.0, 1.0, 2.0, 3.0))]);
        assert_eq!(scale_bands(&bands, 100).unwrap(), bands);
        let doubled = scale_bands(&bands, 200).unwrap();
        assert_eq!(doubled.entries["c2.nouns.mean_frequency"].green_max, Some(40.0));
        assert_eq!(doubled.entries["c1"], bands.entries["c1"]);
        assert_eq!(scale_bands(&bands, 0), Err(BandError::BadSize));
    }

    #[test]
    fn validation() {
        assert!(Band::center(0.0, 1.0, 2.0, 3.0).validate("x").is_ok());
        assert!(Band::center(2.0, 1.0, 2.0, 3.0).validate("x").is_err());
        assert!(Band::high(1.0, 2.0).validate("x").is_ok());
        let mut b = Band::high(1.0, 2.0);
        b.green_max = Some(5.0);
        assert!(b.validate("x").is_err());
    }

    proptest! {
        #[test]
        fn shrink_is_color_monotone(
            lo in -50.0f64..50.0, w in 0.1f64..40.0, margin in 0.0f64..20.0,
            f in 0.0f64..0.99, v in -150.0f64..150.0,
        ) {
            let bands = spec(&[
                ("c", Band::center(lo - margin, lo, lo + w, lo + w + margin)),
                ("h", Band::high(lo - margin, lo)),
                ("l", Band::low(lo, lo + margin)),
            ]);
            let sens: BTreeSet<String> = bands.entries.keys().cloned().collect();
            let shrunk = shrink_green(&bands, &sens, f).unwrap();
            shrunk.validate().unwrap();
            for k in ["c", "h", "l"] {
                let before = bands.entries[k].color(v);
                let after = shrunk.entries[k].color(v);
                if before == Color::Green {
                    prop_assert!(after != Color::Red);
                } else {
                    prop_assert_eq!(before, after);
                }
            }
        }
    }
}
