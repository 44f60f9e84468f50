//! Small numeric helpers shared by the quality components.

/// Sample standard deviation (n − 1 denominator), two-pass. `None` for
/// fewer than two values.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Some((ss / (n - 1.0)).sqrt())
}

/// Like [`sample_std`] but 0 for fewer than two values.
pub fn sample_std_or_zero(values: &[f64]) -> f64 {
    sample_std(values).unwrap_or(0.0)
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Linear-interpolated quantile of sorted data, `q` in `[0, 1]`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert!((sample_std(&[12.0, 9.0]).unwrap() - 2.121_320_343_559_642).abs() < 1e-12);
        assert_eq!(sample_std(&[3.0]), None);
        assert_eq!(sample_std_or_zero(&[]), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(quantile_sorted(&[1.0, 2.0, 3.0, 4.0], 0.5), Some(2.5));
    }

    proptest! {
        #[test]
        fn matches_naive_definition(values in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            // brute force: average squared pairwise difference equals 2·variance
            let n = values.len() as f64;
            let mut pair = 0.0;
            for a in &values {
                for b in &values {
                    pair += (a - b) * (a - b);
                }
            }
            let var = pair / (2.0 * n * (n - 1.0));
            let got = sample_std(&values).unwrap();
            prop_assert!((got * got - var).abs() <= 1e-12 * var.max(1.0) * 1e3);
        }
    }
}
