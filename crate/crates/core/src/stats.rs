//! Small descriptive-statistics helpers. Variance is always the population form.

use serde::{Deserialize, Serialize};

/// The six per-signal statistics used throughout the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub variance: f64,
    pub max: f64,
    pub min: f64,
    pub range: f64,
}

impl Summary {
    pub fn as_array(&self) -> [f64; 6] {
        [self.mean, self.median, self.variance, self.max, self.min, self.range]
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Median; even lengths average the two central values.
pub fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Returns `None` for an empty slice.
pub fn summarize(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    Some(Summary {
        mean: mean(xs),
        median: median(xs),
        variance: variance(xs),
        max,
        min,
        range: max - min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_one_to_four() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.as_array(), [2.5, 2.5, 1.25, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn odd_median_and_single_sample() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        let s = summarize(&[7.0]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.range, 0.0);
        assert!(summarize(&[]).is_none());
    }
}
