use serde::{Deserialize, Serialize};

use super::RrSeries;
use crate::error::{Error, Result};
use crate::stats;

/// Heart-rate-variability summary of an RR series, all in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HrvFeatures {
    pub max: f64,
    pub min: f64,
    pub sdnn: f64,
    pub sdann: f64,
    pub rmssd: f64,
    pub mean: f64,
    /// Set when only one interval was available, so RMSSD was reported as 0.
    pub rmssd_undefined: bool,
}

impl HrvFeatures {
    /// Feature-vector order: max, min, SDNN, SDANN, RMSSD, mean.
    pub fn as_array(&self) -> [f64; 6] {
        [self.max, self.min, self.sdnn, self.sdann, self.rmssd, self.mean]
    }
}

/// SDANN groups intervals into consecutive `segment_s` segments counted from the
/// onset of the first interval.
pub fn hrv_features(rr: &RrSeries, segment_s: f64) -> Result<HrvFeatures> {
    let xs = &rr.rr_ms;
    if xs.is_empty() {
        return Err(Error::HrvUnavailable);
    }
    if !(segment_s.is_finite() && segment_s > 0.0) {
        return Err(Error::InvalidParameter(format!("SDANN segment length {segment_s}")));
    }
    let summary = stats::summarize(xs).ok_or(Error::HrvUnavailable)?;

    let (rmssd, rmssd_undefined) = if xs.len() < 2 {
        (0.0, true)
    } else {
        let ss: f64 = xs.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        ((ss / (xs.len() - 1) as f64).sqrt(), false)
    };

    Ok(HrvFeatures {
        max: summary.max,
        min: summary.min,
        sdnn: summary.variance.sqrt(),
        sdann: segment_mean_std(xs, &rr.rr_onsets, segment_s),
        rmssd,
        mean: summary.mean,
        rmssd_undefined,
    })
}

fn segment_mean_std(rr_ms: &[f64], onsets: &[f64], segment_s: f64) -> f64 {
    let origin = onsets.first().copied().unwrap_or(0.0);
    // (segment index, sum, count), onsets are sorted so segments arrive in order.
    let mut segments: Vec<(i64, f64, usize)> = Vec::new();
    for (i, &x) in rr_ms.iter().enumerate() {
        let t = onsets.get(i).copied().unwrap_or(origin);
        let seg = ((t - origin) / segment_s + 1e-9).floor() as i64;
        match segments.last_mut() {
            Some((s, sum, n)) if *s == seg => {
                *sum += x;
                *n += 1;
            }
            _ => segments.push((seg, x, 1)),
        }
    }
    let means: Vec<f64> = segments.iter().map(|&(_, sum, n)| sum / n as f64).collect();
    stats::std_dev(&means)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn series(rr_ms: Vec<f64>) -> RrSeries {
        RrSeries::from_intervals(0.0, rr_ms)
    }

    #[test]
    fn worked_example() {
        let h = hrv_features(&series(vec![800.0, 810.0, 790.0]), 60.0).unwrap();
        assert_abs_diff_eq!(h.mean, 800.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.sdnn, (200.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(h.sdnn, 8.165, epsilon = 1e-3);
        assert_abs_diff_eq!(h.rmssd, 250.0f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(h.rmssd, 15.811, epsilon = 1e-3);
        assert_eq!((h.max, h.min), (810.0, 790.0));
    }

    #[test]
    fn constant_series() {
        let h = hrv_features(&series(vec![800.0; 3]), 60.0).unwrap();
        assert_eq!(h.as_array(), [800.0, 800.0, 0.0, 0.0, 0.0, 800.0]);
        assert!(!h.rmssd_undefined);
    }

    #[test]
    fn single_interval_flags_rmssd() {
        let h = hrv_features(&series(vec![900.0]), 60.0).unwrap();
        assert_eq!(h.sdnn, 0.0);
        assert_eq!(h.rmssd, 0.0);
        assert!(h.rmssd_undefined);
        assert!(matches!(hrv_features(&series(vec![]), 60.0), Err(Error::HrvUnavailable)));
    }

    #[test]
    fn two_segment_sdann() {
        // 75 beats of 800 ms fill the first minute, 900 ms beats the second.
        let mut rr = vec![800.0; 75];
        rr.extend(vec![900.0; 66]);
        let h = hrv_features(&series(rr), 60.0).unwrap();
        assert_abs_diff_eq!(h.sdann, 50.0, epsilon = 1e-12);
    }

    /// Straight textbook formulas, one quantity per loop.
    fn oracle(rr: &[f64], onsets: &[f64], seg: f64) -> (f64, f64, f64) {
        let n = rr.len() as f64;
        let mean = rr.iter().sum::<f64>() / n;
        let sdnn = (rr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        let mut diffs = 0.0;
        for i in 1..rr.len() {
            diffs += (rr[i] - rr[i - 1]).powi(2);
        }
        let rmssd = if rr.len() > 1 { (diffs / (n - 1.0)).sqrt() } else { 0.0 };
        let last = ((onsets[rr.len() - 1] - onsets[0]) / seg + 1e-9).floor() as usize;
        let mut means = Vec::new();
        for k in 0..=last {
            let members: Vec<f64> = (0..rr.len())
                .filter(|&i| ((onsets[i] - onsets[0]) / seg + 1e-9).floor() as usize == k)
                .map(|i| rr[i])
                .collect();
            if !members.is_empty() {
                means.push(members.iter().sum::<f64>() / members.len() as f64);
            }
        }
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let sdann = (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / means.len() as f64).sqrt();
        (sdnn, sdann, rmssd)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn matches_textbook_oracle(
            rr in prop::collection::vec(250.0f64..1900.0, 1..300),
            seg in prop::sample::select(vec![10.0, 30.0, 60.0]),
        ) {
            let s = series(rr.clone());
            let h = hrv_features(&s, seg).unwrap();
            let (sdnn, sdann, rmssd) = oracle(&rr, &s.rr_onsets, seg);
            prop_assert!((h.sdnn - sdnn).abs() <= 1e-10);
            prop_assert!((h.sdann - sdann).abs() <= 1e-10);
            prop_assert!((h.rmssd - rmssd).abs() <= 1e-10);
        }
    }
}
