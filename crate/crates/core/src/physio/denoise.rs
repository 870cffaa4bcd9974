use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Channel, PhysioRecord, Signal};
use crate::error::{Error, Result};
use crate::stats;

/// Standard deviations at or below this are treated as a constant channel.
const ZERO_VARIANCE_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiseConfig {
    /// Centered moving-average width in samples; 1 disables smoothing.
    pub smoothing_window: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { smoothing_window: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelNorm {
    pub mean: f64,
    pub std: f64,
}

/// Per-channel z-score parameters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NormStats {
    pub channels: BTreeMap<Channel, ChannelNorm>,
}

impl NormStats {
    pub fn fit(rec: &PhysioRecord) -> Self {
        let channels = rec
            .channels
            .iter()
            .map(|(&c, s)| {
                (c, ChannelNorm { mean: stats::mean(&s.samples), std: stats::std_dev(&s.samples) })
            })
            .collect();
        NormStats { channels }
    }

    /// Applies these parameters to `rec`. Channels whose reference deviation is
    /// zero come out as all zeros and are reported in the returned list.
    pub fn apply(&self, rec: &PhysioRecord) -> Result<(PhysioRecord, Vec<Channel>)> {
        let mut out = PhysioRecord::new(rec.session_id.clone(), rec.start_time);
        let mut flat = Vec::new();
        for (&c, s) in &rec.channels {
            let norm = self.channels.get(&c).ok_or(Error::MissingChannel(c))?;
            let samples = if norm.std <= ZERO_VARIANCE_STD {
                flat.push(c);
                vec![0.0; s.samples.len()]
            } else {
                s.samples.iter().map(|x| (x - norm.mean) / norm.std).collect()
            };
            out.channels.insert(c, Signal::new(s.rate_hz, samples));
        }
        Ok((out, flat))
    }
}

#[derive(Debug, Clone)]
pub struct Denoised {
    pub record: PhysioRecord,
    pub stats: NormStats,
    /// Channels that were constant after smoothing and were zeroed.
    pub zero_variance: Vec<Channel>,
}

/// Centered moving average; windows are truncated at the edges.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || xs.is_empty() {
        return xs.to_vec();
    }
    let back = (window - 1) / 2;
    let fwd = window / 2;
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for x in xs {
        acc += x;
        prefix.push(acc);
    }
    (0..xs.len())
        .map(|i| {
            let lo = i.saturating_sub(back);
            let hi = (i + fwd + 1).min(xs.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

pub fn smooth(raw: &PhysioRecord, cfg: &DenoiseConfig) -> Result<PhysioRecord> {
    raw.validate()?;
    let mut out = PhysioRecord::new(raw.session_id.clone(), raw.start_time);
    for (&c, s) in &raw.channels {
        out.channels
            .insert(c, Signal::new(s.rate_hz, moving_average(&s.samples, cfg.smoothing_window)));
    }
    Ok(out)
}

/// Smooths every channel, then z-scores it over the whole record.
pub fn denoise_and_normalize(raw: &PhysioRecord, cfg: &DenoiseConfig) -> Result<Denoised> {
    let smoothed = smooth(raw, cfg)?;
    let stats = NormStats::fit(&smoothed);
    let (record, zero_variance) = stats.apply(&smoothed)?;
    Ok(Denoised { record, stats, zero_variance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(samples: Vec<f64>) -> PhysioRecord {
        PhysioRecord::new("t", 0.0).with_channel(Channel::Gsr, Signal::new(10.0, samples))
    }

    fn gsr(rec: &PhysioRecord) -> &[f64] {
        &rec.channels[&Channel::Gsr].samples
    }

    #[test]
    fn constant_channel_is_zeroed_and_flagged() {
        let out = denoise_and_normalize(&single(vec![5.0; 4]), &DenoiseConfig::default()).unwrap();
        assert_eq!(gsr(&out.record), &[0.0; 4]);
        assert_eq!(out.zero_variance, vec![Channel::Gsr]);
    }

    #[test]
    fn standardized_input_passes_through() {
        let xs = vec![-1.0, 1.0, -1.0, 1.0];
        let out = denoise_and_normalize(&single(xs.clone()), &DenoiseConfig { smoothing_window: 1 })
            .unwrap();
        assert_eq!(gsr(&out.record), xs.as_slice());
        assert!(out.zero_variance.is_empty());
    }

    #[test]
    fn z_score_of_one_to_four() {
        let out =
            denoise_and_normalize(&single(vec![1.0, 2.0, 3.0, 4.0]), &DenoiseConfig { smoothing_window: 1 })
                .unwrap();
        // mean 2.5, population std sqrt(1.25)
        let sd = 1.25f64.sqrt();
        let expected = [-1.5 / sd, -0.5 / sd, 0.5 / sd, 1.5 / sd];
        for (a, b) in gsr(&out.record).iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(gsr(&out.record)[0], -1.342, epsilon = 1e-3);
    }

    #[test]
    fn empty_channel_rejected() {
        assert!(matches!(
            denoise_and_normalize(&single(vec![]), &DenoiseConfig::default()),
            Err(Error::EmptyChannel(_))
        ));
    }

    #[test]
    fn moving_average_edges() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ma = moving_average(&xs, 3);
        assert_eq!(ma, vec![1.5, 2.0, 3.0, 4.0, 4.5]);
        assert_eq!(moving_average(&xs, 1), xs.to_vec());
    }

    proptest! {
        #[test]
        fn z_scored_channels_have_zero_mean_unit_variance(
            xs in prop::collection::vec(-100.0f64..100.0, 8..200),
            window in 1usize..9,
        ) {
            let out = denoise_and_normalize(&single(xs), &DenoiseConfig { smoothing_window: window }).unwrap();
            prop_assume!(out.zero_variance.is_empty());
            let z = gsr(&out.record);
            prop_assert!(stats::mean(z).abs() < 1e-9);
            prop_assert!((stats::variance(z) - 1.0).abs() < 1e-9);
        }
    }
}
