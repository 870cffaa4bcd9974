use serde::{Deserialize, Serialize};

use super::{hrv_features, Channel, PhysioRecord, RrSeries, Signal};
use crate::affect::Affect;
use crate::error::{Error, Result};
use crate::stats;

/// 6 statistics for each of the 10 signal channels plus 6 HRV features.
pub const FEATURE_DIM: usize = 66;

const STAT_NAMES: [&str; 6] = ["mean", "median", "variance", "max", "min", "range"];
const HRV_NAMES: [&str; 6] = ["max", "min", "sdnn", "sdann", "rmssd", "mean"];

pub type FeatureVector = Vec<f64>;

pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_DIM);
    for c in Channel::ALL {
        for s in STAT_NAMES {
            names.push(format!("{c}_{s}"));
        }
    }
    for s in HRV_NAMES {
        names.push(format!("hrv_{s}"));
    }
    names
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureRole {
    Video,
    Whole,
    Sliding,
}

impl FeatureRole {
    pub fn name(self) -> &'static str {
        match self {
            FeatureRole::Video => "video",
            FeatureRole::Whole => "whole",
            FeatureRole::Sliding => "sliding",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixLabel {
    Affect(Affect),
    Flow(bool),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Windowing {
    pub window_s: f64,
    pub step_s: f64,
    pub sdann_segment_s: f64,
}

impl Default for Windowing {
    fn default() -> Self {
        Windowing { window_s: 10.0, step_s: 1.0, sdann_segment_s: 60.0 }
    }
}

impl Windowing {
    pub fn window_count(&self, duration_s: f64) -> Result<usize> {
        if !(self.window_s > 0.0 && self.step_s > 0.0) || !self.window_s.is_finite() {
            return Err(Error::InvalidWindow { window_s: self.window_s, step_s: self.step_s });
        }
        if duration_s + 1e-9 < self.window_s {
            return Err(Error::RecordTooShort { duration_s, window_s: self.window_s });
        }
        Ok(((duration_s - self.window_s) / self.step_s + 1e-9).floor() as usize + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub role: FeatureRole,
    pub rows: Vec<FeatureVector>,
    /// Start of each row's window, seconds from the record's first sample.
    pub window_starts: Vec<f64>,
    pub window_s: f64,
    pub step_s: f64,
    pub label: Option<MatrixLabel>,
    /// Rows whose HRV block was zero-filled because no RR interval was available.
    pub hrv_missing: Vec<bool>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn with_label(mut self, label: MatrixLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn affect(&self) -> Option<Affect> {
        match self.label {
            Some(MatrixLabel::Affect(a)) => Some(a),
            _ => None,
        }
    }

    pub fn expect_role(&self, role: FeatureRole) -> Result<()> {
        if self.role == role {
            Ok(())
        } else {
            Err(Error::WrongRole { expected: role.name(), got: self.role.name() })
        }
    }
}

fn window_slice(sig: &Signal, start_s: f64, end_s: f64) -> &[f64] {
    let idx = |t: f64| ((t * sig.rate_hz - 1e-9).ceil().max(0.0) as usize).min(sig.samples.len());
    &sig.samples[idx(start_s)..idx(end_s)]
}

/// Computes one feature vector per window. `rec` should already be denoised;
/// `rr` holds R-peaks of the same record, with times relative to its first
/// sample. Sliding matrices use `windowing`; Whole and Video matrices get a
/// single window spanning the record.
pub fn extract_features(
    rec: &PhysioRecord,
    rr: Option<&RrSeries>,
    role: FeatureRole,
    windowing: &Windowing,
) -> Result<FeatureMatrix> {
    rec.validate_complete()?;
    let duration = rec.duration_s();
    let (window_s, step_s) = match role {
        FeatureRole::Sliding => (windowing.window_s, windowing.step_s),
        FeatureRole::Whole | FeatureRole::Video => (duration, duration),
    };
    let count = Windowing { window_s, step_s, ..*windowing }.window_count(duration)?;

    let mut rows = Vec::with_capacity(count);
    let mut window_starts = Vec::with_capacity(count);
    let mut hrv_missing = Vec::with_capacity(count);
    for w in 0..count {
        let start = w as f64 * step_s;
        let end = start + window_s;
        let mut row = Vec::with_capacity(FEATURE_DIM);
        for c in Channel::ALL {
            let xs = window_slice(rec.channel(c)?, start, end);
            let summary = stats::summarize(xs).ok_or(Error::EmptyChannel(c))?;
            row.extend(summary.as_array());
        }
        let hrv = rr.map(|r| hrv_features(&r.slice(start, end), windowing.sdann_segment_s));
        match hrv {
            Some(Ok(h)) => {
                row.extend(h.as_array());
                hrv_missing.push(false);
            }
            Some(Err(Error::HrvUnavailable)) | None => {
                row.extend([0.0; 6]);
                hrv_missing.push(true);
            }
            Some(Err(e)) => return Err(e),
        }
        rows.push(row);
        window_starts.push(start);
    }
    Ok(FeatureMatrix { role, rows, window_starts, window_s, step_s, label: None, hrv_missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Every channel at `rate` Hz, sample `i` = `f(i)`.
    fn record(n: usize, rate: f64, f: impl Fn(usize) -> f64) -> PhysioRecord {
        let mut rec = PhysioRecord::new("t", 0.0);
        for c in Channel::ALL {
            rec.channels.insert(c, Signal::new(rate, (0..n).map(&f).collect()));
        }
        rec
    }

    #[test]
    fn names_are_unique_and_complete() {
        let names = feature_names();
        assert_eq!(names.len(), FEATURE_DIM);
        assert_eq!(names[0], "ecg_mean");
        assert_eq!(names[65], "hrv_mean");
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), FEATURE_DIM);
    }

    #[test]
    fn window_counts() {
        let rec = record(1200, 10.0, |i| (i % 7) as f64);
        let m = extract_features(&rec, None, FeatureRole::Sliding, &Windowing::default()).unwrap();
        assert_eq!(m.len(), 111);
        assert!(m.hrv_missing.iter().all(|&x| x));

        let rec = record(100, 10.0, |i| i as f64);
        let m = extract_features(&rec, None, FeatureRole::Sliding, &Windowing::default()).unwrap();
        assert_eq!(m.len(), 1);
        let w = extract_features(&rec, None, FeatureRole::Whole, &Windowing::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.window_s, 10.0);
    }

    #[test]
    fn too_short_rejected() {
        let rec = record(50, 10.0, |i| i as f64);
        assert!(matches!(
            extract_features(&rec, None, FeatureRole::Sliding, &Windowing::default()),
            Err(Error::RecordTooShort { .. })
        ));
    }

    #[test]
    fn window_stats_use_population_variance() {
        let rec = record(4, 1.0, |i| (i + 1) as f64);
        let win = Windowing { window_s: 4.0, step_s: 1.0, ..Windowing::default() };
        let m = extract_features(&rec, None, FeatureRole::Sliding, &win).unwrap();
        assert_eq!(m.rows[0][..6], [2.5, 2.5, 1.25, 4.0, 1.0, 3.0]);
    }

    #[test]
    fn hrv_block_uses_intervals_inside_window() {
        let rec = record(300, 10.0, |i| (i % 3) as f64);
        let rr = RrSeries::from_intervals(0.5, vec![1000.0; 28]);
        let win = Windowing { window_s: 10.0, step_s: 5.0, ..Windowing::default() };
        let m = extract_features(&rec, Some(&rr), FeatureRole::Sliding, &win).unwrap();
        assert_eq!(m.len(), 5);
        assert_eq!(m.rows[0][60..], [1000.0, 1000.0, 0.0, 0.0, 0.0, 1000.0]);
        assert!(m.hrv_missing.iter().all(|&x| !x));
    }

    proptest! {
        #[test]
        fn window_count_formula(extra in 0usize..400, step in 1usize..5) {
            let n = 100 + extra;
            let rec = record(n, 10.0, |i| ((i * 13) % 17) as f64);
            let win = Windowing { window_s: 10.0, step_s: step as f64, ..Windowing::default() };
            let m = extract_features(&rec, None, FeatureRole::Sliding, &win).unwrap();
            let duration = n as f64 / 10.0;
            prop_assert_eq!(m.len(), ((duration - 10.0) / step as f64).floor() as usize + 1);
        }

        #[test]
        fn stats_groups_are_ordered(xs in prop::collection::vec(-50.0f64..50.0, 20..80)) {
            let n = xs.len();
            let rec = record(n, 2.0, |i| xs[i]);
            let win = Windowing { window_s: 5.0, step_s: 1.0, ..Windowing::default() };
            let m = extract_features(&rec, None, FeatureRole::Sliding, &win).unwrap();
            for row in &m.rows {
                prop_assert!(row.iter().all(|x| x.is_finite()));
                for g in row[..60].chunks(6) {
                    let [mean, median, var, max, min, range] = [g[0], g[1], g[2], g[3], g[4], g[5]];
                    prop_assert!(min <= median && median <= max);
                    prop_assert!(min - 1e-12 <= mean && mean <= max + 1e-12);
                    prop_assert!(var >= 0.0);
                    prop_assert_eq!(range, max - min);
                }
            }
        }

        #[test]
        fn shifted_periodic_signal_gives_aligned_rows(shift_steps in 1usize..6, phase in 0.0f64..6.0) {
            // Period 20 samples at 10 Hz; a 1 s step is 10 samples, so shifting by an
            // even number of steps preserves alignment.
            let f = |i: usize| (i as f64 * std::f64::consts::PI / 10.0 + phase).sin();
            let shift = 2 * shift_steps * 10;
            let base = record(400, 10.0, f);
            let shifted = record(400 - shift, 10.0, |i| f(i + shift));
            let win = Windowing::default();
            let a = extract_features(&base, None, FeatureRole::Sliding, &win).unwrap();
            let b = extract_features(&shifted, None, FeatureRole::Sliding, &win).unwrap();
            for (k, row) in b.rows.iter().enumerate() {
                prop_assert_eq!(row, &a.rows[k + 2 * shift_steps]);
            }
        }
    }
}
