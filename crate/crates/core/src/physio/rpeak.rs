use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::denoise::moving_average;
use crate::error::{Error, Result};

/// Plausibility gate for RR intervals, exclusive on both ends.
pub const RR_MIN_MS: f64 = 200.0;
pub const RR_MAX_MS: f64 = 2000.0;

const BASELINE_S: f64 = 0.2;
const LOWPASS_S: f64 = 0.025;
const INTEGRATION_S: f64 = 0.15;
const THRESHOLD_SPAN_S: f64 = 2.0;
const THRESHOLD_FRACTION: f64 = 0.6;
const REFRACTORY_S: f64 = 0.2;
const REFINE_S: f64 = 0.1;

/// Detected beats and the intervals between them.
///
/// `rr_ms[i]` spans from `rr_onsets[i]` to the next peak. Intervals that fail the
/// plausibility gate are dropped, so `rr_ms.len() == peak_times.len() - 1` only
/// holds when nothing was dropped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RrSeries {
    pub peak_times: Vec<f64>,
    pub rr_ms: Vec<f64>,
    pub rr_onsets: Vec<f64>,
}

impl RrSeries {
    /// Builds a series from peak times in seconds, applying the plausibility gate.
    pub fn from_peaks(peak_times: Vec<f64>) -> Self {
        let mut rr_ms = Vec::new();
        let mut rr_onsets = Vec::new();
        for w in peak_times.windows(2) {
            let rr = (w[1] - w[0]) * 1000.0;
            if rr > RR_MIN_MS && rr < RR_MAX_MS {
                rr_ms.push(rr);
                rr_onsets.push(w[0]);
            }
        }
        RrSeries { peak_times, rr_ms, rr_onsets }
    }

    /// Lays intervals end to end starting at `start_s`, without gating.
    pub fn from_intervals(start_s: f64, rr_ms: Vec<f64>) -> Self {
        let mut peak_times = vec![start_s];
        let mut t = start_s;
        for rr in &rr_ms {
            t += rr / 1000.0;
            peak_times.push(t);
        }
        let rr_onsets = peak_times[..rr_ms.len()].to_vec();
        RrSeries { peak_times, rr_ms, rr_onsets }
    }

    /// Intervals that start and end inside `[start_s, end_s)`.
    pub fn slice(&self, start_s: f64, end_s: f64) -> RrSeries {
        let mut rr_ms = Vec::new();
        let mut rr_onsets = Vec::new();
        for (&rr, &t0) in self.rr_ms.iter().zip(&self.rr_onsets) {
            let t1 = t0 + rr / 1000.0;
            if t0 >= start_s && t1 < end_s {
                rr_ms.push(rr);
                rr_onsets.push(t0);
            }
        }
        let peak_times =
            self.peak_times.iter().copied().filter(|t| *t >= start_s && *t < end_s).collect();
        RrSeries { peak_times, rr_ms, rr_onsets }
    }
}

/// Locates R-peaks with a band-pass, derivative, squaring and moving-integration
/// pipeline, an adaptive threshold of 0.6 times the local maximum within ±2 s,
/// and a 200 ms refractory period. Every filter stage is centered, so detected
/// positions carry no group delay.
pub fn detect_r_peaks(ecg: &[f64], rate_hz: f64) -> Result<RrSeries> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::InvalidParameter(format!("ECG sample rate {rate_hz}")));
    }
    let need = (2.0 * rate_hz).ceil() as usize;
    if ecg.len() < need {
        return Err(Error::TooShort { need, got: ecg.len() });
    }
    let samples = |s: f64| ((s * rate_hz).round() as usize).max(1);

    let baseline = moving_average(ecg, samples(BASELINE_S) | 1);
    let highpass: Vec<f64> = ecg.iter().zip(&baseline).map(|(x, b)| x - b).collect();
    let bandpass = moving_average(&highpass, samples(LOWPASS_S) | 1);

    let n = bandpass.len();
    let squared: Vec<f64> = (0..n)
        .map(|i| {
            let d = 0.5 * (bandpass[(i + 1).min(n - 1)] - bandpass[i.saturating_sub(1)]);
            d * d
        })
        .collect();
    let energy = moving_average(&squared, samples(INTEGRATION_S) | 1);

    let peak_energy = energy.iter().copied().fold(0.0, f64::max);
    // Rounding residue of a flat line is not a beat.
    let scale = ecg.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    if peak_energy <= (1e-9 * scale).powi(2) {
        return Err(Error::HrvUnavailable);
    }
    let local_max = sliding_max(&energy, samples(THRESHOLD_SPAN_S));
    // Noise far below the strongest beat never qualifies, even in a quiet stretch.
    let floor = 1e-6 * peak_energy;

    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        let above = |j: usize| energy[j] >= THRESHOLD_FRACTION * local_max[j] && energy[j] > floor;
        if !above(i) {
            i += 1;
            continue;
        }
        let mut best = i;
        while i < n && above(i) {
            if energy[i] > energy[best] {
                best = i;
            }
            i += 1;
        }
        candidates.push(best);
    }

    let refractory = REFRACTORY_S * rate_hz;
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        match kept.last_mut() {
            Some(last) if ((c - *last) as f64) < refractory => {
                if energy[c] > energy[*last] {
                    *last = c;
                }
            }
            _ => kept.push(c),
        }
    }

    let reach = samples(REFINE_S);
    let mut peaks: Vec<usize> = kept
        .into_iter()
        .map(|c| {
            let lo = c.saturating_sub(reach);
            let hi = (c + reach + 1).min(n);
            (lo..hi).fold(lo, |b, j| if highpass[j] > highpass[b] { j } else { b })
        })
        .collect();
    peaks.dedup();

    if peaks.len() < 2 {
        return Err(Error::HrvUnavailable);
    }
    Ok(RrSeries::from_peaks(peaks.into_iter().map(|p| p as f64 / rate_hz).collect()))
}

/// Maximum of `xs` over `[i - half, i + half]` for every `i`.
fn sliding_max(xs: &[f64], half: usize) -> Vec<f64> {
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while dq.back().is_some_and(|&b| xs[b] <= xs[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        while dq.front().is_some_and(|&f| f + half < i) {
            dq.pop_front();
        }
        out.push(xs[*dq.front().expect("window is never empty")]);
    }
    out
}
