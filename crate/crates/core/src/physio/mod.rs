//! Physiological signal ingestion, denoising, R-peak/HRV derivation and windowed
//! feature extraction.

mod denoise;
mod features;
mod hrv;
pub mod io;
mod rpeak;
mod session;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use denoise::{
    denoise_and_normalize, moving_average, smooth, ChannelNorm, DenoiseConfig, Denoised, NormStats,
};
pub use features::{
    extract_features, feature_names, FeatureMatrix, FeatureRole, FeatureVector, MatrixLabel,
    Windowing, FEATURE_DIM,
};
pub use hrv::{hrv_features, HrvFeatures};
pub use rpeak::{detect_r_peaks, RrSeries, RR_MAX_MS, RR_MIN_MS};
pub use session::{
    featurize_all, featurize_session, featurize_video, window_centres, PhysioConfig, SessionFeatures,
};

pub const ECG_RATE_HZ: f64 = 182.0;
pub const EEG_RATE_HZ: f64 = 160.6;
/// GSR is sampled by the same microcontroller as the ECG.
pub const GSR_RATE_HZ: f64 = 182.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Ecg,
    Gsr,
    Alpha,
    Delta,
    Gamma,
    HighBeta,
    LowBeta,
    Theta,
    Attention,
    Meditation,
}

impl Channel {
    /// Feature-vector order.
    pub const ALL: [Channel; 10] = [
        Channel::Ecg,
        Channel::Gsr,
        Channel::Alpha,
        Channel::Delta,
        Channel::Gamma,
        Channel::HighBeta,
        Channel::LowBeta,
        Channel::Theta,
        Channel::Attention,
        Channel::Meditation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Ecg => "ecg",
            Channel::Gsr => "gsr",
            Channel::Alpha => "alpha",
            Channel::Delta => "delta",
            Channel::Gamma => "gamma",
            Channel::HighBeta => "high_beta",
            Channel::LowBeta => "low_beta",
            Channel::Theta => "theta",
            Channel::Attention => "attention",
            Channel::Meditation => "meditation",
        }
    }

    pub fn default_rate(self) -> f64 {
        match self {
            Channel::Ecg => ECG_RATE_HZ,
            Channel::Gsr => GSR_RATE_HZ,
            _ => EEG_RATE_HZ,
        }
    }

    pub fn is_eeg(self) -> bool {
        !matches!(self, Channel::Ecg | Channel::Gsr)
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Channel::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| format!("unknown channel `{s}`"))
    }
}

/// One channel's samples at a fixed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub rate_hz: f64,
    pub samples: Vec<f64>,
}

impl Signal {
    pub fn new(rate_hz: f64, samples: Vec<f64>) -> Self {
        Signal { rate_hz, samples }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate_hz
    }
}

/// A multi-channel physiological recording. Times inside the record are seconds
/// from its first sample; `start_time` anchors the record on an absolute clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysioRecord {
    pub session_id: String,
    pub start_time: f64,
    pub channels: BTreeMap<Channel, Signal>,
}

impl PhysioRecord {
    pub fn new(session_id: impl Into<String>, start_time: f64) -> Self {
        PhysioRecord { session_id: session_id.into(), start_time, channels: BTreeMap::new() }
    }

    pub fn with_channel(mut self, channel: Channel, signal: Signal) -> Self {
        self.channels.insert(channel, signal);
        self
    }

    pub fn channel(&self, c: Channel) -> Result<&Signal> {
        self.channels.get(&c).ok_or(Error::MissingChannel(c))
    }

    pub fn validate(&self) -> Result<()> {
        for (&c, s) in &self.channels {
            if s.samples.is_empty() {
                return Err(Error::EmptyChannel(c));
            }
            if !(s.rate_hz.is_finite() && s.rate_hz > 0.0) {
                return Err(Error::InvalidRate { channel: c, rate: s.rate_hz });
            }
            if s.samples.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteSample(c));
            }
        }
        Ok(())
    }

    /// Requires every channel of the feature vector.
    pub fn validate_complete(&self) -> Result<()> {
        self.validate()?;
        for c in Channel::ALL {
            self.channel(c)?;
        }
        Ok(())
    }

    /// Shortest channel duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.channels.values().map(Signal::duration_s).fold(f64::INFINITY, f64::min)
    }
}
