use serde::{Deserialize, Serialize};

use super::{
    denoise_and_normalize, detect_r_peaks, extract_features, smooth, Channel, DenoiseConfig,
    FeatureMatrix, FeatureRole, MatrixLabel, NormStats, PhysioRecord, RrSeries, Windowing,
};
use crate::affect::Affect;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysioConfig {
    pub denoise: DenoiseConfig,
    pub windowing: Windowing,
}

/// Everything the matcher needs from one session and its video recordings.
#[derive(Debug, Clone)]
pub struct SessionFeatures {
    pub sliding: FeatureMatrix,
    pub whole: FeatureMatrix,
    pub videos: Vec<FeatureMatrix>,
    pub norm: NormStats,
    pub zero_variance: Vec<Channel>,
}

fn r_peaks(raw: &PhysioRecord) -> Result<Option<RrSeries>> {
    let ecg = raw.channel(Channel::Ecg)?;
    match detect_r_peaks(&ecg.samples, ecg.rate_hz) {
        Ok(rr) => Ok(Some(rr)),
        Err(Error::HrvUnavailable | Error::TooShort { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Smooths and z-scores the session, then extracts its Sliding and Whole
/// matrices.
pub fn featurize_session(raw: &PhysioRecord, cfg: &PhysioConfig) -> Result<(FeatureMatrix, FeatureMatrix, NormStats, Vec<Channel>)> {
    raw.validate_complete()?;
    let den = denoise_and_normalize(raw, &cfg.denoise)?;
    let rr = r_peaks(raw)?;
    let sliding = extract_features(&den.record, rr.as_ref(), FeatureRole::Sliding, &cfg.windowing)?;
    let whole = extract_features(&den.record, rr.as_ref(), FeatureRole::Whole, &cfg.windowing)?;
    Ok((sliding, whole, den.stats, den.zero_variance))
}

/// A video recording becomes one labeled row, normalized with the session's
/// statistics so that levels stay comparable.
pub fn featurize_video(
    raw: &PhysioRecord,
    affect: Affect,
    norm: &NormStats,
    cfg: &PhysioConfig,
) -> Result<FeatureMatrix> {
    raw.validate_complete()?;
    let smoothed = smooth(raw, &cfg.denoise)?;
    let (record, _) = norm.apply(&smoothed)?;
    let rr = r_peaks(raw)?;
    Ok(extract_features(&record, rr.as_ref(), FeatureRole::Video, &cfg.windowing)?
        .with_label(MatrixLabel::Affect(affect)))
}

pub fn featurize_all(
    session: &PhysioRecord,
    videos: &[(Affect, PhysioRecord)],
    cfg: &PhysioConfig,
) -> Result<SessionFeatures> {
    let (sliding, whole, norm, zero_variance) = featurize_session(session, cfg)?;
    let videos = videos
        .iter()
        .map(|(a, rec)| featurize_video(rec, *a, &norm, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(SessionFeatures { sliding, whole, videos, norm, zero_variance })
}

/// Centre time of every sliding window.
pub fn window_centres(m: &FeatureMatrix) -> Vec<f64> {
    m.window_starts.iter().map(|s| s + 0.5 * m.window_s).collect()
}
