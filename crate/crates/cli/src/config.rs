use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use guxas_core::dtw::MatchConfig;
use guxas_core::gut::GutParams;
use guxas_core::labeler::LabelerConfig;
use guxas_core::metric::MetricConfig;
use guxas_core::physio::PhysioConfig;
use guxas_core::synth::ScenarioConfig;
use serde::{Deserialize, Serialize};

/// Input locations. Relative paths resolve against the working directory;
/// command-line flags take precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub session: Option<PathBuf>,
    pub videos: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub game: Option<PathBuf>,
    pub timeline: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSettings {
    pub scenario: ScenarioConfig,
    pub records: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        SynthSettings { scenario: ScenarioConfig::default(), records: 300 }
    }
}

/// Fill colors for GUT 2, 1 and 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub colors: [String; 3],
    pub width: f64,
    pub height: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            colors: ["#08306b".into(), "#2171b5".into(), "#9ecae1".into()],
            width: 960.0,
            height: 320.0,
        }
    }
}

impl ReportConfig {
    pub fn color(&self, gut: usize) -> &str {
        &self.colors[2 - gut]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub physio: PhysioConfig,
    pub matching: MatchConfig,
    pub labeler: LabelerConfig,
    pub gut: GutParams,
    pub metric: MetricConfig,
    pub synth: SynthSettings,
    pub report: ReportConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Replaces every module seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.synth.scenario.seed = seed;
        self.synth.scenario.session_id = format!("synth-{seed}");
        self.labeler.seed = seed;
        self.metric.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.physio.windowing;
        if !(w.window_s > 0.0 && w.step_s > 0.0 && w.window_s.is_finite() && w.step_s.is_finite()) {
            bail!("configuration error: window {} s / step {} s must be positive", w.window_s, w.step_s);
        }
        if !(w.sdann_segment_s > 0.0) {
            bail!("configuration error: SDANN segment must be positive, got {}", w.sdann_segment_s);
        }
        let l = &self.labeler;
        if l.hidden == 0 {
            bail!("configuration error: labeler.hidden must be at least 1");
        }
        if !(l.lr > 0.0 && l.lr.is_finite()) {
            bail!("configuration error: labeler.lr must be positive, got {}", l.lr);
        }
        if !(l.c > 1.0 && l.c < 2.0) {
            bail!("configuration error: labeler.c must lie in (1, 2), got {}", l.c);
        }
        if !(0.0..=1.0).contains(&l.threshold) {
            bail!("configuration error: labeler.threshold must lie in [0, 1], got {}", l.threshold);
        }
        self.gut.validate().context("configuration error")?;
        let m = &self.metric;
        if !(m.split_ratio > 0.0 && m.split_ratio < 1.0) {
            bail!("configuration error: metric.split_ratio must lie in (0, 1), got {}", m.split_ratio);
        }
        if m.epochs == 0 || m.batch_size == 0 {
            bail!("configuration error: metric.epochs and metric.batch_size must be at least 1");
        }
        if !(m.lr >= 0.0 && m.lr.is_finite()) || !(m.margin > 0.0) {
            bail!("configuration error: metric.lr must be ≥ 0 and metric.margin > 0");
        }
        if m.class_weights.iter().any(|w| !(*w > 0.0)) {
            bail!("configuration error: metric.class_weights must be positive");
        }
        if self.synth.records < 3 {
            bail!("configuration error: synth.records must be at least 3");
        }
        Ok(())
    }
}

/// The flag value, else the configured path, else an error naming both.
pub fn resolve(flag: Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    let path = flag
        .or_else(|| configured.clone())
        .with_context(|| format!("no {what} given: pass --{what} or set paths.{what} in the config"))?;
    if !path.exists() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(path)
}
