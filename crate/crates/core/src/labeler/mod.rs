//! Per-second affect and flow labeling from DTW match sequences.

mod loss;
mod network;
mod pearson;
mod timeline;
mod train;

use serde::{Deserialize, Serialize};

use crate::affect::Valence;
use crate::dtw::MatchSequence;
use crate::error::{Error, Result};
use crate::gut::GutParams;

pub use loss::{
    labeler_loss, labeler_loss_with_grad, loss_from_correlations, ListGrads, LossReport, DEFAULT_C,
};
pub use network::{otsu_threshold, LabelerInit, LabelerNetwork, SoftLabels};
pub use pearson::{pearson, pearson_with_grad};
pub use timeline::{present, ExperienceTimeline, TimelineRecord};
pub use train::{train_labeler, TrainHistory, TrainOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelerConfig {
    pub hidden: usize,
    pub steps: usize,
    pub lr: f64,
    pub seed: u64,
    pub init: LabelerInit,
    pub c: f64,
    pub threshold: f64,
    pub backtrack: bool,
    pub valence: Valence,
    /// Whether the session as a whole counts as flow.
    pub whole_is_flow: bool,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            hidden: 16,
            steps: 1000,
            lr: 0.01,
            seed: 0,
            init: LabelerInit::default(),
            c: DEFAULT_C,
            threshold: 0.5,
            backtrack: true,
            valence: Valence::default(),
            whole_is_flow: true,
        }
    }
}

impl LabelerConfig {
    fn train_options(&self) -> TrainOptions {
        TrainOptions { steps: self.steps, lr: self.lr, c: self.c, backtrack: self.backtrack }
    }
}

/// A trained labeler as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelerModel {
    pub config: LabelerConfig,
    pub network: LabelerNetwork,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

/// Initializes and trains a labeler on one session's match sequences.
pub fn fit(vm: &MatchSequence, wm: &MatchSequence, cfg: &LabelerConfig) -> Result<(LabelerModel, TrainHistory)> {
    if vm.len() < 2 {
        return Err(Error::TooShort { need: 2, got: vm.len() });
    }
    let net = LabelerNetwork::init(cfg, vm, wm)?;
    let (network, history) = train_labeler(&net, vm, wm, &cfg.valence, &cfg.train_options())?;
    let report = network.loss(vm, wm, &cfg.valence, cfg.c)?;
    let model = LabelerModel {
        config: *cfg,
        network,
        initial_loss: history.losses[0],
        final_loss: report.loss,
        x1: report.x1,
        x2: report.x2,
    };
    Ok((model, history))
}

/// Thresholds the network's probabilities, counts PA/NA, and classifies each
/// second. X1 and X2 are taken over the whole session from the soft lists.
pub fn label_session(
    net: &LabelerNetwork,
    vm: &MatchSequence,
    wm: &MatchSequence,
    times: &[f64],
    cfg: &LabelerConfig,
    params: &GutParams,
) -> Result<ExperienceTimeline> {
    params.validate()?;
    let soft = net.forward(vm, wm)?;
    let (pa, na) = soft.aggregates(&cfg.valence);
    let report = labeler_loss(&pa, &na, &soft.flow, cfg.c)?;
    ExperienceTimeline::from_probabilities(
        times,
        &soft.affect,
        &soft.flow,
        cfg.threshold,
        report.x1,
        report.x2,
        &cfg.valence,
        params,
    )
}
