//! GUT prediction from game process data: an embedding network trained as a
//! classifier or as a Siamese twin, class-mean prediction and evaluation.

mod data;
mod eval;
mod loss;
mod network;
mod train;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gut::Gut;

pub use data::{make_pairs, oversample, split_dataset, Pair, Scaler};
pub use eval::{evaluate, Metrics};
pub use loss::{contrastive_loss, contrastive_loss_with_grad, weighted_ce_loss, weighted_ce_loss_with_grad, softmax};
pub use network::{EmbedTrace, EmbeddingGrads, EmbeddingNetwork, NetworkShape};
pub use train::{
    predict, run_variant, train_baseline_classifier, train_siamese, ClassBaselines, ClassifierOptions, GutModel,
    MetricConfig, Sample, SiameseOptions, TrainReport, Variant,
};

pub const TEAM_FIGHT_DIM: usize = 11;
pub const SCORE_DIM: usize = 33;
pub const EMBEDDING_DIM: usize = 8;
pub const DEFAULT_CLASS_WEIGHTS: [f64; 3] = [2.0, 1.0, 2.0];

/// One game-play sample: team-fight and score-related measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamePlayRecord {
    pub team_fight: Vec<f64>,
    pub score_related: Vec<f64>,
    #[serde(rename = "path", default, skip_serializing_if = "Option::is_none")]
    pub hero_path: Option<Vec<(f64, f64, f64)>>,
    #[serde(rename = "gut", default, skip_serializing_if = "Option::is_none")]
    pub gut_label: Option<Gut>,
    /// Session time, used to take labels from an experience timeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
}

impl GamePlayRecord {
    pub fn validate(&self) -> Result<()> {
        if self.team_fight.len() != TEAM_FIGHT_DIM {
            return Err(Error::InvalidRecord(format!(
                "team_fight has {} values, expected {TEAM_FIGHT_DIM}",
                self.team_fight.len()
            )));
        }
        if self.score_related.len() != SCORE_DIM {
            return Err(Error::InvalidRecord(format!(
                "score_related has {} values, expected {SCORE_DIM}",
                self.score_related.len()
            )));
        }
        if self.team_fight.iter().chain(&self.score_related).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRecord("non-finite feature".into()));
        }
        Ok(())
    }
}

pub fn read_game_records<R: Read>(reader: R) -> Result<Vec<GamePlayRecord>> {
    let records: Vec<GamePlayRecord> = serde_json::from_reader(reader)?;
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|e| Error::InvalidRecord(format!("record {i}: {e}")))?;
    }
    Ok(records)
}

pub fn write_game_records<W: Write>(writer: W, records: &[GamePlayRecord]) -> Result<()> {
    serde_json::to_writer_pretty(writer, records)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_field_names() {
        let r = GamePlayRecord {
            team_fight: vec![0.0; 11],
            score_related: vec![1.0; 33],
            hero_path: Some(vec![(0.0, 1.0, 2.0)]),
            gut_label: Some(Gut::Best),
            t: None,
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["gut"], 2);
        assert_eq!(v["path"][0][2], 2.0);
        assert!(v.get("t").is_none());
        let mut buf = Vec::new();
        write_game_records(&mut buf, std::slice::from_ref(&r)).unwrap();
        assert_eq!(read_game_records(&buf[..]).unwrap(), vec![r]);
    }

    #[test]
    fn unlabeled_and_pathless_records_parse() {
        let json = format!(r#"[{{"team_fight": {:?}, "score_related": {:?}}}]"#, [0.5; 11], [0.0; 33]);
        let recs = read_game_records(json.as_bytes()).unwrap();
        assert_eq!(recs[0].gut_label, None);
        assert_eq!(recs[0].hero_path, None);
    }

    #[test]
    fn wrong_widths_rejected() {
        let json = format!(r#"[{{"team_fight": {:?}, "score_related": {:?}}}]"#, [0.5; 10], [0.0; 33]);
        assert!(matches!(read_game_records(json.as_bytes()), Err(Error::InvalidRecord(_))));
        let json = r#"[{"team_fight": [], "score_related": [], "gut": 3}]"#;
        assert!(read_game_records(json.as_bytes()).is_err());
    }
}
