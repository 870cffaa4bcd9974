use thiserror::Error;

use crate::physio::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel {0} has no samples")]
    EmptyChannel(Channel),
    #[error("channel {0} is missing from the record")]
    MissingChannel(Channel),
    #[error("channel {channel} has invalid sample rate {rate}")]
    InvalidRate { channel: Channel, rate: f64 },
    #[error("channel {0} contains a non-finite sample")]
    NonFiniteSample(Channel),
    #[error("fewer than two usable R-peaks; HRV unavailable")]
    HrvUnavailable,
    #[error("record lasts {duration_s:.3} s, shorter than the {window_s} s window")]
    RecordTooShort { duration_s: f64, window_s: f64 },
    #[error("invalid window: size {window_s} s, step {step_s} s")]
    InvalidWindow { window_s: f64, step_s: f64 },
    #[error("empty sequence")]
    EmptySequence,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("wrong feature-matrix role: expected {expected}, got {got}")]
    WrongRole { expected: &'static str, got: &'static str },
    #[error("no video feature matrices supplied")]
    NoVideos,
    #[error("no video for affect {0}")]
    MissingAffect(&'static str),
    #[error("correlation undefined: constant input")]
    ConstantInput,
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sequence too short: need at least {need}, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point lies on the {0} axis; attraction is singular")]
    SingularForce(&'static str),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("class {0} has no training samples")]
    MissingClass(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("covariance for class {0} is not positive definite")]
    DegenerateCovariance(usize),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
