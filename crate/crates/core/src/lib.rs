//! Game-UX state analysis.
//!
//! The crate is organised the way the data flows:
//!
//! * [`physio`] turns raw ECG/GSR/EEG recordings into windowed feature matrices.
//! * [`dtw`] matches sliding windows against affect prototypes and the whole-session profile.
//! * [`labeler`] maps match distances to per-second affect/flow lists with a small
//!   network trained on a Pearson-correlation objective.
//! * [`gut`] holds the motivational-flow tunnel geometry and the fuzzy GUT-state rules.
//! * [`metric`] predicts GUT states from game process data with a Siamese network.
//! * [`synth`] generates deterministic fixtures with known ground truth.

pub mod affect;
pub mod dtw;
pub mod error;
pub mod gut;
pub mod labeler;
pub mod metric;
pub mod nn;
pub mod physio;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
