//! The seven induced affects and their valence partition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Affect {
    Pleasure,
    Trust,
    Lucky,
    Surprise,
    Disgust,
    Confusion,
    Regret,
}

impl Affect {
    pub const ALL: [Affect; 7] = [
        Affect::Pleasure,
        Affect::Trust,
        Affect::Lucky,
        Affect::Surprise,
        Affect::Disgust,
        Affect::Confusion,
        Affect::Regret,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Affect> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Affect::Pleasure => "pleasure",
            Affect::Trust => "trust",
            Affect::Lucky => "lucky",
            Affect::Surprise => "surprise",
            Affect::Disgust => "disgust",
            Affect::Confusion => "confusion",
            Affect::Regret => "regret",
        }
    }
}

impl fmt::Display for Affect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Affect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Affect::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown affect `{s}`"))
    }
}

/// Which affects count as positive. Everything else is negative.
///
/// Pleasure, trust and lucky are always positive; disgust, confusion and regret
/// always negative. Surprise is ambiguous and defaults to positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Valence {
    pub surprise_positive: bool,
}

impl Default for Valence {
    fn default() -> Self {
        Valence { surprise_positive: true }
    }
}

impl Valence {
    pub fn is_positive(&self, a: Affect) -> bool {
        match a {
            Affect::Pleasure | Affect::Trust | Affect::Lucky => true,
            Affect::Surprise => self.surprise_positive,
            Affect::Disgust | Affect::Confusion | Affect::Regret => false,
        }
    }

    pub fn positive(&self) -> Vec<Affect> {
        Affect::ALL.into_iter().filter(|a| self.is_positive(*a)).collect()
    }

    pub fn negative(&self) -> Vec<Affect> {
        Affect::ALL.into_iter().filter(|a| !self.is_positive(*a)).collect()
    }

    /// (#PA, #NA) for a set of presence flags indexed by [`Affect::index`].
    pub fn counts(&self, flags: &[bool; 7]) -> (u32, u32) {
        let mut pa = 0;
        let mut na = 0;
        for a in Affect::ALL {
            if flags[a.index()] {
                if self.is_positive(a) {
                    pa += 1;
                } else {
                    na += 1;
                }
            }
        }
        (pa, na)
    }
}
