//! Motivational-flow tunnel geometry in challenge/skill/motivation space and the fuzzy
//! rules that turn flow, motivation and PA-flow correlation into a GUT state.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Experience level. Higher is better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Gut {
    Average = 0,
    Good = 1,
    Best = 2,
}

impl Gut {
    pub const ALL: [Gut; 3] = [Gut::Average, Gut::Good, Gut::Best];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Gut> {
        Self::ALL.get(i).copied()
    }
}

impl From<Gut> for u8 {
    fn from(g: Gut) -> u8 {
        g as u8
    }
}

impl TryFrom<u8> for Gut {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        Gut::from_index(v as usize).ok_or_else(|| format!("GUT state must be 0, 1 or 2, got {v}"))
    }
}

impl fmt::Display for Gut {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

/// Minimum PA-flow correlation for the best state.
pub const X1_BEST: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GutParams {
    /// Force constant.
    pub k: f64,
    /// Tunnel radius.
    pub c: f64,
    /// Motivation offset subtracted from #PA − #NA.
    pub d: i32,
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl Default for GutParams {
    fn default() -> Self {
        GutParams { k: 1.0, c: 1.0, d: 2, beta0: 0.0, beta1: 1.0, beta2: -1.0, beta3: 1.0 }
    }
}

impl GutParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParameter(format!("tunnel radius must be positive, got {}", self.c)));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("force constant must be positive, got {}", self.k)));
        }
        if self.d < 0 {
            return Err(Error::InvalidParameter(format!("motivation offset must be ≥ 0, got {}", self.d)));
        }
        Ok(())
    }
}

/// A point in (challenge, skill, motivation) space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuxPoint {
    pub challenge: f64,
    pub skill: f64,
    pub motivation: f64,
}

impl GuxPoint {
    pub fn new(challenge: f64, skill: f64, motivation: f64) -> Self {
        GuxPoint { challenge, skill, motivation }
    }
}

/// Perpendicular distance from `p` to the line x = y = z.
pub fn axis_distance(p: GuxPoint) -> f64 {
    let (x, y, z) = (p.challenge, p.skill, p.motivation);
    ((z - y).powi(2) + (x - z).powi(2) + (y - x).powi(2)).sqrt() / 3f64.sqrt()
}

fn gaussian(d: f64) -> f64 {
    (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal density of the axis distance.
pub fn gux_value(p: GuxPoint) -> f64 {
    gaussian(axis_distance(p))
}

/// Threshold form: the GUX value is at least the density at the tunnel wall.
pub fn in_tunnel(p: GuxPoint, params: &GutParams) -> bool {
    gux_value(p) >= gaussian(params.c)
}

/// The regression-region inequality
/// `(β1(X+Y) + β2·Z + C)² + β3(X+Y)² ≤ C²`, kept for comparison with [`in_tunnel`].
pub fn eq4_predicate(p: GuxPoint, params: &GutParams) -> bool {
    let s = p.challenge + p.skill;
    let lhs = (params.beta1 * s + params.beta2 * p.motivation + params.c).powi(2)
        + params.beta3 * s * s;
    lhs <= params.c * params.c
}

/// Sum of the pulls towards the three coordinate axes, each `K / r²` along the
/// perpendicular from `p` to that axis.
pub fn net_force_direction(p: GuxPoint, params: &GutParams) -> Result<[f64; 3]> {
    let v = [p.challenge, p.skill, p.motivation];
    let mut f = [0.0; 3];
    for (axis, name) in ["challenge", "skill", "motivation"].into_iter().enumerate() {
        // Perpendicular offset from the axis: the point with its own coordinate zeroed.
        let mut off = v;
        off[axis] = 0.0;
        let r2: f64 = off.iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            return Err(Error::SingularForce(name));
        }
        let scale = params.k / (r2 * r2.sqrt());
        for (fi, oi) in f.iter_mut().zip(off) {
            *fi -= scale * oi;
        }
    }
    Ok(f)
}

/// Component of `force` perpendicular to the x = y = z axis.
pub fn off_axis_component(force: [f64; 3]) -> [f64; 3] {
    let m = (force[0] + force[1] + force[2]) / 3.0;
    [force[0] - m, force[1] - m, force[2] - m]
}

/// `#PA − #NA − D`.
pub fn motivation_delta(pa_count: u32, na_count: u32, params: &GutParams) -> i32 {
    pa_count as i32 - na_count as i32 - params.d
}

pub fn classify(flow: bool, delta: i32, x1: f64) -> Gut {
    if !flow {
        Gut::Average
    } else if delta == 0 && x1 >= X1_BEST {
        Gut::Best
    } else {
        Gut::Good
    }
}
