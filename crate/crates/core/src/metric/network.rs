use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SCORE_DIM, TEAM_FIGHT_DIM};
use crate::nn::{Activation, Dense, Grads, Mlp, Trace};

/// Layer widths of the embedding network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkShape {
    pub team_hidden: usize,
    pub team_out: usize,
    pub personality_hidden: usize,
    pub personality_out: usize,
    pub head_hidden: usize,
}

impl Default for NetworkShape {
    fn default() -> Self {
        NetworkShape { team_hidden: 32, team_out: 16, personality_hidden: 16, personality_out: 8, head_hidden: 16 }
    }
}

/// Team-fight branch, optional personality branch on the score-related data,
/// and a head on their concatenation. Rectifiers on hidden layers, linear
/// output. A Siamese pair is this one network applied twice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingNetwork {
    pub team: Mlp,
    pub personality: Option<Mlp>,
    pub head: Mlp,
}

#[derive(Debug, Clone)]
pub struct EmbedTrace {
    pub team: Trace,
    pub personality: Option<Trace>,
    pub head: Trace,
}

impl EmbedTrace {
    pub fn output(&self) -> &[f64] {
        self.head.output()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrads {
    pub team: Grads,
    pub personality: Option<Grads>,
    pub head: Grads,
}

impl EmbeddingGrads {
    pub fn zeros_like(net: &EmbeddingNetwork) -> Self {
        EmbeddingGrads {
            team: Grads::zeros_like(&net.team),
            personality: net.personality.as_ref().map(Grads::zeros_like),
            head: Grads::zeros_like(&net.head),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.team.scale(s);
        if let Some(p) = &mut self.personality {
            p.scale(s);
        }
        self.head.scale(s);
    }

    /// Same order as [`EmbeddingNetwork::params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.team.flat();
        if let Some(p) = &self.personality {
            v.extend(p.flat());
        }
        v.extend(self.head.flat());
        v
    }
}

impl EmbeddingNetwork {
    pub fn new<R: Rng>(shape: &NetworkShape, with_personality: bool, output_dim: usize, rng: &mut R) -> Self {
        let team = Mlp::new(vec![
            Dense::he_uniform(TEAM_FIGHT_DIM, shape.team_hidden, Activation::Relu, rng),
            Dense::he_uniform(shape.team_hidden, shape.team_out, Activation::Relu, rng),
        ]);
        let personality = with_personality.then(|| {
            Mlp::new(vec![
                Dense::he_uniform(SCORE_DIM, shape.personality_hidden, Activation::Relu, rng),
                Dense::he_uniform(shape.personality_hidden, shape.personality_out, Activation::Relu, rng),
            ])
        });
        let concat = shape.team_out + if with_personality { shape.personality_out } else { 0 };
        let head = Mlp::new(vec![
            Dense::he_uniform(concat, shape.head_hidden, Activation::Relu, rng),
            Dense::he_uniform(shape.head_hidden, output_dim, Activation::Identity, rng),
        ]);
        EmbeddingNetwork { team, personality, head }
    }

    pub fn output_dim(&self) -> usize {
        self.head.output_dim()
    }

    pub fn forward_trace(&self, team_fight: &[f64], score: &[f64]) -> EmbedTrace {
        let team = self.team.forward_trace(team_fight);
        let personality = self.personality.as_ref().map(|p| p.forward_trace(score));
        let mut concat = team.output().to_vec();
        if let Some(p) = &personality {
            concat.extend_from_slice(p.output());
        }
        let head = self.head.forward_trace(&concat);
        EmbedTrace { team, personality, head }
    }

    pub fn forward(&self, team_fight: &[f64], score: &[f64]) -> Vec<f64> {
        let mut concat = self.team.forward(team_fight);
        if let Some(p) = &self.personality {
            concat.extend(p.forward(score));
        }
        self.head.forward(&concat)
    }

    /// Accumulates parameter gradients for `dL/d output`.
    pub fn backward(&self, trace: &EmbedTrace, grad_out: &[f64], grads: &mut EmbeddingGrads) {
        let g_concat = self.head.backward(&trace.head, grad_out, &mut grads.head);
        let split = self.team.output_dim();
        self.team.backward(&trace.team, &g_concat[..split], &mut grads.team);
        if let (Some(p), Some(t), Some(g)) = (&self.personality, &trace.personality, &mut grads.personality) {
            p.backward(t, &g_concat[split..], g);
        }
    }

    pub fn step(&mut self, grads: &EmbeddingGrads, lr: f64) {
        self.team.step(&grads.team, lr);
        if let (Some(p), Some(g)) = (&mut self.personality, &grads.personality) {
            p.step(g, lr);
        }
        self.head.step(&grads.head, lr);
    }

    fn parts_mut(&mut self) -> Vec<&mut Mlp> {
        let mut v = vec![&mut self.team];
        if let Some(p) = &mut self.personality {
            v.push(p);
        }
        v.push(&mut self.head);
        v
    }

    pub fn param_count(&self) -> usize {
        self.params().len()
    }

    /// Team branch, personality branch, head.
    pub fn params(&self) -> Vec<f64> {
        let mut v = self.team.params();
        if let Some(p) = &self.personality {
            v.extend(p.params());
        }
        v.extend(self.head.params());
        v
    }

    pub fn param_mut(&mut self, mut idx: usize) -> &mut f64 {
        for part in self.parts_mut() {
            let n = part.param_count();
            if idx < n {
                return part.param_mut(idx);
            }
            idx -= n;
        }
        panic!("parameter index out of range")
    }

    pub fn is_finite(&self) -> bool {
        self.team.is_finite() && self.personality.as_ref().is_none_or(Mlp::is_finite) && self.head.is_finite()
    }
}
