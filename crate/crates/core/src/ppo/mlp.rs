use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("observation has {got} entries, policy expects {expected}")]
pub struct ShapeError {
    pub expected: usize,
    pub got: usize,
}

/// Shared two-layer tanh trunk with one categorical head per decision
/// dimension and a scalar value head. All tensors live in one flat vector:
/// W1, b1, W2, b2, Wp, bp, Wv, bv, weights row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub obs_dim: usize,
    pub hidden: [usize; 2],
    pub n_heads: usize,
    pub n_actions: usize,
    pub theta: Vec<f64>,
}

/// A named view of one parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

fn specs(obs: usize, [h1, h2]: [usize; 2], logits: usize) -> [TensorSpec; 8] {
    let shapes = [
        ("w1", h1, obs),
        ("b1", h1, 1),
        ("w2", h2, h1),
        ("b2", h2, 1),
        ("wp", logits, h2),
        ("bp", logits, 1),
        ("wv", 1, h2),
        ("bv", 1, 1),
    ];
    let mut offset = 0;
    shapes.map(|(name, rows, cols)| {
        let s = TensorSpec { name, rows, cols, offset };
        offset += rows * cols;
        s
    })
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: f64,
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let n_in = x.len();
    out.extend(b.iter().enumerate().map(|(i, bi)| {
        let row = &w[i * n_in..(i + 1) * n_in];
        bi + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
    }));
}

impl PolicyParams {
    pub fn zeros(obs_dim: usize, hidden: [usize; 2], n_heads: usize, n_actions: usize) -> PolicyParams {
        let n = specs(obs_dim, hidden, n_heads * n_actions).iter().map(TensorSpec::len).sum();
        PolicyParams { obs_dim, hidden, n_heads, n_actions, theta: vec![0.0; n] }
    }

    /// Uniform fan-in/fan-out scaled weights, near-uniform initial policy,
    /// zero biases.
    pub fn init<R: Rng + ?Sized>(
        obs_dim: usize,
        hidden: [usize; 2],
        n_heads: usize,
        n_actions: usize,
        rng: &mut R,
    ) -> PolicyParams {
        let mut p = Self::zeros(obs_dim, hidden, n_heads, n_actions);
        for s in p.tensors() {
            if s.cols == 1 && s.name.starts_with('b') {
                continue;
            }
            let gain = match s.name {
                "wp" => 0.01,
                _ => 1.0,
            };
            let a = gain * math::sqrt(6.0 / (s.rows + s.cols) as f64);
            for x in &mut p.theta[s.range()] {
                *x = rng.random_range(-a..=a);
            }
        }
        p
    }

    pub fn tensors(&self) -> [TensorSpec; 8] {
        specs(self.obs_dim, self.hidden, self.n_logits())
    }

    pub fn n_logits(&self) -> usize {
        self.n_heads * self.n_actions
    }

    pub fn shape_matches(&self) -> bool {
        self.theta.len() == self.tensors().iter().map(TensorSpec::len).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|x| x.is_finite())
    }

    /// One line summary of the architecture.
    pub fn describe(&self) -> String {
        alloc::format!(
            "{} -> {}x{} tanh -> {} heads x {} + value",
            self.obs_dim,
            self.hidden[0],
            self.hidden[1],
            self.n_heads,
            self.n_actions
        )
    }

    fn t(&self, i: usize) -> &[f64] {
        &self.theta[self.tensors()[i].range()]
    }

    pub fn forward_into(&self, obs: &[f64], act: &mut Activations) -> Result<(), ShapeError> {
        if obs.len() != self.obs_dim {
            return Err(ShapeError { expected: self.obs_dim, got: obs.len() });
        }
        affine(self.t(0), self.t(1), obs, &mut act.h1);
        act.h1.iter_mut().for_each(|x| *x = math::tanh(*x));
        affine(self.t(2), self.t(3), &act.h1, &mut act.h2);
        act.h2.iter_mut().for_each(|x| *x = math::tanh(*x));
        affine(self.t(4), self.t(5), &act.h2, &mut act.logits);
        let wv = self.t(6);
        act.value = self.t(7)[0] + wv.iter().zip(&act.h2).map(|(a, b)| a * b).sum::<f64>();
        Ok(())
    }

    /// Per-head logits, concatenated, and the value estimate.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64), ShapeError> {
        let mut act = Activations::default();
        self.forward_into(obs, &mut act)?;
        Ok((act.logits, act.value))
    }

    /// Accumulate parameter gradients into `grad` given the loss gradient
    /// with respect to the logits and the value.
    pub fn backward(&self, obs: &[f64], act: &Activations, d_logits: &[f64], d_value: f64, grad: &mut [f64]) {
        let [s_w1, s_b1, s_w2, s_b2, s_wp, s_bp, s_wv, s_bv] = self.tensors();
        let (h1, h2) = (&act.h1, &act.h2);
        let wp = &self.theta[s_wp.range()];
        let wv = &self.theta[s_wv.range()];
        let w2 = &self.theta[s_w2.range()];
        let nh2 = h2.len();
        let nh1 = h1.len();
        let mut d_h2 = vec![0.0; nh2];
        for (i, &g) in d_logits.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad[s_bp.offset + i] += g;
            let row = s_wp.offset + i * nh2;
            for j in 0..nh2 {
                grad[row + j] += g * h2[j];
                d_h2[j] += g * wp[i * nh2 + j];
            }
        }
        grad[s_bv.offset] += d_value;
        for j in 0..nh2 {
            grad[s_wv.offset + j] += d_value * h2[j];
            d_h2[j] += d_value * wv[j];
        }
        let d_z2: Vec<f64> = d_h2.iter().zip(h2).map(|(d, h)| d * (1.0 - h * h)).collect();
        let mut d_h1 = vec![0.0; nh1];
        for (i, &g) in d_z2.iter().enumerate() {
            grad[s_b2.offset + i] += g;
            let row = s_w2.offset + i * nh1;
            for j in 0..nh1 {
                grad[row + j] += g * h1[j];
                d_h1[j] += g * w2[i * nh1 + j];
            }
        }
        let n_in = obs.len();
        for (i, (d, h)) in d_h1.iter().zip(h1).enumerate() {
            let g = d * (1.0 - h * h);
            grad[s_b1.offset + i] += g;
            let row = s_w1.offset + i * n_in;
            for j in 0..n_in {
                grad[row + j] += g * obs[j];
            }
        }
    }
}
