//! Versioned JSON dump of policy tensors with their shapes.

use railsched_core::ppo::PolicyParams;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "railsched-policy";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    /// `[rows, cols]`, row-major.
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Where a checkpoint came from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub iterations: usize,
    pub seed: u64,
    pub final_mean_return: f64,
    /// Digest of the training inputs and configuration.
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub obs_dim: usize,
    pub hidden: [usize; 2],
    pub n_heads: usize,
    pub n_actions: usize,
    pub tensors: Vec<Tensor>,
    #[serde(default)]
    pub provenance: Provenance,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("not a policy checkpoint (format {0:?})")]
    Format(String),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("tensor {name}: expected shape {expected:?}, got {got:?}")]
    Shape { name: String, expected: [usize; 2], got: [usize; 2] },
    #[error("expected {expected} tensors, got {got}")]
    Count { expected: usize, got: usize },
    #[error("non-finite value in tensor {0}")]
    NonFinite(String),
}

impl Checkpoint {
    pub fn from_params(p: &PolicyParams, provenance: Provenance) -> Checkpoint {
        let tensors = p
            .tensors()
            .iter()
            .map(|s| Tensor { name: s.name.to_string(), shape: [s.rows, s.cols], data: p.theta[s.range()].to_vec() })
            .collect();
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            obs_dim: p.obs_dim,
            hidden: p.hidden,
            n_heads: p.n_heads,
            n_actions: p.n_actions,
            tensors,
            provenance,
        }
    }

    pub fn to_params(&self) -> Result<PolicyParams, CheckpointError> {
        if self.format != FORMAT {
            return Err(CheckpointError::Format(self.format.clone()));
        }
        if self.version != VERSION {
            return Err(CheckpointError::Version(self.version));
        }
        let mut p = PolicyParams::zeros(self.obs_dim, self.hidden, self.n_heads, self.n_actions);
        let specs = p.tensors();
        if specs.len() != self.tensors.len() {
            return Err(CheckpointError::Count { expected: specs.len(), got: self.tensors.len() });
        }
        for (s, t) in specs.iter().zip(&self.tensors) {
            let expected = [s.rows, s.cols];
            if t.name != s.name || t.shape != expected || t.data.len() != s.len() {
                return Err(CheckpointError::Shape { name: t.name.clone(), expected, got: t.shape });
            }
            if t.data.iter().any(|x| !x.is_finite()) {
                return Err(CheckpointError::NonFinite(t.name.clone()));
            }
            p.theta[s.range()].copy_from_slice(&t.data);
        }
        Ok(p)
    }

    pub fn to_json(&self) -> Result<String, CheckpointError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn parse(text: &str) -> Result<Checkpoint, CheckpointError> {
        Ok(serde_json::from_str(text)?)
    }
}
