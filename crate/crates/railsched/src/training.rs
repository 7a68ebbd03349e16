//! Training configuration files and the training driver.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use railsched_core::agents::parse_hms;
use railsched_core::env::{
    DisruptionRanges, EnvContext, EnvError, EpisodeConfig, RailEnv, RewardWeights, DECISION_INTERVAL_S,
};
use railsched_core::passenger::ArrivalMode;
use railsched_core::ppo::{self, IterationRecord, PolicyParams, PpoError, SequentialRunner, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, Provenance};
use crate::formats::FormatError;
use crate::inputs::{digest, Inputs};
use crate::rollout::ParallelRunner;

/// Input file paths, relative to the file that names them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputPaths {
    pub route: PathBuf,
    pub timetable: PathBuf,
    pub od: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Preset(String),
    Custom(RewardWeights),
}

impl WeightsSpec {
    pub fn resolve(&self) -> Result<RewardWeights, FormatError> {
        match self {
            WeightsSpec::Preset(name) => RewardWeights::preset(name)
                .ok_or_else(|| FormatError::Invalid(format!("unknown weights preset {name}"))),
            WeightsSpec::Custom(w) => Ok(*w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisruptionRangesFile {
    /// Candidate block sets by id; one is drawn per episode.
    pub locations: Vec<Vec<String>>,
    /// Seconds after the episode start, inclusive.
    pub start_offset_s: [u32; 2],
    pub duration_s: [u32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeFile {
    /// Episode start window as `HH:MM:SS`, inclusive.
    pub start: [String; 2],
    pub horizon_s: u32,
    #[serde(default = "default_interval")]
    pub decision_interval_s: u32,
    pub weights: WeightsSpec,
    #[serde(default)]
    pub arrivals: ArrivalMode,
    #[serde(default)]
    pub disruption: Option<DisruptionRangesFile>,
}

fn default_interval() -> u32 {
    DECISION_INTERVAL_S
}

/// A training configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainFile {
    /// Inputs; the command line may supply or override them.
    #[serde(default)]
    pub inputs: Option<InputPaths>,
    pub episode: EpisodeFile,
    #[serde(default)]
    pub train: TrainConfig,
    /// Roll out episodes on the thread pool.
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn yes() -> bool {
    true
}

impl TrainFile {
    pub fn parse(text: &str) -> Result<TrainFile, FormatError> {
        Ok(toml::from_str(text)?)
    }

    /// Make input paths relative to `base` absolute.
    pub fn rebase(&mut self, base: &Path) {
        if let Some(p) = &mut self.inputs {
            for f in [&mut p.route, &mut p.timetable, &mut p.od] {
                if f.is_relative() {
                    *f = base.join(&*f);
                }
            }
        }
    }

    pub fn episode_config(&self, inputs: &Inputs) -> Result<EpisodeConfig, FormatError> {
        let e = &self.episode;
        let time = |v: &str| parse_hms(v).ok_or_else(|| FormatError::Invalid(format!("bad time {v}")));
        let disruption = match &e.disruption {
            Some(d) => Some(DisruptionRanges {
                locations: d
                    .locations
                    .iter()
                    .map(|l| l.iter().map(|b| inputs.model.block_by_name(b)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()?,
                start_offset_s: (d.start_offset_s[0], d.start_offset_s[1]),
                duration_s: (d.duration_s[0], d.duration_s[1]),
            }),
            None => None,
        };
        Ok(EpisodeConfig {
            start_window_s: (time(&e.start[0])?, time(&e.start[1])?),
            horizon_s: e.horizon_s,
            decision_interval_s: e.decision_interval_s,
            disruption,
            weights: e.weights.resolve()?,
            arrival_mode: e.arrivals,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
}

/// Initial parameters for an environment, drawn from the training seed.
pub fn initial_params(env: &RailEnv, cfg: &TrainConfig) -> PolicyParams {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    PolicyParams::init(env.obs_len(), cfg.ppo.hidden, env.n_heads(), env.n_actions(), &mut rng)
}

pub struct Trained {
    pub params: PolicyParams,
    pub curve: Vec<IterationRecord>,
    pub checkpoint: Checkpoint,
}

/// Train a policy as configured; `on_iter` sees every learning-curve record.
pub fn train(
    inputs: &Inputs,
    ctx: &Arc<EnvContext>,
    file: &TrainFile,
    on_iter: impl FnMut(&IterationRecord, &PolicyParams),
) -> Result<Trained, TrainError> {
    let cfg = file.episode_config(inputs)?;
    let env = RailEnv::new(Arc::clone(ctx), cfg.clone())?;
    let init = initial_params(&env, &file.train);
    let (params, curve) = if file.parallel {
        ppo::train(init, &file.train, &mut ParallelRunner::new(env), on_iter)?
    } else {
        ppo::train(init, &file.train, &mut SequentialRunner { env }, on_iter)?
    };
    let cfg_json = serde_json::to_string(&(&cfg, &file.train)).map_err(FormatError::from)?;
    let provenance = Provenance {
        iterations: curve.len(),
        seed: file.train.seed,
        final_mean_return: curve.last().map_or(0.0, |r| r.mean_return),
        config_fingerprint: digest(&[inputs.fingerprint.as_bytes(), cfg_json.as_bytes()]),
    };
    let checkpoint = Checkpoint::from_params(&params, provenance);
    Ok(Trained { params, curve, checkpoint })
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = r#"
[episode]
start = ["07:30:00", "07:30:00"]
horizon_s = 600
weights = "rescheduling"

[episode.disruption]
locations = [["U3a", "U3b"]]
start_offset_s = [0, 60]
duration_s = [300, 300]

[train]
iterations = 2
episodes_per_iter = 2
seed = 3
"#;

    #[test]
    fn parses_and_resolves() {
        let f = TrainFile::parse(FILE).unwrap();
        assert!(f.parallel);
        assert_eq!(f.train.ppo.gamma, 0.99);
        let inputs = Inputs::desk();
        let cfg = f.episode_config(&inputs).unwrap();
        assert_eq!(cfg.start_window_s, (27000, 27000));
        assert_eq!(cfg.decision_interval_s, DECISION_INTERVAL_S);
        assert_eq!(cfg.weights, RewardWeights::RESCHEDULING);
        assert_eq!(cfg.disruption.unwrap().locations[0].len(), 2);
        let custom = FILE.replace("weights = \"rescheduling\"", "weights = { arrived = 2.0, stoppage = 0.5 }");
        let w = TrainFile::parse(&custom).unwrap().episode_config(&inputs).unwrap().weights;
        assert_eq!((w.arrived, w.stoppage, w.deviation), (2.0, 0.5, 0.0));
        let bad = FILE.replace("\"rescheduling\"", "\"fastest\"");
        assert!(TrainFile::parse(&bad).unwrap().episode_config(&inputs).is_err());
    }

    #[test]
    fn parallel_and_sequential_training_agree() {
        let inputs = Inputs::desk();
        let ctx = inputs.context().unwrap();
        let mut f = TrainFile::parse(FILE).unwrap();
        let a = train(&inputs, &ctx, &f, |_, _| {}).unwrap();
        f.parallel = false;
        let b = train(&inputs, &ctx, &f, |_, _| {}).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.checkpoint, b.checkpoint);
    }
}
