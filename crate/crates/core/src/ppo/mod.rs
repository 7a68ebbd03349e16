//! Proximal policy optimization over the rescheduling environment.

mod adam;
pub mod dist;
mod gae;
mod mlp;

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvError, RailEnv};
use crate::math;

pub use adam::{clip_grad_norm, Adam};
pub use dist::{entropy, greedy_action, log_prob, log_softmax, sample_action, softmax};
pub use gae::{gae, LengthMismatch};
pub use mlp::{Activations, PolicyParams, ShapeError, TensorSpec};

/// Optimization hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub lr: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub max_grad_norm: f64,
    pub hidden: [usize; 2],
    /// Rewards are multiplied by this before advantage estimation.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            vf_coef: 0.5,
            ent_coef: 0.01,
            lr: 3e-4,
            minibatch: 256,
            epochs: 4,
            max_grad_norm: 0.5,
            hidden: [64, 64],
            reward_scale: 1.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let ok = (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.lambda)
            && self.clip > 0.0
            && self.lr > 0.0
            && self.minibatch > 0
            && self.max_grad_norm > 0.0
            && self.reward_scale > 0.0
            && self.reward_scale.is_finite()
            && self.hidden.iter().all(|&h| h > 0);
        if ok {
            Ok(())
        } else {
            Err(PpoError::Config)
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PpoError {
    #[error("invalid ppo config")]
    Config,
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss; update aborted")]
    NonFinite,
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Length(#[from] LengthMismatch),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// One environment transition as seen by the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub obs: Vec<f64>,
    /// Heads whose choice took effect this step.
    pub mask: Vec<bool>,
    pub actions: Vec<usize>,
    pub logp: f64,
    pub reward: f64,
    pub value: f64,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub steps: Vec<Step>,
    /// Value estimate after the last step; 0 when it ended the episode.
    pub bootstrap: f64,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

/// Run one episode with `params`, sampling actions (or taking the most
/// likely ones when `greedy`).
pub fn rollout(env: &mut RailEnv, params: &PolicyParams, seed: u64, greedy: bool) -> Result<Trajectory, PpoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env_seed = rng.next_u64();
    let mut obs = env.reset(env_seed)?.to_vec();
    let k = env.n_actions();
    let mut act = Activations::default();
    let mut steps = Vec::new();
    loop {
        params.forward_into(&obs, &mut act)?;
        let (actions, _) = if greedy {
            greedy_action(&act.logits, k, Some(env.action_mask()))
        } else {
            sample_action(&act.logits, k, Some(env.action_mask()), &mut rng)
        };
        let r = env.step(&actions)?;
        // Only choices a train acted on shape the trajectory.
        let mask = r.info.consumed;
        let logp = log_prob(&act.logits, k, Some(&mask), &actions);
        let next = env.observation().to_vec();
        steps.push(Step { obs, mask, actions, logp, reward: r.reward, value: act.value, done: r.done });
        obs = next;
        if r.done {
            return Ok(Trajectory { seed, steps, bootstrap: 0.0 });
        }
    }
}

/// Produces one trajectory per seed with a fixed policy.
pub trait RolloutRunner {
    fn run(&mut self, params: &PolicyParams, seeds: &[u64], greedy: bool) -> Result<Vec<Trajectory>, PpoError>;
}

/// Runs episodes one after another on a single environment.
#[derive(Debug, Clone)]
pub struct SequentialRunner {
    pub env: RailEnv,
}

impl RolloutRunner for SequentialRunner {
    fn run(&mut self, params: &PolicyParams, seeds: &[u64], greedy: bool) -> Result<Vec<Trajectory>, PpoError> {
        seeds.iter().map(|&s| rollout(&mut self.env, params, s, greedy)).collect()
    }
}

/// Flattened training samples with advantages and value targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
    pub actions: Vec<Vec<usize>>,
    pub logp: Vec<f64>,
    pub adv: Vec<f64>,
    pub ret: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn from_trajectories(trajs: &[Trajectory], cfg: &PpoConfig) -> Result<Batch, PpoError> {
        let (gamma, lambda) = (cfg.gamma, cfg.lambda);
        let mut b = Batch::default();
        for t in trajs {
            let r: Vec<f64> = t.steps.iter().map(|s| s.reward * cfg.reward_scale).collect();
            let v: Vec<f64> = t.steps.iter().map(|s| s.value).collect();
            let d: Vec<bool> = t.steps.iter().map(|s| s.done).collect();
            let (adv, ret) = gae(&r, &v, &d, t.bootstrap, gamma, lambda)?;
            for s in &t.steps {
                b.obs.push(s.obs.clone());
                b.mask.push(s.mask.clone());
                b.actions.push(s.actions.clone());
                b.logp.push(s.logp);
            }
            b.adv.extend(adv);
            b.ret.extend(ret);
        }
        Ok(b)
    }

    /// Shift and scale advantages to mean 0, standard deviation 1.
    pub fn normalize_advantages(&mut self) {
        let (mean, std) = math::mean_std(&self.adv);
        let s = if std > 1e-8 { std } else { 1.0 };
        self.adv.iter_mut().for_each(|a| *a = (*a - mean) / s);
    }
}

/// Loss terms averaged over a minibatch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTerms {
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub total: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
}

/// The clipped surrogate for one sample.
pub fn clipped_surrogate(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Loss over `idx` and, when `grad` is given, its exact gradient.
pub fn loss_and_grad(
    params: &PolicyParams,
    batch: &Batch,
    idx: &[usize],
    cfg: &PpoConfig,
    mut grad: Option<&mut [f64]>,
) -> Result<LossTerms, PpoError> {
    let k = params.n_actions;
    let n = idx.len() as f64;
    let mut act = Activations::default();
    let mut out = LossTerms::default();
    let mut d_logits = vec![0.0; params.n_logits()];
    for &i in idx {
        params.forward_into(&batch.obs[i], &mut act)?;
        let mask = &batch.mask[i];
        let actions = &batch.actions[i];
        let mut logp = 0.0;
        let mut ent = 0.0;
        let mut lps = Vec::with_capacity(params.n_heads);
        for (h, l) in act.logits.chunks(k).enumerate() {
            let lp = log_softmax(l);
            if mask[h] {
                logp += lp[actions[h]];
                ent += lp.iter().map(|x| -math::exp(*x) * x).sum::<f64>();
            }
            lps.push(lp);
        }
        let ratio = math::exp(logp - batch.logp[i]);
        let a = batch.adv[i];
        let surr = clipped_surrogate(ratio, a, cfg.clip);
        let verr = act.value - batch.ret[i];
        out.policy -= surr / n;
        out.value += verr * verr / n;
        out.entropy += ent / n;
        out.approx_kl += (batch.logp[i] - logp) / n;
        if math::abs(ratio - 1.0) > cfg.clip {
            out.clip_frac += 1.0 / n;
        }
        let Some(g) = grad.as_deref_mut() else { continue };
        // d(-surr)/d(logp): the unclipped branch carries the gradient.
        let d_logp = if ratio * a <= ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a { -a * ratio / n } else { 0.0 };
        for (h, lp) in lps.iter().enumerate() {
            let dl = &mut d_logits[h * k..(h + 1) * k];
            if !mask[h] {
                dl.fill(0.0);
                continue;
            }
            let head_ent: f64 = lp.iter().map(|x| -math::exp(*x) * x).sum();
            for j in 0..k {
                let p = math::exp(lp[j]);
                let onehot = if j == actions[h] { 1.0 } else { 0.0 };
                let d_ent = -p * (lp[j] + head_ent);
                dl[j] = d_logp * (onehot - p) - cfg.ent_coef * d_ent / n;
            }
        }
        let d_value = 2.0 * cfg.vf_coef * verr / n;
        params.backward(&batch.obs[i], &act, &d_logits, d_value, g);
    }
    out.total = out.policy + cfg.vf_coef * out.value - cfg.ent_coef * out.entropy;
    if !out.total.is_finite() {
        return Err(PpoError::NonFinite);
    }
    Ok(out)
}

/// Minibatch epochs of clipped-surrogate descent. Leaves `params` untouched
/// if any loss turns non-finite.
pub fn ppo_update<R: Rng + ?Sized>(
    params: &mut PolicyParams,
    adam: &mut Adam,
    batch: &Batch,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<LossTerms, PpoError> {
    if batch.is_empty() {
        return Err(PpoError::EmptyBatch);
    }
    let mut next = params.clone();
    let mut opt = adam.clone();
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut grad = vec![0.0; next.theta.len()];
    let mut sum = LossTerms::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for mb in order.chunks(cfg.minibatch) {
            grad.fill(0.0);
            let l = loss_and_grad(&next, batch, mb, cfg, Some(&mut grad))?;
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(PpoError::NonFinite);
            }
            clip_grad_norm(&mut grad, cfg.max_grad_norm);
            opt.step(&mut next.theta, &grad);
            sum.policy += l.policy;
            sum.value += l.value;
            sum.entropy += l.entropy;
            sum.total += l.total;
            sum.approx_kl += l.approx_kl;
            sum.clip_frac += l.clip_frac;
            count += 1.0;
        }
    }
    if !next.is_finite() {
        return Err(PpoError::NonFinite);
    }
    *params = next;
    *adam = opt;
    if count > 0.0 {
        for x in
            [&mut sum.policy, &mut sum.value, &mut sum.entropy, &mut sum.total, &mut sum.approx_kl, &mut sum.clip_frac]
        {
            *x /= count;
        }
    }
    Ok(sum)
}

/// Training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub episodes_per_iter: usize,
    pub seed: u64,
    pub ppo: PpoConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { iterations: 50, episodes_per_iter: 8, seed: 0, ppo: PpoConfig::default() }
    }
}

/// One learning-curve record.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub steps: usize,
    pub episodes: usize,
    pub mean_return: f64,
    pub loss: LossTerms,
}

/// Alternate rollouts and updates. `on_iter` sees every record with the
/// parameters after that iteration's update.
pub fn train<R: RolloutRunner>(
    init: PolicyParams,
    cfg: &TrainConfig,
    runner: &mut R,
    mut on_iter: impl FnMut(&IterationRecord, &PolicyParams),
) -> Result<(PolicyParams, Vec<IterationRecord>), PpoError> {
    cfg.ppo.validate()?;
    let mut params = init;
    let mut adam = Adam::new(params.theta.len(), cfg.ppo.lr);
    let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut shuffle = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle.set_stream(1);
    let mut curve = Vec::with_capacity(cfg.iterations);
    let mut total_steps = 0;
    for iteration in 0..cfg.iterations {
        let ep_seeds: Vec<u64> = (0..cfg.episodes_per_iter).map(|_| seeds.next_u64()).collect();
        let trajs = runner.run(&params, &ep_seeds, false)?;
        let mut batch = Batch::from_trajectories(&trajs, &cfg.ppo)?;
        batch.normalize_advantages();
        total_steps += batch.len();
        let loss = if batch.is_empty() {
            LossTerms::default()
        } else {
            ppo_update(&mut params, &mut adam, &batch, &cfg.ppo, &mut shuffle)?
        };
        let mean_return = if trajs.is_empty() {
            0.0
        } else {
            trajs.iter().map(Trajectory::total_reward).sum::<f64>() / trajs.len() as f64
        };
        let rec = IterationRecord { iteration, steps: total_steps, episodes: trajs.len(), mean_return, loss };
        on_iter(&rec, &params);
        curve.push(rec);
    }
    Ok((params, curve))
}
