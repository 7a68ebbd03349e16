//! Thread-parallel episode collection.

use railsched_core::env::RailEnv;
use railsched_core::ppo::{rollout, PolicyParams, PpoError, RolloutRunner, Trajectory};
use rayon::prelude::*;

/// One environment per episode slot, stepped on the rayon pool. Every
/// episode is seeded on its own, so results match [`SequentialRunner`]
/// exactly regardless of scheduling.
///
/// [`SequentialRunner`]: railsched_core::ppo::SequentialRunner
#[derive(Debug, Clone)]
pub struct ParallelRunner {
    template: RailEnv,
    envs: Vec<RailEnv>,
}

impl ParallelRunner {
    pub fn new(template: RailEnv) -> ParallelRunner {
        ParallelRunner { template, envs: Vec::new() }
    }
}

impl RolloutRunner for ParallelRunner {
    fn run(&mut self, params: &PolicyParams, seeds: &[u64], greedy: bool) -> Result<Vec<Trajectory>, PpoError> {
        while self.envs.len() < seeds.len() {
            self.envs.push(self.template.clone());
        }
        seeds.par_iter().zip(self.envs.par_iter_mut()).map(|(&seed, env)| rollout(env, params, seed, greedy)).collect()
    }
}

/// Collect one trajectory per seed in parallel.
pub fn vector_rollout(
    template: &RailEnv,
    params: &PolicyParams,
    seeds: &[u64],
    greedy: bool,
) -> Result<Vec<Trajectory>, PpoError> {
    ParallelRunner::new(template.clone()).run(params, seeds, greedy)
}
