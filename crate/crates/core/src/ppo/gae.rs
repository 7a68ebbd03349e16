use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("rewards, values and dones must align ({rewards}, {values}, {dones})")]
pub struct LengthMismatch {
    pub rewards: usize,
    pub values: usize,
    pub dones: usize,
}

/// Generalized advantage estimates and value targets. `dones[t]` cuts the
/// bootstrap from step `t + 1`; `bootstrap` is the value after the last step.
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>), LengthMismatch> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(LengthMismatch { rewards: n, values: values.len(), dones: dones.len() });
    }
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        adv[t] = next_adv;
        next_value = values[t];
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((adv, ret))
}
