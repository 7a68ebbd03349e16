use alloc::vec::Vec;

use rand::Rng;

use crate::math;

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let z = math::log_sum_exp(logits);
    logits.iter().map(|x| x - z).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(math::exp).collect()
}

/// Entropy of one categorical head, in nats.
pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax(logits).iter().map(|l| -math::exp(*l) * l).sum()
}

fn heads(logits: &[f64], k: usize) -> core::slice::Chunks<'_, f64> {
    logits.chunks(k)
}

/// Draw one action per head from its softmax. Heads masked out take action
/// 0 and add nothing to the joint log-probability.
pub fn sample_action<R: Rng + ?Sized>(
    logits: &[f64],
    k: usize,
    mask: Option<&[bool]>,
    rng: &mut R,
) -> (Vec<usize>, f64) {
    let mut actions = Vec::new();
    let mut logp = 0.0;
    for (h, l) in heads(logits, k).enumerate() {
        if mask.is_some_and(|m| !m[h]) {
            actions.push(0);
            continue;
        }
        let lp = log_softmax(l);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut a = k - 1;
        for (i, x) in lp.iter().enumerate() {
            acc += math::exp(*x);
            if u < acc {
                a = i;
                break;
            }
        }
        actions.push(a);
        logp += lp[a];
    }
    (actions, logp)
}

/// Most likely action per head.
pub fn greedy_action(logits: &[f64], k: usize, mask: Option<&[bool]>) -> (Vec<usize>, f64) {
    let mut actions = Vec::new();
    let mut logp = 0.0;
    for (h, l) in heads(logits, k).enumerate() {
        if mask.is_some_and(|m| !m[h]) {
            actions.push(0);
            continue;
        }
        let a = (0..k).fold(0, |best, i| if l[i] > l[best] { i } else { best });
        actions.push(a);
        logp += log_softmax(l)[a];
    }
    (actions, logp)
}

/// Joint log-probability of `actions` over the unmasked heads.
pub fn log_prob(logits: &[f64], k: usize, mask: Option<&[bool]>, actions: &[usize]) -> f64 {
    heads(logits, k)
        .enumerate()
        .filter(|(h, _)| mask.is_none_or(|m| m[*h]))
        .map(|(h, l)| log_softmax(l)[actions[h]])
        .sum()
}
