use rand::Rng;

use crate::nn::argmax;

/// Uniform over all actions with probability `epsilon`, otherwise the greedy
/// action (ties to the lowest index).
pub fn select_action<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    debug_assert!((0.0..=1.0).contains(&epsilon));
    // always draw, so the stream position does not depend on epsilon
    let u: f64 = rng.gen();
    let pick = rng.gen_range(0..q.len());
    if u < epsilon {
        pick
    } else {
        argmax(q)
    }
}

/// `P(a | s)` of the epsilon-greedy policy.
pub fn action_probabilities(q: &[f64], epsilon: f64) -> Vec<f64> {
    let n = q.len() as f64;
    let best = argmax(q);
    (0..q.len())
        .map(|a| epsilon / n + if a == best { 1.0 - epsilon } else { 0.0 })
        .collect()
}

pub fn compute_target(reward: f64, q_next: &[f64], gamma: f64, done: bool) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
