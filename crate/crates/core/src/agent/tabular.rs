//! Lookup-table stand-in for the network, driven by the iterative Q-learning
//! update `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))`.

use rand::Rng;

/// Deterministic chain: `states` cells, action 0 moves left (clamped at 0),
/// action 1 moves right. Entering the last cell pays `goal_reward` and ends the
/// episode; every other move pays `step_reward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainMdp {
    pub states: usize,
    pub step_reward: f64,
    pub goal_reward: f64,
}

impl Default for ChainMdp {
    fn default() -> Self {
        Self {
            states: 5,
            step_reward: 0.0,
            goal_reward: 1.0,
        }
    }
}

impl ChainMdp {
    pub const ACTIONS: usize = 2;

    pub fn is_terminal(&self, s: usize) -> bool {
        s + 1 == self.states
    }

    /// `(next_state, reward, done)`.
    pub fn step(&self, s: usize, a: usize) -> (usize, f64, bool) {
        let next = if a == 0 { s.saturating_sub(1) } else { (s + 1).min(self.states - 1) };
        if self.is_terminal(next) {
            (next, self.goal_reward, true)
        } else {
            (next, self.step_reward, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularQ {
    pub q: Vec<[f64; ChainMdp::ACTIONS]>,
}

impl TabularQ {
    pub fn new(states: usize) -> Self {
        Self {
            q: vec![[0.0; ChainMdp::ACTIONS]; states],
        }
    }

    pub fn max(&self, s: usize) -> f64 {
        self.q[s][0].max(self.q[s][1])
    }

    pub fn update(&mut self, s: usize, a: usize, r: f64, next: usize, done: bool, gamma: f64, alpha: f64) {
        let y = if done { r } else { r + gamma * self.max(next) };
        self.q[s][a] += alpha * (y - self.q[s][a]);
    }
}

/// Runs `updates` Q-learning updates under a uniformly random behaviour
/// policy, restarting at state 0 after each terminal step. `alpha(i)` gives the
/// step size of update `i`.
pub fn run_chain_q_learning<R: Rng + ?Sized>(
    mdp: &ChainMdp,
    gamma: f64,
    updates: usize,
    alpha: impl Fn(usize) -> f64,
    rng: &mut R,
) -> TabularQ {
    let mut table = TabularQ::new(mdp.states);
    let mut s = 0;
    for i in 0..updates {
        let a = rng.gen_range(0..ChainMdp::ACTIONS);
        let (next, r, done) = mdp.step(s, a);
        table.update(s, a, r, next, done, gamma, alpha(i));
        s = if done { 0 } else { next };
    }
    table
}
