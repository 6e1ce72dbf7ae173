#![allow(dead_code)]

pub mod gradcheck;

use std::sync::Arc;

use drqn_core::agent::{Init, NetworkConfig, QNetwork};
use drqn_core::env::ObservationFrame;
use drqn_core::replay::{Transition, TransitionWindow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ObservationFrame {
    ObservationFrame::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
}

/// A window of `len` random 8x8 transitions from one episode.
pub fn random_window(rng: &mut ChaCha8Rng, len: usize, episode: u64, terminal: bool) -> TransitionWindow {
    TransitionWindow::new(
        (0..len)
            .map(|j| {
                Arc::new(Transition {
                    observation: random_frame(rng, 8, 8),
                    action_index: rng.gen_range(0..5),
                    reward: rng.gen_range(-1.0..1.0),
                    done: terminal && j + 1 == len,
                    episode_id: episode,
                    step_index: j as u64,
                })
            })
            .collect(),
    )
}

pub fn tiny_net(seed: u64) -> QNetwork {
    QNetwork::new(NetworkConfig::tiny(), Init::Uniform, &mut rng(seed)).unwrap()
}

/// Central differences of `f` at `x`, step `h`.
pub fn central_diff(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`. Gradients that vanish in exact arithmetic
/// (a conv bias feeding batch-norm) leave only rounding noise of order
/// `eps * |loss| / h` in the finite difference, so below a norm of 1e-7 the
/// difference is compared absolutely.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    norm(&diff) / if scale < 1e-7 { 1.0 } else { scale }
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
