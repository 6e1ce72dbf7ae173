//! The recurrent Q-learning agent: network, policy, training step and rollouts.

pub mod config;
pub mod network;
pub mod policy;
pub mod tabular;

use rand::Rng;

pub use config::{ConvBlock, NetworkConfig};
pub use network::{compute_window_targets, window_loss, ForwardOutput, Init, QNetwork, WindowLoss};
pub use policy::{action_probabilities, compute_target, select_action};

use crate::env::{decode_action, Env};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, rmsprop_step, RMSPROP_DECAY, RMSPROP_EPS};
use crate::replay::TransitionWindow;

pub const BURN_IN: usize = 4;
pub const WINDOW_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainStep {
    pub gamma: f64,
    pub burn_in: usize,
    pub lr: f64,
    pub grad_clip: Option<f64>,
}

/// One gradient step on `net` from a batch of windows, bootstrapping from
/// `target`. Returns the mean squared TD error before the update.
pub fn train_on_batch(
    net: &mut QNetwork,
    target: &QNetwork,
    windows: &[TransitionWindow],
    opts: &TrainStep,
) -> Result<f64> {
    let targets = compute_window_targets(target, windows, opts.gamma)?;
    let mut out = window_loss(net, windows, opts.burn_in, &targets, None)?;
    if !out.loss.is_finite() {
        return Err(Error::NonFinite {
            context: "training loss".into(),
            index: 0,
        });
    }
    if let Some(max) = opts.grad_clip {
        clip_global_norm(&mut out.grads, max);
    }
    rmsprop_step(net.params_mut(), &out.grads, opts.lr, RMSPROP_DECAY, RMSPROP_EPS)?;
    network::apply_bn_updates(net, &out.bn_caches);
    net.round_to_f32();
    Ok(out.loss)
}

/// Makes `target` a bit-identical copy of `net`'s parameters and statistics.
pub fn sync_target(net: &QNetwork, target: &mut QNetwork) -> Result<()> {
    target.copy_weights_from(net)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutStats {
    pub steps: u64,
    pub total_reward: f64,
    pub landmarks_passed: usize,
    pub finished: bool,
}

/// One episode under `epsilon`-greedy control with the recurrent state carried
/// throughout. `epsilon == 0` gives the evaluation policy.
pub fn rollout<R: Rng + ?Sized>(
    net: &QNetwork,
    env: &mut Env,
    max_steps: u64,
    epsilon: f64,
    rng: &mut R,
    mut on_step: impl FnMut(&crate::env::ObservationFrame, usize, f64),
) -> Result<RolloutStats> {
    let mut obs = env.reset();
    let mut state = net.zero_state();
    let mut stats = RolloutStats {
        steps: 0,
        total_reward: 0.0,
        landmarks_passed: 0,
        finished: false,
    };
    while stats.steps < max_steps {
        let out = net.forward(&obs, &state)?;
        state = out.state;
        let a = select_action(&out.q, epsilon, rng);
        let res = env.step(&decode_action(a)?);
        on_step(&obs, a, res.reward);
        stats.steps += 1;
        stats.total_reward += res.reward;
        stats.landmarks_passed = res.info.landmarks_passed;
        stats.finished = res.info.finished;
        obs = res.observation;
        if res.done {
            break;
        }
    }
    Ok(stats)
}

/// Evaluation episode: epsilon 0, no randomness consumed that affects actions.
pub fn greedy_rollout(net: &QNetwork, env: &mut Env, max_steps: u64) -> Result<RolloutStats> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    rollout(net, env, max_steps, 0.0, &mut rng, |_, _, _| {})
}
