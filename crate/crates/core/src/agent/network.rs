//! The two-stream recurrent Q-network and its windowed training loss.
//!
//! Frame -> conv stack -> features `f`, then
//! * value stream: `h = LSTM(h_prev, f)`, `V = W_v h + b_v`
//! * weighting stream: `A = softmax(W_o relu(W_a f + b_a) + b_o)`
//!
//! and `Q = V * A` elementwise, one value per action.

use std::collections::BTreeMap;

use rand::Rng;

use crate::agent::config::NetworkConfig;
use crate::env::ObservationFrame;
use crate::error::{Error, Result};
use crate::nn::{
    batchnorm_backward, batchnorm_forward, check_finite, conv2d_backward, conv2d_forward, dense_backward,
    dense_forward, lstm_cell_backward, lstm_cell_step, maxpool2x2, maxpool2x2_backward, relu, relu_backward,
    softmax, softmax_backward, update_running_stats, BnCache, BnMode, Gradients, LstmCache, LstmGrads,
    LstmParams, LstmState, ParameterStore, RunningStats, Tensor,
};
use crate::replay::TransitionWindow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Glorot-uniform conv/dense, uniform +-0.08 LSTM, forget bias 1, other biases 0.
    Uniform,
    /// Every parameter zero (batch-norm gamma stays 1).
    Zeros,
}

pub const LSTM_INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub state: LstmState,
}

/// Intermediate values of one conv block, kept for backward and visualization.
#[derive(Debug, Clone)]
pub struct BlockTrace {
    pub input: Tensor,
    pub bn: Option<BnCache>,
    /// Values entering the ReLU (after batch-norm when present).
    pub pre_relu: Tensor,
    /// Pooling switches into the ReLU output, when the block pools.
    pub switches: Option<Vec<usize>>,
    pub output: Tensor,
}

#[derive(Debug, Clone)]
pub struct StackTrace {
    pub blocks: Vec<BlockTrace>,
}

#[derive(Debug, Clone)]
pub struct QNetwork {
    config: NetworkConfig,
    params: ParameterStore,
    bn_stats: BTreeMap<usize, RunningStats>,
    feature_len: usize,
}

pub fn conv_w(i: usize) -> String {
    format!("conv{}.w", i + 1)
}
pub fn conv_b(i: usize) -> String {
    format!("conv{}.b", i + 1)
}
fn bn_gamma(i: usize) -> String {
    format!("bn{}.gamma", i + 1)
}
fn bn_beta(i: usize) -> String {
    format!("bn{}.beta", i + 1)
}

fn uniform<R: Rng + ?Sized>(shape: &[usize], limit: f64, rng: &mut R) -> Tensor {
    let len = shape.iter().product();
    Tensor::from_vec(shape, (0..len).map(|_| rng.gen_range(-limit..=limit)).collect()).expect("shape")
}

impl QNetwork {
    pub fn new<R: Rng + ?Sized>(config: NetworkConfig, init: Init, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let shapes = config.block_shapes()?;
        let feature_len = config.feature_len()?;
        let mut params = ParameterStore::new();
        let mut bn_stats = BTreeMap::new();
        let zeros = init == Init::Zeros;
        let glorot = |shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R| {
            if zeros {
                Tensor::zeros(shape)
            } else {
                uniform(shape, (6.0 / (fan_in + fan_out) as f64).sqrt(), rng)
            }
        };
        let mut in_c = 1;
        for (i, b) in config.conv.iter().enumerate() {
            let k2 = b.kernel * b.kernel;
            params.insert(
                &conv_w(i),
                glorot(&[b.channels, in_c, b.kernel, b.kernel], in_c * k2, b.channels * k2, rng),
            );
            params.insert(&conv_b(i), Tensor::zeros(&[b.channels]));
            if config.uses_batchnorm(i) {
                params.insert(&bn_gamma(i), Tensor::filled(&[b.channels], 1.0));
                params.insert(&bn_beta(i), Tensor::zeros(&[b.channels]));
                bn_stats.insert(i, RunningStats::new(b.channels));
            }
            in_c = shapes[i].0;
        }
        let u = config.lstm_units;
        let lstm = |shape: &[usize], rng: &mut R| {
            if zeros {
                Tensor::zeros(shape)
            } else {
                uniform(shape, LSTM_INIT_RANGE, rng)
            }
        };
        params.insert("lstm.wx", lstm(&[4 * u, feature_len], rng));
        params.insert("lstm.wh", lstm(&[4 * u, u], rng));
        let mut lb = Tensor::zeros(&[4 * u]);
        if !zeros {
            lb.data_mut()[u..2 * u].fill(FORGET_BIAS);
        }
        params.insert("lstm.b", lb);
        let n = config.action_count;
        params.insert("value.w", glorot(&[n, u], u, n, rng));
        params.insert("value.b", Tensor::zeros(&[n]));
        let au = config.aux_units;
        params.insert("aux.w", glorot(&[au, feature_len], feature_len, au, rng));
        params.insert("aux.b", Tensor::zeros(&[au]));
        params.insert("aux_out.w", glorot(&[n, au], au, n, rng));
        params.insert("aux_out.b", Tensor::zeros(&[n]));
        Ok(Self {
            config,
            params,
            bn_stats,
            feature_len,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    pub fn bn_stats(&self) -> &BTreeMap<usize, RunningStats> {
        &self.bn_stats
    }

    pub fn bn_stats_mut(&mut self) -> &mut BTreeMap<usize, RunningStats> {
        &mut self.bn_stats
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState::zeros(self.config.lstm_units)
    }

    /// Non-trainable tensors (batch-norm running statistics) by name.
    pub fn buffers(&self) -> BTreeMap<String, Tensor> {
        let mut out = BTreeMap::new();
        for (i, s) in &self.bn_stats {
            out.insert(format!("bn{}.running_mean", i + 1), s.mean.clone());
            out.insert(format!("bn{}.running_var", i + 1), s.var.clone());
        }
        out
    }

    pub fn set_buffer(&mut self, name: &str, value: Tensor) -> Result<()> {
        for (i, s) in self.bn_stats.iter_mut() {
            let slot = if name == format!("bn{}.running_mean", i + 1) {
                &mut s.mean
            } else if name == format!("bn{}.running_var", i + 1) {
                &mut s.var
            } else {
                continue;
            };
            if slot.shape() != value.shape() {
                return Err(Error::Shape(format!("buffer {name} shape {:?}", value.shape())));
            }
            *slot = value;
            return Ok(());
        }
        Err(Error::KeyMismatch(format!("unknown buffer {name}")))
    }

    /// Copies parameters and running statistics (not optimizer state) from `other`.
    pub fn copy_weights_from(&mut self, other: &QNetwork) -> Result<()> {
        if self.config != other.config {
            return Err(Error::Config("network configs differ".into()));
        }
        self.params.copy_values_from(&other.params)?;
        self.bn_stats = other.bn_stats.clone();
        Ok(())
    }

    pub fn round_to_f32(&mut self) {
        self.params.round_to_f32();
        for s in self.bn_stats.values_mut() {
            s.mean.round_to_f32();
            s.var.round_to_f32();
        }
    }

    pub fn frames_tensor(&self, frames: &[&ObservationFrame]) -> Result<Tensor> {
        let (h, w) = (self.config.input_h, self.config.input_w);
        let mut data = Vec::with_capacity(frames.len() * h * w);
        for f in frames {
            if f.width != w || f.height != h {
                return Err(Error::Shape(format!(
                    "observation {}x{} does not match network input {w}x{h}",
                    f.width, f.height
                )));
            }
            data.extend(f.to_unit());
        }
        Tensor::from_vec(&[frames.len(), 1, h, w], data)
    }

    /// Runs the conv stack on `[N, 1, H, W]`, returning flattened `[N, D]` features.
    pub fn conv_stack(&self, frames: Tensor, mode: BnMode) -> Result<(Tensor, StackTrace)> {
        let n = frames.shape()[0];
        let mut x = frames;
        let mut blocks = Vec::with_capacity(self.config.conv.len());
        for (i, b) in self.config.conv.iter().enumerate() {
            let z = conv2d_forward(&x, self.params.get(&conv_w(i)), self.params.get(&conv_b(i)), b.stride)?;
            let (pre, bn) = if self.config.uses_batchnorm(i) {
                let (y, cache) = batchnorm_forward(
                    &z,
                    self.params.get(&bn_gamma(i)),
                    self.params.get(&bn_beta(i)),
                    &self.bn_stats[&i],
                    mode,
                )?;
                (y, Some(cache))
            } else {
                (z, None)
            };
            let act = Tensor::from_vec(pre.shape(), relu(pre.data()))?;
            let (output, switches) = if b.pool {
                let p = maxpool2x2(&act)?;
                (p.output, Some(p.switches))
            } else {
                (act, None)
            };
            blocks.push(BlockTrace {
                input: x,
                bn,
                pre_relu: pre,
                switches,
                output: output.clone(),
            });
            x = output;
        }
        let features = x.reshape(&[n, self.feature_len])?;
        check_finite(features.data(), "conv features")?;
        Ok((features, StackTrace { blocks }))
    }

    fn conv_stack_backward(&self, trace: &StackTrace, dfeatures: Vec<f64>, grads: &mut Gradients) -> Result<()> {
        let last = trace.blocks.last().expect("at least one block");
        let mut d = Tensor::from_vec(last.output.shape(), dfeatures)?;
        for (i, (b, t)) in self.config.conv.iter().zip(&trace.blocks).enumerate().rev() {
            let dact = match &t.switches {
                Some(sw) => maxpool2x2_backward(t.pre_relu.shape(), sw, &d)?,
                None => d,
            };
            let mut dpre = Tensor::from_vec(t.pre_relu.shape(), relu_backward(t.pre_relu.data(), dact.data()))?;
            if let Some(cache) = &t.bn {
                let g = batchnorm_backward(t.pre_relu.shape(), self.params.get(&bn_gamma(i)), cache, &dpre)?;
                add_into(grads, &bn_gamma(i), g.gamma.data());
                add_into(grads, &bn_beta(i), g.beta.data());
                dpre = g.input;
            }
            let g = conv2d_backward(&t.input, self.params.get(&conv_w(i)), b.stride, &dpre)?;
            add_into(grads, &conv_w(i), g.weights.data());
            add_into(grads, &conv_b(i), g.bias.data());
            d = g.input;
        }
        Ok(())
    }

    fn lstm_params(&self) -> LstmParams<'_> {
        LstmParams {
            wx: self.params.get("lstm.wx"),
            wh: self.params.get("lstm.wh"),
            b: self.params.get("lstm.b"),
        }
    }

    fn heads(&self, f: &[f64], state: &LstmState) -> Result<(ForwardOutput, HeadCache)> {
        let (new_state, lstm) = lstm_cell_step(f, state, self.lstm_params())?;
        let v = dense_forward(new_state.h.data(), self.params.get("value.w"), self.params.get("value.b"))?;
        let hidden_pre = dense_forward(f, self.params.get("aux.w"), self.params.get("aux.b"))?;
        let hidden = relu(&hidden_pre);
        let logits = dense_forward(&hidden, self.params.get("aux_out.w"), self.params.get("aux_out.b"))?;
        let a = softmax(&logits);
        let q: Vec<f64> = v.iter().zip(&a).map(|(v, a)| v * a).collect();
        check_finite(&q, "q-values")?;
        let cache = HeadCache {
            lstm,
            h: new_state.h.data().to_vec(),
            hidden_pre,
            hidden,
        };
        Ok((
            ForwardOutput {
                q,
                v,
                a,
                state: new_state,
            },
            cache,
        ))
    }

    /// One observation with carried recurrent state. Batch-norm uses running statistics.
    pub fn forward(&self, obs: &ObservationFrame, state: &LstmState) -> Result<ForwardOutput> {
        let (features, _) = self.conv_stack(self.frames_tensor(&[obs])?, BnMode::Eval)?;
        Ok(self.heads(features.data(), state)?.0)
    }

    /// A whole sequence in one conv pass, carrying state from `state`.
    pub fn forward_sequence(&self, obs: &[&ObservationFrame], state: &LstmState) -> Result<Vec<ForwardOutput>> {
        let (features, _) = self.conv_stack(self.frames_tensor(obs)?, BnMode::Eval)?;
        let d = self.feature_len;
        let mut s = state.clone();
        let mut out = Vec::with_capacity(obs.len());
        for t in 0..obs.len() {
            let (o, _) = self.heads(&features.data()[t * d..(t + 1) * d], &s)?;
            s = o.state.clone();
            out.push(o);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
struct HeadCache {
    lstm: LstmCache,
    h: Vec<f64>,
    hidden_pre: Vec<f64>,
    hidden: Vec<f64>,
}

fn add_into(grads: &mut Gradients, name: &str, g: &[f64]) {
    let slot = grads.get_mut(name).expect("gradient slot exists");
    for (a, b) in slot.iter_mut().zip(g) {
        *a += b;
    }
}

/// Bootstrap targets `y_j` for every position of every window, from the target
/// network run over the window from a zero state. Positions with no successor
/// that are not terminal get NaN; they never enter the loss.
pub fn compute_window_targets(target: &QNetwork, windows: &[TransitionWindow], gamma: f64) -> Result<Vec<Vec<f64>>> {
    windows
        .iter()
        .map(|w| {
            let frames: Vec<&ObservationFrame> = w.transitions.iter().map(|t| &t.observation).collect();
            let outs = target.forward_sequence(&frames, &target.zero_state())?;
            Ok((0..w.len())
                .map(|j| {
                    let t = &w.transitions[j];
                    if t.done {
                        t.reward
                    } else if j + 1 < w.len() {
                        crate::agent::policy::compute_target(t.reward, &outs[j + 1].q, gamma, false)
                    } else {
                        f64::NAN
                    }
                })
                .collect())
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct WindowLoss {
    /// Mean of `(y - Q(s, a))^2` over trainable positions.
    pub loss: f64,
    pub terms: usize,
    /// Gradient of `loss` for every parameter.
    pub grads: Gradients,
    /// Recurrent state entering the first trainable position of each window.
    pub boundary: Vec<LstmState>,
    pub bn_caches: Vec<(usize, BnCache)>,
    /// `Q` at every position of every window.
    pub q: Vec<Vec<Vec<f64>>>,
}

/// Forward over every window (batch-norm in train mode across all frames of the
/// batch), squared TD error at trainable positions, and the gradient with the
/// recurrent state cut at the burn-in boundary. `boundary`, when given,
/// replaces the state computed from the burn-in prefix.
pub fn window_loss(
    net: &QNetwork,
    windows: &[TransitionWindow],
    burn_in: usize,
    targets: &[Vec<f64>],
    boundary: Option<&[LstmState]>,
) -> Result<WindowLoss> {
    if targets.len() != windows.len() {
        return Err(Error::Shape("one target row per window required".into()));
    }
    let frames: Vec<&ObservationFrame> = windows
        .iter()
        .flat_map(|w| w.transitions.iter().map(|t| &t.observation))
        .collect();
    let (features, trace) = net.conv_stack(net.frames_tensor(&frames)?, BnMode::Train)?;
    let d = net.feature_len;
    let fdata = features.data();
    let mut dfeat = vec![0.0; fdata.len()];
    let mut grads = net.params.zero_grads();
    let mut lstm_grads = LstmGrads::zeros(net.lstm_params());
    let total_terms: usize = windows.iter().map(|w| w.trainable_positions(burn_in).len()).sum();
    if total_terms == 0 {
        return Err(Error::Shape("no trainable positions in batch".into()));
    }
    let scale = 1.0 / total_terms as f64;
    let mut loss_sum = 0.0;
    let mut boundaries = Vec::with_capacity(windows.len());
    let mut all_q = Vec::with_capacity(windows.len());
    let mut offset = 0;
    for (wi, w) in windows.iter().enumerate() {
        let n = w.len();
        let trainable = w.trainable_positions(burn_in);
        let mut state = net.zero_state();
        let mut caches = Vec::with_capacity(n);
        let mut outs = Vec::with_capacity(n);
        for j in 0..n {
            if j == burn_in.min(n) {
                if let Some(b) = boundary {
                    state = b[wi].clone();
                }
                boundaries.push(state.clone());
            }
            let f = &fdata[(offset + j) * d..(offset + j + 1) * d];
            let (o, c) = net.heads(f, &state)?;
            state = o.state.clone();
            outs.push(o);
            caches.push(c);
        }
        // dq for each trainable position
        let mut dh_out = vec![vec![0.0; net.config.lstm_units]; n];
        for &j in &trainable {
            let a = w.transitions[j].action_index;
            let y = targets[wi][j];
            let resid = y - outs[j].q[a];
            if !resid.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("td error (window {wi}, position {j})"),
                    index: a,
                });
            }
            loss_sum += resid * resid;
            let dq_a = -2.0 * resid * scale;
            let o = &outs[j];
            let c = &caches[j];
            let mut dv = vec![0.0; o.v.len()];
            let mut da = vec![0.0; o.a.len()];
            dv[a] = dq_a * o.a[a];
            da[a] = dq_a * o.v[a];
            // weighting stream
            let dlogits = softmax_backward(&o.a, &da);
            let (aw, ab) = split2(&mut grads, "aux_out.w", "aux_out.b");
            let dhidden = dense_backward(&c.hidden, net.params.get("aux_out.w"), &dlogits, aw, ab)?;
            let dhp = relu_backward(&c.hidden_pre, &dhidden);
            let f = &fdata[(offset + j) * d..(offset + j + 1) * d];
            let (aw, ab) = split2(&mut grads, "aux.w", "aux.b");
            let df = dense_backward(f, net.params.get("aux.w"), &dhp, aw, ab)?;
            for (acc, g) in dfeat[(offset + j) * d..(offset + j + 1) * d].iter_mut().zip(&df) {
                *acc += g;
            }
            // value stream head
            let (vw, vb) = split2(&mut grads, "value.w", "value.b");
            dh_out[j] = dense_backward(&c.h, net.params.get("value.w"), &dv, vw, vb)?;
        }
        if let Some(&last) = trainable.last() {
            let u = net.config.lstm_units;
            let mut dh_next = vec![0.0; u];
            let mut dc_next = vec![0.0; u];
            for j in (burn_in..=last).rev() {
                let dh: Vec<f64> = dh_out[j].iter().zip(&dh_next).map(|(a, b)| a + b).collect();
                let (dx, dh_prev, dc_prev) =
                    lstm_cell_backward(&caches[j].lstm, net.lstm_params(), &dh, &dc_next, &mut lstm_grads)?;
                for (acc, g) in dfeat[(offset + j) * d..(offset + j + 1) * d].iter_mut().zip(&dx) {
                    *acc += g;
                }
                dh_next = dh_prev;
                dc_next = dc_prev;
            }
        }
        all_q.push(outs.into_iter().map(|o| o.q).collect());
        offset += n;
    }
    add_into(&mut grads, "lstm.wx", &lstm_grads.wx);
    add_into(&mut grads, "lstm.wh", &lstm_grads.wh);
    add_into(&mut grads, "lstm.b", &lstm_grads.b);
    net.conv_stack_backward(&trace, dfeat, &mut grads)?;
    for (name, g) in &grads {
        check_finite(g, &format!("gradient of {name}"))?;
    }
    let bn_caches = trace
        .blocks
        .into_iter()
        .enumerate()
        .filter_map(|(i, b)| b.bn.map(|c| (i, c)))
        .collect();
    Ok(WindowLoss {
        loss: loss_sum * scale,
        terms: total_terms,
        grads,
        boundary: boundaries,
        bn_caches,
        q: all_q,
    })
}

fn split2<'a>(grads: &'a mut Gradients, w: &str, b: &str) -> (&'a mut [f64], &'a mut [f64]) {
    let mut wv = None;
    let mut bv = None;
    for (k, v) in grads.iter_mut() {
        if k == w {
            wv = Some(v.as_mut_slice());
        } else if k == b {
            bv = Some(v.as_mut_slice());
        }
    }
    (wv.expect("weight slot"), bv.expect("bias slot"))
}

/// Applies batch-norm running-statistic updates from a train-mode pass.
pub fn apply_bn_updates(net: &mut QNetwork, caches: &[(usize, BnCache)]) {
    for (i, c) in caches {
        if let Some(s) = net.bn_stats.get_mut(i) {
            update_running_stats(s, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::config::ConvBlock;
    use crate::env::ObservationFrame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn frame(seed: u64, w: usize, h: usize) -> ObservationFrame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ObservationFrame::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    }

    #[test]
    fn zero_network_has_uniform_weighting() {
        let net = QNetwork::new(NetworkConfig::desk(), Init::Zeros, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let out = net.forward(&frame(1, 64, 64), &net.zero_state()).unwrap();
        assert_eq!(out.a, vec![0.2; 5]);
        assert_eq!(out.q, vec![0.0; 5]);
    }

    #[test]
    fn weighting_sums_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let net = QNetwork::new(NetworkConfig::tiny(), Init::Uniform, &mut rng).unwrap();
        let mut s = net.zero_state();
        for k in 0..20 {
            let o = net.forward(&frame(k, 8, 8), &s).unwrap();
            assert!((o.a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(o.a.iter().all(|&x| x > 0.0 && x < 1.0));
            for i in 0..5 {
                assert_eq!(o.q[i], o.v[i] * o.a[i]);
            }
            s = o.state;
        }
    }

    #[test]
    fn sequence_pass_matches_stepwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = QNetwork::new(NetworkConfig::tiny(), Init::Uniform, &mut rng).unwrap();
        let frames: Vec<ObservationFrame> = (0..6).map(|k| frame(10 + k, 8, 8)).collect();
        let refs: Vec<&ObservationFrame> = frames.iter().collect();
        let seq = net.forward_sequence(&refs, &net.zero_state()).unwrap();
        let mut s = net.zero_state();
        for (f, o) in frames.iter().zip(&seq) {
            let step = net.forward(f, &s).unwrap();
            for (a, b) in step.q.iter().zip(&o.q) {
                assert!((a - b).abs() < 1e-10);
            }
            s = step.state;
        }
    }

    #[test]
    fn wrong_observation_size() {
        let net = QNetwork::new(NetworkConfig::tiny(), Init::Zeros, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(matches!(
            net.forward(&frame(0, 9, 8), &net.zero_state()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn buffers_round_trip() {
        let mut net = QNetwork::new(NetworkConfig::tiny(), Init::Uniform, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = net.buffers();
        assert_eq!(b.len(), 4);
        net.set_buffer("bn1.running_mean", Tensor::filled(&[2], 0.5)).unwrap();
        assert_eq!(net.bn_stats()[&0].mean.data(), &[0.5, 0.5]);
        assert!(net.set_buffer("bn9.running_mean", Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn pooled_config_builds() {
        let cfg = NetworkConfig {
            input_h: 16,
            input_w: 16,
            conv: vec![ConvBlock::new(2, 3, 1).pooled(), ConvBlock::new(2, 3, 1)],
            lstm_units: 3,
            aux_units: 3,
            action_count: 5,
            batchnorm_enabled: false,
        };
        let net = QNetwork::new(cfg, Init::Uniform, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(net.feature_len(), 2 * 5 * 5);
        net.forward(&frame(0, 16, 16), &net.zero_state()).unwrap();
    }
}
