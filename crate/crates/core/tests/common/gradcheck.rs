//! Finite-difference checks of every hand-written backward pass. Each check
//! projects the layer output onto a random direction `r` so the scalar
//! objective is `sum(out * r)`, and returns the worst relative error over all
//! differentiated inputs.

use drqn_core::agent::{compute_window_targets, window_loss, QNetwork};
use drqn_core::nn::{
    batchnorm_backward, batchnorm_forward, conv2d_backward, conv2d_forward, dense_backward, dense_forward,
    lstm_cell_backward, lstm_cell_step, maxpool2x2, maxpool2x2_backward, softmax, softmax_backward, BnMode,
    LstmGrads, LstmParams, LstmState, RunningStats, Tensor,
};
use drqn_core::replay::TransitionWindow;
use rand::Rng;

use super::{central_diff, random_vec, random_window, rel_error, rng, tiny_net};

pub const STEP: f64 = 1e-5;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn t(shape: &[usize], data: &[f64]) -> Tensor {
    Tensor::from_vec(shape, data.to_vec()).unwrap()
}

pub fn conv(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (n, c, h, w, k, ks, s) = (2, 2, 7, 7, 3, 3, 2);
    let x = random_vec(&mut g, n * c * h * w);
    let wt = random_vec(&mut g, k * c * ks * ks);
    let b = random_vec(&mut g, k);
    let out_len = n * k * 3 * 3;
    let r = random_vec(&mut g, out_len);
    let f = |x: &[f64], wt: &[f64], b: &[f64]| {
        let y = conv2d_forward(&t(&[n, c, h, w], x), &t(&[k, c, ks, ks], wt), &t(&[k], b), s).unwrap();
        dot(y.data(), &r)
    };
    let grads = conv2d_backward(&t(&[n, c, h, w], &x), &t(&[k, c, ks, ks], &wt), s, &t(&[n, k, 3, 3], &r)).unwrap();
    let ex = rel_error(grads.input.data(), &central_diff(&x, STEP, |p| f(p, &wt, &b)));
    let ew = rel_error(grads.weights.data(), &central_diff(&wt, STEP, |p| f(&x, p, &b)));
    let eb = rel_error(grads.bias.data(), &central_diff(&b, STEP, |p| f(&x, &wt, p)));
    ex.max(ew).max(eb)
}

pub fn batchnorm(seed: u64) -> f64 {
    let mut g = rng(seed);
    let shape = [3, 2, 3, 3];
    let len = 54;
    let x: Vec<f64> = random_vec(&mut g, len).iter().map(|v| 2.0 * v + 0.3).collect();
    let gamma: Vec<f64> = (0..2).map(|_| g.gen_range(0.5..1.5)).collect();
    let beta = random_vec(&mut g, 2);
    let r = random_vec(&mut g, len);
    let stats = RunningStats::new(2);
    let f = |x: &[f64], gm: &[f64], bt: &[f64]| {
        let (y, _) = batchnorm_forward(&t(&shape, x), &t(&[2], gm), &t(&[2], bt), &stats, BnMode::Train).unwrap();
        dot(y.data(), &r)
    };
    let (_, cache) = batchnorm_forward(&t(&shape, &x), &t(&[2], &gamma), &t(&[2], &beta), &stats, BnMode::Train).unwrap();
    let grads = batchnorm_backward(&shape, &t(&[2], &gamma), &cache, &t(&shape, &r)).unwrap();
    let ex = rel_error(grads.input.data(), &central_diff(&x, STEP, |p| f(p, &gamma, &beta)));
    let eg = rel_error(grads.gamma.data(), &central_diff(&gamma, STEP, |p| f(&x, p, &beta)));
    let eb = rel_error(grads.beta.data(), &central_diff(&beta, STEP, |p| f(&x, &gamma, p)));
    ex.max(eg).max(eb)
}

pub fn dense(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (o, i) = (4, 6);
    let x = random_vec(&mut g, i);
    let w = random_vec(&mut g, o * i);
    let b = random_vec(&mut g, o);
    let r = random_vec(&mut g, o);
    let f = |x: &[f64], w: &[f64], b: &[f64]| dot(&dense_forward(x, &t(&[o, i], w), &t(&[o], b)).unwrap(), &r);
    let mut dw = vec![0.0; o * i];
    let mut db = vec![0.0; o];
    let dx = dense_backward(&x, &t(&[o, i], &w), &r, &mut dw, &mut db).unwrap();
    let ex = rel_error(&dx, &central_diff(&x, STEP, |p| f(p, &w, &b)));
    let ew = rel_error(&dw, &central_diff(&w, STEP, |p| f(&x, p, &b)));
    let eb = rel_error(&db, &central_diff(&b, STEP, |p| f(&x, &w, p)));
    ex.max(ew).max(eb)
}

pub fn lstm(seed: u64) -> f64 {
    let mut g = rng(seed);
    let (u, i) = (4, 5);
    let x = random_vec(&mut g, i);
    let wx = random_vec(&mut g, 4 * u * i);
    let wh = random_vec(&mut g, 4 * u * u);
    let b = random_vec(&mut g, 4 * u);
    let h0 = random_vec(&mut g, u);
    let c0 = random_vec(&mut g, u);
    let rh = random_vec(&mut g, u);
    let rc = random_vec(&mut g, u);
    // objective touches both outputs: sum(h*rh) + sum(c*rc)
    let f = |x: &[f64], wx: &[f64], wh: &[f64], b: &[f64], h0: &[f64], c0: &[f64]| {
        let (wx, wh, b) = (t(&[4 * u, i], wx), t(&[4 * u, u], wh), t(&[4 * u], b));
        let st = LstmState {
            h: t(&[u], h0),
            c: t(&[u], c0),
        };
        let (s, _) = lstm_cell_step(x, &st, LstmParams { wx: &wx, wh: &wh, b: &b }).unwrap();
        dot(s.h.data(), &rh) + dot(s.c.data(), &rc)
    };
    let (twx, twh, tb) = (t(&[4 * u, i], &wx), t(&[4 * u, u], &wh), t(&[4 * u], &b));
    let params = LstmParams {
        wx: &twx,
        wh: &twh,
        b: &tb,
    };
    let st = LstmState {
        h: t(&[u], &h0),
        c: t(&[u], &c0),
    };
    let (_, cache) = lstm_cell_step(&x, &st, params).unwrap();
    let mut grads = LstmGrads::zeros(params);
    let (dx, dh0, dc0) = lstm_cell_backward(&cache, params, &rh, &rc, &mut grads).unwrap();
    [
        rel_error(&dx, &central_diff(&x, STEP, |p| f(p, &wx, &wh, &b, &h0, &c0))),
        rel_error(&grads.wx, &central_diff(&wx, STEP, |p| f(&x, p, &wh, &b, &h0, &c0))),
        rel_error(&grads.wh, &central_diff(&wh, STEP, |p| f(&x, &wx, p, &b, &h0, &c0))),
        rel_error(&grads.b, &central_diff(&b, STEP, |p| f(&x, &wx, &wh, p, &h0, &c0))),
        rel_error(&dh0, &central_diff(&h0, STEP, |p| f(&x, &wx, &wh, &b, p, &c0))),
        rel_error(&dc0, &central_diff(&c0, STEP, |p| f(&x, &wx, &wh, &b, &h0, p))),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn softmax_layer(seed: u64) -> f64 {
    let mut g = rng(seed);
    let x = random_vec(&mut g, 5);
    let r = random_vec(&mut g, 5);
    let analytic = softmax_backward(&softmax(&x), &r);
    rel_error(&analytic, &central_diff(&x, STEP, |p| dot(&softmax(p), &r)))
}

pub fn maxpool(seed: u64) -> f64 {
    let mut g = rng(seed);
    let shape = [1, 2, 6, 6];
    let x = random_vec(&mut g, 72);
    let r = random_vec(&mut g, 18);
    let pooled = maxpool2x2(&t(&shape, &x)).unwrap();
    let analytic = maxpool2x2_backward(&shape, &pooled.switches, &t(&[1, 2, 3, 3], &r)).unwrap();
    let numeric = central_diff(&x, STEP, |p| dot(maxpool2x2(&t(&shape, p)).unwrap().output.data(), &r));
    rel_error(analytic.data(), &numeric)
}

/// Smallest distance of any ReLU input in the network to the kink at 0.
pub fn kink_margin(net: &QNetwork, windows: &[TransitionWindow]) -> f64 {
    let frames: Vec<_> = windows.iter().flat_map(|w| w.transitions.iter().map(|t| &t.observation)).collect();
    let (features, trace) = net.conv_stack(net.frames_tensor(&frames).unwrap(), BnMode::Train).unwrap();
    let mut margin = f64::MAX;
    for b in &trace.blocks {
        margin = b.pre_relu.data().iter().fold(margin, |m, x| m.min(x.abs()));
    }
    let d = net.feature_len();
    for f in features.data().chunks(d) {
        let pre = dense_forward(f, net.params().get("aux.w"), net.params().get("aux.b")).unwrap();
        margin = pre.iter().fold(margin, |m, x| m.min(x.abs()));
    }
    margin
}

/// Central differences are meaningless across a ReLU kink, so inputs that put
/// any pre-activation within `KINK_MARGIN` of zero are redrawn.
pub const KINK_MARGIN: f64 = 1e-4;

fn kink_free_windows(net: &QNetwork, seed: u64) -> Vec<TransitionWindow> {
    for attempt in 0.. {
        let mut g = rng(seed * 1000 + attempt);
        let windows = vec![
            random_window(&mut g, 8, 0, false),
            random_window(&mut g, 7, 1, true),
            random_window(&mut g, 8, 2, false),
        ];
        if kink_margin(net, &windows) > KINK_MARGIN {
            return windows;
        }
    }
    unreachable!()
}

/// The whole windowed loss on the tiny network: every parameter tensor,
/// recurrent state held fixed at the burn-in boundary.
pub fn full_loss(seed: u64) -> f64 {
    let net: QNetwork = tiny_net(seed);
    let target = tiny_net(seed + 1000);
    let windows = kink_free_windows(&net, seed);
    let mut targets = compute_window_targets(&target, &windows, 0.9).unwrap();
    // scale targets away from q so residuals are not tiny
    for row in &mut targets {
        for y in row.iter_mut() {
            *y += 0.5;
        }
    }
    let base = window_loss(&net, &windows, 4, &targets, None).unwrap();
    let boundary = base.boundary.clone();
    let mut worst: f64 = 0.0;
    for name in net.params().names().map(str::to_string).collect::<Vec<_>>() {
        let x = net.params().get(&name).data().to_vec();
        let numeric = central_diff(&x, STEP, |p| {
            let mut n = net.clone();
            n.params_mut().get_mut(&name).unwrap().data_mut().copy_from_slice(p);
            window_loss(&n, &windows, 4, &targets, Some(&boundary)).unwrap().loss
        });
        let e = rel_error(&base.grads[&name], &numeric);
        if std::env::var("GRAD_DEBUG").is_ok() {
            eprintln!("{name}: {e:e} a={:?} n={:?}", &base.grads[&name][..3.min(x.len())], &numeric[..3.min(x.len())]);
        }
        worst = worst.max(e);
    }
    worst
}
