mod common;

use common::gradcheck;

const SEEDS: u64 = 20;

fn check(name: &str, tol: f64, f: fn(u64) -> f64) {
    for seed in std::env::var("GRAD_SEED").ok().map(|s| s.parse::<u64>().unwrap()).map_or(0..SEEDS, |s| s..s + 1) {
        let e = f(seed);
        assert!(e < tol, "{name}: seed {seed} relative error {e:e}");
    }
}

#[test]
fn conv_gradients() {
    check("conv", 1e-6, gradcheck::conv);
}

#[test]
fn batchnorm_gradients() {
    check("batchnorm", 1e-6, gradcheck::batchnorm);
}

#[test]
fn dense_gradients() {
    check("dense", 1e-6, gradcheck::dense);
}

#[test]
fn lstm_gradients() {
    check("lstm", 1e-6, gradcheck::lstm);
}

#[test]
fn softmax_gradients() {
    check("softmax", 1e-6, gradcheck::softmax_layer);
}

#[test]
fn maxpool_gradients() {
    check("maxpool", 1e-6, gradcheck::maxpool);
}

#[test]
fn full_window_loss_gradients() {
    check("window loss", 1e-5, gradcheck::full_loss);
}
