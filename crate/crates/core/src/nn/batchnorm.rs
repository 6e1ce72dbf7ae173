//! Per-channel batch normalization over `[N, C, H, W]`.

use crate::error::{Error, Result};
use crate::nn::conv::nchw;
use crate::nn::tensor::Tensor;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunningStats {
    pub mean: Tensor,
    pub var: Tensor,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        Self {
            mean: Tensor::zeros(&[channels]),
            var: Tensor::filled(&[channels], 1.0),
        }
    }
}

/// Values kept from the forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    pub mode: BnMode,
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
}

pub fn batchnorm_forward(
    input: &Tensor,
    gamma: &Tensor,
    beta: &Tensor,
    stats: &RunningStats,
    mode: BnMode,
) -> Result<(Tensor, BnCache)> {
    let (n, c, h, w) = nchw(input)?;
    if gamma.len() != c || beta.len() != c || stats.mean.len() != c || stats.var.len() != c {
        return Err(Error::Shape(format!(
            "batch-norm expects {c} channels, gamma {} beta {} stats {}",
            gamma.len(),
            beta.len(),
            stats.mean.len()
        )));
    }
    let plane = h * w;
    let count = (n * plane) as f64;
    let x = input.data();
    let (mean, var) = match mode {
        BnMode::Train => {
            let mut mean = vec![0.0; c];
            let mut var = vec![0.0; c];
            for ni in 0..n {
                for ci in 0..c {
                    let base = (ni * c + ci) * plane;
                    mean[ci] += x[base..base + plane].iter().sum::<f64>();
                }
            }
            mean.iter_mut().for_each(|m| *m /= count);
            for ni in 0..n {
                for ci in 0..c {
                    let base = (ni * c + ci) * plane;
                    var[ci] += x[base..base + plane]
                        .iter()
                        .map(|v| (v - mean[ci]).powi(2))
                        .sum::<f64>();
                }
            }
            var.iter_mut().for_each(|v| *v /= count);
            (mean, var)
        }
        BnMode::Eval => (stats.mean.data().to_vec(), stats.var.data().to_vec()),
    };
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut out = vec![0.0; x.len()];
    for ni in 0..n {
        for ci in 0..c {
            let base = (ni * c + ci) * plane;
            for i in base..base + plane {
                xhat[i] = (x[i] - mean[ci]) * inv_std[ci];
                out[i] = gamma.data()[ci] * xhat[i] + beta.data()[ci];
            }
        }
    }
    Ok((
        Tensor::from_vec(input.shape(), out)?,
        BnCache {
            mode,
            xhat,
            inv_std,
            batch_mean: mean,
            batch_var: var,
        },
    ))
}

/// Folds the batch statistics of a train-mode pass into the running averages.
pub fn update_running_stats(stats: &mut RunningStats, cache: &BnCache) {
    if cache.mode != BnMode::Train {
        return;
    }
    for (r, b) in stats.mean.data_mut().iter_mut().zip(&cache.batch_mean) {
        *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
    }
    for (r, b) in stats.var.data_mut().iter_mut().zip(&cache.batch_var) {
        *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
    }
}

#[derive(Debug, Clone)]
pub struct BnGrads {
    pub input: Tensor,
    pub gamma: Tensor,
    pub beta: Tensor,
}

pub fn batchnorm_backward(input_shape: &[usize], gamma: &Tensor, cache: &BnCache, grad_out: &Tensor) -> Result<BnGrads> {
    let (n, c, h, w) = match *input_shape {
        [c, h, w] => (1, c, h, w),
        [n, c, h, w] => (n, c, h, w),
        ref s => return Err(Error::Shape(format!("bad batch-norm input shape {s:?}"))),
    };
    let plane = h * w;
    let count = (n * plane) as f64;
    let dy = grad_out.data();
    if dy.len() != cache.xhat.len() {
        return Err(Error::Shape("batch-norm upstream gradient length".into()));
    }
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for ni in 0..n {
        for ci in 0..c {
            let base = (ni * c + ci) * plane;
            for i in base..base + plane {
                dgamma[ci] += dy[i] * cache.xhat[i];
                dbeta[ci] += dy[i];
            }
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for ni in 0..n {
        for ci in 0..c {
            let g = gamma.data()[ci];
            let base = (ni * c + ci) * plane;
            for i in base..base + plane {
                dx[i] = match cache.mode {
                    BnMode::Eval => g * cache.inv_std[ci] * dy[i],
                    BnMode::Train => {
                        g * cache.inv_std[ci] / count
                            * (count * dy[i] - dbeta[ci] - cache.xhat[i] * dgamma[ci])
                    }
                };
            }
        }
    }
    Ok(BnGrads {
        input: Tensor::from_vec(input_shape, dx)?,
        gamma: Tensor::from_vec(&[c], dgamma)?,
        beta: Tensor::from_vec(&[c], dbeta)?,
    })
}
