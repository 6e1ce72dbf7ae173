//! Single LSTM cell with explicit backward through time.
//!
//! Gate pre-activations are stacked as `[input, forget, candidate, output]`,
//! each `units` long, so `wx` is `[4U, In]`, `wh` is `[4U, U]` and `b` is `[4U]`.

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::nn::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Tensor,
    pub c: Tensor,
}

impl LstmState {
    pub fn zeros(units: usize) -> Self {
        Self {
            h: Tensor::zeros(&[units]),
            c: Tensor::zeros(&[units]),
        }
    }

    pub fn units(&self) -> usize {
        self.h.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LstmParams<'a> {
    pub wx: &'a Tensor,
    pub wh: &'a Tensor,
    pub b: &'a Tensor,
}

impl LstmParams<'_> {
    fn dims(&self) -> Result<(usize, usize)> {
        let (four_u, input) = match *self.wx.shape() {
            [a, b] => (a, b),
            ref s => return Err(Error::Shape(format!("lstm wx must be [4U,In], got {s:?}"))),
        };
        if four_u % 4 != 0 {
            return Err(Error::Shape(format!("lstm wx rows {four_u} not a multiple of 4")));
        }
        let u = four_u / 4;
        if self.wh.shape() != [four_u, u] || self.b.len() != four_u {
            return Err(Error::Shape(format!(
                "lstm wh {:?} / b {:?} inconsistent with {u} units",
                self.wh.shape(),
                self.b.shape()
            )));
        }
        Ok((u, input))
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    i: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

pub fn lstm_cell_step(x: &[f64], state: &LstmState, params: LstmParams<'_>) -> Result<(LstmState, LstmCache)> {
    let (u, input) = params.dims()?;
    if x.len() != input {
        return Err(Error::Shape(format!("lstm input length {} != {input}", x.len())));
    }
    if state.units() != u || state.c.len() != u {
        return Err(Error::Shape(format!(
            "lstm state has {} units, cell has {u}",
            state.units()
        )));
    }
    let wx = params.wx.data();
    let wh = params.wh.data();
    let h_prev = state.h.data();
    let mut pre = params.b.data().to_vec();
    for (r, p) in pre.iter_mut().enumerate() {
        let xrow = &wx[r * input..(r + 1) * input];
        let hrow = &wh[r * u..(r + 1) * u];
        *p += xrow.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        *p += hrow.iter().zip(h_prev).map(|(a, b)| a * b).sum::<f64>();
    }
    let i: Vec<f64> = pre[..u].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = pre[u..2 * u].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = pre[2 * u..3 * u].iter().map(|&v| v.tanh()).collect();
    let o: Vec<f64> = pre[3 * u..].iter().map(|&v| sigmoid(v)).collect();
    let c_prev = state.c.data();
    let c: Vec<f64> = (0..u).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let h: Vec<f64> = (0..u).map(|k| o[k] * tanh_c[k]).collect();
    let cache = LstmCache {
        x: x.to_vec(),
        h_prev: h_prev.to_vec(),
        c_prev: c_prev.to_vec(),
        i,
        f,
        g,
        o,
        tanh_c,
    };
    Ok((
        LstmState {
            h: Tensor::from_vec(&[u], h)?,
            c: Tensor::from_vec(&[u], c)?,
        },
        cache,
    ))
}

/// Gradient buffers for one cell, accumulated across time steps.
#[derive(Debug, Clone)]
pub struct LstmGrads {
    pub wx: Vec<f64>,
    pub wh: Vec<f64>,
    pub b: Vec<f64>,
}

impl LstmGrads {
    pub fn zeros(params: LstmParams<'_>) -> Self {
        Self {
            wx: vec![0.0; params.wx.len()],
            wh: vec![0.0; params.wh.len()],
            b: vec![0.0; params.b.len()],
        }
    }
}

/// Backward through one step. `dh`/`dc` are the total gradients arriving at
/// this step's outputs; returns `(dx, dh_prev, dc_prev)`.
pub fn lstm_cell_backward(
    cache: &LstmCache,
    params: LstmParams<'_>,
    dh: &[f64],
    dc: &[f64],
    grads: &mut LstmGrads,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let (u, input) = params.dims()?;
    if dh.len() != u || dc.len() != u {
        return Err(Error::Shape("lstm backward gradient length".into()));
    }
    let mut dpre = vec![0.0; 4 * u];
    let mut dc_prev = vec![0.0; u];
    for k in 0..u {
        let dc_total = dc[k] + dh[k] * cache.o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]);
        let d_o = dh[k] * cache.tanh_c[k];
        let d_i = dc_total * cache.g[k];
        let d_f = dc_total * cache.c_prev[k];
        let d_g = dc_total * cache.i[k];
        dc_prev[k] = dc_total * cache.f[k];
        dpre[k] = d_i * cache.i[k] * (1.0 - cache.i[k]);
        dpre[u + k] = d_f * cache.f[k] * (1.0 - cache.f[k]);
        dpre[2 * u + k] = d_g * (1.0 - cache.g[k] * cache.g[k]);
        dpre[3 * u + k] = d_o * cache.o[k] * (1.0 - cache.o[k]);
    }
    let wx = params.wx.data();
    let wh = params.wh.data();
    let mut dx = vec![0.0; input];
    let mut dh_prev = vec![0.0; u];
    for (r, &d) in dpre.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        grads.b[r] += d;
        let xrow = r * input;
        for j in 0..input {
            grads.wx[xrow + j] += d * cache.x[j];
            dx[j] += d * wx[xrow + j];
        }
        let hrow = r * u;
        for j in 0..u {
            grads.wh[hrow + j] += d * cache.h_prev[j];
            dh_prev[j] += d * wh[hrow + j];
        }
    }
    Ok((dx, dh_prev, dc_prev))
}
