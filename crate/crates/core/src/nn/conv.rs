//! Valid (unpadded) 2D convolution over `[N, C, H, W]` batches.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

/// Splits a rank-3 `[C, H, W]` or rank-4 `[N, C, H, W]` shape into four parts.
pub fn nchw(t: &Tensor) -> Result<(usize, usize, usize, usize)> {
    match *t.shape() {
        [c, h, w] => Ok((1, c, h, w)),
        [n, c, h, w] => Ok((n, c, h, w)),
        ref s => Err(Error::Shape(format!("expected [C,H,W] or [N,C,H,W], got {s:?}"))),
    }
}

pub fn conv_output_dim(input: usize, kernel: usize, stride: usize) -> Option<usize> {
    if input < kernel || stride == 0 {
        None
    } else {
        Some((input - kernel) / stride + 1)
    }
}

struct Geometry {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k_out: usize,
    k: usize,
    stride: usize,
    oh: usize,
    ow: usize,
}

fn geometry(input: &Tensor, weights: &Tensor, stride: usize) -> Result<Geometry> {
    let (n, c, h, w) = nchw(input)?;
    let (k_out, wc, kh, kw) = match *weights.shape() {
        [a, b, c, d] => (a, b, c, d),
        ref s => return Err(Error::Shape(format!("conv weights must be [K,C,k,k], got {s:?}"))),
    };
    if kh != kw {
        return Err(Error::Shape(format!("non-square kernel {kh}x{kw}")));
    }
    if wc != c {
        return Err(Error::Shape(format!(
            "input has {c} channels but kernels expect {wc}"
        )));
    }
    if stride == 0 {
        return Err(Error::Shape("stride must be >= 1".into()));
    }
    let oh = conv_output_dim(h, kh, stride)
        .ok_or_else(|| Error::Shape(format!("input height {h} smaller than kernel {kh}")))?;
    let ow = conv_output_dim(w, kw, stride)
        .ok_or_else(|| Error::Shape(format!("input width {w} smaller than kernel {kw}")))?;
    Ok(Geometry {
        n,
        c,
        h,
        w,
        k_out,
        k: kh,
        stride,
        oh,
        ow,
    })
}

/// Each output is `sum_{c,ky,kx} x * w` accumulated in that order, then `+ bias`.
pub fn conv2d_forward(input: &Tensor, weights: &Tensor, bias: &Tensor, stride: usize) -> Result<Tensor> {
    let g = geometry(input, weights, stride)?;
    if bias.len() != g.k_out {
        return Err(Error::Shape(format!(
            "bias length {} != kernel count {}",
            bias.len(),
            g.k_out
        )));
    }
    let x = input.data();
    let wt = weights.data();
    let b = bias.data();
    let mut out = vec![0.0; g.n * g.k_out * g.oh * g.ow];
    let in_img = g.c * g.h * g.w;
    let w_len = g.c * g.k * g.k;
    for n in 0..g.n {
        let xn = &x[n * in_img..(n + 1) * in_img];
        for ko in 0..g.k_out {
            let wk = &wt[ko * w_len..(ko + 1) * w_len];
            let obase = (n * g.k_out + ko) * g.oh * g.ow;
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let mut acc = 0.0;
                    for c in 0..g.c {
                        for ky in 0..g.k {
                            let row = c * g.h * g.w + (oy * g.stride + ky) * g.w + ox * g.stride;
                            let wrow = (c * g.k + ky) * g.k;
                            for kx in 0..g.k {
                                acc += xn[row + kx] * wk[wrow + kx];
                            }
                        }
                    }
                    out[obase + oy * g.ow + ox] = acc + b[ko];
                }
            }
        }
    }
    let shape = if input.rank() == 3 {
        vec![g.k_out, g.oh, g.ow]
    } else {
        vec![g.n, g.k_out, g.oh, g.ow]
    };
    Tensor::from_vec(&shape, out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

/// Gradients of a convolution given the forward input and the upstream gradient.
pub fn conv2d_backward(input: &Tensor, weights: &Tensor, stride: usize, grad_out: &Tensor) -> Result<ConvGrads> {
    let g = geometry(input, weights, stride)?;
    if grad_out.len() != g.n * g.k_out * g.oh * g.ow {
        return Err(Error::Shape(format!(
            "upstream gradient shape {:?} does not match conv output [{}, {}, {}, {}]",
            grad_out.shape(),
            g.n,
            g.k_out,
            g.oh,
            g.ow
        )));
    }
    let x = input.data();
    let wt = weights.data();
    let go = grad_out.data();
    let in_img = g.c * g.h * g.w;
    let w_len = g.c * g.k * g.k;
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; wt.len()];
    let mut db = vec![0.0; g.k_out];
    for n in 0..g.n {
        let xn = &x[n * in_img..(n + 1) * in_img];
        let dxn = &mut dx[n * in_img..(n + 1) * in_img];
        for ko in 0..g.k_out {
            let wk = &wt[ko * w_len..(ko + 1) * w_len];
            let dwk = &mut dw[ko * w_len..(ko + 1) * w_len];
            let obase = (n * g.k_out + ko) * g.oh * g.ow;
            for oy in 0..g.oh {
                for ox in 0..g.ow {
                    let d = go[obase + oy * g.ow + ox];
                    if d == 0.0 {
                        continue;
                    }
                    db[ko] += d;
                    for c in 0..g.c {
                        for ky in 0..g.k {
                            let row = c * g.h * g.w + (oy * g.stride + ky) * g.w + ox * g.stride;
                            let wrow = (c * g.k + ky) * g.k;
                            for kx in 0..g.k {
                                dwk[wrow + kx] += d * xn[row + kx];
                                dxn[row + kx] += d * wk[wrow + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        input: Tensor::from_vec(input.shape(), dx)?,
        weights: Tensor::from_vec(weights.shape(), dw)?,
        bias: Tensor::from_vec(&[g.k_out], db)?,
    })
}

/// Transposed convolution of a `[K, H', W']` map back to `[C, H, W]` with the
/// forward kernels (no bias). This is the input-gradient route of the forward conv.
pub fn conv2d_transpose(maps: &Tensor, weights: &Tensor, stride: usize, out_h: usize, out_w: usize) -> Result<Tensor> {
    let (k_out, c, k) = match *weights.shape() {
        [a, b, kh, kw] if kh == kw => (a, b, kh),
        ref s => return Err(Error::Shape(format!("conv weights must be [K,C,k,k], got {s:?}"))),
    };
    let (n, mk, mh, mw) = nchw(maps)?;
    if n != 1 || mk != k_out {
        return Err(Error::Shape(format!(
            "maps {:?} do not match {k_out} kernels",
            maps.shape()
        )));
    }
    if conv_output_dim(out_h, k, stride) != Some(mh) || conv_output_dim(out_w, k, stride) != Some(mw) {
        return Err(Error::Shape(format!(
            "{out_h}x{out_w} does not convolve to {mh}x{mw} with k={k} s={stride}"
        )));
    }
    let probe = Tensor::zeros(&[c, out_h, out_w]);
    Ok(conv2d_backward(&probe, weights, stride, maps)?.input)
}
