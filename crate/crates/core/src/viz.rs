//! Activation maps and deconvolution reconstructions of conv-layer features.
//!
//! A reconstruction starts from selected activations of one conv block and
//! walks down to the input: unpool through the forward pass's switches,
//! rectify, then apply the transposed convolution with the block's own
//! kernels. Biases and batch-norm are skipped on the way down.

use std::path::{Path, PathBuf};

use crate::agent::network::conv_w;
use crate::agent::QNetwork;
use crate::env::ObservationFrame;
use crate::error::{Error, Result};
use crate::nn::{conv2d_transpose, relu, unpool, BnMode, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Only the single strongest activation (lowest index on ties).
    Max,
    /// Every activation of the layer.
    All,
}

#[derive(Debug, Clone)]
pub struct FeatureViz {
    /// 1-based conv layer index.
    pub layer: usize,
    /// Block output `[C, H, W]` (after ReLU and pooling, if any).
    pub activations: Tensor,
    /// `(channel, row, col)` of every nonzero activation fed into the reconstruction.
    pub selected: Vec<(usize, usize, usize)>,
    /// Input-space projection `[H_in, W_in]`.
    pub reconstruction: Tensor,
    /// Pooling switches consumed, keyed by 0-based block, in the order used.
    pub switches_used: Vec<(usize, Vec<usize>)>,
}

pub fn visualize(net: &QNetwork, frame: &ObservationFrame, layer: usize, selection: Selection) -> Result<FeatureViz> {
    let count = net.config().conv.len();
    if layer == 0 || layer > count {
        return Err(Error::LayerIndex { index: layer, count });
    }
    let (_, trace) = net.conv_stack(net.frames_tensor(&[frame])?, BnMode::Eval)?;
    let top = &trace.blocks[layer - 1];
    let shape = top.output.shape()[1..].to_vec();
    let activations = top.output.clone().reshape(&shape)?;
    let (h, w) = (shape[1], shape[2]);

    let mut seed = Tensor::zeros(top.output.shape());
    match selection {
        Selection::Max => {
            let best = activations.argmax();
            seed.data_mut()[best] = activations.data()[best];
        }
        Selection::All => seed.data_mut().copy_from_slice(activations.data()),
    }
    let selected = seed
        .data()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(i, _)| (i / (h * w), (i / w) % h, i % w))
        .collect();

    let mut x = seed;
    let mut switches_used = Vec::new();
    for i in (0..layer).rev() {
        let block = &trace.blocks[i];
        let cfg = net.config().conv[i];
        if let Some(sw) = &block.switches {
            x = unpool(&x, sw, block.pre_relu.shape())?;
            switches_used.push((i, sw.clone()));
        }
        let rect = Tensor::from_vec(x.shape(), relu(x.data()))?;
        let in_shape = block.input.shape();
        let (ih, iw) = (in_shape[2], in_shape[3]);
        let down = conv2d_transpose(&rect, net.params().get(&conv_w(i)), cfg.stride, ih, iw)?;
        x = down.reshape(in_shape)?;
    }
    let (ih, iw) = (net.config().input_h, net.config().input_w);
    Ok(FeatureViz {
        layer,
        activations,
        selected,
        reconstruction: x.reshape(&[ih, iw])?,
        switches_used,
    })
}

/// Min-max scales values into a gray frame; a constant map becomes all zeros.
pub fn normalized_frame(values: &[f64], width: usize, height: usize) -> Result<ObservationFrame> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels = values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect();
    ObservationFrame::new(width, height, pixels)
}

/// Writes `layer{L}_ch{NN}.pgm` per channel and `layer{L}_reconstruction.pgm`.
pub fn write_viz(viz: &FeatureViz, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let s = viz.activations.shape();
    let (c, h, w) = (s[0], s[1], s[2]);
    let mut written = Vec::with_capacity(c + 1);
    for ch in 0..c {
        let frame = normalized_frame(&viz.activations.data()[ch * h * w..(ch + 1) * h * w], w, h)?;
        let path = out_dir.join(format!("layer{}_ch{:02}.pgm", viz.layer, ch));
        frame.write_pgm(&path)?;
        written.push(path);
    }
    let r = viz.reconstruction.shape();
    let frame = normalized_frame(viz.reconstruction.data(), r[1], r[0])?;
    let path = out_dir.join(format!("layer{}_reconstruction.pgm", viz.layer));
    frame.write_pgm(&path)?;
    written.push(path);
    Ok(written)
}
