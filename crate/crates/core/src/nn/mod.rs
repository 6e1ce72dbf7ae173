//! Hand-differentiated numeric layers used by the Q-network.

pub mod activation;
pub mod batchnorm;
pub mod conv;
pub mod dense;
pub mod lstm;
pub mod params;
pub mod pool;
pub mod tensor;

pub use activation::{relu, relu_backward, softmax, softmax_backward, softmax_tensor};
pub use batchnorm::{batchnorm_backward, batchnorm_forward, update_running_stats, BnCache, BnMode, RunningStats};
pub use conv::{conv2d_backward, conv2d_forward, conv2d_transpose, conv_output_dim, ConvGrads};
pub use dense::{dense_backward, dense_forward};
pub use lstm::{lstm_cell_backward, lstm_cell_step, LstmCache, LstmGrads, LstmParams, LstmState};
pub use params::{clip_global_norm, global_norm, rmsprop_step, Gradients, ParameterStore, RMSPROP_DECAY, RMSPROP_EPS};
pub use pool::{maxpool2x2, maxpool2x2_backward, unpool, Pooled};
pub use tensor::{argmax, assert_finite, check_finite, Tensor};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv,
    Pool,
    BatchNorm,
    Dense,
    Lstm,
    Relu,
    Softmax,
}

/// One entry of a layer stack description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub kernel_size: usize,
    pub stride: usize,
    pub channels_out: usize,
    pub units: usize,
}

impl LayerSpec {
    pub fn conv(channels_out: usize, kernel_size: usize, stride: usize) -> Self {
        Self {
            kind: LayerKind::Conv,
            kernel_size,
            stride,
            channels_out,
            units: 0,
        }
    }

    pub fn simple(kind: LayerKind) -> Self {
        Self {
            kind,
            kernel_size: 1,
            stride: 1,
            channels_out: 1,
            units: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size < 1 || self.stride < 1 {
            return Err(Error::Config(format!(
                "layer {:?}: kernel_size and stride must be >= 1",
                self.kind
            )));
        }
        if self.kind == LayerKind::Conv && self.channels_out < 1 {
            return Err(Error::Config("conv layer needs channels_out >= 1".into()));
        }
        if matches!(self.kind, LayerKind::Dense | LayerKind::Lstm) && self.units < 1 {
            return Err(Error::Config(format!("{:?} layer needs units >= 1", self.kind)));
        }
        Ok(())
    }
}
