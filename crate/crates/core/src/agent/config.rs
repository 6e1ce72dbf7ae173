use crate::env::ACTION_COUNT;
use crate::error::{Error, Result};
use crate::nn::conv::conv_output_dim;
use crate::nn::{LayerKind, LayerSpec};

/// One convolution with its optional batch-norm and 2x2 pooling. ReLU always follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvBlock {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub batchnorm: bool,
    pub pool: bool,
}

impl ConvBlock {
    pub const fn new(channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            channels,
            kernel,
            stride,
            batchnorm: false,
            pool: false,
        }
    }

    pub const fn bn(mut self) -> Self {
        self.batchnorm = true;
        self
    }

    pub const fn pooled(mut self) -> Self {
        self.pool = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_h: usize,
    pub input_w: usize,
    pub conv: Vec<ConvBlock>,
    pub lstm_units: usize,
    pub aux_units: usize,
    pub action_count: usize,
    pub batchnorm_enabled: bool,
}

impl NetworkConfig {
    /// 64x64 input, three conv layers (batch-norm after the first two), LSTM 64, aux 64.
    pub fn desk() -> Self {
        Self {
            input_h: 64,
            input_w: 64,
            conv: vec![
                ConvBlock::new(16, 8, 4).bn(),
                ConvBlock::new(32, 4, 2).bn(),
                ConvBlock::new(32, 3, 1),
            ],
            lstm_units: 64,
            aux_units: 64,
            action_count: ACTION_COUNT,
            batchnorm_enabled: true,
        }
    }

    /// The full-scale layout: 320x240 input, 32/64/128/256 kernels with 2x2
    /// pooling after each, LSTM 900. Its spatial size collapses before the
    /// fourth layer, so [`NetworkConfig::validate`] rejects it.
    pub fn full_scale() -> Self {
        Self {
            input_h: 240,
            input_w: 320,
            conv: vec![
                ConvBlock::new(32, 8, 4).bn().pooled(),
                ConvBlock::new(64, 4, 4).bn().pooled(),
                ConvBlock::new(128, 3, 1).pooled(),
                ConvBlock::new(256, 3, 1).pooled(),
            ],
            lstm_units: 900,
            aux_units: 900,
            action_count: ACTION_COUNT,
            batchnorm_enabled: true,
        }
    }

    /// 8x8 input, two 3x3 convs, 4 LSTM units. For gradient checks.
    pub fn tiny() -> Self {
        Self {
            input_h: 8,
            input_w: 8,
            conv: vec![ConvBlock::new(2, 3, 1).bn(), ConvBlock::new(3, 3, 1).bn()],
            lstm_units: 4,
            aux_units: 4,
            action_count: ACTION_COUNT,
            batchnorm_enabled: true,
        }
    }

    pub fn uses_batchnorm(&self, block: usize) -> bool {
        self.batchnorm_enabled && self.conv[block].batchnorm
    }

    /// The conv stack expanded into individual layers.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let mut out = Vec::new();
        for (i, b) in self.conv.iter().enumerate() {
            out.push(LayerSpec::conv(b.channels, b.kernel, b.stride));
            if self.uses_batchnorm(i) {
                out.push(LayerSpec::simple(LayerKind::BatchNorm));
            }
            out.push(LayerSpec::simple(LayerKind::Relu));
            if b.pool {
                out.push(LayerSpec {
                    kernel_size: 2,
                    stride: 2,
                    ..LayerSpec::simple(LayerKind::Pool)
                });
            }
        }
        out
    }

    /// `(channels, height, width)` after each conv block, checking every layer.
    pub fn block_shapes(&self) -> Result<Vec<(usize, usize, usize)>> {
        if self.conv.is_empty() {
            return Err(Error::Config("at least one conv layer is required".into()));
        }
        let (mut h, mut w) = (self.input_h, self.input_w);
        let mut out = Vec::new();
        for (i, b) in self.conv.iter().enumerate() {
            LayerSpec::conv(b.channels, b.kernel, b.stride).validate()?;
            let layer = i + 1;
            h = conv_output_dim(h, b.kernel, b.stride).ok_or_else(|| {
                Error::Config(format!(
                    "conv layer {layer}: input height {h} smaller than kernel {}",
                    b.kernel
                ))
            })?;
            w = conv_output_dim(w, b.kernel, b.stride).ok_or_else(|| {
                Error::Config(format!(
                    "conv layer {layer}: input width {w} smaller than kernel {}",
                    b.kernel
                ))
            })?;
            if b.pool {
                if h < 2 || w < 2 {
                    return Err(Error::Config(format!(
                        "conv layer {layer}: {h}x{w} map cannot be 2x2 pooled"
                    )));
                }
                h /= 2;
                w /= 2;
            }
            out.push((b.channels, h, w));
        }
        Ok(out)
    }

    pub fn feature_len(&self) -> Result<usize> {
        let (c, h, w) = *self.block_shapes()?.last().unwrap();
        Ok(c * h * w)
    }

    pub fn validate(&self) -> Result<()> {
        self.block_shapes()?;
        if self.lstm_units == 0 || self.aux_units == 0 {
            return Err(Error::Config("lstm_units and aux_units must be >= 1".into()));
        }
        if self.action_count != ACTION_COUNT {
            return Err(Error::Config(format!(
                "action_count {} != environment action count {ACTION_COUNT}",
                self.action_count
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_geometry() {
        let c = NetworkConfig::desk();
        assert_eq!(
            c.block_shapes().unwrap(),
            vec![(16, 15, 15), (32, 6, 6), (32, 4, 4)]
        );
        assert_eq!(c.feature_len().unwrap(), 512);
        c.validate().unwrap();
    }

    #[test]
    fn full_scale_layout_is_not_constructible() {
        let err = NetworkConfig::full_scale().validate().unwrap_err();
        assert!(err.to_string().contains("conv layer"), "{err}");
    }

    #[test]
    fn layer_spec_expansion() {
        let kinds: Vec<LayerKind> = NetworkConfig::desk().layer_specs().iter().map(|l| l.kind).collect();
        use LayerKind::*;
        assert_eq!(kinds, vec![Conv, BatchNorm, Relu, Conv, BatchNorm, Relu, Conv, Relu]);
    }

    #[test]
    fn action_count_must_match_env() {
        let mut c = NetworkConfig::tiny();
        c.action_count = 4;
        assert!(c.validate().is_err());
    }
}
