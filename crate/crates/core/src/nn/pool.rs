use crate::error::{Error, Result};
use crate::nn::conv::nchw;
use crate::nn::tensor::Tensor;

/// Output of a 2x2 max-pool together with the argmax switches.
///
/// `switches[i]` is the flat input index that produced output element `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub output: Tensor,
    pub switches: Vec<usize>,
}

/// Non-overlapping 2x2 max pooling. Odd trailing rows/columns are dropped;
/// ties resolve to the lowest flat input index.
pub fn maxpool2x2(input: &Tensor) -> Result<Pooled> {
    let (n, c, h, w) = nchw(input)?;
    if h < 2 || w < 2 {
        return Err(Error::Degenerate(format!(
            "max-pool needs H,W >= 2, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut switches = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + (2 * oy) * w + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * oy + dy) * w + 2 * ox + dx;
                    if x[idx] > x[best] {
                        best = idx;
                    }
                }
                out.push(x[best]);
                switches.push(best);
            }
        }
    }
    let shape = if input.rank() == 3 {
        vec![c, oh, ow]
    } else {
        vec![n, c, oh, ow]
    };
    Ok(Pooled {
        output: Tensor::from_vec(&shape, out)?,
        switches,
    })
}

/// Routes each upstream gradient element to the input position its switch names.
pub fn maxpool2x2_backward(input_shape: &[usize], switches: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    if switches.len() != grad_out.len() {
        return Err(Error::Shape(format!(
            "{} switches for {} upstream values",
            switches.len(),
            grad_out.len()
        )));
    }
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&s, &g) in switches.iter().zip(grad_out.data()) {
        d[s] += g;
    }
    Ok(dx)
}

/// Places each pooled value back at its switch position, zeros elsewhere.
pub fn unpool(pooled: &Tensor, switches: &[usize], input_shape: &[usize]) -> Result<Tensor> {
    maxpool2x2_backward(input_shape, switches, pooled)
}
