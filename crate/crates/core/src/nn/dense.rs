use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

fn dims(weights: &Tensor) -> Result<(usize, usize)> {
    match *weights.shape() {
        [o, i] => Ok((o, i)),
        ref s => Err(Error::Shape(format!("dense weights must be [out,in], got {s:?}"))),
    }
}

/// `y = W x + b` for a single input vector.
pub fn dense_forward(input: &[f64], weights: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let (out, inp) = dims(weights)?;
    if input.len() != inp || bias.len() != out {
        return Err(Error::Shape(format!(
            "dense [{out}x{inp}] given input {} and bias {}",
            input.len(),
            bias.len()
        )));
    }
    let w = weights.data();
    Ok((0..out)
        .map(|o| {
            let row = &w[o * inp..(o + 1) * inp];
            row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias.data()[o]
        })
        .collect())
}

/// Accumulates `dW += dy x^T`, `db += dy` and returns `dx = W^T dy`.
pub fn dense_backward(
    input: &[f64],
    weights: &Tensor,
    grad_out: &[f64],
    dweights: &mut [f64],
    dbias: &mut [f64],
) -> Result<Vec<f64>> {
    let (out, inp) = dims(weights)?;
    if input.len() != inp || grad_out.len() != out || dweights.len() != out * inp || dbias.len() != out {
        return Err(Error::Shape("dense backward buffer sizes".into()));
    }
    let w = weights.data();
    let mut dx = vec![0.0; inp];
    for o in 0..out {
        let g = grad_out[o];
        if g == 0.0 {
            continue;
        }
        dbias[o] += g;
        let row = &w[o * inp..(o + 1) * inp];
        let drow = &mut dweights[o * inp..(o + 1) * inp];
        for i in 0..inp {
            drow[i] += g * input[i];
            dx[i] += g * row[i];
        }
    }
    Ok(dx)
}
