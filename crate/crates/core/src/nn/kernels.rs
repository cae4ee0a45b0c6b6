use rand::Rng as _;

use super::{LayerParams, Mode, Tensor1d};
use crate::error::{Error, Result};
use crate::rng::Rng;

fn expect_shape(params: &LayerParams, rank: usize, what: &str) -> Result<()> {
    let count: usize = params.shape.iter().product();
    if params.shape.len() != rank || params.weights.len() != count {
        return Err(Error::shape(format!(
            "{what} expects a rank-{rank} weight tensor, got shape {:?} with {} values",
            params.shape,
            params.weights.len()
        )));
    }
    Ok(())
}

fn conv_dims(input: &Tensor1d, params: &LayerParams, stride: usize) -> Result<(usize, usize, usize, usize)> {
    expect_shape(params, 3, "conv1d")?;
    let (out_ch, in_ch, k) = (params.shape[0], params.shape[1], params.shape[2]);
    if stride == 0 || k == 0 {
        return Err(Error::shape("conv1d needs stride >= 1 and kernel >= 1"));
    }
    if input.channels != in_ch {
        return Err(Error::shape(format!(
            "conv1d expects {in_ch} input channels, got {}",
            input.channels
        )));
    }
    if params.bias.len() != out_ch {
        return Err(Error::shape("conv1d bias length must equal the output channels"));
    }
    let len = input.len();
    if k > len {
        return Err(Error::shape(format!("kernel {k} is longer than the input ({len})")));
    }
    Ok((out_ch, in_ch, k, (len - k) / stride + 1))
}

/// Valid cross-correlation: `y[o][t] = b[o] + sum_i sum_j w[o][i][j] x[i][t*stride + j]`.
/// Weights have shape `[out, in, kernel]`.
pub fn conv1d(input: &Tensor1d, params: &LayerParams, stride: usize) -> Result<Tensor1d> {
    let (out_ch, in_ch, k, out_len) = conv_dims(input, params, stride)?;
    let len = input.len();
    let mut out = vec![0.0; out_ch * out_len];
    for o in 0..out_ch {
        let y = &mut out[o * out_len..(o + 1) * out_len];
        y.iter_mut().for_each(|v| *v = params.bias[o]);
        for i in 0..in_ch {
            let x = &input.data[i * len..(i + 1) * len];
            let w = &params.weights[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
            for (t, yt) in y.iter_mut().enumerate() {
                let start = t * stride;
                *yt += w.iter().zip(&x[start..start + k]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    Ok(Tensor1d { channels: out_ch, data: out })
}

pub fn conv1d_backward(
    input: &Tensor1d,
    params: &LayerParams,
    stride: usize,
    grad_out: &Tensor1d,
) -> Result<(Tensor1d, LayerParams)> {
    let (out_ch, in_ch, k, out_len) = conv_dims(input, params, stride)?;
    if grad_out.channels != out_ch || grad_out.len() != out_len {
        return Err(Error::shape("conv1d gradient does not match the forward output"));
    }
    let len = input.len();
    let mut grad_in = Tensor1d::zeros(in_ch, len);
    let mut grads = params.zeros_like();
    for o in 0..out_ch {
        let gy = grad_out.channel(o);
        grads.bias[o] = gy.iter().sum();
        for i in 0..in_ch {
            let x = &input.data[i * len..(i + 1) * len];
            let widx = (o * in_ch + i) * k;
            let w = &params.weights[widx..widx + k];
            let gw = &mut grads.weights[widx..widx + k];
            let gx = &mut grad_in.data[i * len..(i + 1) * len];
            for (t, &g) in gy.iter().enumerate() {
                let start = t * stride;
                for j in 0..k {
                    gw[j] += g * x[start + j];
                    gx[start + j] += g * w[j];
                }
            }
        }
    }
    Ok((grad_in, grads))
}

fn conv_t_dims(input: &Tensor1d, params: &LayerParams, stride: usize) -> Result<(usize, usize, usize, usize)> {
    expect_shape(params, 3, "conv1d_transpose")?;
    let (in_ch, out_ch, k) = (params.shape[0], params.shape[1], params.shape[2]);
    if stride == 0 || k == 0 {
        return Err(Error::shape("conv1d_transpose needs stride >= 1 and kernel >= 1"));
    }
    if input.channels != in_ch {
        return Err(Error::shape(format!(
            "conv1d_transpose expects {in_ch} input channels, got {}",
            input.channels
        )));
    }
    if params.bias.len() != out_ch {
        return Err(Error::shape("conv1d_transpose bias length must equal the output channels"));
    }
    if input.is_empty() {
        return Err(Error::shape("conv1d_transpose input is empty"));
    }
    Ok((in_ch, out_ch, k, (input.len() - 1) * stride + k))
}

/// Transposed convolution, the adjoint of [`conv1d`] (up to bias) when given
/// the same weight tensor. Weights have shape `[in, out, kernel]`, matching the
/// `[out, in, kernel]` layout of the forward convolution it undoes.
pub fn conv1d_transpose(input: &Tensor1d, params: &LayerParams, stride: usize) -> Result<Tensor1d> {
    let (in_ch, out_ch, k, out_len) = conv_t_dims(input, params, stride)?;
    let len = input.len();
    let mut out = vec![0.0; out_ch * out_len];
    for o in 0..out_ch {
        out[o * out_len..(o + 1) * out_len]
            .iter_mut()
            .for_each(|v| *v = params.bias[o]);
    }
    for i in 0..in_ch {
        let x = input.channel(i);
        for o in 0..out_ch {
            let widx = (i * out_ch + o) * k;
            let w = &params.weights[widx..widx + k];
            let y = &mut out[o * out_len..(o + 1) * out_len];
            for (t, &xt) in x.iter().enumerate().take(len) {
                let start = t * stride;
                for j in 0..k {
                    y[start + j] += w[j] * xt;
                }
            }
        }
    }
    Ok(Tensor1d { channels: out_ch, data: out })
}

pub fn conv1d_transpose_backward(
    input: &Tensor1d,
    params: &LayerParams,
    stride: usize,
    grad_out: &Tensor1d,
) -> Result<(Tensor1d, LayerParams)> {
    let (in_ch, out_ch, k, out_len) = conv_t_dims(input, params, stride)?;
    if grad_out.channels != out_ch || grad_out.len() != out_len {
        return Err(Error::shape("conv1d_transpose gradient does not match the forward output"));
    }
    let len = input.len();
    let mut grad_in = Tensor1d::zeros(in_ch, len);
    let mut grads = params.zeros_like();
    for o in 0..out_ch {
        grads.bias[o] = grad_out.channel(o).iter().sum();
    }
    for i in 0..in_ch {
        let x = input.channel(i);
        for o in 0..out_ch {
            let widx = (i * out_ch + o) * k;
            let w = &params.weights[widx..widx + k];
            let gy = grad_out.channel(o);
            for (t, &xt) in x.iter().enumerate() {
                let start = t * stride;
                let mut gx = 0.0;
                for j in 0..k {
                    gx += w[j] * gy[start + j];
                    grads.weights[widx + j] += xt * gy[start + j];
                }
                grad_in.data[i * len + t] += gx;
            }
        }
    }
    Ok((grad_in, grads))
}

/// Non-overlapping max pooling. Returns the pooled tensor and, per output, the
/// flat index into `input.data` of the winning element (lowest index on ties).
/// A trailing partial window is dropped.
pub fn maxpool(input: &Tensor1d, window: usize) -> Result<(Tensor1d, Vec<usize>)> {
    let len = input.len();
    if window == 0 {
        return Err(Error::shape("pool window must be at least 1"));
    }
    if window > len {
        return Err(Error::shape(format!("pool window {window} exceeds input length {len}")));
    }
    let out_len = len / window;
    let mut out = Vec::with_capacity(input.channels * out_len);
    let mut argmax = Vec::with_capacity(input.channels * out_len);
    for c in 0..input.channels {
        for t in 0..out_len {
            let base = c * len + t * window;
            let mut best = base;
            for idx in base + 1..base + window {
                if input.data[idx] > input.data[best] {
                    best = idx;
                }
            }
            out.push(input.data[best]);
            argmax.push(best);
        }
    }
    Ok((Tensor1d { channels: input.channels, data: out }, argmax))
}

/// Routes each output gradient to the input element that won its window.
pub fn maxpool_backward(input_channels: usize, input_len: usize, argmax: &[usize], grad_out: &Tensor1d) -> Result<Tensor1d> {
    if grad_out.data.len() != argmax.len() {
        return Err(Error::shape("maxpool gradient does not match the recorded indices"));
    }
    let mut grad_in = Tensor1d::zeros(input_channels, input_len);
    for (&idx, &g) in argmax.iter().zip(&grad_out.data) {
        grad_in.data[idx] += g;
    }
    Ok(grad_in)
}

/// `y = W x + b` with `W` of shape `[out, in]`.
pub fn dense(input: &[f64], params: &LayerParams) -> Result<Vec<f64>> {
    expect_shape(params, 2, "dense")?;
    let (out_dim, in_dim) = (params.shape[0], params.shape[1]);
    if input.len() != in_dim || params.bias.len() != out_dim {
        return Err(Error::shape(format!(
            "dense layer {out_dim}x{in_dim} applied to a vector of length {}",
            input.len()
        )));
    }
    Ok(params
        .weights
        .chunks_exact(in_dim)
        .zip(&params.bias)
        .map(|(row, b)| b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>())
        .collect())
}

pub fn dense_backward(input: &[f64], params: &LayerParams, grad_out: &[f64]) -> Result<(Vec<f64>, LayerParams)> {
    expect_shape(params, 2, "dense")?;
    let (out_dim, in_dim) = (params.shape[0], params.shape[1]);
    if input.len() != in_dim || grad_out.len() != out_dim {
        return Err(Error::shape("dense gradient does not match the forward pass"));
    }
    let mut grad_in = vec![0.0; in_dim];
    let mut grads = params.zeros_like();
    for (o, &g) in grad_out.iter().enumerate() {
        grads.bias[o] = g;
        if g == 0.0 {
            continue;
        }
        let row = &params.weights[o * in_dim..(o + 1) * in_dim];
        let grow = &mut grads.weights[o * in_dim..(o + 1) * in_dim];
        for j in 0..in_dim {
            grad_in[j] += g * row[j];
            grow[j] = g * input[j];
        }
    }
    Ok((grad_in, grads))
}

pub fn relu(input: &[f64]) -> Vec<f64> {
    input.iter().map(|&x| x.max(0.0)).collect()
}

pub fn relu_backward(input: &[f64], grad_out: &[f64]) -> Vec<f64> {
    input
        .iter()
        .zip(grad_out)
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect()
}

/// Per-unit multipliers for inverted dropout: 0 with probability `rate`,
/// otherwise `1 / (1 - rate)`.
pub fn dropout_mask(n: usize, rate: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(vec![1.0; n]);
    }
    let keep = 1.0 / (1.0 - rate);
    Ok((0..n)
        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
        .collect())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config("model.dropout", format!("rate must lie in [0, 1), got {rate}")));
    }
    Ok(())
}

/// Inverted dropout in training mode, identity in evaluation mode.
pub fn dropout(input: &[f64], rate: f64, mode: &mut Mode<'_>) -> Result<Vec<f64>> {
    check_rate(rate)?;
    match mode {
        Mode::Eval => Ok(input.to_vec()),
        Mode::Train(rng) => {
            let mask = dropout_mask(input.len(), rate, rng)?;
            Ok(input.iter().zip(&mask).map(|(x, m)| x * m).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    fn params(shape: &[usize], weights: Vec<f64>, bias: Vec<f64>) -> LayerParams {
        LayerParams { shape: shape.to_vec(), weights, bias }
    }

    #[test]
    fn conv_identity_kernel() {
        let x = Tensor1d::from_signal(&[1.0, -2.0, 0.5]);
        let y = conv1d(&x, &params(&[1, 1, 1], vec![1.0], vec![0.0]), 1).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_hand_arithmetic() {
        let x = Tensor1d::from_signal(&[1.0, 2.0, 3.0]);
        let y = conv1d(&x, &params(&[1, 1, 2], vec![1.0, 1.0], vec![0.0]), 1).unwrap();
        assert_eq!(y.data, vec![3.0, 5.0]);
        let y = conv1d(&x, &params(&[1, 1, 1], vec![2.0], vec![1.0]), 2).unwrap();
        assert_eq!(y.data, vec![3.0, 7.0]);
    }

    #[test]
    fn conv_shape_errors() {
        let x = Tensor1d::from_signal(&[1.0, 2.0]);
        assert!(conv1d(&x, &params(&[1, 1, 3], vec![1.0; 3], vec![0.0]), 1).is_err());
        assert!(conv1d(&x, &params(&[1, 2, 1], vec![1.0; 2], vec![0.0]), 1).is_err());
        assert!(conv1d(&x, &params(&[1, 1, 1], vec![1.0], vec![0.0, 0.0]), 1).is_err());
    }

    #[test]
    fn conv_transpose_identity_and_upsampling() {
        let x = Tensor1d::from_signal(&[1.0, -2.0, 0.5]);
        let y = conv1d_transpose(&x, &params(&[1, 1, 1], vec![1.0], vec![0.0]), 1).unwrap();
        assert_eq!(y, x);
        let y = conv1d_transpose(&x, &params(&[1, 1, 2], vec![1.0, 1.0], vec![0.0]), 2).unwrap();
        assert_eq!(y.data, vec![1.0, 1.0, -2.0, -2.0, 0.5, 0.5]);
    }

    #[test]
    fn maxpool_hand_arithmetic() {
        let x = Tensor1d::from_signal(&[1.0, 3.0, 2.0, 2.0]);
        let (y, idx) = maxpool(&x, 2).unwrap();
        assert_eq!(y.data, vec![3.0, 2.0]);
        assert_eq!(idx, vec![1, 2]);
        let (y, idx) = maxpool(&x, 1).unwrap();
        assert_eq!(y, x);
        assert_eq!(idx, vec![0, 1, 2, 3]);
        assert!(maxpool(&x, 5).is_err());
        assert!(maxpool(&x, 0).is_err());
    }

    #[test]
    fn maxpool_backward_conserves_gradient() {
        let mut rng = rng_for(3, &[]);
        let x = Tensor1d::new(2, (0..20).map(|_| rng.random::<f64>()).collect()).unwrap();
        let (y, idx) = maxpool(&x, 3).unwrap();
        let g = Tensor1d::new(2, (0..y.data.len()).map(|i| i as f64 - 2.5).collect()).unwrap();
        let gx = maxpool_backward(2, 10, &idx, &g).unwrap();
        assert_eq!(gx.data.iter().sum::<f64>(), g.data.iter().sum::<f64>());
        for (i, &v) in gx.data.iter().enumerate() {
            if !idx.contains(&i) {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn dense_identity() {
        let p = params(&[3, 3], vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], vec![0.0; 3]);
        let x = [0.5, -1.0, 2.0];
        assert_eq!(dense(&x, &p).unwrap(), x.to_vec());
        assert!(dense(&[1.0, 2.0], &p).is_err());
    }

    #[test]
    fn dropout_contracts() {
        let x: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let mut rng = rng_for(1, &[]);
        assert_eq!(dropout(&x, 0.0, &mut Mode::Train(&mut rng)).unwrap(), x);
        assert_eq!(dropout(&x, 0.0, &mut Mode::Eval).unwrap(), x);
        assert_eq!(dropout(&x, 0.7, &mut Mode::Eval).unwrap(), x);
        assert!(dropout(&x, 1.0, &mut Mode::Eval).is_err());
        assert!(dropout(&x, -0.1, &mut Mode::Eval).is_err());
    }

    #[test]
    fn dropout_monte_carlo() {
        let n = 100_000;
        let x = vec![2.0; n];
        let mut rng = rng_for(2, &[]);
        let y = dropout(&x, 0.5, &mut Mode::Train(&mut rng)).unwrap();
        let survivors = y.iter().filter(|&&v| v != 0.0).count() as f64 / n as f64;
        assert!((survivors - 0.5).abs() < 0.01, "survivor fraction {survivors}");
        let mean = y.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02 * 2.0, "mean {mean}");
    }
}
