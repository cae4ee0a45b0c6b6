//! Minimal differentiable 1-D layers with hand-written backward passes.
//!
//! Activations are channel-major [`Tensor1d`] values. Each layer's forward pass
//! records what its backward pass needs on a [`Tape`]; backward passes pop the
//! tape in reverse order, so a backward without its matching forward is an
//! error rather than silent garbage.

mod format;
mod kernels;
mod layers;
mod optim;

pub use format::{read_weights, write_weights, NamedTensor, WEIGHTS_MAGIC, WEIGHTS_VERSION};
pub use kernels::{
    conv1d, conv1d_backward, conv1d_transpose, conv1d_transpose_backward, dense, dense_backward,
    dropout, dropout_mask, maxpool, maxpool_backward, relu, relu_backward,
};
pub use layers::{Layer, Mode, Sequential, Tape};
pub use optim::{global_norm, sgd_step, ClipMode, OptimizerConfig};

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// A `channels x len` activation stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1d {
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Tensor1d {
    pub fn new(channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || !data.len().is_multiple_of(channels) {
            return Err(Error::shape(format!(
                "{} values cannot be split into {channels} channels",
                data.len()
            )));
        }
        Ok(Tensor1d { channels, data })
    }

    /// Single-channel tensor.
    pub fn from_signal(samples: &[f64]) -> Self {
        Tensor1d { channels: 1, data: samples.to_vec() }
    }

    pub fn zeros(channels: usize, len: usize) -> Self {
        Tensor1d { channels, data: vec![0.0; channels * len] }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.len();
        &self.data[c * n..(c + 1) * n]
    }
}

/// Weights and bias of one parametric layer. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Weight tensor dimensions, row-major.
    pub shape: Vec<usize>,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros(shape: &[usize], bias_len: usize) -> Self {
        LayerParams {
            shape: shape.to_vec(),
            weights: vec![0.0; shape.iter().product()],
            bias: vec![0.0; bias_len],
        }
    }

    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` weights, zero bias.
    pub fn glorot(shape: &[usize], bias_len: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        Self::uniform(shape, bias_len, (6.0 / (fan_in + fan_out) as f64).sqrt(), rng)
    }

    /// He-uniform weights, `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero bias.
    pub fn he(shape: &[usize], bias_len: usize, fan_in: usize, rng: &mut Rng) -> Self {
        Self::uniform(shape, bias_len, (6.0 / fan_in as f64).sqrt(), rng)
    }

    /// Weights drawn from `U(-limit, limit)`, zero bias.
    pub fn uniform(shape: &[usize], bias_len: usize, limit: f64, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(shape, bias_len);
        for w in &mut p.weights {
            *w = rng.random_range(-limit..limit);
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.shape, self.bias.len())
    }

    pub fn num_values(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }

    pub fn same_shape(&self, other: &LayerParams) -> bool {
        self.shape == other.shape
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &LayerParams, scale: f64) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += scale * b;
        }
    }
}
