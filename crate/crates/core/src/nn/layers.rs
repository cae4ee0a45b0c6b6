use super::kernels::*;
use super::{LayerParams, Tensor1d};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Whether stochastic layers (dropout) are active.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Eval,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv1d { params: LayerParams, stride: usize },
    ConvTranspose1d { params: LayerParams, stride: usize },
    MaxPool1d { window: usize },
    Dropout { rate: f64 },
    Dense { params: LayerParams },
    Relu,
    /// Reinterprets the activation with a new channel count (flatten is `channels: 1`).
    Reshape { channels: usize },
}

#[derive(Debug, Clone)]
enum Entry {
    Conv(Tensor1d),
    ConvT(Tensor1d),
    Pool { channels: usize, len: usize, argmax: Vec<usize> },
    Dropout(Vec<f64>),
    Dense(Vec<f64>),
    Relu(Vec<f64>),
    Reshape { channels: usize },
}

/// Activations cached by forward passes, consumed in reverse by backward passes.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    entries: Vec<Entry>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn pop(&mut self, layer: &str) -> Result<Entry> {
        self.entries
            .pop()
            .ok_or_else(|| Error::shape(format!("backward through {layer} without a recorded forward pass")))
    }
}

fn mismatch(layer: &str) -> Error {
    Error::shape(format!("tape entry does not belong to a {layer} layer"))
}

impl Layer {
    pub fn params(&self) -> Option<&LayerParams> {
        match self {
            Layer::Conv1d { params, .. } | Layer::ConvTranspose1d { params, .. } | Layer::Dense { params } => {
                Some(params)
            }
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<&mut LayerParams> {
        match self {
            Layer::Conv1d { params, .. } | Layer::ConvTranspose1d { params, .. } | Layer::Dense { params } => {
                Some(params)
            }
            _ => None,
        }
    }

    pub fn forward(&self, x: Tensor1d, mode: &mut Mode<'_>, tape: &mut Tape) -> Result<Tensor1d> {
        match self {
            Layer::Conv1d { params, stride } => {
                let y = conv1d(&x, params, *stride)?;
                tape.entries.push(Entry::Conv(x));
                Ok(y)
            }
            Layer::ConvTranspose1d { params, stride } => {
                let y = conv1d_transpose(&x, params, *stride)?;
                tape.entries.push(Entry::ConvT(x));
                Ok(y)
            }
            Layer::MaxPool1d { window } => {
                let (y, argmax) = maxpool(&x, *window)?;
                tape.entries.push(Entry::Pool { channels: x.channels, len: x.len(), argmax });
                Ok(y)
            }
            Layer::Dropout { rate } => match mode {
                Mode::Eval => {
                    tape.entries.push(Entry::Dropout(vec![1.0; x.data.len()]));
                    Ok(x)
                }
                Mode::Train(rng) => {
                    let mask = dropout_mask(x.data.len(), *rate, rng)?;
                    let data = x.data.iter().zip(&mask).map(|(v, m)| v * m).collect();
                    tape.entries.push(Entry::Dropout(mask));
                    Ok(Tensor1d { channels: x.channels, data })
                }
            },
            Layer::Dense { params } => {
                let y = dense(&x.data, params)?;
                tape.entries.push(Entry::Dense(x.data));
                Ok(Tensor1d { channels: 1, data: y })
            }
            Layer::Relu => {
                let y = Tensor1d { channels: x.channels, data: relu(&x.data) };
                tape.entries.push(Entry::Relu(x.data));
                Ok(y)
            }
            Layer::Reshape { channels } => {
                let from = x.channels;
                let y = Tensor1d::new(*channels, x.data)?;
                tape.entries.push(Entry::Reshape { channels: from });
                Ok(y)
            }
        }
    }

    /// Pops this layer's tape entry and returns the input gradient plus, for
    /// parametric layers, the parameter gradient.
    pub fn backward(&self, grad: Tensor1d, tape: &mut Tape) -> Result<(Tensor1d, Option<LayerParams>)> {
        match self {
            Layer::Conv1d { params, stride } => match tape.pop("conv1d")? {
                Entry::Conv(x) => {
                    let (gx, gp) = conv1d_backward(&x, params, *stride, &grad)?;
                    Ok((gx, Some(gp)))
                }
                _ => Err(mismatch("conv1d")),
            },
            Layer::ConvTranspose1d { params, stride } => match tape.pop("conv1d_transpose")? {
                Entry::ConvT(x) => {
                    let (gx, gp) = conv1d_transpose_backward(&x, params, *stride, &grad)?;
                    Ok((gx, Some(gp)))
                }
                _ => Err(mismatch("conv1d_transpose")),
            },
            Layer::MaxPool1d { .. } => match tape.pop("maxpool")? {
                Entry::Pool { channels, len, argmax } => Ok((maxpool_backward(channels, len, &argmax, &grad)?, None)),
                _ => Err(mismatch("maxpool")),
            },
            Layer::Dropout { .. } => match tape.pop("dropout")? {
                Entry::Dropout(mask) => {
                    if mask.len() != grad.data.len() {
                        return Err(Error::shape("dropout gradient length mismatch"));
                    }
                    let data = grad.data.iter().zip(&mask).map(|(g, m)| g * m).collect();
                    Ok((Tensor1d { channels: grad.channels, data }, None))
                }
                _ => Err(mismatch("dropout")),
            },
            Layer::Dense { params } => match tape.pop("dense")? {
                Entry::Dense(x) => {
                    let (gx, gp) = dense_backward(&x, params, &grad.data)?;
                    Ok((Tensor1d { channels: 1, data: gx }, Some(gp)))
                }
                _ => Err(mismatch("dense")),
            },
            Layer::Relu => match tape.pop("relu")? {
                Entry::Relu(x) => {
                    if x.len() != grad.data.len() {
                        return Err(Error::shape("relu gradient length mismatch"));
                    }
                    Ok((Tensor1d { channels: grad.channels, data: relu_backward(&x, &grad.data) }, None))
                }
                _ => Err(mismatch("relu")),
            },
            Layer::Reshape { .. } => match tape.pop("reshape")? {
                Entry::Reshape { channels } => Ok((Tensor1d::new(channels, grad.data)?, None)),
                _ => Err(mismatch("reshape")),
            },
        }
    }
}

/// Named layers applied in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sequential {
    pub layers: Vec<(String, Layer)>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, layer: Layer) {
        self.layers.push((name.into(), layer));
    }

    pub fn forward(&self, mut x: Tensor1d, mode: &mut Mode<'_>, tape: &mut Tape) -> Result<Tensor1d> {
        for (_, layer) in &self.layers {
            x = layer.forward(x, mode, tape)?;
        }
        Ok(x)
    }

    /// Returns the input gradient and one parameter gradient per parametric
    /// layer, in layer order.
    pub fn backward(&self, mut grad: Tensor1d, tape: &mut Tape) -> Result<(Tensor1d, Vec<LayerParams>)> {
        let mut grads = Vec::new();
        for (_, layer) in self.layers.iter().rev() {
            let (g, gp) = layer.backward(grad, tape)?;
            grad = g;
            grads.extend(gp);
        }
        grads.reverse();
        Ok((grad, grads))
    }

    pub fn named_params(&self) -> impl Iterator<Item = (&str, &LayerParams)> {
        self.layers
            .iter()
            .filter_map(|(n, l)| l.params().map(|p| (n.as_str(), p)))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.layers.iter_mut().filter_map(|(_, l)| l.params_mut())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_without_forward_is_an_error() {
        let layer = Layer::Relu;
        let mut tape = Tape::new();
        assert!(layer.backward(Tensor1d::from_signal(&[1.0]), &mut tape).is_err());
    }

    #[test]
    fn backward_against_wrong_layer_is_an_error() {
        let mut tape = Tape::new();
        Layer::Relu
            .forward(Tensor1d::from_signal(&[1.0, 2.0]), &mut Mode::Eval, &mut tape)
            .unwrap();
        let pool = Layer::MaxPool1d { window: 1 };
        assert!(pool.backward(Tensor1d::from_signal(&[1.0, 2.0]), &mut tape).is_err());
    }
}
