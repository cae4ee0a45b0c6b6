use super::LayerParams;
use crate::error::{Error, Result};

/// What `clip_norm` bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClipMode {
    /// The L2 norm of each weight or bias tensor, clipped independently.
    #[default]
    PerTensor,
    /// The L2 norm of all gradients together.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub clip_mode: ClipMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { learning_rate: 0.001, clip_norm: 1.0, clip_mode: ClipMode::PerTensor }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be non-negative and finite"));
        }
        if !(self.clip_norm > 0.0) {
            return Err(Error::config("train.clip_norm", "must be positive"));
        }
        Ok(())
    }
}

/// L2 norm over every gradient value of every layer.
pub fn global_norm<'a>(grads: impl IntoIterator<Item = &'a LayerParams>) -> f64 {
    grads
        .into_iter()
        .flat_map(|g| g.values())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

fn clip_scale(norm: f64, clip: f64) -> f64 {
    if norm > clip {
        clip / norm
    } else {
        1.0
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One clipped SGD update. Returns the pre-clip global gradient norm.
///
/// Non-finite gradients abort the step without touching the parameters.
pub fn sgd_step(params: &mut [&mut LayerParams], grads: &[&LayerParams], config: &OptimizerConfig) -> Result<f64> {
    if params.len() != grads.len() {
        return Err(Error::shape(format!(
            "{} parameter tensors but {} gradients",
            params.len(),
            grads.len()
        )));
    }
    for (p, g) in params.iter().zip(grads) {
        if !p.same_shape(g) {
            return Err(Error::shape(format!(
                "gradient shape {:?} does not match parameter shape {:?}",
                g.shape, p.shape
            )));
        }
    }
    let norm = global_norm(grads.iter().copied());
    if !norm.is_finite() {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    let lr = config.learning_rate;
    match config.clip_mode {
        ClipMode::Global => {
            let scale = clip_scale(norm, config.clip_norm);
            for (p, g) in params.iter_mut().zip(grads) {
                p.add_scaled(g, -lr * scale);
            }
        }
        ClipMode::PerTensor => {
            for (p, g) in params.iter_mut().zip(grads) {
                let sw = clip_scale(l2(&g.weights), config.clip_norm);
                let sb = clip_scale(l2(&g.bias), config.clip_norm);
                p.weights.iter_mut().zip(&g.weights).for_each(|(x, d)| *x -= lr * sw * d);
                p.bias.iter_mut().zip(&g.bias).for_each(|(x, d)| *x -= lr * sb * d);
            }
        }
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> LayerParams {
        LayerParams { shape: vec![1], weights: vec![v], bias: vec![] }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = scalar(0.3);
        let g = scalar(0.0);
        sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()).unwrap();
        assert_eq!(p.weights, vec![0.3]);
    }

    #[test]
    fn large_gradient_is_clipped_to_unit_norm() {
        let mut p = scalar(0.0);
        let g = scalar(10.0);
        let norm = sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()).unwrap();
        assert_eq!(norm, 10.0);
        assert_eq!(p.weights, vec![-0.001]);
    }

    #[test]
    fn small_gradient_is_not_clipped() {
        let mut p = LayerParams { shape: vec![2], weights: vec![1.0, 2.0], bias: vec![0.5] };
        // Norm 0.5.
        let g = LayerParams { shape: vec![2], weights: vec![0.3, 0.0], bias: vec![0.4] };
        sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()).unwrap();
        assert_eq!(p.weights, vec![1.0 - 0.001 * 0.3, 2.0]);
        assert_eq!(p.bias, vec![0.5 - 0.001 * 0.4]);
    }

    #[test]
    fn clip_modes_differ_on_two_tensors() {
        let p0 = LayerParams { shape: vec![1], weights: vec![0.0], bias: vec![0.0] };
        let g = LayerParams { shape: vec![1], weights: vec![3.0], bias: vec![4.0] };
        let mut p = p0.clone();
        let global = OptimizerConfig { clip_mode: ClipMode::Global, ..OptimizerConfig::default() };
        sgd_step(&mut [&mut p], &[&g], &global).unwrap();
        assert!((p.weights[0] + 0.001 * 0.6).abs() < 1e-15);
        assert!((p.bias[0] + 0.001 * 0.8).abs() < 1e-15);
        let mut p = p0;
        sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()).unwrap();
        assert_eq!((p.weights[0], p.bias[0]), (-0.001, -0.001));
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let mut p = scalar(1.0);
        let g = scalar(f64::NAN);
        assert!(matches!(
            sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()),
            Err(Error::Numeric(_))
        ));
        assert_eq!(p.weights, vec![1.0]);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = scalar(1.0);
        let g = LayerParams { shape: vec![2], weights: vec![1.0, 1.0], bias: vec![] };
        assert!(sgd_step(&mut [&mut p], &[&g], &OptimizerConfig::default()).is_err());
    }
}
