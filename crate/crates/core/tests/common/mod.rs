#![allow(dead_code)]

use latentscope_core::nn::LayerParams;
use latentscope_core::rng::{rng_for, Rng};
use rand::Rng as _;

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

pub fn rng(seed: u64) -> Rng {
    rng_for(seed, &[0xfd])
}

pub fn uniform_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_params(shape: &[usize], bias_len: usize, rng: &mut Rng) -> LayerParams {
    let n: usize = shape.iter().product();
    LayerParams {
        shape: shape.to_vec(),
        weights: uniform_vec(n, rng),
        bias: uniform_vec(bias_len, rng),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Central difference of `f` in coordinate `i` of `x`.
pub fn central_diff(x: &mut [f64], i: usize, f: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + FD_STEP;
    let up = f(x);
    x[i] = orig - FD_STEP;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * FD_STEP)
}
