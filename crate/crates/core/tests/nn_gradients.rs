//! Finite-difference checks of every layer's backward pass.

mod common;

use common::*;
use latentscope_core::nn::{
    conv1d, conv1d_transpose, Layer, LayerParams, Mode, Sequential, Tape, Tensor1d,
};
use latentscope_core::rng::rng_for;

const SEEDS: std::ops::Range<u64> = 0..12;
const TOL: f64 = 1e-4;

/// Checks `d<c, layer(x)>/dx` and `d<c, layer(x)>/dparams` against central
/// differences for a random probe `c`. Dropout reuses one mask via a fixed seed.
fn check_layer(layer: Layer, channels: usize, len: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let x = Tensor1d::new(channels, uniform_vec(channels * len, &mut r)).unwrap();
    let forward = |layer: &Layer, x: &Tensor1d, tape: &mut Tape| {
        let mut drop_rng = rng_for(seed, &[7]);
        layer.forward(x.clone(), &mut Mode::Train(&mut drop_rng), tape).unwrap()
    };
    let mut tape = Tape::new();
    let y = forward(&layer, &x, &mut tape);
    let probe = uniform_vec(y.data.len(), &mut r);
    let (gx, gp) = layer.backward(Tensor1d::new(y.channels, probe.clone()).unwrap(), &mut tape).unwrap();
    assert!(tape.is_empty());

    let mut worst: f64 = 0.0;
    let mut xs = x.data.clone();
    for i in 0..xs.len() {
        let num = central_diff(&mut xs, i, &mut |v| {
            let t = Tensor1d::new(channels, v.to_vec()).unwrap();
            dot(&forward(&layer, &t, &mut Tape::new()).data, &probe)
        });
        worst = worst.max(rel_err(gx.data[i], num));
    }
    if let (Some(params), Some(gp)) = (layer.params(), gp) {
        let analytic: Vec<f64> = gp.values().copied().collect();
        let mut flat: Vec<f64> = params.values().copied().collect();
        let nw = params.weights.len();
        for (i, &a) in analytic.iter().enumerate() {
            let num = central_diff(&mut flat, i, &mut |v| {
                let mut l = layer.clone();
                let p = l.params_mut().unwrap();
                p.weights.copy_from_slice(&v[..nw]);
                p.bias.copy_from_slice(&v[nw..]);
                dot(&forward(&l, &x, &mut Tape::new()).data, &probe)
            });
            worst = worst.max(rel_err(a, num));
        }
    }
    worst
}

fn assert_layer(name: &str, make: impl Fn(&mut latentscope_core::rng::Rng) -> (Layer, usize, usize)) {
    for seed in SEEDS {
        let mut r = rng(1000 + seed);
        let (layer, channels, len) = make(&mut r);
        let err = check_layer(layer, channels, len, seed);
        assert!(err <= TOL, "{name}, seed {seed}: relative error {err:e}");
    }
}

#[test]
fn conv1d_gradients() {
    assert_layer("conv1d", |r| (Layer::Conv1d { params: random_params(&[3, 2, 4], 3, r), stride: 1 }, 2, 13));
    assert_layer("strided conv1d", |r| (Layer::Conv1d { params: random_params(&[2, 3, 3], 2, r), stride: 2 }, 3, 12));
}

#[test]
fn conv1d_transpose_gradients() {
    assert_layer("conv1d_transpose", |r| {
        (Layer::ConvTranspose1d { params: random_params(&[2, 3, 5], 3, r), stride: 1 }, 2, 9)
    });
    assert_layer("upsampling conv1d_transpose", |r| {
        (Layer::ConvTranspose1d { params: random_params(&[3, 2, 4], 2, r), stride: 2 }, 3, 7)
    });
}

#[test]
fn dense_gradients() {
    assert_layer("dense", |r| (Layer::Dense { params: random_params(&[5, 11], 5, r) }, 1, 11));
}

#[test]
fn pointwise_and_pooling_gradients() {
    assert_layer("relu", |_| (Layer::Relu, 2, 10));
    assert_layer("maxpool", |_| (Layer::MaxPool1d { window: 3 }, 2, 14));
    assert_layer("dropout", |_| (Layer::Dropout { rate: 0.3 }, 2, 10));
    assert_layer("reshape", |_| (Layer::Reshape { channels: 1 }, 2, 6));
}

#[test]
fn sequential_stack_gradients() {
    for seed in SEEDS {
        let mut r = rng(2000 + seed);
        let mut net = Sequential::new();
        net.push("conv", Layer::Conv1d { params: random_params(&[3, 1, 3], 3, &mut r), stride: 1 });
        net.push("relu", Layer::Relu);
        net.push("pool", Layer::MaxPool1d { window: 2 });
        net.push("flat", Layer::Reshape { channels: 1 });
        net.push("dense", Layer::Dense { params: random_params(&[12, 15], 12, &mut r) });
        net.push("shape", Layer::Reshape { channels: 2 });
        net.push("deconv", Layer::ConvTranspose1d { params: random_params(&[2, 1, 3], 1, &mut r), stride: 2 });

        let x = uniform_vec(12, &mut r);
        let run = |net: &Sequential, x: &[f64], tape: &mut Tape| {
            net.forward(Tensor1d::from_signal(x), &mut Mode::Eval, tape).unwrap()
        };
        let mut tape = Tape::new();
        let y = run(&net, &x, &mut tape);
        let probe = uniform_vec(y.data.len(), &mut r);
        let (gx, grads) = net.backward(Tensor1d::new(y.channels, probe.clone()).unwrap(), &mut tape).unwrap();
        assert_eq!(grads.len(), 3);

        let mut xs = x.clone();
        for i in 0..xs.len() {
            let num = central_diff(&mut xs, i, &mut |v| dot(&run(&net, v, &mut Tape::new()).data, &probe));
            assert!(rel_err(gx.data[i], num) <= TOL, "seed {seed}, input {i}");
        }
        for (li, g) in grads.iter().enumerate() {
            let analytic: Vec<f64> = g.values().copied().collect();
            let base: Vec<LayerParams> = net.named_params().map(|(_, p)| p.clone()).collect();
            let mut flat: Vec<f64> = base[li].values().copied().collect();
            let nw = base[li].weights.len();
            for (i, &a) in analytic.iter().enumerate() {
                let num = central_diff(&mut flat, i, &mut |v| {
                    let mut n2 = net.clone();
                    let p = n2.params_mut().nth(li).unwrap();
                    p.weights.copy_from_slice(&v[..nw]);
                    p.bias.copy_from_slice(&v[nw..]);
                    dot(&run(&n2, &x, &mut Tape::new()).data, &probe)
                });
                assert!(rel_err(a, num) <= TOL, "seed {seed}, layer {li}, param {i}");
            }
        }
    }
}

#[test]
fn transpose_is_the_adjoint_of_conv() {
    for seed in SEEDS {
        let mut r = rng(3000 + seed);
        for stride in [1, 2, 3] {
            let w = random_params(&[3, 2, 4], 0, &mut r);
            // Bias-free so both maps are linear.
            let w_conv = LayerParams { bias: vec![0.0; 3], ..w.clone() };
            let w_t = LayerParams { bias: vec![0.0; 2], ..w };
            let len = 5 + stride * 5;
            let x = Tensor1d::new(2, uniform_vec(2 * len, &mut r)).unwrap();
            let cx = conv1d(&x, &w_conv, stride).unwrap();
            let y = Tensor1d::new(3, uniform_vec(cx.data.len(), &mut r)).unwrap();
            let ty = conv1d_transpose(&y, &w_t, stride).unwrap();
            let lhs = dot(&cx.data, &y.data);
            let n = ty.len();
            let rhs: f64 = (0..2).map(|c| dot(&x.channel(c)[..n], ty.channel(c))).sum();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "seed {seed}, stride {stride}");
        }
    }
}

#[test]
fn dense_composition_matches_matrix_product() {
    let mut r = rng(4000);
    let a = random_params(&[4, 6], 4, &mut r);
    let b = random_params(&[3, 4], 3, &mut r);
    let x = uniform_vec(6, &mut r);
    let mut net = Sequential::new();
    net.push("a", Layer::Dense { params: a.clone() });
    net.push("b", Layer::Dense { params: b.clone() });
    let y = net.forward(Tensor1d::from_signal(&x), &mut Mode::Eval, &mut Tape::new()).unwrap();
    for o in 0..3 {
        let mut expect = b.bias[o];
        for j in 0..4 {
            let h = a.bias[j] + dot(&a.weights[j * 6..(j + 1) * 6], &x);
            expect += b.weights[o * 4 + j] * h;
        }
        assert!((y.data[o] - expect).abs() < 1e-12);
    }
}
