mod common;

use common::{rel_err, rng, uniform_vec, FD_STEP};
use latentscope_core::mixture::MixtureModel;
use latentscope_core::nn::{Mode, OptimizerConfig};
use latentscope_core::rng::rng_for;
use latentscope_core::signalgen::{build_dataset, DatasetConfig, MassGrid};
use latentscope_core::vae::{kl_term, reparameterize, train_model, BetaSchedule, LatentCode, TrainConfig};
use latentscope_core::{VaeConfig, VaeModel};
use rand_distr::{Distribution, StandardNormal};

fn small_config(seed: u64) -> VaeConfig {
    VaeConfig {
        signal_len: 40,
        latent_dim: 3,
        channels: 2,
        kernel: 5,
        hidden: 6,
        dropout: 0.2,
        prior: if seed.is_multiple_of(2) {
            MixtureModel::symmetric(&[-1.0, 1.0], 0.7).unwrap()
        } else {
            MixtureModel::new(vec![0.3, 0.7], vec![-0.5, 1.2], vec![0.4, 1.5]).unwrap()
        },
        ..VaeConfig::default()
    }
}

fn loss(model: &VaeModel, noisy: &[f64], clean: &[f64], eps: &[f64], beta: f64, drop_seed: u64) -> f64 {
    let mut r = rng_for(drop_seed, &[]);
    let (parts, _) = model.sample_loss(noisy, clean, eps, beta, &mut Mode::Train(&mut r)).unwrap();
    parts.recon + beta * parts.kl
}

/// Directional derivative of the loss along a random direction confined to one
/// parameter tensor, by central differences.
#[test]
fn end_to_end_loss_gradient_matches_finite_differences() {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let mut g = rng(seed);
        let mut model = VaeModel::new(small_config(seed), seed).unwrap();
        for p in model.params_mut() {
            for v in p.bias.iter_mut() {
                *v = 0.1 * uniform_vec(1, &mut g)[0];
            }
        }
        let noisy = uniform_vec(40, &mut g);
        let clean = uniform_vec(40, &mut g);
        let eps: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut g)).collect();
        let beta = 0.5;
        let drop_seed = 100 + seed;

        let mut r = rng_for(drop_seed, &[]);
        let (_, grads) = model.sample_loss(&noisy, &clean, &eps, beta, &mut Mode::Train(&mut r)).unwrap();
        for (t, grad) in grads.iter().enumerate() {
            let dw = uniform_vec(grad.weights.len(), &mut g);
            let db = uniform_vec(grad.bias.len(), &mut g);
            let analytic: f64 = grad.weights.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>()
                + grad.bias.iter().zip(&db).map(|(a, b)| a * b).sum::<f64>();
            let shifted = |s: f64| {
                let mut m = model.clone();
                let p = &mut m.params_mut()[t];
                p.weights.iter_mut().zip(&dw).for_each(|(w, d)| *w += s * d);
                p.bias.iter_mut().zip(&db).for_each(|(w, d)| *w += s * d);
                loss(&m, &noisy, &clean, &eps, beta, drop_seed)
            };
            let numeric = (shifted(FD_STEP) - shifted(-FD_STEP)) / (2.0 * FD_STEP);
            let err = rel_err(analytic, numeric);
            assert!(err <= 1e-3, "seed {seed}, tensor {t}: analytic {analytic}, numeric {numeric}");
            worst = worst.max(err);
        }
    }
    assert!(worst <= 1e-3);
}

#[test]
fn single_sample_kl_matches_closed_form_terms() {
    let prior = [MixtureModel::gaussian(0.4, 2.0).unwrap()];
    let (mu, lv, e): (f64, f64, f64) = (0.7, -0.6, 1.3);
    let z = reparameterize(&[mu], &[lv], &[e]).unwrap();
    let code = LatentCode { z_mean: vec![mu], z_log_var: vec![lv], z: z.clone() };
    let ln2pi = (2.0 * std::f64::consts::PI).ln();
    let log_q = -0.5 * (ln2pi + lv) - 0.5 * e * e;
    let log_p = -0.5 * (ln2pi + 2.0_f64.ln()) - (z[0] - 0.4).powi(2) / 4.0;
    assert!((kl_term(&code, &prior).unwrap() - (log_q - log_p)).abs() < 1e-12);
}

#[test]
fn averaged_kl_converges_to_the_gaussian_divergence() {
    let (m, v) = (0.4, 2.0);
    let prior = [MixtureModel::gaussian(m, v).unwrap()];
    let (mu, lv): (f64, f64) = (-0.3, -1.0);
    let s2 = lv.exp();
    let exact = 0.5 * ((v / s2).ln() + (s2 + (mu - m) * (mu - m)) / v - 1.0);
    let mut g = rng_for(40, &[]);
    let n = 200_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(&mut g);
            let z = reparameterize(&[mu], &[lv], &[e]).unwrap();
            kl_term(&LatentCode { z_mean: vec![mu], z_log_var: vec![lv], z }, &prior).unwrap()
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    assert!((mean - exact).abs() < 4.0 * sd / (n as f64).sqrt(), "mean {mean}, exact {exact}");
}

#[test]
fn reparameterised_draws_have_the_encoded_moments() {
    let (mu, lv): (f64, f64) = (1.5, 0.8);
    let mut g = rng_for(41, &[]);
    let n = 100_000;
    let z: Vec<f64> = (0..n)
        .map(|_| reparameterize(&[mu], &[lv], &[StandardNormal.sample(&mut g)]).unwrap()[0])
        .collect();
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - mu).abs() < 0.02, "mean {mean}");
    assert!((var / lv.exp() - 1.0).abs() < 0.02, "var {var}");
}

fn tiny_dataset() -> latentscope_core::Dataset {
    let cfg = DatasetConfig { grid: MassGrid { min: 25.0, max: 26.0, step: 0.5 }, target_len: 64, ..DatasetConfig::default() };
    build_dataset(&cfg).unwrap()
}

fn tiny_train(lr: f64) -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 4,
        optimizer: OptimizerConfig { learning_rate: lr, ..OptimizerConfig::default() },
        beta: BetaSchedule { beta_min: 0.1, beta_max: 0.5, warmup_epochs: 2 },
        train_fraction: 0.75,
        seed: 12,
    }
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let data = tiny_dataset();
    let cfg = VaeConfig { signal_len: 64, channels: 2, hidden: 8, ..VaeConfig::default() };
    let start = VaeModel::new(cfg, 12).unwrap();
    let mut model = start.clone();
    train_model(&mut model, &data, &tiny_train(0.0)).unwrap();
    assert_eq!(model, start);
}

#[test]
fn report_rows_satisfy_the_total_identity_and_are_reproducible() {
    let data = tiny_dataset();
    let cfg = VaeConfig { signal_len: 64, channels: 2, hidden: 8, ..VaeConfig::default() };
    let run = || {
        let mut model = VaeModel::new(cfg.clone(), 12).unwrap();
        let report = train_model(&mut model, &data, &tiny_train(0.01)).unwrap();
        (model, report)
    };
    let (model, report) = run();
    assert_eq!(report.epochs.len(), 3);
    for (i, row) in report.epochs.iter().enumerate() {
        assert_eq!(row.epoch, i);
        assert_eq!(row.total, row.recon + row.beta * row.kl);
        assert!(row.val_recon.is_finite());
    }
    assert_eq!(report.epochs[0].beta, 0.1);
    assert_eq!(report.epochs[2].beta, 0.5);
    assert_eq!(run(), (model, report));
}
