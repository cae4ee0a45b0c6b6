mod common;

use latentscope_core::mixture::{
    fit, histogram_pdf, log_sum_exp, FitConfig, MixtureModel, MAX_COMPONENTS,
};
use latentscope_core::rng::rng_for;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

fn normal_draws(mean: f64, sd: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, &[11]);
    let d = Normal::new(mean, sd).unwrap();
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

fn assert_monotone(report: &latentscope_core::mixture::FitReport) {
    for seg in &report.segments {
        for w in seg.windows(2) {
            assert!(
                w[1].value >= w[0].value - 1e-9 * w[0].value.abs(),
                "objective fell from {} to {}",
                w[0].value,
                w[1].value
            );
        }
    }
}

#[test]
fn recovers_a_single_gaussian() {
    let x = normal_draws(0.0, 1.0, 5000, 1);
    let report = fit(&x, &FitConfig::default()).unwrap();
    let m = &report.model;
    let k = m.dominant();
    assert!(m.means[k].abs() < 0.05, "mean {}", m.means[k]);
    assert!(
        (m.variances[k] - 1.0).abs() < 0.1,
        "variance {}",
        m.variances[k]
    );
    assert_monotone(&report);
}

#[test]
fn two_separated_clusters_give_two_components() {
    for seed in 0..4 {
        let mut x = normal_draws(-5.0, 0.5, 2500, 2 + 2 * seed);
        x.extend(normal_draws(5.0, 0.5, 2500, 3 + 2 * seed));
        let report = fit(
            &x,
            &FitConfig {
                seed,
                ..FitConfig::default()
            },
        )
        .unwrap();
        let m = &report.model;
        assert_eq!(m.num_components(), 2, "{m:?}");
        let mut means = m.means.clone();
        means.sort_by(f64::total_cmp);
        assert!(
            (means[0] + 5.0).abs() < 0.1 && (means[1] - 5.0).abs() < 0.1,
            "{means:?}"
        );
        assert_monotone(&report);
    }
}

#[test]
fn single_component_without_variance_prior_is_the_mle() {
    let x = normal_draws(2.0, 3.0, 400, 4);
    let cfg = FitConfig {
        max_components: 1,
        variance_prior: 0.0,
        ..FitConfig::default()
    };
    let m = fit(&x, &cfg).unwrap().model;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    assert!((m.means[0] - mean).abs() < 1e-9);
    assert!((m.variances[0] - var).abs() < 1e-9 * var);
}

#[test]
fn fit_respects_the_component_cap_and_drops_empty_components() {
    for seed in 0..4 {
        let mut rng = rng_for(seed, &[12]);
        let x: Vec<f64> = (0..3000).map(|_| rng.random_range(-4.0..4.0)).collect();
        let report = fit(
            &x,
            &FitConfig {
                seed,
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert!(report.model.num_components() <= MAX_COMPONENTS);
        assert!(report.model.weights.iter().all(|&w| w > 0.0));
        assert!((report.model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_monotone(&report);
    }
}

#[test]
fn variance_prior_prevents_collapsed_components() {
    for seed in 0..6 {
        let x = MixtureModel::symmetric(&[-3.0, 3.0], 0.25)
            .unwrap()
            .sample(2000, seed);
        let report = fit(
            &x,
            &FitConfig {
                seed,
                ..FitConfig::default()
            },
        )
        .unwrap();
        let m = &report.model;
        assert!(m.variances.iter().all(|&v| v > 0.01), "seed {seed}: {m:?}");
        assert_monotone(&report);
    }
}

#[test]
fn fit_is_deterministic_given_the_seed() {
    let x = normal_draws(0.0, 2.0, 1000, 5);
    let cfg = FitConfig {
        seed: 9,
        ..FitConfig::default()
    };
    assert_eq!(fit(&x, &cfg).unwrap(), fit(&x, &cfg).unwrap());
}

#[test]
fn degenerate_inputs_are_rejected() {
    assert!(fit(&[1.5; 100], &FitConfig::default()).is_err());
    assert!(fit(&[0.0, 1.0, 2.0], &FitConfig::default()).is_err());
}

fn random_model(seed: u64) -> MixtureModel {
    let mut rng = rng_for(seed, &[13]);
    let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    MixtureModel::new(
        raw.iter().map(|w| w / total).collect(),
        (0..3).map(|_| rng.random_range(-3.0..3.0)).collect(),
        (0..3).map(|_| rng.random_range(0.2..2.0)).collect(),
    )
    .unwrap()
}

#[test]
fn log_density_matches_naive_summation() {
    for seed in 0..5 {
        let m = random_model(seed);
        for i in 0..100 {
            let x = -8.0 + 16.0 * i as f64 / 99.0;
            let naive: f64 = (0..3)
                .map(|k| {
                    let v = m.variances[k];
                    m.weights[k] * (-(x - m.means[k]).powi(2) / (2.0 * v)).exp()
                        / (2.0 * std::f64::consts::PI * v).sqrt()
                })
                .sum::<f64>()
                .ln();
            assert!(naive.is_finite());
            assert!(
                (m.log_density(x) - naive).abs() <= 1e-12 * naive.abs().max(1.0),
                "x={x}"
            );
        }
    }
}

#[test]
fn log_density_survives_far_tails() {
    let m = MixtureModel::symmetric(&[-1.0, 1.0], 0.01).unwrap();
    let v = m.log_density(60.0);
    assert!(v.is_finite() && v < -1e5);
    assert_eq!(
        log_sum_exp([f64::NEG_INFINITY, f64::NEG_INFINITY]),
        f64::NEG_INFINITY
    );
}

#[test]
fn finite_difference_score_matches_analytic_gaussian() {
    let (mu, var) = (0.7_f64, 2.5_f64);
    let m = MixtureModel::gaussian(mu, var).unwrap();
    let sd = var.sqrt();
    for i in 0..=60 {
        let x = mu - 3.0 * sd + 6.0 * sd * i as f64 / 60.0;
        let fd = m.grad_log_density_fd(x, 1e-4);
        assert!((fd - (-(x - mu) / var)).abs() <= 1e-6, "x={x}");
        assert!((m.grad_log_density_analytic(x) - (-(x - mu) / var)).abs() < 1e-12);
    }
}

#[test]
fn finite_difference_score_converges_at_second_order() {
    for seed in 0..5 {
        let m = random_model(seed);
        for x in [-1.3, 0.2, 0.9, 2.4] {
            let exact = m.grad_log_density_analytic(x);
            let e1 = (m.grad_log_density_fd(x, 2e-2) - exact).abs();
            let e2 = (m.grad_log_density_fd(x, 1e-2) - exact).abs();
            if e1 < 1e-9 {
                continue;
            }
            let ratio = e1 / e2;
            assert!(
                (3.5..4.5).contains(&ratio),
                "seed {seed}, x {x}: ratio {ratio}"
            );
        }
    }
}

#[test]
fn symmetric_model_has_zero_score_at_origin() {
    let m = MixtureModel::symmetric(&[-2.0, 2.0], 0.25).unwrap();
    assert!(m.grad_log_density_fd(0.0, 1e-4).abs() < 1e-10);
    assert!((m.log_density(1.3) - m.log_density(-1.3)).abs() < 1e-14);
}

#[test]
fn sampling_moments() {
    let m = MixtureModel::gaussian(3.0, 4.0).unwrap();
    let x = m.sample(10_000, 7);
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 3.0).abs() < 0.1, "mean {mean}");
    assert!((var - 4.0).abs() < 0.2, "var {var}");
    assert_eq!(x, m.sample(10_000, 7));
}

#[test]
fn sampling_respects_weights() {
    let m = MixtureModel::new(vec![1.0, 0.0], vec![-10.0, 10.0], vec![1.0, 1.0]).unwrap();
    assert!(m.sample(5000, 1).iter().all(|&v| v < 0.0));

    let w = [0.2, 0.5, 0.3];
    let m = MixtureModel::new(w.to_vec(), vec![-100.0, 0.0, 100.0], vec![1.0; 3]).unwrap();
    let x = m.sample(100_000, 2);
    let n = x.len() as f64;
    let counts = [
        x.iter().filter(|&&v| v < -50.0).count(),
        x.iter().filter(|&&v| v.abs() <= 50.0).count(),
        x.iter().filter(|&&v| v > 50.0).count(),
    ];
    for (c, w) in counts.iter().zip(w) {
        assert!((*c as f64 / n - w).abs() < 0.02 * w, "{counts:?}");
    }
}

#[test]
fn histogram_oracles() {
    let one = histogram_pdf(&[2.0, 2.0, 2.0], 4).unwrap();
    let full: Vec<f64> = one.heights.iter().copied().filter(|&h| h > 0.0).collect();
    assert_eq!(full.len(), 1);
    let width = one.edges[1] - one.edges[0];
    assert!((full[0] - 1.0 / width).abs() < 1e-12);

    let mut rng = rng_for(3, &[14]);
    let x: Vec<f64> = (0..100_000).map(|_| rng.random_range(-1.0..3.0)).collect();
    let h = histogram_pdf(&x, 10).unwrap();
    for &height in &h.heights {
        assert!((height - 0.25).abs() < 0.025, "{height}");
    }
    for bins in [1, 7, 33] {
        let y = normal_draws(0.0, 1.0, 999, bins as u64);
        assert!((histogram_pdf(&y, bins).unwrap().integral() - 1.0).abs() < 1e-12);
    }
}
