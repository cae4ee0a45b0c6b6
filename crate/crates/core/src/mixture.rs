//! Univariate Gaussian mixtures: MAP-EM fitting under a Dirichlet weight prior,
//! log-density and score evaluation, ancestral sampling, histogram densities.
//!
//! The fit maximises the penalized log-likelihood
//!
//! ```text
//! J = sum_i log sum_k w_k N(x_i | mu_k, s2_k) + log Dir(w | alpha, ..., alpha)
//!     + sum_k log InvGamma(s2_k | 1, lambda * var(x))
//! ```
//!
//! over the active components. The inverse-gamma term keeps a component from
//! collapsing onto a handful of nearly equal samples; `lambda = 0` drops it. With `alpha < 1` the Dirichlet density charges
//! roughly `-ln(alpha)` nats per extra component, so redundant components are
//! removed: a component is dropped when its MAP weight reaches zero, when its
//! weight falls below [`PRUNE_WEIGHT`], or when removing it and re-converging
//! raises `J`. Every EM iteration at a fixed component set is monotone in `J`.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Components lighter than this are removed after convergence.
pub const PRUNE_WEIGHT: f64 = 1e-3;

/// Hard cap on the number of components.
pub const MAX_COMPONENTS: usize = 10;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl MixtureModel {
    /// Builds a model, renormalising weights that already sum to 1 within 1e-9.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || means.len() != k || variances.len() != k {
            return Err(Error::shape("mixture needs equal, non-zero numbers of weights, means and variances"));
        }
        if k > MAX_COMPONENTS {
            return Err(Error::Param(format!("{k} components exceed the cap of {MAX_COMPONENTS}")));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::Param("mixture weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Param(format!("mixture weights sum to {total}, not 1")));
        }
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::Param("mixture variances must be positive and means finite".into()));
        }
        Ok(MixtureModel {
            weights: weights.iter().map(|w| w / total).collect(),
            means,
            variances,
        })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(vec![1.0], vec![mean], vec![variance])
    }

    pub fn standard_normal() -> Self {
        MixtureModel { weights: vec![1.0], means: vec![0.0], variances: vec![1.0] }
    }

    /// Equal-weight mixture with a shared variance.
    pub fn symmetric(means: &[f64], variance: f64) -> Result<Self> {
        let k = means.len();
        Self::new(vec![1.0 / k as f64; k], means.to_vec(), vec![variance; k])
    }

    pub fn num_components(&self) -> usize {
        self.weights.len()
    }

    fn component_log_terms(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(move |((&w, &m), &v)| {
                if w == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    w.ln() - 0.5 * (LN_2PI + v.ln()) - (x - m) * (x - m) / (2.0 * v)
                }
            })
    }

    /// `log sum_k w_k N(x | mu_k, s2_k)` via log-sum-exp.
    pub fn log_density(&self, x: f64) -> f64 {
        log_sum_exp(self.component_log_terms(x))
    }

    /// Posterior component probabilities at `x`.
    pub fn responsibilities(&self, x: f64) -> Vec<f64> {
        let terms: Vec<f64> = self.component_log_terms(x).collect();
        let lse = log_sum_exp(terms.iter().copied());
        terms.iter().map(|t| (t - lse).exp()).collect()
    }

    /// Central difference `(L(x + h) - L(x - h)) / 2h` of the log-density.
    pub fn grad_log_density_fd(&self, x: f64, h: f64) -> f64 {
        (self.log_density(x + h) - self.log_density(x - h)) / (2.0 * h)
    }

    /// Exact score `sum_k r_k(x) (mu_k - x) / s2_k`.
    pub fn grad_log_density_analytic(&self, x: f64) -> f64 {
        self.responsibilities(x)
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((r, m), v)| r * (m - x) / v)
            .sum()
    }

    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(&self.means)
            .zip(&self.variances)
            .map(|((w, m), v)| w * (v + (m - mu) * (m - mu)))
            .sum()
    }

    /// Ancestral sampling: a categorical component draw, then a Gaussian draw.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = rng_for(seed, &[0x5a4e]);
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let last = self.weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        (0..n)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                let k = cumulative.iter().position(|&c| u < c).unwrap_or(last);
                let z: f64 = StandardNormal.sample(&mut rng);
                self.means[k] + self.variances[k].sqrt() * z
            })
            .collect()
    }

    /// Index of the heaviest component.
    pub fn dominant(&self) -> usize {
        self.weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i)
    }

    fn without(&self, k: usize) -> MixtureModel {
        let keep: Vec<usize> = (0..self.num_components()).filter(|&j| j != k).collect();
        self.subset(&keep)
    }

    fn subset(&self, keep: &[usize]) -> MixtureModel {
        let total: f64 = keep.iter().map(|&j| self.weights[j]).sum();
        MixtureModel {
            weights: keep.iter().map(|&j| self.weights[j] / total).collect(),
            means: keep.iter().map(|&j| self.means[j]).collect(),
            variances: keep.iter().map(|&j| self.variances[j]).collect(),
        }
    }
}

pub fn log_sum_exp(terms: impl IntoIterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.into_iter().collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Lanczos approximation (g = 7, n = 9), accurate to ~1e-15 for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    /// Components at initialisation, at most [`MAX_COMPONENTS`].
    pub max_components: usize,
    /// Dirichlet concentration; below 1 it favours fewer components.
    pub concentration: f64,
    pub max_iters: usize,
    /// Convergence threshold on the relative change of the objective.
    pub tol: f64,
    /// Inverse-gamma variance prior scale relative to the sample variance;
    /// zero gives plain maximum-likelihood variances.
    pub variance_prior: f64,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_components: MAX_COMPONENTS,
            concentration: 1e-6,
            max_iters: 500,
            tol: 1e-9,
            variance_prior: 1e-2,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_components == 0 || self.max_components > MAX_COMPONENTS {
            return Err(Error::config(
                "prior.max_components",
                format!("must lie in 1..={MAX_COMPONENTS}"),
            ));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return Err(Error::config("prior.concentration", "must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::config("prior.max_iters", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("prior.tol", "must be positive"));
        }
        if !(self.variance_prior >= 0.0 && self.variance_prior.is_finite()) {
            return Err(Error::config("prior.variance_prior", "must be non-negative and finite"));
        }
        Ok(())
    }
}

/// One EM iteration's objective value and the active component count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectivePoint {
    pub components: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: MixtureModel,
    /// Objective per EM iteration, one segment per run at a fixed component
    /// set. Segments are monotone; structural moves happen between them.
    pub segments: Vec<Vec<ObjectivePoint>>,
    /// Penalized log-likelihood of the returned model.
    pub objective: f64,
}

struct Fitter<'a> {
    x: &'a [f64],
    alpha: f64,
    max_iters: usize,
    tol: f64,
    var_floor: f64,
    /// Inverse-gamma scale `b` (shape 1); zero disables the prior.
    var_scale: f64,
}

enum RunEnd {
    Converged,
    /// Some components' MAP weight hit zero.
    Starved(Vec<usize>),
}

impl Fitter<'_> {
    fn log_prior(&self, model: &MixtureModel) -> f64 {
        let k = model.num_components() as f64;
        let dirichlet = ln_gamma(k * self.alpha) - k * ln_gamma(self.alpha)
            + (self.alpha - 1.0) * model.weights.iter().map(|w| w.ln()).sum::<f64>();
        if self.var_scale == 0.0 {
            return dirichlet;
        }
        let b = self.var_scale;
        dirichlet + model.variances.iter().map(|v| b.ln() - 2.0 * v.ln() - b / v).sum::<f64>()
    }

    /// E-step. Returns the log-likelihood and per-component sufficient
    /// statistics `(N_k, sum r x, sum r x^2)`.
    fn e_step(&self, model: &MixtureModel) -> (f64, Vec<[f64; 3]>) {
        let k = model.num_components();
        let mut stats = vec![[0.0; 3]; k];
        let mut ll = 0.0;
        let mut terms = vec![0.0; k];
        for &x in self.x {
            for (t, v) in terms.iter_mut().zip(model.component_log_terms(x)) {
                *t = v;
            }
            let lse = log_sum_exp(terms.iter().copied());
            ll += lse;
            for (s, t) in stats.iter_mut().zip(&terms) {
                let r = (t - lse).exp();
                s[0] += r;
                s[1] += r * x;
                s[2] += r * x * x;
            }
        }
        (ll, stats)
    }

    fn objective(&self, model: &MixtureModel) -> f64 {
        self.e_step(model).0 + self.log_prior(model)
    }

    fn run(&self, model: &mut MixtureModel, trace: &mut Vec<ObjectivePoint>) -> Result<RunEnd> {
        let k = model.num_components();
        let mut previous: Option<f64> = None;
        for _ in 0..self.max_iters {
            let (ll, stats) = self.e_step(model);
            let value = ll + self.log_prior(model);
            if !value.is_finite() {
                return Err(Error::Numeric("mixture objective is not finite".into()));
            }
            if let Some(prev) = previous {
                if value < prev - 1e-9 * prev.abs().max(1.0) {
                    return Err(Error::Numeric(format!(
                        "EM objective decreased from {prev} to {value}"
                    )));
                }
            }
            trace.push(ObjectivePoint { components: k, value });

            let starved: Vec<usize> = (0..k).filter(|&j| stats[j][0] + self.alpha - 1.0 <= 0.0).collect();
            if !starved.is_empty() {
                return Ok(RunEnd::Starved(starved));
            }
            let denom: f64 = stats.iter().map(|s| s[0] + self.alpha - 1.0).sum();
            for (j, s) in stats.iter().enumerate() {
                let nk = s[0];
                let mean = s[1] / nk;
                model.weights[j] = (nk + self.alpha - 1.0) / denom;
                model.means[j] = mean;
                let scatter = (s[2] - nk * mean * mean).max(0.0);
                let var = if self.var_scale == 0.0 {
                    scatter / nk
                } else {
                    (scatter + 2.0 * self.var_scale) / (nk + 4.0)
                };
                model.variances[j] = var.max(self.var_floor);
            }

            if let Some(prev) = previous {
                if (value - prev).abs() <= self.tol * value.abs().max(1.0) {
                    break;
                }
            }
            previous = Some(value);
        }
        // Record the objective of the final parameters.
        let value = self.objective(model);
        if let Some(last) = trace.last() {
            if value < last.value - 1e-9 * last.value.abs().max(1.0) {
                return Err(Error::Numeric("EM objective decreased on the final update".into()));
            }
        }
        trace.push(ObjectivePoint { components: k, value });
        Ok(RunEnd::Converged)
    }

    /// EM to convergence, removing starved and negligible components as they appear.
    fn converge(&self, mut model: MixtureModel, segments: &mut Vec<Vec<ObjectivePoint>>) -> Result<MixtureModel> {
        loop {
            let mut trace = Vec::new();
            let end = self.run(&mut model, &mut trace)?;
            segments.push(trace);
            let drop: Vec<usize> = match end {
                RunEnd::Starved(idx) => idx,
                RunEnd::Converged => (0..model.num_components())
                    .filter(|&j| model.weights[j] < PRUNE_WEIGHT)
                    .collect(),
            };
            if drop.is_empty() {
                return Ok(model);
            }
            let keep: Vec<usize> = (0..model.num_components()).filter(|j| !drop.contains(j)).collect();
            if keep.is_empty() {
                // Keep the heaviest so the model stays valid.
                model = model.subset(&[model.dominant()]);
            } else {
                model = model.subset(&keep);
            }
        }
    }
}

/// k-means++ seeding followed by nearest-centre statistics.
fn initialise(x: &[f64], k: usize, seed: u64, var_floor: f64) -> MixtureModel {
    let mut rng = rng_for(seed, &[0x6b6d]);
    let mut centres = vec![x[rng.random_range(0..x.len())]];
    let mut d2: Vec<f64> = x.iter().map(|v| (v - centres[0]).powi(2)).collect();
    while centres.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = x.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if u < *d {
                pick = i;
                break;
            }
            u -= d;
        }
        let c = x[pick];
        centres.push(c);
        for (d, v) in d2.iter_mut().zip(x) {
            *d = d.min((v - c).powi(2));
        }
    }

    let k = centres.len();
    let mut stats = vec![[0.0; 3]; k];
    for &v in x {
        let j = (0..k)
            .min_by(|&a, &b| (v - centres[a]).abs().total_cmp(&(v - centres[b]).abs()))
            .unwrap_or(0);
        stats[j][0] += 1.0;
        stats[j][1] += v;
        stats[j][2] += v * v;
    }
    let n = x.len() as f64;
    let mut model = MixtureModel { weights: vec![], means: vec![], variances: vec![] };
    for s in stats.iter().filter(|s| s[0] > 0.0) {
        let mean = s[1] / s[0];
        model.weights.push(s[0] / n);
        model.means.push(mean);
        model.variances.push((s[2] / s[0] - mean * mean).max(var_floor));
    }
    model
}

/// Fits a mixture with at most `config.max_components` components.
pub fn fit(samples: &[f64], config: &FitConfig) -> Result<FitReport> {
    config.validate()?;
    let n = samples.len();
    if n < 2 * config.max_components {
        return Err(Error::Param(format!(
            "{n} samples are too few for {} components (need at least {})",
            config.max_components,
            2 * config.max_components
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("samples contain non-finite values".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if variance < 1e-12 {
        return Err(Error::Param(format!("degenerate sample variance {variance:e}")));
    }

    let fitter = Fitter {
        x: samples,
        alpha: config.concentration,
        max_iters: config.max_iters,
        tol: config.tol,
        var_floor: (variance * 1e-6).max(1e-12),
        var_scale: config.variance_prior * variance,
    };
    let mut segments = Vec::new();
    let start = initialise(samples, config.max_components, config.seed, fitter.var_floor);
    let mut model = fitter.converge(start, &mut segments)?;
    let mut objective = fitter.objective(&model);

    // Greedy removal: lightest first, accept the first improvement.
    'outer: while model.num_components() > 1 {
        let mut order: Vec<usize> = (0..model.num_components()).collect();
        order.sort_by(|&a, &b| model.weights[a].total_cmp(&model.weights[b]));
        for k in order {
            let mut trial_segments = Vec::new();
            let candidate = fitter.converge(model.without(k), &mut trial_segments)?;
            let value = fitter.objective(&candidate);
            if value > objective {
                model = candidate;
                objective = value;
                segments.extend(trial_segments);
                continue 'outer;
            }
        }
        break;
    }

    Ok(FitReport { model, segments, objective })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `n_bins + 1` ascending edges.
    pub edges: Vec<f64>,
    /// Density heights; `sum(height * width) == 1`.
    pub heights: Vec<f64>,
}

impl Histogram {
    pub fn integral(&self) -> f64 {
        self.heights
            .iter()
            .zip(self.edges.windows(2))
            .map(|(h, e)| h * (e[1] - e[0]))
            .sum()
    }
}

/// Equal-width density histogram over the sample range. A constant sample
/// gets a unit-width range centred on its value.
pub fn histogram_pdf(samples: &[f64], n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::config("report.histogram_bins", "must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::Param("histogram of an empty sample".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("histogram samples must be finite".into()));
    }
    let mut lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    for &v in samples {
        let b = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let n = samples.len() as f64;
    let heights = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(&c, e)| c as f64 / (n * (e[1] - e[0])))
        .collect();
    Ok(Histogram { edges, heights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_at_zero() {
        let m = MixtureModel::standard_normal();
        assert!((m.log_density(0.0) - (-0.918_938_533_204_672_7)).abs() < 1e-15);
    }

    #[test]
    fn far_tail_does_not_underflow() {
        let m = MixtureModel::symmetric(&[-1.0, 1.0], 0.01).unwrap();
        let l = m.log_density(1e3);
        assert!(l.is_finite());
        // Dominated by the +1 component.
        let expected = 0.5f64.ln() - 0.5 * (LN_2PI + 0.01f64.ln()) - 999.0 * 999.0 / 0.02;
        assert!((l - expected).abs() < 1e-6 * expected.abs());
        assert!(m.grad_log_density_analytic(1e3).is_finite());
    }

    #[test]
    fn symmetric_model_is_even() {
        let m = MixtureModel::symmetric(&[-1.5, 1.5], 0.3).unwrap();
        for x in [0.1, 0.7, 2.0, 5.0] {
            assert!((m.log_density(x) - m.log_density(-x)).abs() < 1e-12);
        }
        assert!(m.grad_log_density_fd(0.0, 1e-4).abs() < 1e-10);
        assert_eq!(m.grad_log_density_analytic(0.0), 0.0);
    }

    #[test]
    fn constructor_validation() {
        assert!(MixtureModel::new(vec![0.5, 0.4], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(MixtureModel::new(vec![1.0], vec![0.0], vec![0.0]).is_err());
        assert!(MixtureModel::new(vec![0.1; 11], vec![0.0; 11], vec![1.0; 11]).is_err());
        assert!(MixtureModel::new(vec![1.0, 0.0], vec![0.0, 5.0], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn zero_weight_component_never_sampled() {
        let m = MixtureModel::new(vec![1.0, 0.0], vec![-10.0, 10.0], vec![1.0, 1.0]).unwrap();
        assert!(m.sample(10_000, 1).iter().all(|&x| x < 0.0));
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(1e-3) - 6.907_178_885_383_853).abs() < 1e-10);
    }

    #[test]
    fn single_component_fit_is_mle() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0).collect();
        let cfg = FitConfig { max_components: 1, variance_prior: 0.0, ..FitConfig::default() };
        let report = fit(&x, &cfg).unwrap();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert_eq!(report.model.num_components(), 1);
        assert!((report.model.means[0] - mean).abs() < 1e-12);
        assert!((report.model.variances[0] - var).abs() < 1e-10);
        assert_eq!(report.model.weights, vec![1.0]);
    }

    #[test]
    fn variance_prior_shrinks_toward_its_scale() {
        let x: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0).collect();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let cfg = FitConfig { max_components: 1, variance_prior: 0.5, ..FitConfig::default() };
        let fitted = fit(&x, &cfg).unwrap().model.variances[0];
        assert!((fitted - (n * var + var) / (n + 4.0)).abs() < 1e-10);
        assert!(FitConfig { variance_prior: -1.0, ..FitConfig::default() }.validate().is_err());
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        assert!(matches!(fit(&[2.5; 100], &FitConfig::default()), Err(Error::Param(_))));
        assert!(fit(&[1.0, 2.0, 3.0], &FitConfig::default()).is_err());
    }

    #[test]
    fn histogram_single_bin() {
        let h = histogram_pdf(&[0.0, 0.5, 2.0], 1).unwrap();
        assert_eq!(h.heights, vec![1.0 / 2.0]);
        let h = histogram_pdf(&[3.0; 7], 4).unwrap();
        assert!((h.integral() - 1.0).abs() < 1e-12);
        assert!(histogram_pdf(&[1.0], 0).is_err());
    }

    #[test]
    fn histogram_integrates_to_one() {
        let x = MixtureModel::symmetric(&[-2.0, 3.0], 0.7).unwrap().sample(12_345, 3);
        for bins in [1, 7, 50, 333] {
            let h = histogram_pdf(&x, bins).unwrap();
            assert!((h.integral() - 1.0).abs() < 1e-12);
        }
    }
}
