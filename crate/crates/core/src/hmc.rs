//! Univariate Hamiltonian Monte Carlo with a unit mass.
//!
//! `H(q, p) = -log pi(q) + p^2 / 2`. Proposals come from `L` leapfrog steps of
//! size `eps` and are accepted with probability `min(1, exp(H_start - H_end))`.
//! A trajectory that leaves the finite numbers is a rejected proposal.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::rng::{rng_for, Rng};

/// A target density known up to a constant.
pub trait LogDensity: Sync {
    fn log_density(&self, q: f64) -> f64;
    fn grad_log_density(&self, q: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientMode {
    /// Central differences of the log-density with this step.
    FiniteDifference { h: f64 },
    Analytic,
}

/// A mixture log-density with the chosen score route.
#[derive(Debug, Clone, Copy)]
pub struct MixtureTarget<'a> {
    pub model: &'a MixtureModel,
    pub gradient: GradientMode,
}

impl LogDensity for MixtureTarget<'_> {
    fn log_density(&self, q: f64) -> f64 {
        self.model.log_density(q)
    }

    fn grad_log_density(&self, q: f64) -> f64 {
        match self.gradient {
            GradientMode::FiniteDifference { h } => self.model.grad_log_density_fd(q, h),
            GradientMode::Analytic => self.model.grad_log_density_analytic(q),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HmcConfig {
    pub step_size: f64,
    pub n_leapfrog: usize,
    /// Recorded positions per chain after burn-in.
    pub n_samples: usize,
    pub burn_in: usize,
    /// Finite-difference step for the score.
    pub fd_step: f64,
    /// Use the exact mixture score instead of finite differences.
    pub analytic_gradient: bool,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            step_size: 0.05,
            n_leapfrog: 20,
            n_samples: 2000,
            burn_in: 500,
            fd_step: 1e-4,
            analytic_gradient: false,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::config("hmc.step_size", "must be positive"));
        }
        if self.n_leapfrog == 0 {
            return Err(Error::config("hmc.n_leapfrog", "must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::config("hmc.n_samples", "must be at least 1"));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::config("hmc.fd_step", "must be positive"));
        }
        Ok(())
    }

    pub fn gradient_mode(&self) -> GradientMode {
        if self.analytic_gradient {
            GradientMode::Analytic
        } else {
            GradientMode::FiniteDifference { h: self.fd_step }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn energy(&self, target: &impl LogDensity) -> f64 {
        -target.log_density(self.q) + 0.5 * self.p * self.p
    }

    fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}

/// `n_steps` rounds of half kick, drift, half kick. Consecutive half kicks
/// are fused. Returns `None` if the trajectory becomes non-finite.
pub fn leapfrog(start: PhasePoint, target: &impl LogDensity, step_size: f64, n_steps: usize) -> Option<PhasePoint> {
    let mut q = start.q;
    let mut p = start.p + 0.5 * step_size * target.grad_log_density(q);
    for i in 0..n_steps {
        q += step_size * p;
        let g = target.grad_log_density(q);
        p += if i + 1 == n_steps { 0.5 } else { 1.0 } * step_size * g;
        if !(q.is_finite() && p.is_finite()) {
            return None;
        }
    }
    let end = PhasePoint { q, p };
    end.is_finite().then_some(end)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub q: f64,
    pub accepted: bool,
    /// `H_end - H_start`; infinite for a diverged trajectory.
    pub energy_change: f64,
}

/// One HMC transition from `q`.
pub fn hmc_step(q: f64, target: &impl LogDensity, step_size: f64, n_leapfrog: usize, rng: &mut Rng) -> StepOutcome {
    let p: f64 = StandardNormal.sample(rng);
    let u: f64 = rng.random();
    let start = PhasePoint { q, p };
    let h_start = start.energy(target);
    let Some(end) = leapfrog(start, target, step_size, n_leapfrog) else {
        return StepOutcome { q, accepted: false, energy_change: f64::INFINITY };
    };
    let delta = end.energy(target) - h_start;
    // NaN compares false and is rejected.
    let accepted = u.ln() < -delta;
    StepOutcome {
        q: if accepted { end.q } else { q },
        accepted,
        energy_change: if delta.is_nan() { f64::INFINITY } else { delta },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcChain {
    pub dimension: usize,
    /// Post burn-in positions; a rejection repeats the previous position.
    pub positions: Vec<f64>,
    /// One flag per post burn-in proposal.
    pub accepted: Vec<bool>,
    /// `accepted / proposed` over post burn-in proposals.
    pub acceptance_rate: f64,
    /// Set when no post burn-in proposal was accepted.
    pub warning: Option<String>,
}

impl HmcChain {
    pub fn n_proposals(&self) -> usize {
        self.accepted.len()
    }

    pub fn n_accepted(&self) -> usize {
        self.accepted.iter().filter(|&&a| a).count()
    }

    fn finish(dimension: usize, positions: Vec<f64>, accepted: Vec<bool>) -> Self {
        let n_acc = accepted.iter().filter(|&&a| a).count();
        let acceptance_rate = if accepted.is_empty() { 0.0 } else { n_acc as f64 / accepted.len() as f64 };
        let warning = (n_acc == 0).then(|| {
            format!("dimension {dimension}: all {} proposals rejected", accepted.len())
        });
        HmcChain { dimension, positions, accepted, acceptance_rate, warning }
    }
}

/// Runs one chain on the stream `(config.seed, dimension, chain)`.
pub fn run_chain_on(
    init: f64,
    target: &impl LogDensity,
    config: &HmcConfig,
    dimension: usize,
    chain: usize,
) -> Result<HmcChain> {
    config.validate()?;
    if !init.is_finite() {
        return Err(Error::Param(format!("chain initialised at non-finite {init}")));
    }
    let mut rng = rng_for(config.seed, &[dimension as u64, chain as u64]);
    let mut q = init;
    for _ in 0..config.burn_in {
        q = hmc_step(q, target, config.step_size, config.n_leapfrog, &mut rng).q;
    }
    let mut positions = Vec::with_capacity(config.n_samples);
    let mut accepted = Vec::with_capacity(config.n_samples);
    for _ in 0..config.n_samples {
        let step = hmc_step(q, target, config.step_size, config.n_leapfrog, &mut rng);
        q = step.q;
        positions.push(q);
        accepted.push(step.accepted);
    }
    Ok(HmcChain::finish(dimension, positions, accepted))
}

/// A single chain on a mixture, using the configured score route.
pub fn run_chain(init: f64, model: &MixtureModel, config: &HmcConfig) -> Result<HmcChain> {
    let target = MixtureTarget { model, gradient: config.gradient_mode() };
    run_chain_on(init, &target, config, 0, 0)
}

/// Independent univariate chains per dimension, one per row of `z_init`,
/// concatenated in row order.
///
/// Returns one merged [`HmcChain`] per dimension; its acceptance rate pools
/// all of that dimension's proposals.
pub fn run_all_dimensions(z_init: &[Vec<f64>], models: &[MixtureModel], config: &HmcConfig) -> Result<Vec<HmcChain>> {
    config.validate()?;
    if z_init.is_empty() {
        return Err(Error::shape("no initial points"));
    }
    let dims = models.len();
    if let Some(row) = z_init.iter().position(|r| r.len() != dims) {
        return Err(Error::shape(format!(
            "initial point {row} has {} dimensions but {dims} mixture models were given",
            z_init[row].len()
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..dims)
        .flat_map(|d| (0..z_init.len()).map(move |c| (d, c)))
        .collect();
    let chains: Vec<HmcChain> = jobs
        .par_iter()
        .map(|&(d, c)| {
            let target = MixtureTarget { model: &models[d], gradient: config.gradient_mode() };
            run_chain_on(z_init[c][d], &target, config, d, c)
        })
        .collect::<Result<_>>()?;

    let mut merged = Vec::with_capacity(dims);
    for (d, group) in chains.chunks(z_init.len()).enumerate() {
        let positions = group.iter().flat_map(|c| c.positions.iter().copied()).collect();
        let accepted = group.iter().flat_map(|c| c.accepted.iter().copied()).collect();
        merged.push(HmcChain::finish(d, positions, accepted));
    }
    Ok(merged)
}
