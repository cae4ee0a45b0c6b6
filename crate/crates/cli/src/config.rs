//! Pipeline configuration: `key = value` pairs under `[data]`, `[model]`,
//! `[train]`, `[prior]`, `[hmc]` and `[report]`, plus a top-level `seed`.
//!
//! Every key is optional and unknown keys are rejected. Defaults mirror the
//! defaults of the library types they feed.

use std::path::Path;

use latentscope_core::hmc::HmcConfig;
use latentscope_core::mixture::{FitConfig, MixtureModel};
use latentscope_core::nn::{ClipMode, OptimizerConfig};
use latentscope_core::rng::derive_seed;
use latentscope_core::signalgen::{DatasetConfig, DetectorId, DetectorProfile, MassGrid, NoiseSpec};
use latentscope_core::vae::{BetaSchedule, ReconReduction, TrainConfig, WeightInit};
use latentscope_core::VaeConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; every stage derives its own stream from it.
    pub seed: u64,
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub prior: PriorSection,
    pub hmc: HmcSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// Smallest component mass in solar masses.
    pub mass_min: f64,
    pub mass_max: f64,
    pub mass_step: f64,
    /// Starting frequency in Hz.
    pub f_min: f64,
    pub sample_rate: f64,
    pub amplitude: f64,
    /// Samples per signal after zero padding.
    pub target_len: usize,
    /// Detector sites, any of `H1`, `L1`, `V1`.
    pub detectors: Vec<String>,
    pub psd_slope: f64,
    pub psd_scale: f64,
    pub f_knee: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        let d = DatasetConfig::default();
        DataSection {
            mass_min: d.grid.min,
            mass_max: d.grid.max,
            mass_step: d.grid.step,
            f_min: d.f_min,
            sample_rate: d.sample_rate,
            amplitude: d.amplitude,
            target_len: d.target_len,
            detectors: d.detectors.iter().map(|p| p.id.as_str().to_string()).collect(),
            psd_slope: d.noise.psd_slope,
            psd_scale: d.noise.psd_scale,
            f_knee: d.noise.f_knee,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconKind {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Glorot,
    Lecun,
    He,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub latent_dim: usize,
    pub channels: usize,
    pub kernel: usize,
    pub pool: usize,
    pub dropout: f64,
    pub hidden: usize,
    pub upsample: usize,
    pub encoder_dense: usize,
    pub decoder_deconv: usize,
    pub log_var_clamp: f64,
    pub log_var_init: f64,
    pub recon: ReconKind,
    pub init: InitKind,
    /// Component means of the fixed, equally weighted prior shared by every dimension.
    pub prior_means: Vec<f64>,
    pub prior_variance: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = VaeConfig::default();
        ModelSection {
            latent_dim: m.latent_dim,
            channels: m.channels,
            kernel: m.kernel,
            pool: m.pool,
            dropout: m.dropout,
            hidden: m.hidden,
            upsample: m.upsample,
            encoder_dense: m.encoder_dense,
            decoder_deconv: m.decoder_deconv,
            log_var_clamp: m.log_var_clamp,
            log_var_init: m.log_var_init,
            recon: match m.recon {
                ReconReduction::Sum => ReconKind::Sum,
                ReconReduction::Mean => ReconKind::Mean,
            },
            init: match m.init {
                WeightInit::Glorot => InitKind::Glorot,
                WeightInit::LeCun => InitKind::Lecun,
                WeightInit::He => InitKind::He,
            },
            prior_means: m.prior.means.clone(),
            prior_variance: m.prior.variances[0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipKind {
    PerTensor,
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub clip_mode: ClipKind,
    pub beta_min: f64,
    pub beta_max: f64,
    pub warmup_epochs: usize,
    /// Share of rows used for training; the rest is the validation split.
    pub train_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.optimizer.learning_rate,
            clip_norm: t.optimizer.clip_norm,
            clip_mode: match t.optimizer.clip_mode {
                ClipMode::PerTensor => ClipKind::PerTensor,
                ClipMode::Global => ClipKind::Global,
            },
            beta_min: t.beta.beta_min,
            beta_max: t.beta.beta_max,
            warmup_epochs: t.beta.warmup_epochs,
            train_fraction: t.train_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub max_components: usize,
    pub concentration: f64,
    pub max_iters: usize,
    pub tol: f64,
    /// Inverse-gamma variance prior scale relative to each dimension's variance.
    pub variance_prior: f64,
}

impl Default for PriorSection {
    fn default() -> Self {
        let f = FitConfig::default();
        PriorSection {
            max_components: f.max_components,
            concentration: f.concentration,
            max_iters: f.max_iters,
            tol: f.tol,
            variance_prior: f.variance_prior,
        }
    }
}

/// Density the sampling stage targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleTarget {
    /// The per-dimension mixtures from `mixture.csv`.
    Fitted,
    /// N(0, 1) in every dimension.
    StandardNormal,
    /// Equal-weight components at -2 and 2 with standard deviation 0.5.
    Bimodal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HmcSection {
    pub step_size: f64,
    pub n_leapfrog: usize,
    /// Recorded positions per chain.
    pub n_samples: usize,
    pub burn_in: usize,
    pub fd_step: f64,
    pub analytic_gradient: bool,
    /// Chains per dimension, started from evenly spaced rows of the noisy latents.
    pub chains: usize,
    pub target: SampleTarget,
}

impl Default for HmcSection {
    fn default() -> Self {
        let h = HmcConfig::default();
        HmcSection {
            step_size: h.step_size,
            n_leapfrog: h.n_leapfrog,
            n_samples: h.n_samples,
            burn_in: h.burn_in,
            fd_step: h.fd_step,
            analytic_gradient: h.analytic_gradient,
            chains: 32,
            target: SampleTarget::Fitted,
        }
    }
}

/// What the posterior samples are compared with in the diagnostics stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareMode {
    /// Noisy-input latents against posterior samples.
    Posterior,
    /// Noisy-input latents against themselves.
    SelfCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub histogram_bins: usize,
    pub compare: CompareMode,
    /// Draws per dimension from the sampling target for the null comparison.
    pub null_draws: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { histogram_bins: 40, compare: CompareMode::Posterior, null_draws: 20_000 }
    }
}

/// Stage-specific seed streams.
const DATA_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;
const PRIOR_STREAM: u64 = 3;
const HMC_STREAM: u64 = 4;
const NULL_STREAM: u64 = 5;

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let config: PipelineConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Checks every section by building the library configurations.
    pub fn validate(&self) -> CliResult<()> {
        self.dataset_config()?.grid.values()?;
        self.vae_config()?.validate()?;
        self.train_config().validate()?;
        self.fit_config().validate()?;
        self.hmc_config().validate()?;
        if self.hmc.chains == 0 {
            return Err(CliError::config("hmc.chains", "must be at least 1"));
        }
        if self.report.histogram_bins == 0 {
            return Err(CliError::config("report.histogram_bins", "must be at least 1"));
        }
        if self.report.null_draws == 0 {
            return Err(CliError::config("report.null_draws", "must be at least 1"));
        }
        Ok(())
    }

    pub fn dataset_config(&self) -> CliResult<DatasetConfig> {
        let d = &self.data;
        let detectors = d
            .detectors
            .iter()
            .map(|s| s.parse::<DetectorId>().map(DetectorProfile::reference))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DatasetConfig {
            grid: MassGrid { min: d.mass_min, max: d.mass_max, step: d.mass_step },
            f_min: d.f_min,
            sample_rate: d.sample_rate,
            amplitude: d.amplitude,
            target_len: d.target_len,
            detectors,
            noise: NoiseSpec {
                psd_slope: d.psd_slope,
                psd_scale: d.psd_scale,
                f_knee: d.f_knee,
                seed: derive_seed(self.seed, &[DATA_STREAM]),
            },
        })
    }

    pub fn vae_config(&self) -> CliResult<VaeConfig> {
        let m = &self.model;
        if m.prior_means.is_empty() {
            return Err(CliError::config("model.prior_means", "needs at least one mean"));
        }
        let prior = MixtureModel::symmetric(&m.prior_means, m.prior_variance)
            .map_err(|e| CliError::config("model.prior_variance", e.to_string()))?;
        Ok(VaeConfig {
            signal_len: self.data.target_len,
            latent_dim: m.latent_dim,
            channels: m.channels,
            kernel: m.kernel,
            pool: m.pool,
            dropout: m.dropout,
            hidden: m.hidden,
            upsample: m.upsample,
            encoder_dense: m.encoder_dense,
            decoder_deconv: m.decoder_deconv,
            log_var_clamp: m.log_var_clamp,
            log_var_init: m.log_var_init,
            recon: match m.recon {
                ReconKind::Sum => ReconReduction::Sum,
                ReconKind::Mean => ReconReduction::Mean,
            },
            init: match m.init {
                InitKind::Glorot => WeightInit::Glorot,
                InitKind::Lecun => WeightInit::LeCun,
                InitKind::He => WeightInit::He,
            },
            prior,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            optimizer: OptimizerConfig {
                learning_rate: t.learning_rate,
                clip_norm: t.clip_norm,
                clip_mode: match t.clip_mode {
                    ClipKind::PerTensor => ClipMode::PerTensor,
                    ClipKind::Global => ClipMode::Global,
                },
            },
            beta: BetaSchedule { beta_min: t.beta_min, beta_max: t.beta_max, warmup_epochs: t.warmup_epochs },
            train_fraction: t.train_fraction,
            seed: derive_seed(self.seed, &[TRAIN_STREAM]),
        }
    }

    pub fn fit_config(&self) -> FitConfig {
        let p = &self.prior;
        FitConfig {
            max_components: p.max_components,
            concentration: p.concentration,
            max_iters: p.max_iters,
            tol: p.tol,
            variance_prior: p.variance_prior,
            seed: derive_seed(self.seed, &[PRIOR_STREAM]),
        }
    }

    pub fn hmc_config(&self) -> HmcConfig {
        let h = &self.hmc;
        HmcConfig {
            step_size: h.step_size,
            n_leapfrog: h.n_leapfrog,
            n_samples: h.n_samples,
            burn_in: h.burn_in,
            fd_step: h.fd_step,
            analytic_gradient: h.analytic_gradient,
            seed: derive_seed(self.seed, &[HMC_STREAM]),
        }
    }

    pub fn null_seed(&self) -> u64 {
        derive_seed(self.seed, &[NULL_STREAM])
    }
}
