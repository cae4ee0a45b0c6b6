//! Latent-space validation toolkit for a denoising convolutional VAE with a
//! mixture-of-Gaussians prior.
//!
//! The crate is organised bottom-up:
//!
//! - [`signalgen`]: synthetic chirp template bank, detector projection, colored noise.
//! - [`nn`]: 1-D layer kernels with explicit forward/backward passes and SGD.
//! - [`vae`]: encoder/decoder assembly, the MSE + beta-KL objective and the training loop.
//! - [`mixture`]: univariate Gaussian mixtures fitted by MAP-EM with a Dirichlet weight prior.
//! - [`hmc`]: leapfrog HMC over mixture log-densities.
//! - [`stats`]: two-sample Kolmogorov-Smirnov tests and Pearson correlation matrices.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hmc;
pub mod mixture;
pub mod nn;
pub mod rng;
pub mod signalgen;
pub mod stats;
pub mod vae;

pub use error::{Error, Result};
pub use hmc::{HmcChain, HmcConfig, PhasePoint};
pub use mixture::{FitConfig, MixtureModel};
pub use signalgen::{ChirpParams, Dataset, DetectorProfile, NoiseSpec, Signal};
pub use stats::{CorrMatrix, KsResult};
pub use vae::{BetaSchedule, LatentCode, TrainReport, VaeConfig, VaeModel};
