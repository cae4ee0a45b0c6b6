//! Denoising convolutional VAE with a fixed per-dimension mixture prior.
//!
//! Encoder: conv -> ReLU -> max-pool -> dropout -> flatten -> (dense -> ReLU)*,
//! followed by two dense heads for `z_mean` and `z_log_var`.
//! Decoder: dense -> ReLU -> dense -> ReLU -> reshape -> upsampling transposed
//! conv -> (ReLU -> transposed conv)*, cropped to the signal length.
//!
//! The per-sample objective is `recon(decode(z), clean) + beta * KL`, where
//! `recon` sums (or averages) squared errors over the signal, `z` encodes the
//! noisy input and KL is the single-sample estimate `log q(z | x) - log p(z)`
//! under the mixture prior.

use rayon::prelude::*;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::nn::{
    dense, dense_backward, sgd_step, Layer, LayerParams, Mode, NamedTensor, OptimizerConfig, Sequential, Tape,
    Tensor1d,
};
use crate::rng::{rng_for, Rng};
use crate::signalgen::Dataset;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct VaeConfig {
    pub signal_len: usize,
    pub latent_dim: usize,
    /// Convolution channels in both encoder and decoder.
    pub channels: usize,
    pub kernel: usize,
    pub pool: usize,
    pub dropout: f64,
    /// Width of the dense layer on each side of the latent space.
    pub hidden: usize,
    /// Stride of the upsampling transposed convolution.
    pub upsample: usize,
    /// Hidden dense layers between the flattened features and the latent heads.
    pub encoder_dense: usize,
    /// Transposed convolutions in the decoder; the first one upsamples.
    pub decoder_deconv: usize,
    /// `z_log_var` is clamped to `[-log_var_clamp, log_var_clamp]`.
    pub log_var_clamp: f64,
    /// Initial bias of the `z_log_var` head.
    pub log_var_init: f64,
    pub recon: ReconReduction,
    /// Scheme for layers followed by a ReLU; the latent heads and the output
    /// layer always use Glorot.
    pub init: WeightInit,
    /// Per-dimension prior.
    pub prior: MixtureModel,
}

impl Default for VaeConfig {
    fn default() -> Self {
        VaeConfig {
            signal_len: 256,
            latent_dim: 16,
            channels: 16,
            kernel: 15,
            pool: 2,
            dropout: 0.0,
            hidden: 64,
            upsample: 2,
            encoder_dense: 1,
            decoder_deconv: 2,
            log_var_clamp: 10.0,
            log_var_init: -4.0,
            recon: ReconReduction::Sum,
            init: WeightInit::Glorot,
            prior: MixtureModel::symmetric(&[-1.0, 1.0], 1.0).expect("valid default prior"),
        }
    }
}

impl VaeConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("model.latent_dim", self.latent_dim),
            ("model.channels", self.channels),
            ("model.kernel", self.kernel),
            ("model.pool", self.pool),
            ("model.hidden", self.hidden),
            ("model.upsample", self.upsample),
            ("model.encoder_dense", self.encoder_dense),
            ("model.decoder_deconv", self.decoder_deconv),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.signal_len < self.kernel + self.pool - 1 {
            return Err(Error::config(
                "data.target_len",
                format!("signal length {} is too short for kernel {} and pool {}", self.signal_len, self.kernel, self.pool),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("model.dropout", "must lie in [0, 1)"));
        }
        if !(self.log_var_clamp > 0.0) {
            return Err(Error::config("model.log_var_clamp", "must be positive"));
        }
        if !(self.log_var_init.abs() <= self.log_var_clamp) {
            return Err(Error::config("model.log_var_init", "must lie inside the log-variance clamp"));
        }
        Ok(())
    }

    fn pooled_len(&self) -> usize {
        (self.signal_len - self.kernel + 1) / self.pool
    }

    /// Length of the tensor fed to the first transposed convolution: the
    /// shortest one whose decoded output covers the signal.
    fn seed_len(&self) -> usize {
        let k = self.kernel as i64;
        let need = self.signal_len as i64 - k - (self.decoder_deconv as i64 - 1) * (k - 1);
        let steps = if need <= 0 { 0 } else { (need + self.upsample as i64 - 1) / self.upsample as i64 };
        steps as usize + 1
    }
}

/// How squared reconstruction errors are combined over the samples of one signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconReduction {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    pub beta_min: f64,
    pub beta_max: f64,
    pub warmup_epochs: usize,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule { beta_min: 0.0, beta_max: 1e-3, warmup_epochs: 32 }
    }
}

impl BetaSchedule {
    /// Linear ramp from `beta_min` at epoch 0 to `beta_max` at `warmup_epochs`.
    pub fn beta_at(&self, epoch: usize) -> f64 {
        if epoch >= self.warmup_epochs {
            return self.beta_max;
        }
        let t = epoch as f64 / self.warmup_epochs as f64;
        self.beta_min + (self.beta_max - self.beta_min) * t
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta_min >= 0.0 && self.beta_min.is_finite()) {
            return Err(Error::config("train.beta_min", "must be non-negative"));
        }
        if !(self.beta_max >= self.beta_min && self.beta_max.is_finite()) {
            return Err(Error::config("train.beta_max", "must be at least beta_min"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub z_mean: Vec<f64>,
    /// Clamped log-variance.
    pub z_log_var: Vec<f64>,
    pub z: Vec<f64>,
}

/// `z = z_mean + exp(z_log_var / 2) * eps`.
pub fn reparameterize(z_mean: &[f64], z_log_var: &[f64], eps: &[f64]) -> Result<Vec<f64>> {
    if z_mean.len() != z_log_var.len() || z_mean.len() != eps.len() {
        return Err(Error::shape("reparameterize needs equal-length vectors"));
    }
    Ok(z_mean
        .iter()
        .zip(z_log_var)
        .zip(eps)
        .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
        .collect())
}

/// Single-sample estimate of `KL(q || p)` at the code's `z`.
///
/// `prior` holds one model per latent dimension, or a single shared model.
pub fn kl_term(code: &LatentCode, prior: &[MixtureModel]) -> Result<f64> {
    let d = code.z.len();
    if code.z_mean.len() != d || code.z_log_var.len() != d {
        return Err(Error::shape("latent code vectors differ in length"));
    }
    if prior.len() != 1 && prior.len() != d {
        return Err(Error::shape(format!("{} prior models for {d} latent dimensions", prior.len())));
    }
    let mut kl = 0.0;
    for i in 0..d {
        let p = if prior.len() == 1 { &prior[0] } else { &prior[i] };
        let var = code.z_log_var[i].exp();
        let diff = code.z[i] - code.z_mean[i];
        let log_q = -0.5 * (LN_2PI + code.z_log_var[i]) - diff * diff / (2.0 * var);
        kl += log_q - p.log_density(code.z[i]);
    }
    if !kl.is_finite() {
        return Err(Error::Numeric("KL estimate is not finite".into()));
    }
    Ok(kl)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub recon: f64,
    pub kl: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub beta: f64,
    pub total: f64,
    /// Reconstruction loss of `decode(z_mean)` on held-out rows (NaN without any).
    pub val_recon: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub beta: BetaSchedule,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 64,
            batch_size: 32,
            optimizer: OptimizerConfig::default(),
            beta: BetaSchedule::default(),
            train_fraction: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("train.epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::config("train.train_fraction", "must lie in (0, 1]"));
        }
        self.optimizer.validate()?;
        self.beta.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    pub config: VaeConfig,
    pub encoder: Sequential,
    pub mean_head: LayerParams,
    pub log_var_head: LayerParams,
    pub decoder: Sequential,
}

/// Weight initialisation scheme (biases always start at zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightInit {
    Glorot,
    /// `U(-sqrt(3 / fan_in), sqrt(3 / fan_in))`.
    LeCun,
    He,
}

impl WeightInit {
    fn params(self, shape: &[usize], bias_len: usize, fan_in: usize, fan_out: usize, rng: &mut Rng) -> LayerParams {
        match self {
            WeightInit::Glorot => LayerParams::glorot(shape, bias_len, fan_in, fan_out, rng),
            WeightInit::LeCun => LayerParams::uniform(shape, bias_len, (3.0 / fan_in as f64).sqrt(), rng),
            WeightInit::He => LayerParams::he(shape, bias_len, fan_in, rng),
        }
    }

    fn conv(self, out: usize, inp: usize, k: usize, rng: &mut Rng) -> LayerParams {
        self.params(&[out, inp, k], out, inp * k, out * k, rng)
    }

    /// Fans of a transposed convolution as seen by its forward pass.
    fn conv_transpose(self, inp: usize, out: usize, k: usize, stride: usize, rng: &mut Rng) -> LayerParams {
        let taps = k.div_ceil(stride);
        self.params(&[inp, out, k], out, inp * taps, out * taps, rng)
    }

    fn dense(self, out: usize, inp: usize, rng: &mut Rng) -> LayerParams {
        self.params(&[out, inp], out, inp, out, rng)
    }
}

impl VaeModel {
    /// Fresh model with weights drawn from `seed`.
    pub fn new(config: VaeConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = rng_for(seed, &[0x1417]);
        let init = config.init;
        let (c, k, h, d) = (config.channels, config.kernel, config.hidden, config.latent_dim);
        let flat = c * config.pooled_len();
        let seed_len = config.seed_len();

        let mut encoder = Sequential::new();
        encoder.push("encoder.conv", Layer::Conv1d { params: init.conv(c, 1, k, &mut rng), stride: 1 });
        encoder.push("encoder.conv_relu", Layer::Relu);
        encoder.push("encoder.pool", Layer::MaxPool1d { window: config.pool });
        encoder.push("encoder.dropout", Layer::Dropout { rate: config.dropout });
        encoder.push("encoder.flatten", Layer::Reshape { channels: 1 });
        let mut width = flat;
        for i in 1..=config.encoder_dense {
            encoder.push(format!("encoder.dense{i}"), Layer::Dense { params: init.dense(h, width, &mut rng) });
            encoder.push(format!("encoder.dense{i}_relu"), Layer::Relu);
            width = h;
        }
        let linear = WeightInit::Glorot;
        let mean_head = linear.dense(d, width, &mut rng);
        let mut log_var_head = linear.dense(d, width, &mut rng);
        log_var_head.bias.iter_mut().for_each(|b| *b = config.log_var_init);

        let mut decoder = Sequential::new();
        decoder.push("decoder.dense1", Layer::Dense { params: init.dense(h, d, &mut rng) });
        decoder.push("decoder.dense1_relu", Layer::Relu);
        decoder.push("decoder.dense2", Layer::Dense { params: init.dense(c * seed_len, h, &mut rng) });
        decoder.push("decoder.dense2_relu", Layer::Relu);
        decoder.push("decoder.reshape", Layer::Reshape { channels: c });
        for i in 1..=config.decoder_deconv {
            let last = i == config.decoder_deconv;
            let stride = if i == 1 { config.upsample } else { 1 };
            let (out, scheme) = if last { (1, linear) } else { (c, init) };
            decoder.push(
                format!("decoder.deconv{i}"),
                Layer::ConvTranspose1d { params: scheme.conv_transpose(c, out, k, stride, &mut rng), stride },
            );
            if !last {
                decoder.push(format!("decoder.deconv{i}_relu"), Layer::Relu);
            }
        }
        Ok(VaeModel { config, encoder, mean_head, log_var_head, decoder })
    }

    pub fn prior(&self) -> &[MixtureModel] {
        std::slice::from_ref(&self.config.prior)
    }

    /// Parameter tensors in canonical order: encoder, heads, decoder.
    pub fn named_params(&self) -> Vec<(&str, &LayerParams)> {
        let mut out: Vec<(&str, &LayerParams)> = self.encoder.named_params().collect();
        out.push(("encoder.z_mean", &self.mean_head));
        out.push(("encoder.z_log_var", &self.log_var_head));
        out.extend(self.decoder.named_params());
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut LayerParams> {
        let mut out: Vec<&mut LayerParams> = self.encoder.params_mut().collect();
        out.push(&mut self.mean_head);
        out.push(&mut self.log_var_head);
        out.extend(self.decoder.params_mut());
        out
    }

    pub fn num_params(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.num_values()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.signal_len {
            return Err(Error::shape(format!(
                "model expects signals of {} samples, got {}",
                self.config.signal_len,
                x.len()
            )));
        }
        Ok(())
    }

    fn clamp_log_var(&self, raw: &[f64]) -> Vec<f64> {
        let c = self.config.log_var_clamp;
        raw.iter().map(|v| v.clamp(-c, c)).collect()
    }

    /// Deterministic (inference-mode) encoding to `(z_mean, z_log_var)`.
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_input(x)?;
        let h = self.encoder.forward(Tensor1d::from_signal(x), &mut Mode::Eval, &mut Tape::new())?;
        let mean = dense(&h.data, &self.mean_head)?;
        let raw = dense(&h.data, &self.log_var_head)?;
        Ok((mean, self.clamp_log_var(&raw)))
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.config.latent_dim {
            return Err(Error::shape(format!(
                "latent vector has {} entries, model uses {}",
                z.len(),
                self.config.latent_dim
            )));
        }
        let out = self.decoder.forward(Tensor1d::from_signal(z), &mut Mode::Eval, &mut Tape::new())?;
        Ok(out.data[..self.config.signal_len].to_vec())
    }

    /// Loss of one (noisy, clean) pair for a given `eps` and its gradient with
    /// respect to every parameter, in [`Self::named_params`] order.
    pub fn sample_loss(
        &self,
        noisy: &[f64],
        clean: &[f64],
        eps: &[f64],
        beta: f64,
        mode: &mut Mode<'_>,
    ) -> Result<(LossParts, Vec<LayerParams>)> {
        self.check_input(noisy)?;
        self.check_input(clean)?;
        let d = self.config.latent_dim;
        if eps.len() != d {
            return Err(Error::shape("eps length differs from the latent dimension"));
        }

        let mut enc_tape = Tape::new();
        let h = self.encoder.forward(Tensor1d::from_signal(noisy), mode, &mut enc_tape)?;
        let z_mean = dense(&h.data, &self.mean_head)?;
        let raw_log_var = dense(&h.data, &self.log_var_head)?;
        let z_log_var = self.clamp_log_var(&raw_log_var);
        let z = reparameterize(&z_mean, &z_log_var, eps)?;

        let mut dec_tape = Tape::new();
        let out = self.decoder.forward(Tensor1d::from_signal(&z), mode, &mut dec_tape)?;
        let n = self.config.signal_len;
        let x_hat = &out.data[..n];
        let weight = self.recon_weight();
        let recon = weight * x_hat.iter().zip(clean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let code = LatentCode { z_mean, z_log_var, z };
        let kl = kl_term(&code, self.prior())?;
        if !recon.is_finite() {
            return Err(Error::Numeric("reconstruction loss is not finite".into()));
        }

        // d(recon)/d(x_hat), zero on the cropped tail.
        let mut g_out = vec![0.0; out.data.len()];
        for ((g, a), b) in g_out.iter_mut().zip(x_hat).zip(clean) {
            *g = weight * 2.0 * (a - b);
        }
        let (g_z, dec_grads) = self.decoder.backward(Tensor1d::from_signal(&g_out), &mut dec_tape)?;

        // With z = mu + sigma * eps, d log q / d mu = 0 and d log q / d log_var = -1/2.
        let c = self.config.log_var_clamp;
        let mut g_mean = vec![0.0; d];
        let mut g_log_var = vec![0.0; d];
        for i in 0..d {
            let gz = g_z.data[i] - beta * self.config.prior.grad_log_density_analytic(code.z[i]);
            let sigma = (0.5 * code.z_log_var[i]).exp();
            g_mean[i] = gz;
            let g_lv = gz * 0.5 * sigma * eps[i] - 0.5 * beta;
            g_log_var[i] = if raw_log_var[i] > -c && raw_log_var[i] < c { g_lv } else { 0.0 };
        }
        let (gh_mean, g_mean_head) = dense_backward(&h.data, &self.mean_head, &g_mean)?;
        let (gh_lv, g_lv_head) = dense_backward(&h.data, &self.log_var_head, &g_log_var)?;
        let g_h: Vec<f64> = gh_mean.iter().zip(&gh_lv).map(|(a, b)| a + b).collect();
        let (_, enc_grads) = self.encoder.backward(Tensor1d::from_signal(&g_h), &mut enc_tape)?;

        let mut grads = enc_grads;
        grads.push(g_mean_head);
        grads.push(g_lv_head);
        grads.extend(dec_grads);
        Ok((LossParts { recon, kl }, grads))
    }

    fn recon_weight(&self) -> f64 {
        match self.config.recon {
            ReconReduction::Sum => 1.0,
            ReconReduction::Mean => 1.0 / self.config.signal_len as f64,
        }
    }

    /// Reconstruction loss of `decode(encode(noisy).z_mean)` against `clean`.
    pub fn eval_recon(&self, noisy: &[f64], clean: &[f64]) -> Result<f64> {
        let (mean, _) = self.encode(noisy)?;
        let x_hat = self.decode(&mean)?;
        Ok(self.recon_weight() * x_hat.iter().zip(clean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    pub fn to_tensors(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (name, p) in self.named_params() {
            out.push(NamedTensor { name: format!("{name}.weight"), dims: p.shape.clone(), values: p.weights.clone() });
            out.push(NamedTensor { name: format!("{name}.bias"), dims: vec![p.bias.len()], values: p.bias.clone() });
        }
        out
    }

    /// Rebuilds a model for `config` and overwrites every parameter from `tensors`.
    pub fn from_tensors(config: VaeConfig, tensors: &[NamedTensor]) -> Result<Self> {
        let mut model = VaeModel::new(config, 0)?;
        let names: Vec<String> = model.named_params().iter().map(|(n, _)| n.to_string()).collect();
        if tensors.len() != 2 * names.len() {
            return Err(Error::Format(format!(
                "expected {} tensors for this architecture, found {}",
                2 * names.len(),
                tensors.len()
            )));
        }
        let find = |name: &str| {
            tensors
                .iter()
                .find(|t| t.name == name)
                .ok_or_else(|| Error::Format(format!("missing tensor `{name}`")))
        };
        for (name, p) in names.iter().zip(model.params_mut()) {
            let w = find(&format!("{name}.weight"))?;
            let b = find(&format!("{name}.bias"))?;
            if w.dims != p.shape || b.values.len() != p.bias.len() {
                return Err(Error::Format(format!(
                    "tensor `{name}` has shape {:?}, architecture expects {:?}",
                    w.dims, p.shape
                )));
            }
            p.weights.copy_from_slice(&w.values);
            p.bias.copy_from_slice(&b.values);
        }
        Ok(model)
    }
}

fn standard_normal_vec(n: usize, rng: &mut Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws the reparameterisation noise for `(epoch, row)`.
pub fn eps_for(seed: u64, epoch: usize, row: usize, latent_dim: usize) -> Vec<f64> {
    standard_normal_vec(latent_dim, &mut rng_for(seed, &[2, epoch as u64, row as u64]))
}

/// Trains `model` in place on the dataset's training split.
///
/// Each batch averages per-sample gradients (summed in batch order, so the
/// parallel map does not change results) and takes one clipped SGD step.
pub fn train_model(model: &mut VaeModel, dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    use rand::seq::SliceRandom;

    config.validate()?;
    dataset.validate()?;
    if dataset.is_empty() {
        return Err(Error::Param("cannot train on an empty dataset".into()));
    }
    if dataset.signal_len() != model.config.signal_len {
        return Err(Error::shape(format!(
            "dataset rows have {} samples, model expects {}",
            dataset.signal_len(),
            model.config.signal_len
        )));
    }
    let (mut train_idx, val_idx) = dataset.split_indices(config.train_fraction, config.seed);
    let d = model.config.latent_dim;
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        let beta = config.beta.beta_at(epoch);
        train_idx.shuffle(&mut rng_for(config.seed, &[1, epoch as u64]));
        let (mut recon_sum, mut kl_sum, mut batches) = (0.0, 0.0, 0usize);

        for (b, batch) in train_idx.chunks(config.batch_size).enumerate() {
            let results: Vec<(LossParts, Vec<LayerParams>)> = batch
                .par_iter()
                .map(|&row| {
                    let eps = eps_for(config.seed, epoch, row, d);
                    let mut drop_rng = rng_for(config.seed, &[3, epoch as u64, row as u64]);
                    model.sample_loss(&dataset.noisy[row], &dataset.clean[row], &eps, beta, &mut Mode::Train(&mut drop_rng))
                })
                .collect::<Result<_>>()
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {b}: {e}")))?;

            let scale = 1.0 / batch.len() as f64;
            let mut grads: Vec<LayerParams> = results[0].1.iter().map(LayerParams::zeros_like).collect();
            let (mut recon, mut kl) = (0.0, 0.0);
            for (parts, g) in &results {
                recon += parts.recon * scale;
                kl += parts.kl * scale;
                for (acc, gi) in grads.iter_mut().zip(g) {
                    acc.add_scaled(gi, scale);
                }
            }
            if !(recon + beta * kl).is_finite() {
                return Err(Error::Numeric(format!(
                    "epoch {epoch}, batch {b}: loss is not finite (recon {recon}, kl {kl})"
                )));
            }
            let grad_refs: Vec<&LayerParams> = grads.iter().collect();
            sgd_step(&mut model.params_mut(), &grad_refs, &config.optimizer)
                .map_err(|e| Error::Numeric(format!("epoch {epoch}, batch {b}: {e}")))?;
            recon_sum += recon;
            kl_sum += kl;
            batches += 1;
        }

        let recon = recon_sum / batches as f64;
        let kl = kl_sum / batches as f64;
        let val_recon = if val_idx.is_empty() {
            f64::NAN
        } else {
            let total: f64 = val_idx
                .par_iter()
                .map(|&r| model.eval_recon(&dataset.noisy[r], &dataset.clean[r]))
                .collect::<Result<Vec<f64>>>()?
                .iter()
                .sum();
            total / val_idx.len() as f64
        };
        report.epochs.push(EpochStats { epoch, recon, kl, beta, total: recon + beta * kl, val_recon });
    }
    Ok(report)
}

/// Builds a model from `model_config` and trains it.
pub fn train(dataset: &Dataset, model_config: VaeConfig, config: &TrainConfig) -> Result<(VaeModel, TrainReport)> {
    let mut model = VaeModel::new(model_config, config.seed)?;
    let report = train_model(&mut model, dataset, config)?;
    Ok((model, report))
}
