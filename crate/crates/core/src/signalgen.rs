//! Synthetic chirp template bank, detector responses and stationary colored noise.
//!
//! Waveforms use the leading-order (Newtonian) inspiral law: the frequency
//! sweeps up from `f_min` as `tau^(-3/8)` where `tau` is the time left to
//! coalescence, and the amplitude grows as `f^(2/3)`. Signals stop at the last
//! sample before coalescence.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_for};

/// `G * M_sun / c^3` in seconds.
pub const SOLAR_MASS_SECONDS: f64 = 4.925_490_947e-6;

/// Component spins held fixed across the bank. The waveform surrogate has no
/// spin terms, so these only travel as metadata.
pub const FIXED_SPINS: (f64, f64) = (0.7, 0.9);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpParams {
    /// Primary mass in solar masses.
    pub m1: f64,
    /// Secondary mass in solar masses, `m2 <= m1`.
    pub m2: f64,
    /// Starting gravitational-wave frequency in Hz.
    pub f_min: f64,
    pub sample_rate: f64,
    /// Strain amplitude at `t = 0`.
    pub amplitude: f64,
}

impl ChirpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.m2 > 0.0 && self.m1 >= self.m2 && self.m1.is_finite()) {
            return Err(Error::Param(format!(
                "masses must satisfy m1 >= m2 > 0 (got m1={}, m2={})",
                self.m1, self.m2
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::config("data.sample_rate", "must be positive"));
        }
        if !(self.f_min > 0.0) {
            return Err(Error::config("data.f_min", "must be positive"));
        }
        if self.f_min >= self.sample_rate / 2.0 {
            return Err(Error::config(
                "data.f_min",
                format!(
                    "{} Hz is at or above the Nyquist frequency {} Hz",
                    self.f_min,
                    self.sample_rate / 2.0
                ),
            ));
        }
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::config("data.amplitude", "must be positive"));
        }
        Ok(())
    }

    /// Chirp mass `(m1 m2)^(3/5) / (m1 + m2)^(1/5)` in solar masses.
    pub fn chirp_mass(&self) -> f64 {
        (self.m1 * self.m2).powf(0.6) / (self.m1 + self.m2).powf(0.2)
    }

    fn chirp_mass_seconds(&self) -> f64 {
        self.chirp_mass() * SOLAR_MASS_SECONDS
    }

    /// Time from `f_min` to coalescence, in seconds.
    pub fn coalescence_time(&self) -> f64 {
        let mc = self.chirp_mass_seconds();
        5.0 / 256.0 * (PI * self.f_min).powf(-8.0 / 3.0) * mc.powf(-5.0 / 3.0)
    }

    /// Instantaneous gravitational-wave frequency at time `t` after the start.
    pub fn frequency_at(&self, t: f64) -> f64 {
        let tau = self.coalescence_time() - t;
        let mc = self.chirp_mass_seconds();
        (5.0 / (256.0 * tau)).powf(3.0 / 8.0) * mc.powf(-5.0 / 8.0) / PI
    }

    /// Phase with `phase_at(0) == 0`.
    pub fn phase_at(&self, t: f64) -> f64 {
        let tc = self.coalescence_time();
        let five_mc = 5.0 * self.chirp_mass_seconds();
        2.0 * ((tc / five_mc).powf(0.625) - ((tc - t) / five_mc).powf(0.625))
    }

    pub fn amplitude_at(&self, t: f64) -> f64 {
        let tc = self.coalescence_time();
        self.amplitude * (tc / (tc - t)).powf(0.25)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    H1,
    L1,
    V1,
}

impl DetectorId {
    pub const ALL: [DetectorId; 3] = [DetectorId::H1, DetectorId::L1, DetectorId::V1];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorId::H1 => "H1",
            DetectorId::L1 => "L1",
            DetectorId::V1 => "V1",
        }
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H1" => Ok(DetectorId::H1),
            "L1" => Ok(DetectorId::L1),
            "V1" => Ok(DetectorId::V1),
            other => Err(Error::config(
                "data.detectors",
                format!("unknown detector `{other}` (expected H1, L1 or V1)"),
            )),
        }
    }
}

/// Gain and integer delay standing in for a detector's response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorProfile {
    pub id: DetectorId,
    pub gain: f64,
    /// Delay in samples.
    pub delay: usize,
}

impl DetectorProfile {
    /// Built-in profile per site. H1 is the reference (unit gain, no delay).
    pub fn reference(id: DetectorId) -> Self {
        match id {
            DetectorId::H1 => DetectorProfile { id, gain: 1.0, delay: 0 },
            DetectorId::L1 => DetectorProfile { id, gain: 0.85, delay: 7 },
            DetectorId::V1 => DetectorProfile { id, gain: 0.6, delay: 14 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalMeta {
    pub m1: f64,
    pub m2: f64,
    pub detector: Option<DetectorId>,
    pub spins: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub meta: SignalMeta,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum()
    }
}

/// Parametric one-sided noise PSD: flat at `psd_scale` above `f_knee`,
/// `psd_scale * (f / f_knee)^psd_slope` below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub psd_slope: f64,
    /// Strain^2 / Hz. Zero disables noise.
    pub psd_scale: f64,
    pub f_knee: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.psd_scale >= 0.0 && self.psd_scale.is_finite()) {
            return Err(Error::config("data.psd_scale", "must be non-negative and finite"));
        }
        if !(self.f_knee > 0.0 && self.f_knee.is_finite()) {
            return Err(Error::config("data.f_knee", "must be positive"));
        }
        if !self.psd_slope.is_finite() {
            return Err(Error::config("data.psd_slope", "must be finite"));
        }
        Ok(())
    }

    pub fn psd(&self, f: f64) -> f64 {
        if f >= self.f_knee {
            self.psd_scale
        } else {
            self.psd_scale * (f / self.f_knee).powf(self.psd_slope)
        }
    }

    /// The same noise model with the seed replaced by the stream for `row`.
    pub fn for_row(&self, row: usize) -> NoiseSpec {
        NoiseSpec {
            seed: derive_seed(self.seed, &[row as u64]),
            ..*self
        }
    }
}

/// Synthesizes a Newtonian chirp starting at `params.f_min`.
///
/// The output holds every sample strictly before coalescence, capped at
/// `duration` seconds.
pub fn make_chirp(params: &ChirpParams, duration: f64) -> Result<Signal> {
    params.validate()?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::Param(format!("duration must be positive (got {duration})")));
    }
    let fs = params.sample_rate;
    let tc = params.coalescence_time();
    if !tc.is_finite() || tc * fs < 1.0 {
        return Err(Error::Param(format!(
            "coalescence time {tc:e} s is shorter than one sample at {fs} Hz"
        )));
    }
    // Samples with t = k / fs < tc.
    let n_coal = (tc * fs).ceil() as usize;
    let n_dur = (duration * fs).floor() as usize;
    let n = n_coal.min(n_dur);
    if n == 0 {
        return Err(Error::Param(format!(
            "duration {duration} s is shorter than one sample at {fs} Hz"
        )));
    }
    let samples: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            params.amplitude_at(t) * params.phase_at(t).cos()
        })
        .collect();
    if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::Param(format!(
            "chirp overflowed at sample {bad} (m1={}, m2={})",
            params.m1, params.m2
        )));
    }
    Ok(Signal {
        samples,
        sample_rate: fs,
        meta: SignalMeta {
            m1: params.m1,
            m2: params.m2,
            detector: None,
            spins: FIXED_SPINS,
        },
    })
}

/// Scales by the detector gain and shifts right by its delay, keeping the length.
pub fn project_detector(signal: &Signal, profile: &DetectorProfile) -> Result<Signal> {
    if !(profile.gain > 0.0 && profile.gain.is_finite()) {
        return Err(Error::config("data.detectors", "detector gain must be positive"));
    }
    let n = signal.len();
    if profile.delay >= n {
        return Err(Error::config(
            "data.detectors",
            format!("delay {} is not shorter than the signal ({n} samples)", profile.delay),
        ));
    }
    let mut samples = vec![0.0; n];
    for (out, x) in samples[profile.delay..].iter_mut().zip(&signal.samples) {
        *out = profile.gain * x;
    }
    Ok(Signal {
        samples,
        sample_rate: signal.sample_rate,
        meta: SignalMeta {
            detector: Some(profile.id),
            ..signal.meta
        },
    })
}

/// Appends zeros up to `target_len`, leaving the leading samples untouched.
pub fn zero_pad(signal: &Signal, target_len: usize) -> Result<Signal> {
    if target_len < signal.len() {
        return Err(Error::config(
            "data.target_len",
            format!("{target_len} is shorter than a signal of {} samples", signal.len()),
        ));
    }
    let mut samples = signal.samples.clone();
    samples.resize(target_len, 0.0);
    Ok(Signal {
        samples,
        ..signal.clone()
    })
}

/// Draws `len` samples of stationary Gaussian noise with the given PSD.
///
/// White N(0, 1) samples are shaped in the frequency domain by
/// `sqrt(psd(f) * fs / 2)`, so a flat PSD gives variance `psd_scale * fs / 2`.
/// The DC bin uses the PSD at the lowest resolved frequency.
pub fn noise_realization(len: usize, sample_rate: f64, spec: &NoiseSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if len == 0 || spec.psd_scale == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let mut rng = rng_for(spec.seed, &[]);
    let mut buf: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let df = sample_rate / len as f64;
    for (k, bin) in buf.iter_mut().enumerate() {
        let f = (k.min(len - k) as f64 * df).max(df);
        *bin *= (spec.psd(f) * sample_rate / 2.0).sqrt();
    }
    planner.plan_fft_inverse(len).process(&mut buf);

    let norm = 1.0 / len as f64;
    Ok(buf.iter().map(|c| c.re * norm).collect())
}

pub fn add_noise(signal: &Signal, spec: &NoiseSpec) -> Result<Signal> {
    let noise = noise_realization(signal.len(), signal.sample_rate, spec)?;
    Ok(Signal {
        samples: signal.samples.iter().zip(&noise).map(|(s, n)| s + n).collect(),
        ..signal.clone()
    })
}

/// Inclusive mass grid `min, min + step, ..., <= max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl MassGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::config("data.mass_step", "must be positive"));
        }
        if !(self.min > 0.0 && self.min.is_finite()) {
            return Err(Error::config("data.mass_min", "must be positive"));
        }
        if !(self.max >= self.min && self.max.is_finite()) {
            return Err(Error::config(
                "data.mass_max",
                format!("mass range is empty ({} > {})", self.min, self.max),
            ));
        }
        let count = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| self.min + i as f64 * self.step).collect())
    }

    /// All `(m1, m2)` with `m1 >= m2`, ordered by `m1` then `m2`.
    pub fn pairs(&self) -> Result<Vec<(f64, f64)>> {
        let masses = self.values()?;
        Ok(masses
            .iter()
            .enumerate()
            .flat_map(|(i, &m1)| masses[..=i].iter().map(move |&m2| (m1, m2)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub grid: MassGrid,
    pub f_min: f64,
    pub sample_rate: f64,
    pub amplitude: f64,
    pub target_len: usize,
    pub detectors: Vec<DetectorProfile>,
    pub noise: NoiseSpec,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            grid: MassGrid { min: 25.0, max: 33.5, step: 0.5 },
            f_min: 40.0,
            sample_rate: 1024.0,
            amplitude: 1.0,
            target_len: 256,
            detectors: DetectorId::ALL.iter().map(|&d| DetectorProfile::reference(d)).collect(),
            noise: NoiseSpec {
                psd_slope: -2.0,
                psd_scale: 2.0e-4,
                f_knee: 30.0,
                seed: 0,
            },
        }
    }
}

/// Paired clean/noisy rows of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub noisy: Vec<Vec<f64>>,
    pub clean: Vec<Vec<f64>>,
    pub meta: Vec<SignalMeta>,
    pub sample_rate: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.clean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clean.is_empty()
    }

    pub fn signal_len(&self) -> usize {
        self.clean.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.noisy.len() != self.clean.len() || self.meta.len() != self.clean.len() {
            return Err(Error::shape("noisy, clean and meta row counts differ"));
        }
        let len = self.signal_len();
        for (i, (n, c)) in self.noisy.iter().zip(&self.clean).enumerate() {
            if n.len() != len || c.len() != len {
                return Err(Error::shape(format!("row {i} does not have length {len}")));
            }
            if n.iter().chain(c).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("row {i} holds a non-finite sample")));
            }
        }
        Ok(())
    }

    /// Deterministic shuffled split into (train, validation) row indices.
    pub fn split_indices(&self, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
        use rand::seq::SliceRandom;
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut rng_for(seed, &[0x5711]));
        let n_train = ((self.len() as f64 * train_fraction).round() as usize).clamp(1.min(self.len()), self.len());
        let val = idx.split_off(n_train);
        (idx, val)
    }
}

/// One clean/noisy pair per `(m1, m2, detector)` with `m1 >= m2`.
///
/// Row `r` draws its noise from `config.noise.for_row(r)`, so rows are built
/// in parallel without affecting the output.
pub fn build_dataset(config: &DatasetConfig) -> Result<Dataset> {
    let pairs = config.grid.pairs()?;
    if config.detectors.is_empty() {
        return Err(Error::config("data.detectors", "at least one detector is required"));
    }
    if config.target_len == 0 {
        return Err(Error::config("data.target_len", "must be positive"));
    }
    config.noise.validate()?;
    let duration = config.target_len as f64 / config.sample_rate;

    let jobs: Vec<(f64, f64, DetectorProfile)> = pairs
        .iter()
        .flat_map(|&(m1, m2)| config.detectors.iter().map(move |&d| (m1, m2, d)))
        .collect();

    let rows: Vec<(Signal, Signal)> = jobs
        .par_iter()
        .enumerate()
        .map(|(row, &(m1, m2, detector))| {
            let params = ChirpParams {
                m1,
                m2,
                f_min: config.f_min,
                sample_rate: config.sample_rate,
                amplitude: config.amplitude,
            };
            let chirp = make_chirp(&params, duration)?;
            let padded = zero_pad(&chirp, config.target_len)?;
            let clean = project_detector(&padded, &detector)?;
            let noisy = add_noise(&clean, &config.noise.for_row(row))?;
            Ok((clean, noisy))
        })
        .collect::<Result<_>>()?;

    let mut dataset = Dataset {
        noisy: Vec::with_capacity(rows.len()),
        clean: Vec::with_capacity(rows.len()),
        meta: Vec::with_capacity(rows.len()),
        sample_rate: config.sample_rate,
    };
    for (clean, noisy) in rows {
        dataset.meta.push(clean.meta);
        dataset.clean.push(clean.samples);
        dataset.noisy.push(noisy.samples);
    }
    Ok(dataset)
}

/// Frequency estimates from successive upward zero crossings (linearly
/// interpolated), one per full cycle.
pub fn zero_crossing_frequencies(samples: &[f64], sample_rate: f64) -> Vec<f64> {
    let mut crossings = Vec::new();
    for k in 1..samples.len() {
        let (a, b) = (samples[k - 1], samples[k]);
        if a < 0.0 && b >= 0.0 {
            crossings.push((k - 1) as f64 + a / (a - b));
        }
    }
    crossings
        .windows(2)
        .map(|w| sample_rate / (w[1] - w[0]))
        .collect()
}
