//! Pipeline stages. Each stage reads its inputs from the output directory,
//! writes its artifacts there and records them in the manifest.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use latentscope_core::hmc::run_all_dimensions;
use latentscope_core::mixture::{fit, histogram_pdf, MixtureModel};
use latentscope_core::nn::{read_weights, write_weights};
use latentscope_core::rng::derive_seed;
use latentscope_core::signalgen::{build_dataset, Dataset};
use latentscope_core::stats::{ks_report, ks_two_sample, pearson_matrix, KsResult};
use latentscope_core::vae::train;
use latentscope_core::{FitConfig, VaeModel};
use rayon::prelude::*;

use crate::config::{CompareMode, PipelineConfig, SampleTarget};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::{now_ms, RunManifest};
use crate::svg;

pub const NOISY: &str = "noisy.csv";
pub const CLEAN: &str = "clean.csv";
pub const META: &str = "meta.csv";
pub const WEIGHTS: &str = "weights.lsnn";
pub const TRAIN_REPORT: &str = "train_report.csv";
pub const LOSS_FIGURE: &str = "loss_curve.svg";
pub const LATENTS_CLEAN: &str = "latents_clean.csv";
pub const LATENTS_NOISY: &str = "latents_noisy.csv";
pub const MIXTURE: &str = "mixture.csv";
pub const DENSITY_FIGURE: &str = "prior_densities.svg";
pub const POSTERIOR: &str = "posterior_samples.csv";
pub const ACCEPTANCE: &str = "acceptance_rates.csv";
pub const ACCEPTANCE_FIGURE: &str = "acceptance_rates.svg";
pub const KS_REPORT: &str = "ks_report.csv";
pub const NULL_KS_REPORT: &str = "null_ks_report.csv";
pub const CORR_MATRIX: &str = "corr_matrix.csv";
pub const KS_FIGURE: &str = "ks_statistics.svg";
pub const CORR_FIGURE: &str = "corr_heatmap.svg";
pub const SUMMARY: &str = "summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    GenData,
    Train,
    FitPrior,
    Sample,
    Diagnose,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::GenData, Stage::Train, Stage::FitPrior, Stage::Sample, Stage::Diagnose];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::Train => "train",
            Stage::FitPrior => "fit-prior",
            Stage::Sample => "sample",
            Stage::Diagnose => "diagnose",
        }
    }
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, out_dir: impl Into<PathBuf>) -> CliResult<Self> {
        let out_dir = out_dir.into();
        std::fs::create_dir_all(&out_dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Pipeline { config, out_dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn require(&self, name: &str, producer: Stage) -> CliResult<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::Input(format!("{} not found; run `{}` first", p.display(), producer.name())))
        }
    }

    /// Runs one stage and records its artifacts in the manifest.
    pub fn run(&self, stage: Stage) -> CliResult<()> {
        let started = now_ms();
        eprintln!("[{}] starting", stage.name());
        let files = match stage {
            Stage::GenData => self.gen_data()?,
            Stage::Train => self.train()?,
            Stage::FitPrior => self.fit_prior()?,
            Stage::Sample => self.sample()?,
            Stage::Diagnose => self.diagnose()?,
        };
        let mut manifest = RunManifest::load_or_new(&self.out_dir, &self.config)?;
        manifest.record(&self.out_dir, stage.name(), started, &files)?;
        manifest.save(&self.out_dir)?;
        eprintln!("[{}] done in {:.1} s", stage.name(), (now_ms() - started) as f64 / 1e3);
        Ok(())
    }

    pub fn run_all(&self) -> CliResult<()> {
        Stage::ALL.iter().try_for_each(|&s| self.run(s))
    }

    fn gen_data(&self) -> CliResult<Vec<&'static str>> {
        let data = build_dataset(&self.config.dataset_config()?)?;
        io::write_matrix(&self.path(NOISY), "s", &data.noisy)?;
        io::write_matrix(&self.path(CLEAN), "s", &data.clean)?;
        io::write_meta(&self.path(META), &data.meta)?;
        eprintln!("  {} signals of {} samples", data.len(), data.signal_len());
        Ok(vec![NOISY, CLEAN, META])
    }

    fn load_dataset(&self) -> CliResult<Dataset> {
        let noisy = io::read_matrix(&self.require(NOISY, Stage::GenData)?)?;
        let clean = io::read_matrix(&self.require(CLEAN, Stage::GenData)?)?;
        let meta = io::read_meta(&self.require(META, Stage::GenData)?)?;
        let data = Dataset { noisy, clean, meta, sample_rate: self.config.data.sample_rate };
        data.validate()?;
        Ok(data)
    }

    fn train(&self) -> CliResult<Vec<&'static str>> {
        let data = self.load_dataset()?;
        let (model, report) = train(&data, self.config.vae_config()?, &self.config.train_config())?;
        let file = File::create(self.path(WEIGHTS))
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", self.path(WEIGHTS).display())))?;
        write_weights(BufWriter::new(file), &model.to_tensors())?;
        io::write_train_report(&self.path(TRAIN_REPORT), &report)?;

        let series = |name, f: fn(&latentscope_core::vae::EpochStats) -> f64| svg::Series {
            name,
            points: report.epochs.iter().map(|e| ((e.epoch + 1) as f64, f(e))).collect(),
        };
        let figure = svg::line_chart(
            "Training loss",
            "epoch",
            "loss",
            &[series("reconstruction", |e| e.recon), series("KL", |e| e.kl), series("total", |e| e.total)],
        );
        io::write_text(&self.path(LOSS_FIGURE), &figure)?;
        if let (Some(first), Some(last)) = (report.epochs.first(), report.epochs.last()) {
            eprintln!(
                "  {} parameters; reconstruction {:.4} -> {:.4} (ratio {:.3})",
                model.num_params(),
                first.recon,
                last.recon,
                last.recon / first.recon
            );
        }
        Ok(vec![WEIGHTS, TRAIN_REPORT, LOSS_FIGURE])
    }

    fn load_model(&self) -> CliResult<VaeModel> {
        let path = self.require(WEIGHTS, Stage::Train)?;
        let file = File::open(&path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
        let tensors = read_weights(std::io::BufReader::new(file))?;
        Ok(VaeModel::from_tensors(self.config.vae_config()?, &tensors)?)
    }

    fn fit_prior(&self) -> CliResult<Vec<&'static str>> {
        let model = self.load_model()?;
        let data = self.load_dataset()?;
        let encode = |rows: &[Vec<f64>]| -> CliResult<Vec<Vec<f64>>> {
            rows.par_iter().map(|x| Ok(model.encode(x)?.0)).collect()
        };
        let z_clean = encode(&data.clean)?;
        let z_noisy = encode(&data.noisy)?;
        io::write_matrix(&self.path(LATENTS_CLEAN), "z", &z_clean)?;
        io::write_matrix(&self.path(LATENTS_NOISY), "z", &z_noisy)?;

        let dims = model.config.latent_dim;
        let models = fit_latents(&z_clean, &self.config.fit_config())?;
        io::write_mixtures(&self.path(MIXTURE), &models)?;

        let panels = (0..dims)
            .map(|d| {
                let column: Vec<f64> = z_clean.iter().map(|r| r[d]).collect();
                density_panel(&column, &models[d], self.config.report.histogram_bins)
            })
            .collect::<CliResult<Vec<_>>>()?;
        let figure = svg::density_grid("Latent densities: histogram and fitted mixture", &panels);
        io::write_text(&self.path(DENSITY_FIGURE), &figure)?;
        let counts: Vec<String> = models.iter().map(|m| m.num_components().to_string()).collect();
        eprintln!("  components per dimension: {}", counts.join(" "));
        Ok(vec![LATENTS_CLEAN, LATENTS_NOISY, MIXTURE, DENSITY_FIGURE])
    }

    /// The per-dimension sampling targets.
    fn targets(&self) -> CliResult<Vec<MixtureModel>> {
        let dims = self.config.model.latent_dim;
        Ok(match self.config.hmc.target {
            SampleTarget::Fitted => io::read_mixtures(&self.require(MIXTURE, Stage::FitPrior)?)?,
            SampleTarget::StandardNormal => vec![MixtureModel::standard_normal(); dims],
            SampleTarget::Bimodal => vec![MixtureModel::symmetric(&[-2.0, 2.0], 0.25)?; dims],
        })
    }

    fn sample(&self) -> CliResult<Vec<&'static str>> {
        let targets = self.targets()?;
        let dims = targets.len();
        let chains = self.config.hmc.chains;
        let init: Vec<Vec<f64>> = match self.config.hmc.target {
            SampleTarget::Fitted => {
                let z = io::read_matrix(&self.require(LATENTS_NOISY, Stage::FitPrior)?)?;
                if z[0].len() != dims {
                    return Err(CliError::Input(format!(
                        "{LATENTS_NOISY} has {} columns but {MIXTURE} describes {dims} dimensions",
                        z[0].len()
                    )));
                }
                let n = chains.min(z.len());
                (0..n).map(|i| z[i * z.len() / n].clone()).collect()
            }
            _ => vec![vec![0.0; dims]; chains],
        };
        let result = run_all_dimensions(&init, &targets, &self.config.hmc_config())?;
        for chain in &result {
            if let Some(w) = &chain.warning {
                eprintln!("  warning: {w}");
            }
        }
        let n_rows = result[0].positions.len();
        let rows: Vec<Vec<f64>> = (0..n_rows).map(|i| result.iter().map(|c| c.positions[i]).collect()).collect();
        io::write_matrix(&self.path(POSTERIOR), "z", &rows)?;
        let rates: Vec<(f64, usize)> = result.iter().map(|c| (c.acceptance_rate, c.n_proposals())).collect();
        io::write_acceptance(&self.path(ACCEPTANCE), &rates)?;
        let values: Vec<f64> = rates.iter().map(|r| r.0).collect();
        let figure = svg::bar_chart("HMC acceptance rate per latent dimension", "latent dimension", "acceptance rate", &values, 1.0, None);
        io::write_text(&self.path(ACCEPTANCE_FIGURE), &figure)?;
        eprintln!("  {} chains x {} samples per dimension", init.len(), self.config.hmc.n_samples);
        Ok(vec![POSTERIOR, ACCEPTANCE, ACCEPTANCE_FIGURE])
    }

    fn diagnose(&self) -> CliResult<Vec<&'static str>> {
        let z_noisy = io::read_matrix(&self.require(LATENTS_NOISY, Stage::FitPrior)?)?;
        let posterior = io::read_matrix(&self.require(POSTERIOR, Stage::Sample)?)?;
        let compared = match self.config.report.compare {
            CompareMode::Posterior => ks_report(&z_noisy, &posterior)?,
            CompareMode::SelfCheck => ks_report(&z_noisy, &z_noisy)?,
        };
        io::write_ks(&self.path(KS_REPORT), &compared)?;

        let targets = self.targets()?;
        if targets.len() != posterior[0].len() {
            return Err(CliError::Input(format!(
                "{POSTERIOR} has {} columns but the sampling target has {} dimensions",
                posterior[0].len(),
                targets.len()
            )));
        }
        let null_seed = self.config.null_seed();
        let null: Vec<KsResult> = targets
            .par_iter()
            .enumerate()
            .map(|(d, m)| {
                let column: Vec<f64> = posterior.iter().map(|r| r[d]).collect();
                let draws = m.sample(self.config.report.null_draws, derive_seed(null_seed, &[d as u64]));
                Ok(ks_two_sample(&column, &draws)?)
            })
            .collect::<CliResult<_>>()?;
        io::write_ks(&self.path(NULL_KS_REPORT), &null)?;

        let corr = pearson_matrix(&z_noisy)?;
        for d in &corr.dead_columns {
            eprintln!("  warning: latent dimension {d} has zero variance; its correlations are reported as 0");
        }
        io::write_square(&self.path(CORR_MATRIX), corr.dims, &corr.values)?;

        let d_values: Vec<f64> = compared.iter().map(|r| r.statistic).collect();
        let figure = svg::bar_chart(
            "KS statistic per latent dimension: encoder latents vs posterior",
            "latent dimension",
            "KS D",
            &d_values,
            1.0,
            None,
        );
        io::write_text(&self.path(KS_FIGURE), &figure)?;
        let heat = svg::heatmap("Pearson correlation of encoder latents", corr.dims, &corr.values);
        io::write_text(&self.path(CORR_FIGURE), &heat)?;

        let rates: Option<Vec<f64>> =
            io::read_matrix(&self.path(ACCEPTANCE)).ok().map(|rows| rows.iter().map(|r| r[1]).collect());
        let text = summary(&compared, &null, corr.max_off_diagonal(), &corr.dead_columns, rates.as_deref());
        io::write_text(&self.path(SUMMARY), &text)?;
        eprint!("{text}");
        Ok(vec![KS_REPORT, NULL_KS_REPORT, CORR_MATRIX, KS_FIGURE, CORR_FIGURE, SUMMARY])
    }
}

/// One mixture per latent column, each fitted on its own seed stream.
pub fn fit_latents(z: &[Vec<f64>], base: &FitConfig) -> CliResult<Vec<MixtureModel>> {
    let dims = z.first().map_or(0, Vec::len);
    (0..dims)
        .into_par_iter()
        .map(|d| {
            let column: Vec<f64> = z.iter().map(|r| r[d]).collect();
            let cfg = FitConfig { seed: derive_seed(base.seed, &[d as u64]), ..*base };
            fit(&column, &cfg)
                .map(|r| r.model)
                .map_err(|e| CliError::Numeric(format!("mixture fit for dimension {d}: {e}")))
        })
        .collect()
}

/// Median of a non-empty slice.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn d_line(label: &str, results: &[KsResult]) -> String {
    let d: Vec<f64> = results.iter().map(|r| r.statistic).collect();
    let (arg, max) = d.iter().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    format!("{label}: median D {:.4}, max D {max:.4} (dimension {arg})\n", median(&d))
}

fn summary(compared: &[KsResult], null: &[KsResult], max_corr: f64, dead: &[usize], rates: Option<&[f64]>) -> String {
    let mut s = format!("latent dimensions: {}\n", compared.len());
    s += &d_line("encoder latents vs posterior", compared);
    s += &d_line("null control, posterior vs target draws", null);
    s += &format!("max |off-diagonal correlation|: {max_corr:.4}\n");
    if !dead.is_empty() {
        let list: Vec<String> = dead.iter().map(usize::to_string).collect();
        s += &format!("zero-variance dimensions: {}\n", list.join(" "));
    }
    if let Some(r) = rates {
        let mean = r.iter().sum::<f64>() / r.len().max(1) as f64;
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        s += &format!("acceptance rate: mean {mean:.4}, min {lo:.4}\n");
    }
    s
}

fn density_panel(samples: &[f64], model: &MixtureModel, bins: usize) -> CliResult<svg::DensityPanel> {
    let h = histogram_pdf(samples, bins)?;
    let (lo, hi) = (h.edges[0], h.edges[h.edges.len() - 1]);
    let pad = 0.1 * (hi - lo);
    let n = 200;
    let curve = (0..=n)
        .map(|i| {
            let x = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / n as f64;
            let comps = (0..model.num_components())
                .map(|k| {
                    let v = model.variances[k];
                    model.weights[k] * (-(x - model.means[k]).powi(2) / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
                })
                .collect();
            (x, model.log_density(x).exp(), comps)
        })
        .collect();
    Ok(svg::DensityPanel { edges: h.edges, heights: h.heights, curve })
}
