//! Two-sample Kolmogorov-Smirnov tests and Pearson correlation matrices.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    /// `sup_x |F_a(x) - F_b(x)|`.
    pub statistic: f64,
    /// Asymptotic p-value.
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::Numeric("KS sample contains NaN".into()));
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Exact KS distance by a merged sweep over both sorted samples. Each distinct
/// value is consumed from both sides before the ECDF gap is measured, so ties
/// are handled correctly.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Param("KS test needs two non-empty samples".into()));
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    Ok(d)
}

/// Kolmogorov survival function `Q(lambda) = P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        // P(K <= l) = sqrt(2 pi) / l * sum_k exp(-(2k-1)^2 pi^2 / (8 l^2)); fast for small l.
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=6)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (m * m * c).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let k = k as f64;
            let term = (-2.0 * k * k * lambda * lambda).exp();
            sum += if k as u64 % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let statistic = ks_statistic(a, b)?;
    let (n1, n2) = (a.len(), b.len());
    let ne = (n1 as f64 * n2 as f64) / (n1 + n2) as f64;
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival(ne.sqrt() * statistic),
        n1,
        n2,
    })
}

fn column(z: &[Vec<f64>], d: usize) -> Vec<f64> {
    z.iter().map(|row| row[d]).collect()
}

fn check_matrix(z: &[Vec<f64>], what: &str) -> Result<usize> {
    let dims = z.first().map_or(0, Vec::len);
    if z.iter().any(|r| r.len() != dims) {
        return Err(Error::shape(format!("{what} rows have unequal lengths")));
    }
    Ok(dims)
}

/// Per-dimension KS tests of encoder latents against posterior samples.
pub fn ks_report(z_noisy: &[Vec<f64>], posterior: &[Vec<f64>]) -> Result<Vec<KsResult>> {
    let d1 = check_matrix(z_noisy, "latent")?;
    let d2 = check_matrix(posterior, "posterior")?;
    if d1 != d2 {
        return Err(Error::shape(format!(
            "latents have {d1} dimensions but posterior samples have {d2}"
        )));
    }
    (0..d1)
        .map(|d| ks_two_sample(&column(z_noisy, d), &column(posterior, d)))
        .collect()
}

/// Symmetric Pearson matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub dims: usize,
    /// Row-major `dims x dims`.
    pub values: Vec<f64>,
    /// Columns with zero variance; their off-diagonal entries are 0.
    pub dead_columns: Vec<usize>,
}

impl CorrMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dims + j]
    }

    /// Largest absolute off-diagonal entry.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.dims {
            for j in 0..self.dims {
                if i != j {
                    m = m.max(self.get(i, j).abs());
                }
            }
        }
        m
    }
}

pub fn pearson_matrix(z: &[Vec<f64>]) -> Result<CorrMatrix> {
    let dims = check_matrix(z, "latent")?;
    let n = z.len();
    if n < 2 {
        return Err(Error::Param(format!("correlation needs at least 2 rows, got {n}")));
    }
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = (0..dims)
        .map(|d| {
            let c = column(z, d);
            let mean = c.iter().sum::<f64>() / nf;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let dead_columns: Vec<usize> = (0..dims).filter(|&d| !(norms[d] > 0.0)).collect();

    let mut values = vec![0.0; dims * dims];
    for i in 0..dims {
        values[i * dims + i] = 1.0;
        for j in i + 1..dims {
            let r = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            values[i * dims + j] = r;
            values[j * dims + i] = r;
        }
    }
    Ok(CorrMatrix { dims, values, dead_columns })
}
