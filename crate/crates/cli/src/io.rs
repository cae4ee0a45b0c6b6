//! CSV artifacts. Floats are written in their shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use latentscope_core::mixture::MixtureModel;
use latentscope_core::signalgen::{SignalMeta, FIXED_SPINS};
use latentscope_core::stats::KsResult;
use latentscope_core::vae::TrainReport;

use crate::error::{CliError, CliResult};

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))
}

fn parse_f64(path: &Path, row: usize, field: &str) -> CliResult<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{}: row {row}: `{field}` is not a number", path.display())))
}

/// Writes `rows` under a header of `prefix0, prefix1, ...`.
pub fn write_matrix(path: &Path, prefix: &str, rows: &[Vec<f64>]) -> CliResult<()> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut w = create(path)?;
    let header: Vec<String> = (0..cols).map(|i| format!("{prefix}{i}")).collect();
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{}", header.join(","))?;
        for row in rows {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

/// Reads a numeric CSV with a header row; every row must have the header's width.
pub fn read_matrix(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let mut r = reader(path)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        rows.push(rec.iter().map(|f| parse_f64(path, i, f)).collect::<CliResult<Vec<f64>>>()?);
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!("{} has no data rows", path.display())));
    }
    Ok(rows)
}

pub fn write_meta(path: &Path, meta: &[SignalMeta]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut emit = || -> csv::Result<()> {
        w.write_record(["row", "m1", "m2", "detector"])?;
        for (i, m) in meta.iter().enumerate() {
            let det = m.detector.map_or("", |d| d.as_str());
            w.write_record([i.to_string(), m.m1.to_string(), m.m2.to_string(), det.to_string()])?;
        }
        w.flush()?;
        Ok(())
    };
    emit().map_err(|e| write_err(path, e))
}

pub fn read_meta(path: &Path) -> CliResult<Vec<SignalMeta>> {
    let mut r = reader(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if rec.len() != 4 {
            return Err(CliError::Input(format!("{}: row {i} needs 4 fields", path.display())));
        }
        let detector = match rec[3].trim() {
            "" => None,
            s => Some(s.parse().map_err(|e| CliError::Input(format!("{}: row {i}: {e}", path.display())))?),
        };
        out.push(SignalMeta {
            m1: parse_f64(path, i, &rec[1])?,
            m2: parse_f64(path, i, &rec[2])?,
            detector,
            spins: FIXED_SPINS,
        });
    }
    Ok(out)
}

/// One row per epoch, numbered from 1.
pub fn write_train_report(path: &Path, report: &TrainReport) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "epoch,recon,kl,beta,total")?;
        for e in &report.epochs {
            writeln!(w, "{},{},{},{},{}", e.epoch + 1, e.recon, e.kl, e.beta, e.total)?;
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

/// A parsed `train_report.csv` row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub epoch: usize,
    pub recon: f64,
    pub kl: f64,
    pub beta: f64,
    pub total: f64,
}

pub fn read_train_report(path: &Path) -> CliResult<Vec<ReportRow>> {
    read_matrix(path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != 5 {
                return Err(CliError::Input(format!("{}: row {i} needs 5 fields", path.display())));
            }
            Ok(ReportRow { epoch: r[0] as usize, recon: r[1], kl: r[2], beta: r[3], total: r[4] })
        })
        .collect()
}

pub fn write_mixtures(path: &Path, models: &[MixtureModel]) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "dim,k,weight,mean,variance")?;
        for (d, m) in models.iter().enumerate() {
            for k in 0..m.num_components() {
                writeln!(w, "{d},{k},{},{},{}", m.weights[k], m.means[k], m.variances[k])?;
            }
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

pub fn read_mixtures(path: &Path) -> CliResult<Vec<MixtureModel>> {
    let rows = read_matrix(path)?;
    let mut parts: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != 5 {
            return Err(CliError::Input(format!("{}: row {i} needs 5 fields", path.display())));
        }
        let d = r[0] as usize;
        if d > parts.len() {
            return Err(CliError::Input(format!("{}: dimension {d} appears out of order", path.display())));
        }
        if d == parts.len() {
            parts.push(Default::default());
        }
        parts[d].0.push(r[2]);
        parts[d].1.push(r[3]);
        parts[d].2.push(r[4]);
    }
    parts
        .into_iter()
        .enumerate()
        .map(|(d, (w, m, v))| {
            MixtureModel::new(w, m, v)
                .map_err(|e| CliError::Input(format!("{}: dimension {d}: {e}", path.display())))
        })
        .collect()
}

pub fn write_acceptance(path: &Path, rates: &[(f64, usize)]) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "dim,rate,n_proposals")?;
        for (d, (rate, n)) in rates.iter().enumerate() {
            writeln!(w, "{d},{rate},{n}")?;
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

pub fn write_ks(path: &Path, results: &[KsResult]) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "dim,D,p,n1,n2")?;
        for (d, r) in results.iter().enumerate() {
            writeln!(w, "{d},{},{},{},{}", r.statistic, r.p_value, r.n1, r.n2)?;
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

/// Dense matrix without a header.
pub fn write_square(path: &Path, dims: usize, values: &[f64]) -> CliResult<()> {
    let mut w = create(path)?;
    let mut emit = || -> std::io::Result<()> {
        for row in values.chunks(dims.max(1)) {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    emit().map_err(|e| write_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| write_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let rows = vec![vec![0.1, -2.5e-17, 1.0 / 3.0], vec![f64::MAX, 0.0, -7.0]];
        write_matrix(&p, "z", &rows).unwrap();
        assert_eq!(read_matrix(&p).unwrap(), rows);
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("z0,z1,z2\n"));
    }

    #[test]
    fn mixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mixture.csv");
        let models = vec![
            MixtureModel::new(vec![0.25, 0.75], vec![-1.0, 2.0], vec![0.5, 1.5]).unwrap(),
            MixtureModel::gaussian(0.3, 2.0).unwrap(),
        ];
        write_mixtures(&p, &models).unwrap();
        assert_eq!(read_mixtures(&p).unwrap(), models);
    }

    #[test]
    fn malformed_numbers_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "a,b\n1,x\n").unwrap();
        let err = read_matrix(&p).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(read_matrix(&dir.path().join("missing.csv")).is_err());
    }
}
