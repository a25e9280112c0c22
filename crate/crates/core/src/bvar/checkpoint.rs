//! CSV persistence of posterior draws: one row per draw with the flattened
//! coefficients then the flattened covariance, both row-major.

use std::io::Write;
use std::path::Path;

use super::{ChainDiagnostics, PosteriorDraws, VarSpec};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

fn header(k: usize, n: usize) -> Vec<String> {
    let mut h = vec!["draw".to_string()];
    h.extend((0..k).flat_map(|i| (0..n).map(move |j| format!("b_r{i}_c{j}"))));
    h.extend((0..n).flat_map(|i| (0..n).map(move |j| format!("s_r{i}_c{j}"))));
    h
}

/// Values are written with shortest round-trip precision so a reload is exact.
pub fn write_checkpoint(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    let (n, k) = (draws.n(), draws.spec.k());
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header(k, n).join(","))?;
    for (d, (b, s)) in draws
        .coefficients
        .iter()
        .zip(&draws.covariances)
        .enumerate()
    {
        write!(out, "{d}")?;
        for i in 0..k {
            for j in 0..n {
                write!(out, ",{:?}", b[(i, j)])?;
            }
        }
        for i in 0..n {
            for j in 0..n {
                write!(out, ",{:?}", s[(i, j)])?;
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path, spec: &VarSpec, seed: u64) -> Result<PosteriorDraws> {
    let (n, k) = (spec.n(), spec.k());
    let mut reader = csv::Reader::from_path(path)?;
    let expected = header(k, n);
    if reader
        .headers()?
        .iter()
        .ne(expected.iter().map(String::as_str))
    {
        return Err(Error::SchemaMismatch(format!(
            "checkpoint columns do not match a {n}-variable, {k}-regressor system"
        )));
    }
    let mut coefficients = Vec::new();
    let mut covariances = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .skip(1)
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::SchemaMismatch(format!("bad checkpoint value `{s}`")))
            })
            .collect::<Result<_>>()?;
        coefficients.push(Matrix::from_row_slice(k, n, &values[..k * n]));
        covariances.push(Matrix::from_row_slice(n, n, &values[k * n..]));
    }
    if coefficients.is_empty() {
        return Err(Error::EmptyInput("checkpoint draws"));
    }
    Ok(PosteriorDraws {
        coefficients,
        covariances,
        spec: spec.clone(),
        seed,
        diagnostics: ChainDiagnostics::default(),
    })
}
