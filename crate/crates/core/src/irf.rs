//! Recursive (Cholesky) identification and impulse responses with per-draw
//! normalization and pointwise quantile bands.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bvar::{self, lag_matrices, PosteriorDraws, VarSpec, EXPLOSIVE_RADIUS};
use crate::error::{Error, Result};
use crate::format::num;
use crate::ingest::MacroPanel;
use crate::linalg::{self, Matrix, RngStream};
use crate::plot;

/// Draws whose raw target impact is smaller than this are dropped.
pub const NORMALIZATION_FLOOR: f64 = 1e-12;

/// Median, then the 68% and 90% equal-tailed bands.
pub const BAND_PROBS: [f64; 5] = [0.5, 0.16, 0.84, 0.05, 0.95];

pub const EXPENDITURE_SHARES: [&str; 4] = [
    "net_exports_share",
    "consumption_share",
    "government_share",
    "investment_share",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrfSpec {
    /// Responses are computed for horizons `0..=horizon`.
    pub horizon: usize,
    /// Position of the identified shock; recursive identification needs 0.
    pub shock_index: usize,
    pub target_variable: String,
    /// Impact response of the target variable after normalization.
    pub target_response: f64,
}

impl Default for IrfSpec {
    fn default() -> Self {
        Self {
            horizon: 48,
            shock_index: 0,
            target_variable: String::new(),
            target_response: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandSummary {
    pub median: f64,
    pub p16: f64,
    pub p84: f64,
    pub p05: f64,
    pub p95: f64,
}

#[derive(Clone, Debug)]
pub struct IrfResult {
    pub variables: Vec<String>,
    pub horizon: usize,
    /// One `(horizon + 1) × n` matrix per retained draw, in draw order.
    pub responses: Vec<Matrix>,
    /// `summary[h][v]`.
    pub summary: Vec<Vec<BandSummary>>,
    /// Draws dropped for a degenerate normalization.
    pub dropped: usize,
    /// Retained draws with an explosive companion matrix.
    pub explosive: usize,
}

/// Lower-triangular impact matrix; column 0 is the impact of the first innovation.
pub fn impact_matrix(sigma: &Matrix) -> Result<Matrix> {
    linalg::cholesky(sigma)
}

/// Unnormalized responses `Φ_0 = L e_shock`, `Φ_h = Σ_{j ≤ min(h,p)} A^j Φ_{h−j}`.
pub fn raw_responses(lags: &[Matrix], impact: &Matrix, shock: usize, horizon: usize) -> Matrix {
    let n = impact.nrows();
    let mut phi: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(horizon + 1);
    phi.push(impact.column(shock).into_owned());
    for h in 1..=horizon {
        let mut next = nalgebra::DVector::zeros(n);
        for (j, a) in lags.iter().enumerate().take(h) {
            next += a * &phi[h - 1 - j];
        }
        phi.push(next);
    }
    Matrix::from_fn(horizon + 1, n, |h, v| phi[h][v])
}

fn target_index(variables: &[String], spec: &IrfSpec) -> Result<usize> {
    if spec.horizon == 0 {
        return Err(Error::InvalidSpec("IRF horizon must be at least 1".into()));
    }
    if spec.shock_index != 0 {
        return Err(Error::InvalidSpec(
            "the identified shock must be ordered first".into(),
        ));
    }
    if !spec.target_response.is_finite() {
        return Err(Error::InvalidSpec("target response must be finite".into()));
    }
    variables
        .iter()
        .position(|v| *v == spec.target_variable)
        .ok_or_else(|| {
            Error::InvalidSpec(format!(
                "target variable `{}` not in the system",
                spec.target_variable
            ))
        })
}

pub fn compute_irf(draws: &PosteriorDraws, spec: &IrfSpec) -> Result<IrfResult> {
    let target = target_index(&draws.spec.variables, spec)?;
    let (n, p, c) = (draws.n(), draws.lags(), draws.spec.include_constant);
    let per_draw: Vec<Result<Option<(Matrix, bool)>>> = (0..draws.len())
        .into_par_iter()
        .map(|d| {
            let lags = lag_matrices(&draws.coefficients[d], n, p, c);
            let raw = raw_responses(
                &lags,
                &impact_matrix(&draws.covariances[d])?,
                spec.shock_index,
                spec.horizon,
            );
            let impact = raw[(0, target)];
            if !(impact.abs() >= NORMALIZATION_FLOOR) {
                return Ok(None);
            }
            let mut scaled = raw * (spec.target_response / impact);
            scaled[(0, target)] = spec.target_response;
            let explosive = bvar::stability(&draws.coefficients[d], n, p, c) > EXPLOSIVE_RADIUS;
            Ok(Some((scaled, explosive)))
        })
        .collect();
    let mut responses = Vec::with_capacity(per_draw.len());
    let (mut dropped, mut explosive) = (0, 0);
    for r in per_draw {
        match r? {
            Some((m, e)) => {
                explosive += usize::from(e);
                responses.push(m);
            }
            None => dropped += 1,
        }
    }
    if responses.is_empty() {
        return Err(Error::DegenerateNormalization { dropped });
    }
    let summary = summarize(&responses, spec.horizon, n)?;
    Ok(IrfResult {
        variables: draws.spec.variables.clone(),
        horizon: spec.horizon,
        responses,
        summary,
        dropped,
        explosive,
    })
}

fn summarize(responses: &[Matrix], horizon: usize, n: usize) -> Result<Vec<Vec<BandSummary>>> {
    (0..=horizon)
        .map(|h| {
            (0..n)
                .map(|v| {
                    let cell: Vec<f64> = responses.iter().map(|r| r[(h, v)]).collect();
                    let q = linalg::quantiles(&cell, &BAND_PROBS)?;
                    Ok(BandSummary {
                        median: q[0],
                        p16: q[1],
                        p84: q[2],
                        p05: q[3],
                        p95: q[4],
                    })
                })
                .collect()
        })
        .collect()
}

impl IrfResult {
    pub fn band(&self, h: usize, variable: &str) -> Option<BandSummary> {
        let v = self.variables.iter().position(|x| x == variable)?;
        self.summary.get(h).map(|row| row[v])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "variable,horizon,median,p16,p84,p05,p95")?;
        for (v, name) in self.variables.iter().enumerate() {
            for h in 0..=self.horizon {
                let b = self.summary[h][v];
                writeln!(
                    out,
                    "{name},{h},{},{},{},{},{}",
                    num(b.median),
                    num(b.p16),
                    num(b.p84),
                    num(b.p05),
                    num(b.p95)
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// One panel per variable: median line over the 68% and 90% bands.
    pub fn to_svg(&self) -> String {
        let x: Vec<f64> = (0..=self.horizon).map(|h| h as f64).collect();
        let col = |v: usize, f: fn(&BandSummary) -> f64| -> Vec<f64> {
            (0..=self.horizon).map(|h| f(&self.summary[h][v])).collect()
        };
        let panels: Vec<plot::Panel> = self
            .variables
            .iter()
            .enumerate()
            .map(|(v, name)| plot::Panel {
                title: name.clone(),
                x: x.clone(),
                bands: vec![
                    plot::Band {
                        lower: col(v, |b| b.p05),
                        upper: col(v, |b| b.p95),
                        fill: "#c6dbef",
                    },
                    plot::Band {
                        lower: col(v, |b| b.p16),
                        upper: col(v, |b| b.p84),
                        fill: "#6baed6",
                    },
                ],
                lines: vec![plot::Line {
                    y: col(v, |b| b.median),
                    color: "#08306b",
                    dashed: false,
                }],
                markers: Vec::new(),
                zero_line: true,
            })
            .collect();
        plot::render_grid(&panels, 3)
    }
}

/// Estimate and compute IRFs for one panel: pooled when it holds two or more
/// countries, single-country otherwise.
pub fn run_svar(
    panel: &MacroPanel,
    var_spec: &VarSpec,
    irf_spec: &IrfSpec,
    rng: &mut RngStream,
) -> Result<(PosteriorDraws, IrfResult)> {
    target_index(&var_spec.variables, irf_spec)?;
    let pooled = panel.countries.len() > 1;
    let design = bvar::build_design(panel, var_spec, pooled)?;
    let draws = bvar::estimate(&design.y, &design.x, var_spec, rng)?;
    let irf = compute_irf(&draws, irf_spec)?;
    Ok((draws, irf))
}

/// Independent estimations on two country partitions, seeded `seed` and `seed + 1`.
pub fn subsample_compare(
    panel: &MacroPanel,
    split: (&[String], &[String]),
    var_spec: &VarSpec,
    irf_spec: &IrfSpec,
    seed: u64,
) -> Result<(IrfResult, IrfResult)> {
    if split.0.is_empty() || split.1.is_empty() {
        return Err(Error::EmptyPartition(
            "both subsamples need at least one country".into(),
        ));
    }
    let left = panel.select_countries(split.0)?;
    let right = panel.select_countries(split.1)?;
    let (_, a) = run_svar(&left, var_spec, irf_spec, &mut RngStream::new(seed))?;
    let (_, b) = run_svar(
        &right,
        var_spec,
        irf_spec,
        &mut RngStream::new(seed.wrapping_add(1)),
    )?;
    Ok((a, b))
}

/// IRFs for a system that swaps output for its expenditure shares. Every
/// share must be in both the spec and the panel.
pub fn share_decomposition_run(
    panel: &MacroPanel,
    var_spec: &VarSpec,
    irf_spec: &IrfSpec,
    shares: &[String],
    rng: &mut RngStream,
) -> Result<IrfResult> {
    for s in shares {
        if !panel.has_variable(s) {
            return Err(Error::SchemaMismatch(format!(
                "share variable `{s}` missing from the panel"
            )));
        }
        if !var_spec.variables.contains(s) {
            return Err(Error::SchemaMismatch(format!(
                "share variable `{s}` missing from the system"
            )));
        }
    }
    run_svar(panel, var_spec, irf_spec, rng).map(|(_, irf)| irf)
}
