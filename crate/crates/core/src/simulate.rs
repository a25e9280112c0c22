//! Synthetic data generators for fixtures and recovery tests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{FirmPanel, FirmRecord, Frequency, MacroPanel, Month, PeriodSeries, Quarter};
use crate::linalg::{self, Matrix, RngStream};

/// Simulate `t` observations of `y_t = C + Σ_j A^j y_{t−j} + L ε_t` from a
/// stacked coefficient matrix, discarding `burn` initial draws started at zero.
pub fn simulate_var(
    b: &Matrix,
    sigma: &Matrix,
    lags: usize,
    include_constant: bool,
    t: usize,
    burn: usize,
    rng: &mut RngStream,
) -> Result<Matrix> {
    let n = sigma.nrows();
    let c = usize::from(include_constant);
    if b.shape() != (n * lags + c, n) {
        return Err(Error::DimensionMismatch(format!(
            "coefficients {}x{} do not fit {n} variables and {lags} lags",
            b.nrows(),
            b.ncols()
        )));
    }
    let l = linalg::cholesky(sigma)?;
    let total = t + burn + lags;
    let mut y = Matrix::zeros(total, n);
    for s in lags..total {
        let e = &l * rng.normal_matrix(n, 1);
        for i in 0..n {
            let mut v = if include_constant { b[(0, i)] } else { 0.0 };
            for j in 1..=lags {
                for m in 0..n {
                    v += b[(c + (j - 1) * n + m, i)] * y[(s - j, m)];
                }
            }
            y[(s, i)] = v + e[(i, 0)];
        }
    }
    Ok(y.rows(burn + lags, t).into_owned())
}

/// One independent simulation per country from common coefficients.
#[allow(clippy::too_many_arguments)]
pub fn simulate_panel_var(
    b: &Matrix,
    sigma: &Matrix,
    lags: usize,
    include_constant: bool,
    countries: usize,
    t: usize,
    burn: usize,
    rng: &mut RngStream,
) -> Result<Vec<Matrix>> {
    (0..countries)
        .map(|_| simulate_var(b, sigma, lags, include_constant, t, burn, rng))
        .collect()
}

/// Wrap simulated blocks (first column the shock, shared) as a macro panel.
/// The shock of the first block is used for every country.
pub fn blocks_to_panel(blocks: &[Matrix], names: &[String], start: Month) -> Result<MacroPanel> {
    let first = blocks
        .first()
        .ok_or(Error::EmptyInput("simulated blocks"))?;
    if names.len() != first.ncols() || names.len() < 2 {
        return Err(Error::DimensionMismatch(
            "one name per simulated column, shock first".into(),
        ));
    }
    let countries = (0..blocks.len()).map(|c| format!("C{}", c + 1)).collect();
    let values = blocks
        .iter()
        .map(|b| {
            (1..b.ncols())
                .map(|i| b.column(i).iter().copied().collect())
                .collect()
        })
        .collect();
    MacroPanel::new(
        countries,
        names[1..].to_vec(),
        start,
        values,
        names[0].clone(),
        first.column(0).iter().copied().collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirmSimSpec {
    pub firms: usize,
    pub sectors: usize,
    pub start: Quarter,
    pub quarters: usize,
    /// Planted coefficient on standardized lagged leverage × shock.
    pub beta: f64,
    pub noise_sd: f64,
    pub shock_sd: f64,
    /// Per-quarter probability that a firm leaves the panel for good.
    pub exit_probability: f64,
}

impl Default for FirmSimSpec {
    fn default() -> Self {
        Self {
            firms: 60,
            sectors: 4,
            start: Quarter::new(2005, 1),
            quarters: 24,
            beta: -0.4,
            noise_sd: 0.05,
            shock_sd: 0.25,
            exit_probability: 0.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticFirms {
    pub panel: FirmPanel,
    /// Quarterly shock over the simulated quarters.
    pub shock: PeriodSeries,
}

/// Firm panel whose capital growth follows
/// `Δlog k_{i,t} = α_i + α_{s,t} + β z_{i,t−1} ε_t + σ u_{i,t}`, where `z` is
/// lagged leverage standardized with the firm's own mean and sd exactly as the
/// ingest step computes it.
pub fn synthetic_firm_panel(spec: &FirmSimSpec, rng: &mut RngStream) -> Result<SyntheticFirms> {
    if spec.firms == 0 || spec.sectors == 0 || spec.quarters < 4 {
        return Err(Error::InvalidSpec(
            "need firms, sectors and at least four quarters".into(),
        ));
    }
    let t = spec.quarters;
    let shock: Vec<f64> = (0..t)
        .map(|_| spec.shock_sd * rng.standard_normal())
        .collect();
    let sector_effects: Vec<Vec<f64>> = (0..spec.sectors)
        .map(|_| (0..t).map(|_| 0.02 * rng.standard_normal()).collect())
        .collect();
    let mut records = Vec::with_capacity(spec.firms * t);
    for f in 0..spec.firms {
        let firm_id = format!("F{:04}", f + 1);
        let sector = f % spec.sectors;
        let firm_effect = 0.01 * rng.standard_normal();
        let base_leverage = 0.3 + 0.3 * rng.uniform();
        let mut life = t;
        for q in 2..t {
            if rng.uniform() < spec.exit_probability {
                life = q;
                break;
            }
        }
        let assets: Vec<f64> = (0..life).map(|_| 50.0 + 100.0 * rng.uniform()).collect();
        let liab: Vec<f64> = (0..life)
            .map(|q| (base_leverage + 0.1 * rng.standard_normal()) * assets[q])
            .collect();
        let leverage: Vec<f64> = liab.iter().zip(&assets).map(|(l, a)| l / a).collect();
        let mean = linalg::mean(&leverage);
        let sd = linalg::sample_sd(&leverage);
        let mut log_k = (10.0 + 40.0 * rng.uniform()).ln();
        for q in 0..life {
            if q > 0 {
                let z = (leverage[q - 1] - mean) / sd;
                log_k += firm_effect
                    + sector_effects[sector][q]
                    + spec.beta * z * shock[q]
                    + spec.noise_sd * rng.standard_normal();
            }
            let fc = 0.2 * assets[q] * rng.uniform();
            records.push(FirmRecord {
                firm_id: firm_id.clone(),
                sector: format!("S{}", sector + 1),
                quarter: spec.start.offset(q as i32),
                capital: Some(log_k.exp()),
                assets: Some(assets[q]),
                liab_total: Some(liab[q]),
                liab_short: Some(0.4 * liab[q]),
                liab_long: Some(0.6 * liab[q]),
                liab_bank: Some(0.5 * liab[q]),
                fc_liab: Some(fc),
                fc_assets: Some(0.1 * assets[q] * rng.uniform()),
            });
        }
    }
    Ok(SyntheticFirms {
        panel: FirmPanel::new(records)?,
        shock: PeriodSeries {
            frequency: Frequency::Quarter,
            start: spec.start.index(),
            values: shock,
        },
    })
}
