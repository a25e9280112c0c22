//! Firm-panel regressions of capital growth on leverage × shock interactions
//! with absorbed fixed effects and clustered standard errors.

mod absorb;
mod report;
mod vcov;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ingest::{AggregateControls, FirmPanel, Frequency, PeriodSeries};
use crate::linalg::{self, Matrix};

pub use absorb::{absorb_fixed_effects, drop_singletons, Absorbed, Grouping, ABSORB_TOL};
pub use report::{format_table, table_columns, write_results_csv, TableLayout};
pub use vcov::{clustered_vcov, vcov_estimators, ClusterLabels, Vcov, VcovEstimator};

/// Scaled-Gram pivot below which the design counts as rank deficient.
pub const RANK_TOL: f64 = 1e-10;
/// Absorbed-to-original norm ratio below which a regressor has no variation left.
pub const VARIATION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Interaction {
    /// Standardized lagged leverage × shock.
    #[default]
    Standardized,
    /// `1[z > threshold]` × shock.
    Indicator { threshold: f64 },
}

/// Second fixed-effect dimension; the firm effect is always included.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedEffects {
    #[default]
    SectorTime,
    /// Sector × calendar quarter of year.
    SectorSeason,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Control {
    LaggedLeverage,
    LaggedAssetGrowth,
    LaggedMismatch,
    LaggedInvestment,
}

impl Control {
    pub fn name(self) -> &'static str {
        match self {
            Control::LaggedLeverage => "lagged_leverage",
            Control::LaggedAssetGrowth => "lagged_asset_growth",
            Control::LaggedMismatch => "lagged_mismatch",
            Control::LaggedInvestment => "lagged_investment",
        }
    }

    fn column(self, panel: &FirmPanel) -> &[Option<f64>] {
        let d = &panel.derived;
        match self {
            Control::LaggedLeverage => &d.lagged_leverage,
            Control::LaggedAssetGrowth => &d.lagged_asset_growth,
            Control::LaggedMismatch => &d.lagged_mismatch,
            Control::LaggedInvestment => &d.lagged_investment,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSpec {
    pub id: String,
    /// Dependent variable `log k_{t+h} − log k_{t−1}`.
    pub horizon: usize,
    pub interaction: Interaction,
    /// Include the shock level γ (needs sector-season effects).
    pub include_level_shock: bool,
    pub fixed_effects: FixedEffects,
    pub controls: Vec<Control>,
    /// Lags of the aggregate series (needs sector-season effects).
    pub aggregate_controls: bool,
    pub aggregate_lags: usize,
    /// Registered covariance estimator: `firm`, `time`, `firm-time` or `robust`.
    pub clustering: String,
}

impl Default for RegressionSpec {
    fn default() -> Self {
        Self {
            id: "baseline".into(),
            horizon: 0,
            interaction: Interaction::Standardized,
            include_level_shock: false,
            fixed_effects: FixedEffects::SectorTime,
            controls: Vec::new(),
            aggregate_controls: false,
            aggregate_lags: 4,
            clustering: "firm-time".into(),
        }
    }
}

impl RegressionSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fixed_effects == FixedEffects::SectorTime
            && (self.include_level_shock || self.aggregate_controls)
        {
            return Err(Error::InvalidSpec(
                "the shock level and aggregate controls are absorbed by sector-time effects; use sector-season".into(),
            ));
        }
        if self.aggregate_controls && self.aggregate_lags == 0 {
            return Err(Error::InvalidSpec(
                "aggregate controls need at least one lag".into(),
            ));
        }
        if let Interaction::Indicator { threshold } = self.interaction {
            if !threshold.is_finite() {
                return Err(Error::InvalidSpec(
                    "indicator threshold must be finite".into(),
                ));
            }
        }
        for (i, c) in self.controls.iter().enumerate() {
            if self.controls[..i].contains(c) {
                return Err(Error::InvalidSpec(format!(
                    "control `{}` listed twice",
                    c.name()
                )));
            }
        }
        vcov_estimators().build(&self.clustering, &())?;
        Ok(())
    }

    pub fn interaction_name(&self) -> &'static str {
        match self.interaction {
            Interaction::Standardized => "leverage_x_shock",
            Interaction::Indicator { .. } => "indicator_x_shock",
        }
    }
}

/// Inputs shared by every regression on one panel.
#[derive(Clone, Copy, Debug)]
pub struct RegressionData<'a> {
    /// Panel with regressors built and leverage standardized.
    pub panel: &'a FirmPanel,
    /// Quarterly shock.
    pub shock: &'a PeriodSeries,
    pub aggregates: Option<&'a AggregateControls>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub p_value: f64,
}

impl Coefficient {
    pub fn stars(&self) -> &'static str {
        stars(self.p_value)
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegressionResult {
    pub spec_id: String,
    pub horizon: usize,
    pub coefficients: Vec<Coefficient>,
    pub n_obs: usize,
    /// Within (absorbed) R².
    pub r2: f64,
    pub singletons_dropped: usize,
    pub absorption_iterations: usize,
    pub clusters: Vec<usize>,
    pub vcov_floored: bool,
    pub warnings: Vec<String>,
}

impl RegressionResult {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }
}

/// Rows and raw columns entering one regression.
struct Sample {
    rows: Vec<usize>,
    y: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn assemble(data: &RegressionData, spec: &RegressionSpec) -> Result<Sample> {
    let panel = data.panel;
    let d = &panel.derived;
    if data.shock.frequency != Frequency::Quarter {
        return Err(Error::InvalidSpec(
            "firm regressions need a quarterly shock".into(),
        ));
    }
    if d.lagged_leverage_z.len() != panel.len() {
        return Err(Error::InvalidSpec(
            "panel leverage has not been standardized".into(),
        ));
    }
    let growth = d.growth.get(spec.horizon).ok_or_else(|| {
        Error::InvalidSpec(format!(
            "horizon {} not built (panel has {} growth horizons)",
            spec.horizon,
            panel.horizons()
        ))
    })?;
    let aggregates = match (spec.aggregate_controls, data.aggregates) {
        (true, None) => {
            return Err(Error::InvalidSpec(
                "aggregate controls requested but not supplied".into(),
            ))
        }
        (true, Some(a)) => Some(a),
        (false, _) => None,
    };

    let mut names = vec![spec.interaction_name().to_string()];
    if spec.include_level_shock {
        names.push("shock".into());
    }
    names.extend(spec.controls.iter().map(|c| c.name().to_string()));
    if let Some(a) = aggregates {
        names.extend(a.lagged_names(spec.aggregate_lags));
    }
    let mut sample = Sample {
        rows: Vec::new(),
        y: Vec::new(),
        columns: vec![Vec::new(); names.len()],
        names,
    };
    for (i, record) in panel.records.iter().enumerate() {
        let row = (|| {
            let y = growth[i]?;
            let z = d.lagged_leverage_z[i]?;
            let eps = data.shock.at_quarter(record.quarter)?;
            let mut values = vec![match spec.interaction {
                Interaction::Standardized => z * eps,
                Interaction::Indicator { threshold } => f64::from(u8::from(z > threshold)) * eps,
            }];
            if spec.include_level_shock {
                values.push(eps);
            }
            for c in &spec.controls {
                values.push(c.column(panel)[i]?);
            }
            if let Some(a) = aggregates {
                values.extend(a.lagged(record.quarter, spec.aggregate_lags)?);
            }
            Some((y, values))
        })();
        if let Some((y, values)) = row {
            sample.rows.push(i);
            sample.y.push(y);
            for (col, v) in sample.columns.iter_mut().zip(values) {
                col.push(v);
            }
        }
    }
    Ok(sample)
}

fn subset<T: Copy>(v: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&r| v[r]).collect()
}

/// OLS of the absorbed data with a unit-diagonal Cholesky rank check.
fn ols(x: &Matrix, y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let xtx = x.transpose() * x;
    let k = xtx.nrows();
    let scale: Vec<f64> = (0..k).map(|j| xtx[(j, j)].sqrt()).collect();
    if scale.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::RankDeficient(
            "a regressor is identically zero".into(),
        ));
    }
    let scaled = Matrix::from_fn(k, k, |i, j| xtx[(i, j)] / (scale[i] * scale[j]));
    let l = linalg::cholesky(&scaled)
        .map_err(|_| Error::RankDeficient("regressors are collinear".into()))?;
    if (0..k).any(|j| l[(j, j)] * l[(j, j)] < RANK_TOL) {
        return Err(Error::RankDeficient("regressors are collinear".into()));
    }
    let yv = Matrix::from_column_slice(y.len(), 1, y);
    let beta = linalg::spd_solve(&xtx, &(x.transpose() * &yv))?;
    let resid = (&yv - x * &beta).iter().copied().collect();
    Ok((beta.iter().copied().collect(), resid))
}

pub fn estimate_spec(data: &RegressionData, spec: &RegressionSpec) -> Result<RegressionResult> {
    spec.validate()?;
    let sample = assemble(data, spec)?;
    for (name, col) in sample.names.iter().zip(&sample.columns) {
        if col.iter().all(|v| *v == 0.0) {
            return Err(Error::RankDeficient(format!(
                "regressor `{name}` is identically zero"
            )));
        }
    }
    let records = &data.panel.records;
    let firm = Grouping::from_labels(
        &sample
            .rows
            .iter()
            .map(|&i| records[i].firm_id.as_str())
            .collect::<Vec<_>>(),
    );
    let cell = Grouping::from_labels(
        &sample
            .rows
            .iter()
            .map(|&i| {
                let r = &records[i];
                let period = match spec.fixed_effects {
                    FixedEffects::SectorTime => r.quarter.index(),
                    FixedEffects::SectorSeason => r.quarter.q() as i32,
                };
                (r.sector.as_str(), period)
            })
            .collect::<Vec<_>>(),
    );
    let keep = drop_singletons(&[firm.clone(), cell.clone()]);
    let k = sample.names.len();
    if keep.len() <= k {
        return Err(Error::InsufficientObservations {
            rows: keep.len(),
            needed: k,
        });
    }
    let sets = [firm.subset(&keep), cell.subset(&keep)];
    let mut raw = vec![subset(&sample.y, &keep)];
    raw.extend(sample.columns.iter().map(|c| subset(c, &keep)));
    let absorbed = absorb_fixed_effects(&raw, &sets)?;

    for (j, name) in sample.names.iter().enumerate() {
        let before = raw[j + 1].iter().map(|v| v * v).sum::<f64>().sqrt();
        let after = absorbed.columns[j + 1]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if before == 0.0 {
            return Err(Error::RankDeficient(format!(
                "regressor `{name}` is identically zero"
            )));
        }
        if after <= VARIATION_TOL * before {
            return Err(Error::NoVariationLeft {
                column: name.clone(),
            });
        }
    }
    let n = keep.len();
    let y = &absorbed.columns[0];
    let x = Matrix::from_fn(n, k, |i, j| absorbed.columns[j + 1][i]);
    let (beta, resid) = ols(&x, y)?;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let sst: f64 = y.iter().map(|v| v * v).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 0.0 };

    let rows: Vec<usize> = keep.iter().map(|&i| sample.rows[i]).collect();
    let labels = ClusterLabels {
        firm: sets[0].clone(),
        time: Grouping::from_labels(&rows.iter().map(|&i| records[i].quarter).collect::<Vec<_>>()),
    };
    let vcov = vcov_estimators()
        .build(&spec.clustering, &())?
        .estimate(&x, &resid, &labels)?;
    let df = (vcov.min_clusters() - 1) as f64;
    let t_dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let coefficients = sample
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let se = vcov.matrix[(j, j)].max(0.0).sqrt();
            let t = beta[j] / se;
            let p_value = if se > 0.0 {
                2.0 * (1.0 - t_dist.cdf(t.abs()))
            } else {
                f64::NAN
            };
            Coefficient {
                name: name.clone(),
                estimate: beta[j],
                se,
                p_value,
            }
        })
        .collect();
    Ok(RegressionResult {
        spec_id: spec.id.clone(),
        horizon: spec.horizon,
        coefficients,
        n_obs: n,
        r2,
        singletons_dropped: sample.rows.len() - n,
        absorption_iterations: absorbed.iterations,
        clusters: vcov.clusters,
        vcov_floored: vcov.floored,
        warnings: vcov.warnings,
    })
}

/// One regression per horizon `0..=max_horizon`, each through [`estimate_spec`].
pub fn local_projection(
    data: &RegressionData,
    spec: &RegressionSpec,
    max_horizon: usize,
) -> Result<Vec<RegressionResult>> {
    (0..=max_horizon)
        .into_par_iter()
        .map(|h| {
            estimate_spec(
                data,
                &RegressionSpec {
                    horizon: h,
                    ..spec.clone()
                },
            )
        })
        .collect()
}
