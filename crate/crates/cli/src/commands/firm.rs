use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spillover_core::firmreg::{
    estimate_spec, format_table, local_projection, table_columns, write_results_csv,
    RegressionData, RegressionResult, RegressionSpec, TableLayout,
};
use spillover_core::format::num;
use spillover_core::ingest::shocks::surprises;
use spillover_core::ingest::{
    aggregate_shocks, aggregators, build_firm_regressors, load_aggregate_controls, load_firm_panel,
    load_shock_events, standardize_leverage, winsorize_growth, FffConvention, Frequency,
    LeverageDef, PeriodSeries,
};
use spillover_core::plot::{render_grid, Band, Line, Panel};

use super::{config_dir, Artifacts};
use crate::config::{self, CliError, CliResult};
use crate::RunArgs;

/// Two-sided 90% normal band half-width in standard errors.
const BAND_Z: f64 = 1.645;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirmConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// `firm-reg` only: `single`, `baseline` (four columns) or `alternative`.
    pub layout: Layout,
    /// `firm-lp` only: horizons `0..=max_horizon`.
    pub max_horizon: usize,
    pub input: FirmInput,
    pub shock: ShockInput,
    pub regression: RegressionSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Single,
    Baseline,
    Alternative,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirmInput {
    pub firm_panel: PathBuf,
    /// `quarter,<series…>` aggregate controls.
    pub aggregates: Option<PathBuf>,
    pub leverage: LeverageDef,
    /// Percentile bounds for clamping capital growth, e.g. `[0.01, 0.99]`.
    pub winsorize: Option<[f64; 2]>,
}

/// Either a quarterly series file or announcement-window quotes to aggregate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockInput {
    /// `quarter,<series…>`; the shock is `column` (default the first series).
    pub series: Option<PathBuf>,
    pub column: Option<String>,
    /// `timestamp,value_before,value_after` quotes.
    pub events: Option<PathBuf>,
    pub convention: FffConvention,
    /// Registered aggregator; quarterly default `mean`.
    pub aggregator: Option<String>,
}

impl Default for FirmConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            layout: Layout::Baseline,
            max_horizon: 8,
            input: FirmInput::default(),
            shock: ShockInput::default(),
            regression: RegressionSpec::default(),
        }
    }
}

impl FirmConfig {
    /// Projections cluster by firm only; tables cluster by firm and time.
    fn defaults(projection: bool) -> Self {
        let mut cfg = Self::default();
        if projection {
            cfg.regression.clustering = "firm".into();
        }
        cfg
    }
}

fn resolve(args: &RunArgs, projection: bool) -> CliResult<FirmConfig> {
    let mut cfg = config::load(args.config.as_deref(), &FirmConfig::defaults(projection))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let base = config_dir(args);
    let base = base.as_deref();
    cfg.input.firm_panel = config::input_path(&cfg.input.firm_panel, base, "firm panel")?;
    cfg.input.aggregates =
        config::optional_input(&cfg.input.aggregates, base, "aggregate controls")?;
    cfg.shock.series = config::optional_input(&cfg.shock.series, base, "shock series")?;
    cfg.shock.events = config::optional_input(&cfg.shock.events, base, "shock events")?;
    if cfg.shock.series.is_some() == cfg.shock.events.is_some() {
        return Err(CliError::config(
            "InvalidConfig",
            "[shock] needs exactly one of `series` or `events`",
        ));
    }
    Ok(cfg)
}

fn load_shock(cfg: &ShockInput, first: i32, last: i32) -> CliResult<PeriodSeries> {
    if let Some(path) = &cfg.series {
        let table = load_aggregate_controls(path)?;
        let column = match &cfg.column {
            Some(c) => table.names.iter().position(|n| n == c).ok_or_else(|| {
                CliError::config(
                    "InvalidConfig",
                    format!("shock column `{c}` not in {}", path.display()),
                )
            })?,
            None => 0,
        };
        return Ok(PeriodSeries {
            frequency: Frequency::Quarter,
            start: table.start.index(),
            values: table.values[column].clone(),
        });
    }
    let path = cfg.events.as_ref().expect("validated");
    let dated = surprises(&load_shock_events(path)?, cfg.convention)?;
    let name = cfg
        .aggregator
        .clone()
        .unwrap_or_else(|| Frequency::Quarter.default_aggregator().to_string());
    let method = aggregators().build(&name, &())?;
    Ok(aggregate_shocks(
        &dated,
        Frequency::Quarter,
        method.as_ref(),
        first,
        last,
    ))
}

pub fn run(args: &RunArgs, projection: bool, started: Instant) -> CliResult<()> {
    let cfg = resolve(args, projection)?;
    let raw = load_firm_panel(&cfg.input.firm_panel)?;
    let horizons = if projection {
        cfg.max_horizon
    } else {
        cfg.regression.horizon
    };
    let mut panel =
        standardize_leverage(&build_firm_regressors(&raw, cfg.input.leverage, horizons))?;
    if let Some([lo, hi]) = cfg.input.winsorize {
        panel = winsorize_growth(&panel, lo, hi)?;
    }
    let first = panel
        .records
        .iter()
        .map(|r| r.quarter.index())
        .min()
        .unwrap_or(0);
    let last = panel
        .records
        .iter()
        .map(|r| r.quarter.index())
        .max()
        .unwrap_or(0);
    let shock = load_shock(&cfg.shock, first, last)?;
    let aggregates = cfg
        .input
        .aggregates
        .as_deref()
        .map(load_aggregate_controls)
        .transpose()?;
    let data = RegressionData {
        panel: &panel,
        shock: &shock,
        aggregates: aggregates.as_ref(),
    };

    let mut art = Artifacts::create(args, cfg.out_dir.as_deref())?;
    let command = if projection {
        let results = local_projection(&data, &cfg.regression, cfg.max_horizon)?;
        write_results_csv(&results, &art.file("lp.csv"))?;
        art.write("lp.svg", &projection_svg(&cfg.regression, &results))?;
        collect_warnings(&mut art, &results);
        "firm-lp"
    } else {
        let specs = match cfg.layout {
            Layout::Single => vec![cfg.regression.clone()],
            Layout::Baseline => table_columns(&cfg.regression, TableLayout::Baseline),
            Layout::Alternative => table_columns(&cfg.regression, TableLayout::Alternative),
        };
        let results = specs
            .iter()
            .map(|s| estimate_spec(&data, s))
            .collect::<spillover_core::Result<Vec<_>>>()?;
        write_results_csv(&results, &art.file("results.csv"))?;
        let title = format!("Capital growth, horizon {}", cfg.regression.horizon);
        art.write("table.txt", &format_table(&title, &specs, &results))?;
        collect_warnings(&mut art, &results);
        "firm-reg"
    };
    art.finish(command, cfg.seed, &cfg, started)
}

fn collect_warnings(art: &mut Artifacts, results: &[RegressionResult]) {
    for r in results {
        for w in &r.warnings {
            art.notes
                .push(format!("{} h={}: {w}", r.spec_id, r.horizon));
        }
        if r.vcov_floored {
            art.notes.push(format!(
                "{} h={}: two-way variance floored",
                r.spec_id, r.horizon
            ));
        }
        art.notes.push(format!(
            "{} h={}: n_obs={} singletons_dropped={} r2={}",
            r.spec_id,
            r.horizon,
            r.n_obs,
            r.singletons_dropped,
            num(r.r2)
        ));
    }
}

fn projection_svg(spec: &RegressionSpec, results: &[RegressionResult]) -> String {
    let name = spec.interaction_name();
    let coef: Vec<_> = results
        .iter()
        .map(|r| r.coefficient(name).cloned())
        .collect();
    let est = |f: fn(f64, f64) -> f64| -> Vec<f64> {
        coef.iter()
            .map(|c| c.as_ref().map_or(f64::NAN, |c| f(c.estimate, c.se)))
            .collect()
    };
    let panel = Panel {
        title: format!("{name} by horizon"),
        x: results.iter().map(|r| r.horizon as f64).collect(),
        bands: vec![Band {
            lower: est(|b, se| b - BAND_Z * se),
            upper: est(|b, se| b + BAND_Z * se),
            fill: "#c6d9ec",
        }],
        lines: vec![Line {
            y: est(|b, _| b),
            color: "#1f5fa8",
            dashed: false,
        }],
        markers: Vec::new(),
        zero_line: true,
    };
    render_grid(&[panel], 1)
}
