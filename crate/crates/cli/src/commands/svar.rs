use std::fmt::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spillover_core::bvar::{write_checkpoint, PosteriorDraws, VarSpec};
use spillover_core::format::num;
use spillover_core::ingest::{load_macro_panel, MacroSchema};
use spillover_core::irf::{run_svar, share_decomposition_run, subsample_compare, IrfSpec};
use spillover_core::RngStream;

use super::{config_dir, Artifacts};
use crate::config::{self, CliError, CliResult};
use crate::RunArgs;

/// Every field is filled from the command defaults before deserializing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvarConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Long-format `country,date,variable,value` CSV.
    pub macro_panel: PathBuf,
    /// Write every retained draw to `posterior_draws.csv`.
    pub write_checkpoint: bool,
    pub schema: MacroSchema,
    /// Defaults to the shock followed by the schema variables.
    pub var: VarSpec,
    /// The target defaults to the shock variable.
    pub irf: IrfSpec,
    pub subsamples: Option<Subsamples>,
    /// Re-estimate with these expenditure shares swapped in for output.
    pub shares: Option<Shares>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Subsamples {
    pub first: Vec<String>,
    pub second: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shares {
    pub variables: Vec<String>,
    /// System variable dropped in favour of the shares, usually output.
    pub replaces: Option<String>,
}

impl SvarConfig {
    pub fn defaults(country: bool) -> Self {
        Self {
            seed: 1,
            out_dir: None,
            macro_panel: PathBuf::new(),
            write_checkpoint: false,
            schema: MacroSchema::default(),
            var: if country {
                VarSpec::country(Vec::new())
            } else {
                VarSpec::panel(Vec::new())
            },
            irf: IrfSpec::default(),
            subsamples: None,
            shares: None,
        }
    }
}

fn resolve(args: &RunArgs, country: bool) -> CliResult<SvarConfig> {
    let mut cfg = config::load(args.config.as_deref(), &SvarConfig::defaults(country))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.macro_panel =
        config::input_path(&cfg.macro_panel, config_dir(args).as_deref(), "macro panel")?;
    if cfg.schema.shock_variable.is_empty() || cfg.schema.variables.is_empty() {
        return Err(CliError::config(
            "InvalidConfig",
            "[schema] needs `shock_variable` and at least one entry in `variables`",
        ));
    }
    if cfg.var.variables.is_empty() {
        cfg.var.variables = std::iter::once(cfg.schema.shock_variable.clone())
            .chain(cfg.schema.variables.iter().cloned())
            .collect();
    }
    if cfg.irf.target_variable.is_empty() {
        cfg.irf.target_variable = cfg.var.variables[0].clone();
    }
    Ok(cfg)
}

pub fn run(args: &RunArgs, country: bool, started: Instant) -> CliResult<()> {
    let cfg = resolve(args, country)?;
    let mut panel = load_macro_panel(&cfg.macro_panel, &cfg.schema)?;
    if country && panel.countries.len() != 1 {
        return Err(CliError::config(
            "InvalidConfig",
            format!(
                "svar-country needs exactly one country, the panel has {}; set [schema] countries",
                panel.countries.len()
            ),
        ));
    }
    if !country && panel.countries.len() < 2 {
        return Err(CliError::config(
            "InvalidConfig",
            "svar-panel needs at least two countries",
        ));
    }
    let mut art = Artifacts::create(args, cfg.out_dir.as_deref())?;
    art.notes.append(&mut panel.coverage_gaps);

    let (draws, irf) = run_svar(&panel, &cfg.var, &cfg.irf, &mut RngStream::new(cfg.seed))?;
    irf.write_csv(&art.file("irf.csv"))?;
    art.write("irf.svg", &irf.to_svg())?;
    art.write("posterior_summary.csv", &posterior_summary(&draws))?;
    if cfg.write_checkpoint {
        write_checkpoint(&draws, &art.file("posterior_draws.csv"))?;
    }
    art.notes.push(format!("retained draws: {}", draws.len()));
    art.notes.push(format!(
        "dropped draws (degenerate normalization): {}",
        irf.dropped
    ));
    art.notes
        .push(format!("explosive draws: {}", irf.explosive));
    art.notes.push(format!(
        "max split-half divergence: {}",
        num(draws.diagnostics.max_split_divergence)
    ));
    art.notes.extend(draws.diagnostics.warnings.iter().cloned());

    if let Some(split) = &cfg.subsamples {
        let (a, b) = subsample_compare(
            &panel,
            (&split.first, &split.second),
            &cfg.var,
            &cfg.irf,
            cfg.seed.wrapping_add(100),
        )?;
        a.write_csv(&art.file("irf_first.csv"))?;
        b.write_csv(&art.file("irf_second.csv"))?;
        art.write("irf_first.svg", &a.to_svg())?;
        art.write("irf_second.svg", &b.to_svg())?;
    }
    if let Some(shares) = &cfg.shares {
        let mut spec = cfg.var.clone();
        spec.variables
            .retain(|v| !shares.variables.contains(v) && Some(v) != shares.replaces.as_ref());
        spec.variables.extend(shares.variables.iter().cloned());
        let irf = share_decomposition_run(
            &panel,
            &spec,
            &cfg.irf,
            &shares.variables,
            &mut RngStream::new(cfg.seed.wrapping_add(200)),
        )?;
        irf.write_csv(&art.file("irf_shares.csv"))?;
        art.write("irf_shares.svg", &irf.to_svg())?;
    }

    let command = if country {
        "svar-country"
    } else {
        "svar-panel"
    };
    art.finish(command, cfg.seed, &cfg, started)
}

/// `equation,regressor,mean,sd` over the retained draws.
fn posterior_summary(draws: &PosteriorDraws) -> String {
    let spec = &draws.spec;
    let mut regressors = Vec::new();
    if spec.include_constant {
        regressors.push("const".to_string());
    }
    for lag in 1..=spec.lags {
        regressors.extend(spec.variables.iter().map(|v| format!("{v}_l{lag}")));
    }
    let (mean, sd) = (draws.coefficient_mean(), draws.coefficient_sd());
    let mut out = String::from("equation,regressor,mean,sd\n");
    for (eq, name) in spec.variables.iter().enumerate() {
        for (r, reg) in regressors.iter().enumerate() {
            let _ = writeln!(
                out,
                "{name},{reg},{},{}",
                num(mean[(r, eq)]),
                num(sd[(r, eq)])
            );
        }
    }
    out
}
