use std::fmt::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spillover_core::format::num;
use spillover_core::ingest::{Month, Quarter};
use spillover_core::simulate::{
    blocks_to_panel, simulate_panel_var, synthetic_firm_panel, FirmSimSpec,
};
use spillover_core::{Matrix, RngStream};

use super::Artifacts;
use crate::config::{self, CliError, CliResult};
use crate::RunArgs;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub macro_panel: MacroSim,
    pub firms: FirmSimSpec,
}

/// VAR(1) with a white-noise shock ordered first: own persistence on the
/// diagonal and a one-lag response of every other variable to the shock.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSim {
    pub countries: usize,
    pub months: usize,
    pub start: Month,
    pub variables: Vec<String>,
    pub persistence: f64,
    pub shock_loading: f64,
    pub noise_sd: f64,
}

impl Default for MacroSim {
    fn default() -> Self {
        Self {
            countries: 3,
            months: 120,
            start: Month::new(2004, 1),
            variables: vec!["shock".into(), "rate".into(), "output".into()],
            persistence: 0.6,
            shock_loading: 0.4,
            noise_sd: 1.0,
        }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            macro_panel: MacroSim::default(),
            firms: FirmSimSpec::default(),
        }
    }
}

pub fn run(args: &RunArgs, started: Instant) -> CliResult<()> {
    let mut cfg: SimulateConfig = config::load(args.config.as_deref(), &SimulateConfig::default())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let m = &cfg.macro_panel;
    let n = m.variables.len();
    if n < 2 || m.countries == 0 || !(m.persistence.abs() < 1.0) {
        return Err(CliError::config(
            "InvalidConfig",
            "[macro_panel] needs two or more variables, one or more countries and |persistence| < 1",
        ));
    }
    let mut b = Matrix::zeros(n + 1, n);
    for i in 1..n {
        b[(1 + i, i)] = m.persistence;
        b[(1, i)] = m.shock_loading;
    }
    let sigma = Matrix::identity(n, n) * (m.noise_sd * m.noise_sd);
    let mut rng = RngStream::new(cfg.seed);
    let blocks = simulate_panel_var(&b, &sigma, 1, true, m.countries, m.months, 100, &mut rng)?;
    let panel = blocks_to_panel(&blocks, &m.variables, m.start)?;

    let mut art = Artifacts::create(args, cfg.out_dir.as_deref())?;
    panel.write_csv(&art.file("macro_panel.csv"))?;
    let firms = synthetic_firm_panel(&cfg.firms, &mut rng.fork())?;
    firms.panel.write_csv(&art.file("firm_panel.csv"))?;
    let mut shock = String::from("quarter,shock\n");
    for (i, v) in firms.shock.values.iter().enumerate() {
        let _ = writeln!(
            shock,
            "{},{}",
            Quarter::from_index(firms.shock.start + i as i32),
            num(*v)
        );
    }
    art.write("shock.csv", &shock)?;
    art.finish("simulate", cfg.seed, &cfg, started)
}
