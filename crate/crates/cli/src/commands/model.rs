use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use spillover_core::format::num;
use spillover_core::model::{
    curves_svg, sweep, verify_propositions, Axis, Curve, EntrepreneurParams, DEFAULT_STEP,
};

use super::Artifacts;
use crate::config::{self, CliError, CliResult};
use crate::{fail, RunArgs};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub params: EntrepreneurParams,
    pub sweeps: Vec<SweepDef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepDef {
    pub name: String,
    pub axis: Axis,
    pub grid: Grid,
    /// One curve per variant, each overriding some of `params`.
    pub variants: Vec<Variant>,
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    fn values(&self) -> Vec<f64> {
        if self.points < 2 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| self.start + step * i as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub label: String,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

fn variant(label: &str, key: &str, value: f64) -> Variant {
    Variant {
        label: label.into(),
        overrides: BTreeMap::from([(key.to_string(), value)]),
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            params: EntrepreneurParams::default(),
            sweeps: vec![
                SweepDef {
                    name: "rate".into(),
                    axis: Axis::R1,
                    grid: Grid {
                        start: 1.0,
                        stop: 1.2,
                        points: 81,
                    },
                    variants: vec![
                        variant("low-debt", "b0", 0.1),
                        variant("high-debt", "b0", 0.4),
                    ],
                },
                SweepDef {
                    name: "debt".into(),
                    axis: Axis::B0,
                    grid: Grid {
                        start: -0.2,
                        stop: 0.8,
                        points: 101,
                    },
                    variants: vec![
                        variant("loose", "theta", 0.5),
                        variant("tight", "theta", 0.3),
                    ],
                },
            ],
        }
    }
}

fn apply_overrides(
    base: &EntrepreneurParams,
    overrides: &BTreeMap<String, f64>,
) -> CliResult<EntrepreneurParams> {
    let mut table = toml::Table::try_from(base).expect("parameters serialize");
    for (k, v) in overrides {
        table.insert(k.clone(), toml::Value::Float(*v));
    }
    EntrepreneurParams::deserialize(table)
        .map_err(|e| CliError::config("InvalidConfig", format!("bad parameter override: {e}")))
}

pub fn run_sweep(args: &RunArgs, started: Instant) -> CliResult<()> {
    let mut cfg: SweepConfig = config::load(args.config.as_deref(), &SweepConfig::default())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.params
        .validate()
        .map_err(|e| CliError::config("InvalidConfig", e.to_string()))?;
    let mut art = Artifacts::create(args, cfg.out_dir.as_deref())?;
    let mut kinks = String::from("sweep,variant,kink,flags\n");
    for def in &cfg.sweeps {
        let grid = def.grid.values();
        let mut curves: Vec<Curve> = Vec::new();
        for v in &def.variants {
            let params = apply_overrides(&cfg.params, &v.overrides)?;
            let curve = sweep(&params, def.axis, &grid)?;
            curve.write_csv(&art.file(&format!("sweep_{}_{}.csv", def.name, v.label)))?;
            let _ = writeln!(
                kinks,
                "{},{},{},{}",
                def.name,
                v.label,
                curve.kink.map(num).unwrap_or_default(),
                curve.flags.join("; ")
            );
            curves.push(curve);
        }
        let refs: Vec<&Curve> = curves.iter().collect();
        let title = format!("k1 against {}", def.axis.label());
        art.write(
            &format!("sweep_{}.svg", def.name),
            &curves_svg(&title, &refs),
        )?;
    }
    art.write("kinks.csv", &kinks)?;
    art.finish("model-sweep", cfg.seed, &cfg, started)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropsConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Shared parameters; `b0` is replaced by the two values below.
    pub params: EntrepreneurParams,
    pub b0_unconstrained: f64,
    pub b0_constrained: f64,
    /// Relative central-difference step.
    pub step: f64,
}

impl Default for PropsConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            params: EntrepreneurParams::default(),
            b0_unconstrained: 0.2,
            b0_constrained: 0.5,
            step: DEFAULT_STEP,
        }
    }
}

pub fn run_props(args: &RunArgs, started: Instant) -> CliResult<()> {
    let mut cfg: PropsConfig = config::load(args.config.as_deref(), &PropsConfig::default())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let a = EntrepreneurParams {
        b0: cfg.b0_unconstrained,
        ..cfg.params
    };
    let b = EntrepreneurParams {
        b0: cfg.b0_constrained,
        ..cfg.params
    };
    let report = verify_propositions((&a, &b), cfg.step)?;
    let mut art = Artifacts::create(args, cfg.out_dir.as_deref())?;
    art.write("propositions.txt", &format!("{report}\n"))?;
    let rows = [
        ("dk_dr_unconstrained", report.dk_dr_unconstrained),
        ("dk_dr_constrained", report.dk_dr_constrained),
        ("dk_dr_closed_form", report.dk_dr_closed_form),
        ("closed_form_rel_error", report.closed_form_rel_error),
        ("dk_dtheta_constrained", report.dk_dtheta_constrained),
    ];
    let mut csv = String::from("quantity,value\n");
    for (k, v) in rows {
        let _ = writeln!(csv, "{k},{}", num(v));
    }
    art.write("propositions.csv", &csv)?;
    println!("{report}");
    let holds = report.holds();
    art.finish("verify-props", cfg.seed, &cfg, started)?;
    if holds {
        Ok(())
    } else {
        Err(fail(
            "PropositionFailed",
            "at least one proposition check failed; see propositions.txt",
        ))
    }
}
