//! Result CSV and plain-text regression tables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Control, FixedEffects, RegressionResult, RegressionSpec};
use crate::error::Result;
use crate::format::num;

/// Four-column layouts with cumulative controls.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableLayout {
    /// Sector-time effects: none, + lagged investment, + lagged mismatch,
    /// + lagged leverage.
    #[default]
    Baseline,
    /// Sector-season effects with the shock level: none, + lagged investment,
    /// + firm controls, + aggregate controls.
    Alternative,
}

pub fn table_columns(base: &RegressionSpec, layout: TableLayout) -> Vec<RegressionSpec> {
    use Control::*;
    let (fe, level, steps): (FixedEffects, bool, [(Vec<Control>, bool); 4]) = match layout {
        TableLayout::Baseline => (
            FixedEffects::SectorTime,
            false,
            [
                (vec![], false),
                (vec![LaggedInvestment], false),
                (vec![LaggedInvestment, LaggedMismatch], false),
                (
                    vec![LaggedInvestment, LaggedMismatch, LaggedLeverage],
                    false,
                ),
            ],
        ),
        TableLayout::Alternative => {
            let firm = vec![
                LaggedInvestment,
                LaggedLeverage,
                LaggedAssetGrowth,
                LaggedMismatch,
            ];
            (
                FixedEffects::SectorSeason,
                true,
                [
                    (vec![], false),
                    (vec![LaggedInvestment], false),
                    (firm.clone(), false),
                    (firm, true),
                ],
            )
        }
    };
    steps
        .into_iter()
        .enumerate()
        .map(|(i, (controls, aggregate))| RegressionSpec {
            id: format!("{}-{}", base.id, i + 1),
            fixed_effects: fe,
            include_level_shock: level,
            controls,
            aggregate_controls: aggregate,
            ..base.clone()
        })
        .collect()
}

pub fn write_results_csv(results: &[RegressionResult], path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "spec_id,horizon,coef_name,estimate,se,stars,n_obs,r2")?;
    for r in results {
        for c in &r.coefficients {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.spec_id,
                r.horizon,
                c.name,
                num(c.estimate),
                num(c.se),
                c.stars(),
                r.n_obs,
                num(r.r2)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Side-by-side columns: headline coefficients with stars and SEs below,
/// then fixed-effect and control indicator rows, observations and R².
pub fn format_table(title: &str, specs: &[RegressionSpec], results: &[RegressionResult]) -> String {
    const LABEL: usize = 34;
    const CELL: usize = 13;
    let mut s = String::new();
    let rule = "=".repeat(LABEL + CELL * results.len());
    let _ = writeln!(s, "{title}");
    let _ = writeln!(s, "{rule}");
    let _ = write!(s, "{:LABEL$}", "");
    for i in 0..results.len() {
        let _ = write!(s, "{:>CELL$}", format!("({})", i + 1));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{}", "-".repeat(rule.len()));

    let mut headline: Vec<&str> = Vec::new();
    for spec in specs {
        for name in [spec.interaction_name(), "shock"] {
            if (name != "shock" || spec.include_level_shock) && !headline.contains(&name) {
                headline.push(name);
            }
        }
    }
    for name in headline {
        let _ = write!(s, "{name:LABEL$}");
        for r in results {
            let cell = r
                .coefficient(name)
                .map(|c| format!("{:.3}{}", c.estimate, c.stars()))
                .unwrap_or_default();
            let _ = write!(s, "{cell:>CELL$}");
        }
        let _ = writeln!(s);
        let _ = write!(s, "{:LABEL$}", "");
        for r in results {
            let cell = r
                .coefficient(name)
                .map(|c| format!("({:.3})", c.se))
                .unwrap_or_default();
            let _ = write!(s, "{cell:>CELL$}");
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s);

    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let mut flag_row = |label: &str, f: &dyn Fn(&RegressionSpec) -> bool| {
        let _ = write!(s, "{label:LABEL$}");
        for spec in specs {
            let _ = write!(s, "{:>CELL$}", yes_no(f(spec)));
        }
        let _ = writeln!(s);
    };
    flag_row("Firm FE", &|_| true);
    flag_row("Sector-Time FE", &|sp| {
        sp.fixed_effects == FixedEffects::SectorTime
    });
    flag_row("Sector-Season FE", &|sp| {
        sp.fixed_effects == FixedEffects::SectorSeason
    });
    for c in [
        Control::LaggedInvestment,
        Control::LaggedMismatch,
        Control::LaggedLeverage,
        Control::LaggedAssetGrowth,
    ] {
        flag_row(&format!("Control: {}", c.name()), &|sp| {
            sp.controls.contains(&c)
        });
    }
    flag_row("Aggregate controls", &|sp| sp.aggregate_controls);
    let _ = writeln!(s);
    let _ = write!(s, "{:LABEL$}", "Observations");
    for r in results {
        let _ = write!(s, "{:>CELL$}", r.n_obs);
    }
    let _ = writeln!(s);
    let _ = write!(s, "{:LABEL$}", "R2 (within)");
    for r in results {
        let _ = write!(s, "{:>CELL$}", format!("{:.3}", r.r2));
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{rule}");
    let clustering: Vec<&str> = specs.iter().map(|sp| sp.clustering.as_str()).collect();
    let _ = writeln!(
        s,
        "Clustered standard errors ({}) in parentheses",
        clustering.join(", ")
    );
    let _ = writeln!(s, "*** p<0.01, ** p<0.05, * p<0.1");
    s
}
