use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{solve, EntrepreneurParams, EntrepreneurSolution, Regime};
use crate::error::{Error, Result};
use crate::format::num;
use crate::plot::{render_grid, Line, Panel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Swept as the gross rate `1 + r1`.
    R1,
    Theta,
    B0,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::R1 => "gross rate 1+r1",
            Axis::Theta => "theta",
            Axis::B0 => "initial debt b0",
        }
    }

    pub fn apply(self, base: &EntrepreneurParams, value: f64) -> EntrepreneurParams {
        let mut p = *base;
        match self {
            Axis::R1 => p.r1 = value - 1.0,
            Axis::Theta => p.theta = value,
            Axis::B0 => p.b0 = value,
        }
        p
    }
}

#[derive(Debug)]
pub struct SweepPoint {
    pub axis_value: f64,
    pub solution: Result<EntrepreneurSolution>,
}

#[derive(Debug)]
pub struct Curve {
    pub axis: Axis,
    pub points: Vec<SweepPoint>,
    /// Midpoint between the first pair of adjacent solved points whose regimes differ.
    pub kink: Option<f64>,
    /// Observations worth a second look, e.g. non-contiguous unconstrained segments.
    pub flags: Vec<String>,
}

pub fn sweep(base: &EntrepreneurParams, axis: Axis, grid: &[f64]) -> Result<Curve> {
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidSpec(
            "sweep grid must be strictly increasing".into(),
        ));
    }
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&v| SweepPoint {
            axis_value: v,
            solution: solve(&axis.apply(base, v)),
        })
        .collect();

    let solved: Vec<(f64, Regime)> = points
        .iter()
        .filter_map(|p| p.solution.as_ref().ok().map(|s| (p.axis_value, s.regime)))
        .collect();
    let kink = solved
        .windows(2)
        .find(|w| w[0].1 != w[1].1)
        .map(|w| 0.5 * (w[0].0 + w[1].0));
    let switches = solved.windows(2).filter(|w| w[0].1 != w[1].1).count();
    let mut flags = Vec::new();
    if switches > 1 {
        flags.push(format!(
            "regime switches {switches} times along the {} sweep",
            axis.label()
        ));
    }
    let failed = points.iter().filter(|p| p.solution.is_err()).count();
    if failed > 0 {
        flags.push(format!("{failed} grid points failed to solve"));
    }
    Ok(Curve {
        axis,
        points,
        kink,
        flags,
    })
}

impl Curve {
    pub fn k1(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| p.solution.as_ref().map_or(f64::NAN, |s| s.k1))
            .collect()
    }

    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.axis_value).collect()
    }

    /// `axis_value,k1,b1,c0,c1,mu,regime`; failed points carry regime `error`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "axis_value,k1,b1,c0,c1,mu,regime")?;
        for p in &self.points {
            match &p.solution {
                Ok(s) => writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(p.axis_value),
                    num(s.k1),
                    num(s.b1),
                    num(s.c0),
                    num(s.c1),
                    num(s.mu),
                    s.regime.as_str()
                )?,
                Err(_) => writeln!(out, "{},,,,,,error", num(p.axis_value))?,
            }
        }
        out.flush()?;
        Ok(())
    }
}

const COLORS: [&str; 4] = ["#1f5fa8", "#c0392b", "#2e8b57", "#8e44ad"];

/// One panel overlaying curves that share an axis and grid, kinks as dashed markers.
pub fn curves_svg(title: &str, curves: &[&Curve]) -> String {
    let x = curves.first().map(|c| c.axis_values()).unwrap_or_default();
    let panel = Panel {
        title: title.to_string(),
        x,
        lines: curves
            .iter()
            .enumerate()
            .map(|(i, c)| Line {
                y: c.k1(),
                color: COLORS[i % COLORS.len()],
                dashed: i % 2 == 1,
            })
            .collect(),
        markers: curves.iter().filter_map(|c| c.kink).collect(),
        ..Panel::default()
    };
    render_grid(&[panel], 1)
}
