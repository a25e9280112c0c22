//! Quarterly-to-monthly interpolation rules.
//!
//! Quarterly values sit on the last month of their quarter, so `m` quarters
//! yield `3(m − 1) + 1` months whose every third entry is a source value.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::registry::Registry;

pub trait Interpolator: Send + Sync {
    fn name(&self) -> &'static str;
    fn interpolate(&self, quarterly: &[f64]) -> Result<Vec<f64>>;
}

/// Geometric steps within each quarter.
#[derive(Debug, Default, Clone, Copy)]
pub struct LogLinear;

/// Arithmetic steps within each quarter.
#[derive(Debug, Default, Clone, Copy)]
pub struct Linear;

impl Interpolator for LogLinear {
    fn name(&self) -> &'static str {
        "log-linear"
    }

    fn interpolate(&self, quarterly: &[f64]) -> Result<Vec<f64>> {
        if let Some((index, &value)) = quarterly.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveLevel { index, value });
        }
        Ok(fill(quarterly, |a, b, f| {
            if a == b {
                a
            } else {
                a * (b / a).powf(f)
            }
        }))
    }
}

impl Interpolator for Linear {
    fn name(&self) -> &'static str {
        "linear"
    }

    fn interpolate(&self, quarterly: &[f64]) -> Result<Vec<f64>> {
        if quarterly.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quarterly series"));
        }
        Ok(fill(quarterly, |a, b, f| a + (b - a) * f))
    }
}

fn fill(quarterly: &[f64], step: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let Some(&last) = quarterly.last() else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(3 * quarterly.len());
    for w in quarterly.windows(2) {
        out.push(w[0]);
        out.push(step(w[0], w[1], 1.0 / 3.0));
        out.push(step(w[0], w[1], 2.0 / 3.0));
    }
    out.push(last);
    out
}

pub fn interpolators() -> &'static Registry<dyn Interpolator, ()> {
    static REG: OnceLock<Registry<dyn Interpolator, ()>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn Interpolator, ()>::new("interpolator")
            .with("log-linear", |_| Ok(Box::new(LogLinear)))
            .with("linear", |_| Ok(Box::new(Linear)))
    })
}

/// Log-linear interpolation (the default rule).
pub fn interpolate_quarterly_to_monthly(quarterly: &[f64]) -> Result<Vec<f64>> {
    LogLinear.interpolate(quarterly)
}

/// Pick the quarter-end months back out of an interpolated monthly series.
pub fn quarter_end_values(monthly: &[f64]) -> Vec<f64> {
    monthly.iter().step_by(3).copied().collect()
}
