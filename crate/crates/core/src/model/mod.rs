//! Two-period entrepreneur with Cobb-Douglas technology, log utility and a
//! leverage constraint `b1 ≤ θ·k1`.

mod props;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use props::{verify_propositions, PropositionReport, DEFAULT_STEP};
pub use sweep::{curves_svg, sweep, Axis, Curve, SweepPoint};

/// Log-spaced candidates scanned for a sign change of `F` before bisection.
pub const BRACKET_POINTS: usize = 64;
const ROOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrepreneurParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub k0: f64,
    pub b0: f64,
    pub r0: f64,
    pub r1: f64,
}

impl Default for EntrepreneurParams {
    fn default() -> Self {
        Self {
            alpha: 0.3,
            beta: 0.95,
            theta: 0.5,
            k0: 1.0,
            b0: 0.6,
            r0: 0.05,
            r1: 0.05,
        }
    }
}

impl EntrepreneurParams {
    pub fn validate(&self) -> Result<()> {
        let interior = |v: f64| v > 0.0 && v < 1.0;
        if !interior(self.alpha) {
            return Err(Error::InvalidSpec(format!(
                "alpha = {} must lie in (0, 1)",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "beta = {} must lie in (0, 1]",
                self.beta
            )));
        }
        if !interior(self.theta) {
            return Err(Error::InvalidSpec(format!(
                "theta = {} must lie in (0, 1)",
                self.theta
            )));
        }
        if !(self.k0 > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "k0 = {} must be positive",
                self.k0
            )));
        }
        if !(1.0 + self.r1 > 0.0) || ![self.b0, self.r0, self.r1].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSpec(
                "b0, r0, r1 must be finite with 1 + r1 > 0".into(),
            ));
        }
        Ok(())
    }

    /// Period-0 resources net of debt service, `k0^α − b0(1+r0)`.
    pub fn initial_wealth(&self) -> f64 {
        self.k0.powf(self.alpha) - self.b0 * (1.0 + self.r0)
    }

    pub fn gross_rate(&self) -> f64 {
        1.0 + self.r1
    }

    /// Consumption implied by a choice of `(k1, b1)`.
    pub fn consumption(&self, k1: f64, b1: f64) -> (f64, f64) {
        (
            self.initial_wealth() - k1 + b1,
            k1.powf(self.alpha) - b1 * self.gross_rate(),
        )
    }

    /// Lifetime utility, `-inf` when either consumption is non-positive.
    pub fn utility_at(&self, k1: f64, b1: f64) -> f64 {
        let (c0, c1) = self.consumption(k1, b1);
        if c0 > 0.0 && c1 > 0.0 {
            c0.ln() + self.beta * c1.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Unconstrained,
    Constrained,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Unconstrained => "unconstrained",
            Regime::Constrained => "constrained",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrepreneurSolution {
    pub c0: f64,
    pub c1: f64,
    pub k1: f64,
    pub b1: f64,
    pub mu: f64,
    pub regime: Regime,
}

impl EntrepreneurSolution {
    pub fn utility(&self, beta: f64) -> f64 {
        self.c0.ln() + beta * self.c1.ln()
    }
}

/// `((1+r1)/α)^{1/(α−1)}`.
pub fn unconstrained_capital(alpha: f64, gross_rate: f64) -> f64 {
    (gross_rate / alpha).powf(1.0 / (alpha - 1.0))
}

/// Closed-form `∂k1/∂(1+r1)` for the unconstrained entrepreneur.
pub fn unconstrained_rate_derivative(alpha: f64, k1: f64) -> f64 {
    1.0 / (alpha * (alpha - 1.0) * k1.powf(alpha - 2.0))
}

pub fn solve_unconstrained(p: &EntrepreneurParams) -> Result<EntrepreneurSolution> {
    p.validate()?;
    let r = p.gross_rate();
    let w0 = p.initial_wealth();
    let k1 = unconstrained_capital(p.alpha, r);
    if w0 - k1 + k1.powf(p.alpha) / r <= 0.0 {
        return Err(Error::InfeasibleConsumption);
    }
    // Bond Euler c1 = β(1+r1)c0 is linear in b1 once k1 is fixed.
    let b1 = (k1.powf(p.alpha) - p.beta * r * (w0 - k1)) / (r * (1.0 + p.beta));
    let limit = p.theta * k1;
    if b1 > limit {
        return Err(Error::ConstraintViolated { b1, limit });
    }
    let (c0, c1) = p.consumption(k1, b1);
    Ok(EntrepreneurSolution {
        c0,
        c1,
        k1,
        b1,
        mu: 0.0,
        regime: Regime::Unconstrained,
    })
}

/// Optimality condition along `b1 = θk1`; positive below the optimum.
pub fn constrained_condition(p: &EntrepreneurParams, k1: f64) -> f64 {
    let r = p.gross_rate();
    let (c0, c1) = p.consumption(k1, p.theta * k1);
    p.alpha * k1.powf(p.alpha - 1.0) - r - (1.0 - p.theta) * (c1 / (p.beta * c0) - r)
}

/// Upper end of the interval where both consumptions stay positive with `b1 = θk1`.
fn constrained_upper_bound(p: &EntrepreneurParams) -> f64 {
    let by_c0 = p.initial_wealth() / (1.0 - p.theta);
    let by_c1 = (p.theta * p.gross_rate()).powf(1.0 / (p.alpha - 1.0));
    by_c0.min(by_c1)
}

pub fn solve_constrained(p: &EntrepreneurParams) -> Result<EntrepreneurSolution> {
    p.validate()?;
    let hi = constrained_upper_bound(p);
    if !(hi > 0.0) {
        return Err(Error::InfeasibleConsumption);
    }
    let lo = hi * 1e-8;
    let top = hi * (1.0 - 1e-12);
    let step = (top / lo).ln() / (BRACKET_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..BRACKET_POINTS)
        .map(|i| lo * (step * i as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&k| constrained_condition(p, k)).collect();
    let i = (0..BRACKET_POINTS - 1)
        .find(|&i| values[i] > 0.0 && values[i + 1] <= 0.0)
        .ok_or(Error::NoBracket { lo, hi: top })?;

    let (mut a, mut b) = (grid[i], grid[i + 1]);
    let mut k1 = b;
    if values[i + 1] != 0.0 {
        for _ in 0..200 {
            k1 = 0.5 * (a + b);
            let f = constrained_condition(p, k1);
            if f.abs() < ROOT_TOL || b - a <= f64::EPSILON * b {
                break;
            }
            if f > 0.0 {
                a = k1;
            } else {
                b = k1;
            }
        }
    }

    let b1 = p.theta * k1;
    let (c0, c1) = p.consumption(k1, b1);
    let mu = 1.0 / c0 - p.beta * p.gross_rate() / c1;
    if !(mu > 0.0) {
        return Err(Error::NegativeMultiplier { mu });
    }
    Ok(EntrepreneurSolution {
        c0,
        c1,
        k1,
        b1,
        mu,
        regime: Regime::Constrained,
    })
}

pub fn solve(p: &EntrepreneurParams) -> Result<EntrepreneurSolution> {
    match solve_unconstrained(p) {
        Err(Error::ConstraintViolated { .. }) => solve_constrained(p),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_fixture_is_constrained() {
        let s = solve(&EntrepreneurParams::default()).unwrap();
        assert_eq!(s.regime, Regime::Constrained);
        assert!(s.mu > 0.0);
        assert!((s.b1 - 0.5 * s.k1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = EntrepreneurParams {
            theta: 1.0,
            ..Default::default()
        };
        assert!(matches!(solve(&p), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn hopeless_debt_is_infeasible() {
        let p = EntrepreneurParams {
            b0: 5.0,
            ..Default::default()
        };
        assert!(matches!(solve(&p), Err(Error::InfeasibleConsumption)));
    }
}
