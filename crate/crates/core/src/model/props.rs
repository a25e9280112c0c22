use std::fmt;

use serde::Serialize;

use super::{solve, unconstrained_rate_derivative, Axis, EntrepreneurParams, Regime};
use crate::error::{Error, Result};

/// Relative step for central differences.
pub const DEFAULT_STEP: f64 = 1e-5;

#[derive(Clone, Debug, Serialize)]
pub struct PropositionReport {
    pub step: f64,
    pub b0_unconstrained: f64,
    pub b0_constrained: f64,
    pub dk_dr_unconstrained: f64,
    pub dk_dr_constrained: f64,
    pub dk_dr_closed_form: f64,
    pub closed_form_rel_error: f64,
    pub dk_dtheta_constrained: f64,
    /// Both rate derivatives negative and larger in magnitude when unconstrained.
    pub rate_response_ordering: bool,
    pub theta_response_positive: bool,
}

impl PropositionReport {
    pub fn holds(&self) -> bool {
        self.rate_response_ordering && self.theta_response_positive
    }
}

impl fmt::Display for PropositionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "step = {:e}", self.step)?;
        writeln!(f, "b0 unconstrained = {}", self.b0_unconstrained)?;
        writeln!(f, "b0 constrained = {}", self.b0_constrained)?;
        writeln!(
            f,
            "dk1/d(1+r1) unconstrained = {:.10e}",
            self.dk_dr_unconstrained
        )?;
        writeln!(
            f,
            "dk1/d(1+r1) constrained = {:.10e}",
            self.dk_dr_constrained
        )?;
        writeln!(
            f,
            "dk1/d(1+r1) closed form = {:.10e}",
            self.dk_dr_closed_form
        )?;
        writeln!(
            f,
            "closed form relative error = {:.3e}",
            self.closed_form_rel_error
        )?;
        writeln!(
            f,
            "dk1/dtheta constrained = {:.10e}",
            self.dk_dtheta_constrained
        )?;
        writeln!(
            f,
            "rate response larger when unconstrained: {}",
            pass(self.rate_response_ordering)
        )?;
        write!(
            f,
            "capital increasing in theta when constrained: {}",
            pass(self.theta_response_positive)
        )
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Central difference of `k1` along `axis`, insisting the regime stays put.
fn central_difference(
    p: &EntrepreneurParams,
    axis: Axis,
    at: f64,
    h: f64,
    regime: Regime,
) -> Result<f64> {
    let d = h * at.abs().max(1e-8);
    let k = |v: f64| -> Result<f64> {
        let s = solve(&axis.apply(p, v))?;
        if s.regime != regime {
            return Err(Error::RegimeMismatch(format!(
                "perturbing {} to {v} moves the {} entrepreneur across the kink",
                axis.label(),
                regime.as_str()
            )));
        }
        Ok(s.k1)
    };
    Ok((k(at + d)? - k(at - d)?) / (2.0 * d))
}

pub fn verify_propositions(
    pair: (&EntrepreneurParams, &EntrepreneurParams),
    h: f64,
) -> Result<PropositionReport> {
    let (a, b) = pair;
    if (EntrepreneurParams { b0: b.b0, ..*a }) != *b {
        return Err(Error::InvalidSpec(
            "the parameter pair may differ only in b0".into(),
        ));
    }
    if !(h > 0.0 && h < 0.1) {
        return Err(Error::InvalidSpec(format!(
            "perturbation {h} outside (0, 0.1)"
        )));
    }
    let (sa, sb) = (solve(a)?, solve(b)?);
    let (unc, con, k_unc) = match (sa.regime, sb.regime) {
        (Regime::Unconstrained, Regime::Constrained) => (a, b, sa.k1),
        (Regime::Constrained, Regime::Unconstrained) => (b, a, sb.k1),
        (r, _) => {
            return Err(Error::RegimeMismatch(format!(
                "both entrepreneurs are {} (b0 = {} and {})",
                r.as_str(),
                a.b0,
                b.b0
            )))
        }
    };

    let rate = unc.gross_rate();
    let dk_dr_unconstrained = central_difference(unc, Axis::R1, rate, h, Regime::Unconstrained)?;
    let dk_dr_constrained = central_difference(con, Axis::R1, rate, h, Regime::Constrained)?;
    let dk_dtheta_constrained =
        central_difference(con, Axis::Theta, con.theta, h, Regime::Constrained)?;
    let dk_dr_closed_form = unconstrained_rate_derivative(unc.alpha, k_unc);
    let closed_form_rel_error =
        ((dk_dr_unconstrained - dk_dr_closed_form) / dk_dr_closed_form).abs();

    Ok(PropositionReport {
        step: h,
        b0_unconstrained: unc.b0,
        b0_constrained: con.b0,
        dk_dr_unconstrained,
        dk_dr_constrained,
        dk_dr_closed_form,
        closed_form_rel_error,
        dk_dtheta_constrained,
        rate_response_ordering: dk_dr_unconstrained < 0.0
            && dk_dr_constrained < 0.0
            && dk_dr_unconstrained.abs() > dk_dr_constrained.abs(),
        theta_response_positive: dk_dtheta_constrained > 0.0,
    })
}
