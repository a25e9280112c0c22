//! Bayesian estimation of single-country and pooled-panel VARs.
//!
//! Coefficients use the stacked layout `B = [C; A¹ᵀ; …; Aᵖᵀ]` (`k × n`, with
//! `k = np + 1` when a constant is included), so row `c + (j−1)n + l` of column
//! `i` is the response of variable `i` to lag `j` of variable `l`.

mod checkpoint;
mod design;
mod gibbs;
mod prior;
mod stability;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use design::{ar_residual_scales, build_design, design_from_blocks, Design};
pub use gibbs::{estimate, ChainDiagnostics, SPLIT_HALF_WARNING};
pub use prior::{
    minnesota_prior_moments, normal_wishart_prior, priors, GibbsKernel, MinnesotaPrior,
    NormalWishartPrior, PriorContext, PriorMoments, VarPrior,
};
pub use stability::{companion, stability, EXPLOSIVE_RADIUS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSettings {
    /// Registered prior name: `normal-wishart` or `minnesota`.
    pub kind: String,
    /// λ1.
    pub overall_tightness: f64,
    /// λ2, Minnesota only.
    pub cross_weight: f64,
    /// λ3.
    pub lag_decay: f64,
    /// Prior mean of each own first lag; 1.0 for Normal-Wishart and 0.8 for
    /// Minnesota when absent.
    pub own_lag_mean: Option<f64>,
    /// Prior variance of the constant.
    pub constant_variance: f64,
    /// Inverse-Wishart degrees of freedom; `n + 2` when absent.
    pub dof: Option<f64>,
    /// Residual scales σ_j; univariate AR(p) residual sds when absent.
    pub scales: Option<Vec<f64>>,
}

impl PriorSettings {
    pub fn normal_wishart() -> Self {
        Self::default()
    }

    pub fn minnesota() -> Self {
        Self {
            kind: "minnesota".into(),
            ..Self::default()
        }
    }
}

impl Default for PriorSettings {
    fn default() -> Self {
        Self {
            kind: "normal-wishart".into(),
            overall_tightness: 0.1,
            cross_weight: 0.5,
            lag_decay: 1.0,
            own_lag_mean: None,
            constant_variance: 1e6,
            dof: None,
            scales: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GibbsSettings {
    pub iterations: usize,
    pub burn_in: usize,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        Self {
            iterations: 12_000,
            burn_in: 2_000,
        }
    }
}

impl GibbsSettings {
    pub fn retained(&self) -> usize {
        self.iterations - self.burn_in
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarSpec {
    /// Ordered system variables, the shock first.
    pub variables: Vec<String>,
    pub lags: usize,
    pub include_constant: bool,
    pub prior: PriorSettings,
    pub gibbs: GibbsSettings,
}

impl Default for VarSpec {
    fn default() -> Self {
        Self {
            variables: Vec::new(),
            lags: 2,
            include_constant: true,
            prior: PriorSettings::default(),
            gibbs: GibbsSettings::default(),
        }
    }
}

impl VarSpec {
    /// Pooled panel defaults: two lags, Normal-Wishart prior.
    pub fn panel(variables: Vec<String>) -> Self {
        Self {
            variables,
            ..Self::default()
        }
    }

    /// Single-country defaults: six lags, Minnesota prior.
    pub fn country(variables: Vec<String>) -> Self {
        Self {
            variables,
            lags: 6,
            prior: PriorSettings::minnesota(),
            ..Self::default()
        }
    }

    pub fn n(&self) -> usize {
        self.variables.len()
    }

    /// Regressors per equation.
    pub fn k(&self) -> usize {
        self.n() * self.lags + usize::from(self.include_constant)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.variables.is_empty() {
            return bad("at least one variable is required".into());
        }
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].contains(v) {
                return bad(format!("variable `{v}` listed twice"));
            }
        }
        if self.lags == 0 {
            return bad("lags must be at least 1".into());
        }
        if self.gibbs.iterations <= self.gibbs.burn_in {
            return bad(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.gibbs.iterations, self.gibbs.burn_in
            ));
        }
        let p = &self.prior;
        if !(p.overall_tightness > 0.0) {
            return bad(format!(
                "overall tightness must be positive, got {}",
                p.overall_tightness
            ));
        }
        if !(p.cross_weight >= 0.0) || !(p.lag_decay >= 0.0) || !(p.constant_variance > 0.0) {
            return bad(
                "cross weight and lag decay must be nonnegative, constant variance positive".into(),
            );
        }
        if let Some(s) = &p.scales {
            if s.len() != self.n() || s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return bad(format!("need {} positive scales", self.n()));
            }
        }
        Ok(())
    }
}

/// Retained Gibbs draws of `(B, Σ)`.
#[derive(Clone, Debug)]
pub struct PosteriorDraws {
    pub coefficients: Vec<Matrix>,
    pub covariances: Vec<Matrix>,
    pub spec: VarSpec,
    pub seed: u64,
    pub diagnostics: ChainDiagnostics,
}

impl PosteriorDraws {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn lags(&self) -> usize {
        self.spec.lags
    }

    /// `A¹ … Aᵖ` of one draw.
    pub fn lag_matrices(&self, draw: usize) -> Vec<Matrix> {
        lag_matrices(
            &self.coefficients[draw],
            self.n(),
            self.lags(),
            self.spec.include_constant,
        )
    }

    pub fn coefficient_mean(&self) -> Matrix {
        mean_of(&self.coefficients)
    }

    pub fn covariance_mean(&self) -> Matrix {
        mean_of(&self.covariances)
    }

    /// Elementwise posterior standard deviation of the coefficients.
    pub fn coefficient_sd(&self) -> Matrix {
        let first = &self.coefficients[0];
        Matrix::from_fn(first.nrows(), first.ncols(), |i, j| {
            let v: Vec<f64> = self.coefficients.iter().map(|b| b[(i, j)]).collect();
            linalg::sample_sd(&v)
        })
    }

    /// Number of draws whose companion matrix has spectral radius above one.
    pub fn explosive_draws(&self) -> usize {
        self.coefficients
            .iter()
            .filter(|b| {
                stability(b, self.n(), self.lags(), self.spec.include_constant) > EXPLOSIVE_RADIUS
            })
            .count()
    }
}

/// Split a stacked coefficient matrix into `A¹ … Aᵖ` (`n × n` each).
pub fn lag_matrices(b: &Matrix, n: usize, lags: usize, include_constant: bool) -> Vec<Matrix> {
    let c = usize::from(include_constant);
    (0..lags)
        .map(|j| Matrix::from_fn(n, n, |i, l| b[(c + j * n + l, i)]))
        .collect()
}

fn mean_of(ms: &[Matrix]) -> Matrix {
    let mut acc = Matrix::zeros(ms[0].nrows(), ms[0].ncols());
    for m in ms {
        acc += m;
    }
    acc / ms.len() as f64
}
