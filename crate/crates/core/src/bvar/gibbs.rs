use serde::Serialize;

use super::{priors, Design, PosteriorDraws, PriorContext, VarSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, RngStream};

/// Split-half mean divergence, in posterior sds, above which a warning is raised.
pub const SPLIT_HALF_WARNING: f64 = 0.1;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    /// Largest `|mean(first half) − mean(second half)| / sd` over coefficients.
    pub max_split_divergence: f64,
    pub warnings: Vec<String>,
}

/// Run the Gibbs sampler on `Y = X B + E`, drawing `Σ | B` then `B | Σ` each
/// iteration from an OLS start, and keep the post-burn-in draws.
pub fn estimate(
    y: &Matrix,
    x: &Matrix,
    spec: &VarSpec,
    rng: &mut RngStream,
) -> Result<PosteriorDraws> {
    spec.validate()?;
    let (n, k) = (spec.n(), spec.k());
    if y.ncols() != n || x.ncols() != k || y.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Y is {}x{} and X is {}x{}, spec needs {n} variables and {k} regressors",
            y.nrows(),
            y.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    let design = Design {
        y: y.clone(),
        x: x.clone(),
        n,
        lags: spec.lags,
        include_constant: spec.include_constant,
        blocks: 1,
    };
    let ctx = PriorContext::new(spec, &design);
    let prior = priors().build(&spec.prior.kind, &ctx)?;
    let kernel = prior.bind(y, x)?;

    let mut b = ols(y, x).unwrap_or_else(|| prior.mean().clone());
    let retained = spec.gibbs.retained();
    let mut coefficients = Vec::with_capacity(retained);
    let mut covariances = Vec::with_capacity(retained);
    for iteration in 0..spec.gibbs.iterations {
        let step = |e| Error::Sampler {
            iteration,
            source: Box::new(e),
        };
        let sigma = kernel.draw_covariance(&b, rng).map_err(step)?;
        b = kernel.draw_coefficients(&sigma, rng).map_err(step)?;
        if iteration >= spec.gibbs.burn_in {
            coefficients.push(b.clone());
            covariances.push(sigma);
        }
    }
    let diagnostics = split_half(&coefficients);
    Ok(PosteriorDraws {
        coefficients,
        covariances,
        spec: spec.clone(),
        seed: rng.seed(),
        diagnostics,
    })
}

fn ols(y: &Matrix, x: &Matrix) -> Option<Matrix> {
    if y.nrows() <= x.ncols() {
        return None;
    }
    linalg::spd_solve(&(x.transpose() * x), &(x.transpose() * y)).ok()
}

fn split_half(draws: &[Matrix]) -> ChainDiagnostics {
    let mut diag = ChainDiagnostics::default();
    if draws.len() < 4 {
        return diag;
    }
    let half = draws.len() / 2;
    let (rows, cols) = draws[0].shape();
    for i in 0..rows {
        for j in 0..cols {
            let v: Vec<f64> = draws.iter().map(|b| b[(i, j)]).collect();
            let sd = linalg::sample_sd(&v);
            if !(sd > 0.0) {
                continue;
            }
            let d = (linalg::mean(&v[..half]) - linalg::mean(&v[half..])).abs() / sd;
            diag.max_split_divergence = diag.max_split_divergence.max(d);
        }
    }
    if diag.max_split_divergence > SPLIT_HALF_WARNING {
        diag.warnings.push(format!(
            "split-half coefficient means differ by {:.3} posterior sds",
            diag.max_split_divergence
        ));
    }
    diag
}
