//! VAR priors and the conditional posteriors they induce.

use std::sync::OnceLock;

use super::{Design, PriorSettings, VarSpec};
use crate::error::Result;
use crate::linalg::{self, Matrix, RngStream};
use crate::registry::Registry;

/// Everything a prior factory needs: hyperparameters, system shape and the
/// residual scales σ_j.
#[derive(Clone, Debug)]
pub struct PriorContext {
    pub settings: PriorSettings,
    pub n: usize,
    pub lags: usize,
    pub include_constant: bool,
    pub scales: Vec<f64>,
}

impl PriorContext {
    pub fn new(spec: &VarSpec, design: &Design) -> Self {
        let scales = spec
            .prior
            .scales
            .clone()
            .unwrap_or_else(|| super::ar_residual_scales(design));
        Self {
            settings: spec.prior.clone(),
            n: spec.n(),
            lags: spec.lags,
            include_constant: spec.include_constant,
            scales,
        }
    }

    pub fn k(&self) -> usize {
        self.n * self.lags + usize::from(self.include_constant)
    }

    fn dof(&self) -> f64 {
        self.settings.dof.unwrap_or(self.n as f64 + 2.0)
    }

    /// Inverse-Wishart scale with mean `diag(σ²)` whenever that mean exists.
    fn covariance_scale(&self) -> Matrix {
        let factor = (self.dof() - self.n as f64 - 1.0).max(1.0);
        Matrix::from_diagonal(
            &self
                .scales
                .iter()
                .map(|s| factor * s * s)
                .collect::<Vec<_>>()
                .into(),
        )
    }

    fn own_lag_mean(&self, default: f64) -> Matrix {
        let mut mean = Matrix::zeros(self.k(), self.n);
        let c = usize::from(self.include_constant);
        let own = self.settings.own_lag_mean.unwrap_or(default);
        for i in 0..self.n {
            mean[(c + i, i)] = own;
        }
        mean
    }

    fn lag_scale(&self, lag: usize) -> f64 {
        (lag as f64).powf(self.settings.lag_decay)
    }
}

pub trait VarPrior: Send + Sync {
    fn name(&self) -> &'static str;
    /// Prior mean of `B` (`k × n`).
    fn mean(&self) -> &Matrix;
    /// Inverse-Wishart scale and degrees of freedom of the Σ prior.
    fn covariance_prior(&self) -> (&Matrix, f64);
    /// Precompute the data-dependent parts of the conditional posteriors.
    fn bind<'a>(&'a self, y: &'a Matrix, x: &'a Matrix) -> Result<Box<dyn GibbsKernel + 'a>>;
}

/// One Gibbs step pair.
pub trait GibbsKernel {
    fn draw_covariance(&self, b: &Matrix, rng: &mut RngStream) -> Result<Matrix>;
    fn draw_coefficients(&self, sigma: &Matrix, rng: &mut RngStream) -> Result<Matrix>;
}

pub fn priors() -> &'static Registry<dyn VarPrior, PriorContext> {
    static REG: OnceLock<Registry<dyn VarPrior, PriorContext>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn VarPrior, PriorContext>::new("VAR prior")
            .with("normal-wishart", |ctx| {
                Ok(Box::new(normal_wishart_prior(ctx)))
            })
            .with("minnesota", |ctx| Ok(Box::new(MinnesotaPrior::new(ctx))))
    })
}

/// Conjugate prior `vec(B) | Σ ~ N(vec(B0), Σ ⊗ Φ0)`, `Σ ~ IW(S0, ν0)` with
/// diagonal `Φ0`.
#[derive(Clone, Debug)]
pub struct NormalWishartPrior {
    pub mean: Matrix,
    /// Diagonal of `Φ0`.
    pub row_variance: Vec<f64>,
    pub scale: Matrix,
    pub dof: f64,
}

/// Random-walk mean; `Φ0` entry `(λ1 / (σ_j ℓ^λ3))²` for lag ℓ of variable j.
pub fn normal_wishart_prior(ctx: &PriorContext) -> NormalWishartPrior {
    let s = &ctx.settings;
    let mut row_variance = Vec::with_capacity(ctx.k());
    if ctx.include_constant {
        row_variance.push(s.constant_variance);
    }
    for lag in 1..=ctx.lags {
        for j in 0..ctx.n {
            row_variance.push((s.overall_tightness / (ctx.scales[j] * ctx.lag_scale(lag))).powi(2));
        }
    }
    NormalWishartPrior {
        mean: ctx.own_lag_mean(1.0),
        row_variance,
        scale: ctx.covariance_scale(),
        dof: ctx.dof(),
    }
}

impl VarPrior for NormalWishartPrior {
    fn name(&self) -> &'static str {
        "normal-wishart"
    }

    fn mean(&self) -> &Matrix {
        &self.mean
    }

    fn covariance_prior(&self) -> (&Matrix, f64) {
        (&self.scale, self.dof)
    }

    fn bind<'a>(&'a self, y: &'a Matrix, x: &'a Matrix) -> Result<Box<dyn GibbsKernel + 'a>> {
        let precision = Matrix::from_diagonal(
            &self
                .row_variance
                .iter()
                .map(|v| 1.0 / v)
                .collect::<Vec<_>>()
                .into(),
        );
        let post_precision = &precision + x.transpose() * x;
        let phi_bar = linalg::spd_inverse(&post_precision)?;
        let b_bar = &phi_bar * (&precision * &self.mean + x.transpose() * y);
        Ok(Box::new(NormalWishartKernel {
            prior: self,
            y,
            x,
            precision,
            b_bar,
            phi_factor: linalg::cholesky(&phi_bar)?,
            post_dof: self.dof + y.nrows() as f64 + x.ncols() as f64,
        }))
    }
}

struct NormalWishartKernel<'a> {
    prior: &'a NormalWishartPrior,
    y: &'a Matrix,
    x: &'a Matrix,
    precision: Matrix,
    b_bar: Matrix,
    phi_factor: Matrix,
    post_dof: f64,
}

impl GibbsKernel for NormalWishartKernel<'_> {
    fn draw_covariance(&self, b: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        let e = self.y - self.x * b;
        let d = b - &self.prior.mean;
        let s = &self.prior.scale + e.transpose() * &e + d.transpose() * &self.precision * &d;
        linalg::sample_inverse_wishart(&linalg::symmetrize(&s), self.post_dof, rng)
    }

    fn draw_coefficients(&self, sigma: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        let sigma_factor = linalg::cholesky(sigma)?;
        Ok(linalg::sample_matrix_normal_factored(
            &self.b_bar,
            &self.phi_factor,
            &sigma_factor,
            rng,
        ))
    }
}

/// Prior mean and elementwise prior variance of `B` (`k × n` each).
#[derive(Clone, Debug, PartialEq)]
pub struct PriorMoments {
    pub mean: Matrix,
    pub variance: Matrix,
}

/// Minnesota moments: mean δ on each own first lag; variance `(λ1/ℓ^λ3)²` on own
/// lags and `(λ1 λ2 σ_i / (ℓ^λ3 σ_j))²` on lag ℓ of variable j in equation i.
pub fn minnesota_prior_moments(ctx: &PriorContext) -> PriorMoments {
    let s = &ctx.settings;
    let c = usize::from(ctx.include_constant);
    let mut variance = Matrix::zeros(ctx.k(), ctx.n);
    for i in 0..ctx.n {
        if ctx.include_constant {
            variance[(0, i)] = s.constant_variance;
        }
        for lag in 1..=ctx.lags {
            let base = s.overall_tightness / ctx.lag_scale(lag);
            for j in 0..ctx.n {
                let v = if i == j {
                    base
                } else {
                    base * s.cross_weight * ctx.scales[i] / ctx.scales[j]
                };
                variance[(c + (lag - 1) * ctx.n + j, i)] = v * v;
            }
        }
    }
    PriorMoments {
        mean: ctx.own_lag_mean(0.8),
        variance,
    }
}

/// Independent prior: `vec(B) ~ N(vec(B0), diag(ω))` with Minnesota moments,
/// `Σ ~ IW(S0, ν0)`. Coefficients with zero prior variance stay at the mean.
#[derive(Clone, Debug)]
pub struct MinnesotaPrior {
    pub moments: PriorMoments,
    pub scale: Matrix,
    pub dof: f64,
}

impl MinnesotaPrior {
    pub fn new(ctx: &PriorContext) -> Self {
        Self {
            moments: minnesota_prior_moments(ctx),
            scale: ctx.covariance_scale(),
            dof: ctx.dof(),
        }
    }
}

impl VarPrior for MinnesotaPrior {
    fn name(&self) -> &'static str {
        "minnesota"
    }

    fn mean(&self) -> &Matrix {
        &self.moments.mean
    }

    fn covariance_prior(&self) -> (&Matrix, f64) {
        (&self.scale, self.dof)
    }

    fn bind<'a>(&'a self, y: &'a Matrix, x: &'a Matrix) -> Result<Box<dyn GibbsKernel + 'a>> {
        let (k, n) = self.moments.mean.shape();
        let free: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..k).map(move |r| (r, i)))
            .filter(|&(r, i)| self.moments.variance[(r, i)] > 0.0)
            .collect();
        let mut fixed = self.moments.mean.clone();
        for &(r, i) in &free {
            fixed[(r, i)] = 0.0;
        }
        Ok(Box::new(MinnesotaKernel {
            prior: self,
            y,
            x,
            xtx: x.transpose() * x,
            xty: x.transpose() * y,
            free,
            fixed,
            post_dof: self.dof + y.nrows() as f64,
        }))
    }
}

struct MinnesotaKernel<'a> {
    prior: &'a MinnesotaPrior,
    y: &'a Matrix,
    x: &'a Matrix,
    xtx: Matrix,
    xty: Matrix,
    /// `(row, equation)` of every coefficient with positive prior variance.
    free: Vec<(usize, usize)>,
    /// Prior mean on the fixed coefficients, zero on the free ones.
    fixed: Matrix,
    post_dof: f64,
}

impl GibbsKernel for MinnesotaKernel<'_> {
    fn draw_covariance(&self, b: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        let e = self.y - self.x * b;
        let s = &self.prior.scale + e.transpose() * &e;
        linalg::sample_inverse_wishart(&linalg::symmetrize(&s), self.post_dof, rng)
    }

    /// Precision `Ω0⁻¹ + Σ⁻¹ ⊗ X'X` restricted to the free coefficients.
    fn draw_coefficients(&self, sigma: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
        let sigma_inv = linalg::spd_inverse(sigma)?;
        let data_term = &self.xty * &sigma_inv - &self.xtx * &self.fixed * &sigma_inv;
        let m = &self.prior.moments;
        let f = self.free.len();
        let mut precision = Matrix::zeros(f, f);
        let mut rhs = Matrix::zeros(f, 1);
        for (a, &(r, i)) in self.free.iter().enumerate() {
            for (b, &(r2, i2)) in self.free.iter().enumerate().skip(a) {
                let v = sigma_inv[(i, i2)] * self.xtx[(r, r2)];
                precision[(a, b)] = v;
                precision[(b, a)] = v;
            }
            let w = 1.0 / m.variance[(r, i)];
            precision[(a, a)] += w;
            rhs[(a, 0)] = w * m.mean[(r, i)] + data_term[(r, i)];
        }
        let l = linalg::cholesky(&precision)?;
        let centre = linalg::solve_lower_transpose(&l, &linalg::solve_lower(&l, &rhs));
        let z = rng.normal_matrix(f, 1);
        let draw = centre + linalg::solve_lower_transpose(&l, &z);
        let mut b = self.fixed.clone();
        for (a, &(r, i)) in self.free.iter().enumerate() {
            b[(r, i)] = draw[(a, 0)];
        }
        Ok(b)
    }
}
