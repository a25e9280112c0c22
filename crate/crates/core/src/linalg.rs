//! Dense linear algebra and random sampling primitives.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Every sampler takes an explicit
//! [`RngStream`], so a draw is a pure function of its parameters, the seed and
//! the stream position.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Absolute asymmetry tolerance, scaled by `max(1, max |m_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Seeded, position-addressable random stream.
#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Stream for `seed` fast-forwarded to `position`.
    pub fn at(seed: u64, position: u128) -> Self {
        let mut stream = Self::new(seed);
        stream.rng.set_word_pos(position);
        stream
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words consumed so far.
    pub fn position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Independent child stream, derived deterministically from this one.
    pub fn fork(&mut self) -> RngStream {
        RngStream::new(self.rng.random())
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn chi_squared(&mut self, dof: f64) -> f64 {
        ChiSquared::new(dof)
            .expect("chi-squared dof must be positive")
            .sample(&mut self.rng)
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        // Column-major fill keeps the draw order independent of nalgebra internals.
        let mut m = Matrix::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m[(i, j)] = self.standard_normal();
            }
        }
        m
    }
}

pub fn max_asymmetry(m: &Matrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

fn check_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
///
/// The input is symmetrized as `(M + Mᵀ)/2` after the asymmetry check.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    check_finite(m, "cholesky input")?;
    let scale = m.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let a = symmetrize(m);
    let n = a.nrows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solve `L x = b` for lower-triangular `L` (column by column of `b`).
pub fn solve_lower(l: &Matrix, b: &Matrix) -> Matrix {
    l.solve_lower_triangular(b)
        .expect("cholesky factor has a strictly positive diagonal")
}

/// Solve `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: &Matrix) -> Matrix {
    l.tr_solve_lower_triangular(b)
        .expect("cholesky factor has a strictly positive diagonal")
}

/// Solve `M x = b` for symmetric positive-definite `M`.
pub fn spd_solve(m: &Matrix, b: &Matrix) -> Result<Matrix> {
    let l = cholesky(m)?;
    Ok(solve_lower_transpose(&l, &solve_lower(&l, b)))
}

/// Inverse of a symmetric positive-definite matrix, returned exactly symmetric.
pub fn spd_inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    let inv = spd_solve(m, &Matrix::identity(n, n))?;
    Ok(symmetrize(&inv))
}

/// `(i·p + k, j·q + l)` entry equals `a[i,j]·b[k,l]`.
pub fn kronecker(a: &Matrix, b: &Matrix) -> Matrix {
    let (p, q) = (b.nrows(), b.ncols());
    let mut out = Matrix::zeros(a.nrows() * p, a.ncols() * q);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let aij = a[(i, j)];
            for k in 0..p {
                for l in 0..q {
                    out[(i * p + k, j * q + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Draw from the matrix-normal law `MN(mean, row_cov, col_cov)`:
/// `vec(X) ~ N(vec(mean), col_cov ⊗ row_cov)`.
pub fn sample_matrix_normal(
    mean: &Matrix,
    row_cov: &Matrix,
    col_cov: &Matrix,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if row_cov.nrows() != mean.nrows() || col_cov.nrows() != mean.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "matrix normal mean {}x{} with row cov {}x{} and col cov {}x{}",
            mean.nrows(),
            mean.ncols(),
            row_cov.nrows(),
            row_cov.ncols(),
            col_cov.nrows(),
            col_cov.ncols()
        )));
    }
    let row_factor = cholesky(row_cov)?;
    let col_factor = cholesky(col_cov)?;
    Ok(sample_matrix_normal_factored(
        mean,
        &row_factor,
        &col_factor,
        rng,
    ))
}

/// Same law as [`sample_matrix_normal`], with both covariances already factored.
pub fn sample_matrix_normal_factored(
    mean: &Matrix,
    row_factor: &Matrix,
    col_factor: &Matrix,
    rng: &mut RngStream,
) -> Matrix {
    let z = rng.normal_matrix(mean.nrows(), mean.ncols());
    mean + row_factor * z * col_factor.transpose()
}

/// Draw from the inverse-Wishart law `IW(scale, dof)` (mean `scale/(dof − dim − 1)`).
///
/// Bartlett decomposition of the Wishart draw for `scale⁻¹`, then inverted.
pub fn sample_inverse_wishart(scale: &Matrix, dof: f64, rng: &mut RngStream) -> Result<Matrix> {
    let dim = scale.nrows();
    if !(dof > dim as f64 - 1.0) || !dof.is_finite() {
        return Err(Error::InvalidDegreesOfFreedom { dof, dim });
    }
    let precision = spd_inverse(scale)?;
    let l = cholesky(&precision)?;
    let mut a = Matrix::zeros(dim, dim);
    for i in 0..dim {
        a[(i, i)] = rng.chi_squared(dof - i as f64).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.standard_normal();
        }
    }
    let la = &l * a;
    let wishart = &la * la.transpose();
    spd_inverse(&wishart)
}

/// Quantile of already-sorted data by linear interpolation between order
/// statistics (position `p·(n−1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantiles(values: &[f64], probs: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("quantile values"));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidSpec(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quantile values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation with the `n − 1` denominator.
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(quantile_sorted(&sorted, 0.5))
}
