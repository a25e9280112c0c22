use nalgebra::Schur;

use super::lag_matrices;
use crate::linalg::Matrix;

/// QR sweeps allowed before the Schur iteration is abandoned.
const SCHUR_MAX_SWEEPS: usize = 10_000;

/// Spectral radius above which a draw counts as explosive.
pub const EXPLOSIVE_RADIUS: f64 = 1.0;

/// `np × np` companion matrix `[A¹ … Aᵖ; I 0]`.
pub fn companion(b: &Matrix, n: usize, lags: usize, include_constant: bool) -> Matrix {
    let a = lag_matrices(b, n, lags, include_constant);
    let mut m = Matrix::zeros(n * lags, n * lags);
    for (j, aj) in a.iter().enumerate() {
        m.view_mut((0, j * n), (n, n)).copy_from(aj);
    }
    for i in n..n * lags {
        m[(i, i - n)] = 1.0;
    }
    m
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn stability(b: &Matrix, n: usize, lags: usize, include_constant: bool) -> f64 {
    let m = companion(b, n, lags, include_constant);
    if m.rows(0, n).iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    match Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_SWEEPS) {
        Some(schur) => schur
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max),
        None => gelfand_radius(m),
    }
}

/// `‖M^(2^s)‖^(1/2^s)` by repeated squaring with rescaling, for matrices on
/// which the Schur iteration stalls.
fn gelfand_radius(mut m: Matrix) -> f64 {
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..40 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_scale = 2.0 * (log_scale + norm.ln());
        m = &m * &m;
        power *= 2.0;
    }
    ((log_scale + m.norm().ln()) / power).exp()
}
