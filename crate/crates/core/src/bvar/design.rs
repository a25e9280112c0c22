use super::VarSpec;
use crate::error::{Error, Result};
use crate::ingest::MacroPanel;
use crate::linalg::{self, Matrix};

/// Regression matrices `Y = X B + E` with their shape metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub y: Matrix,
    pub x: Matrix,
    pub n: usize,
    pub lags: usize,
    pub include_constant: bool,
    /// Number of stacked country blocks.
    pub blocks: usize,
}

impl Design {
    pub fn rows(&self) -> usize {
        self.y.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }
}

/// Stack one `T × n` data block per country into a shared design; each block
/// contributes `T − p` rows `[1, y_{t−1}ᵀ, …, y_{t−p}ᵀ]`.
pub fn design_from_blocks(
    blocks: &[Matrix],
    lags: usize,
    include_constant: bool,
) -> Result<Design> {
    let first = blocks.first().ok_or(Error::EmptyInput("VAR data blocks"))?;
    let n = first.ncols();
    if lags == 0 {
        return Err(Error::InvalidSpec("lags must be at least 1".into()));
    }
    let needed = n * lags + 1;
    let c = usize::from(include_constant);
    let k = n * lags + c;
    let mut rows = 0;
    for b in blocks {
        if b.ncols() != n {
            return Err(Error::DimensionMismatch(
                "every block needs the same variables".into(),
            ));
        }
        if b.nrows() <= needed {
            return Err(Error::InsufficientObservations {
                rows: b.nrows(),
                needed,
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("VAR data"));
        }
        rows += b.nrows() - lags;
    }
    let mut y = Matrix::zeros(rows, n);
    let mut x = Matrix::zeros(rows, k);
    let mut r = 0;
    for b in blocks {
        for t in lags..b.nrows() {
            for i in 0..n {
                y[(r, i)] = b[(t, i)];
            }
            if include_constant {
                x[(r, 0)] = 1.0;
            }
            for j in 1..=lags {
                for l in 0..n {
                    x[(r, c + (j - 1) * n + l)] = b[(t - j, l)];
                }
            }
            r += 1;
        }
    }
    Ok(Design {
        y,
        x,
        n,
        lags,
        include_constant,
        blocks: blocks.len(),
    })
}

/// Build the design for `spec.variables` from a macro panel. Single-country
/// mode needs exactly one country; pooled mode needs at least two.
pub fn build_design(panel: &MacroPanel, spec: &VarSpec, pooled: bool) -> Result<Design> {
    spec.validate()?;
    if spec.variables[0] != panel.shock_name {
        return Err(Error::InvalidSpec(format!(
            "the shock `{}` must be ordered first, found `{}`",
            panel.shock_name, spec.variables[0]
        )));
    }
    for v in &spec.variables {
        if !panel.has_variable(v) {
            return Err(Error::SchemaMismatch(format!(
                "variable `{v}` not in panel"
            )));
        }
    }
    match (pooled, panel.countries.len()) {
        (_, 0) => return Err(Error::EmptyPartition("panel has no countries".into())),
        (true, 1) => {
            return Err(Error::InvalidSpec(
                "pooled estimation needs at least two countries".into(),
            ))
        }
        (false, c) if c > 1 => {
            return Err(Error::InvalidSpec(format!(
                "single-country estimation got {c} countries"
            )))
        }
        _ => {}
    }
    let t = panel.len();
    let blocks: Vec<Matrix> = (0..panel.countries.len())
        .map(|c| {
            let cols: Vec<&[f64]> = spec
                .variables
                .iter()
                .map(|v| panel.series(c, v).expect("checked above"))
                .collect();
            Matrix::from_fn(t, cols.len(), |r, i| cols[i][r])
        })
        .collect();
    design_from_blocks(&blocks, spec.lags, spec.include_constant)
}

/// Residual standard deviation of a univariate AR(p) per variable, fitted on
/// the design's own-lag columns. Falls back to the sample sd of the variable,
/// then to 1, when the regression cannot be fitted.
pub fn ar_residual_scales(design: &Design) -> Vec<f64> {
    let (n, p) = (design.n, design.lags);
    let c = usize::from(design.include_constant);
    let rows = design.rows();
    (0..n)
        .map(|i| {
            let cols: Vec<usize> = (0..c).chain((1..=p).map(|j| c + (j - 1) * n + i)).collect();
            let fitted = (rows > cols.len())
                .then(|| {
                    let x = design.x.select_columns(&cols);
                    let y = design.y.columns(i, 1).into_owned();
                    let xtx = x.transpose() * &x;
                    let beta = linalg::spd_solve(&xtx, &(x.transpose() * &y)).ok()?;
                    let e = &y - &x * beta;
                    let s = (e.norm_squared() / (rows - cols.len()) as f64).sqrt();
                    (s > 0.0 && s.is_finite()).then_some(s)
                })
                .flatten();
            fitted
                .or_else(|| {
                    let v: Vec<f64> = design.y.column(i).iter().copied().collect();
                    let s = if v.len() > 1 {
                        linalg::sample_sd(&v)
                    } else {
                        0.0
                    };
                    (s > 0.0 && s.is_finite()).then_some(s)
                })
                .unwrap_or(1.0)
        })
        .collect()
}
