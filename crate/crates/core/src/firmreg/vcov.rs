//! Cluster-robust covariance estimators.

use std::sync::OnceLock;

use super::absorb::Grouping;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::registry::Registry;

/// Cluster labels available to every estimator, aligned with the regression rows.
#[derive(Clone, Debug)]
pub struct ClusterLabels {
    pub firm: Grouping,
    pub time: Grouping,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vcov {
    pub matrix: Matrix,
    /// Cluster count per dimension.
    pub clusters: Vec<usize>,
    /// A negative two-way diagonal was replaced by the larger one-way variance.
    pub floored: bool,
    pub warnings: Vec<String>,
}

impl Vcov {
    /// Smallest cluster count; t-statistics use `G − 1` degrees of freedom.
    pub fn min_clusters(&self) -> usize {
        self.clusters.iter().copied().min().unwrap_or(0)
    }
}

pub trait VcovEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(&self, x: &Matrix, resid: &[f64], labels: &ClusterLabels) -> Result<Vcov>;
}

struct OneWay {
    name: &'static str,
    pick: fn(&ClusterLabels) -> Grouping,
}

impl VcovEstimator for OneWay {
    fn name(&self) -> &'static str {
        self.name
    }

    fn estimate(&self, x: &Matrix, resid: &[f64], labels: &ClusterLabels) -> Result<Vcov> {
        clustered_vcov(x, resid, &[(self.pick)(labels)])
    }
}

struct TwoWay;

impl VcovEstimator for TwoWay {
    fn name(&self) -> &'static str {
        "firm-time"
    }

    fn estimate(&self, x: &Matrix, resid: &[f64], labels: &ClusterLabels) -> Result<Vcov> {
        clustered_vcov(x, resid, &[labels.firm.clone(), labels.time.clone()])
    }
}

pub fn vcov_estimators() -> &'static Registry<dyn VcovEstimator, ()> {
    static REG: OnceLock<Registry<dyn VcovEstimator, ()>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn VcovEstimator, ()>::new("covariance estimator")
            .with("firm", |_| {
                Ok(Box::new(OneWay {
                    name: "firm",
                    pick: |l| l.firm.clone(),
                }))
            })
            .with("time", |_| {
                Ok(Box::new(OneWay {
                    name: "time",
                    pick: |l| l.time.clone(),
                }))
            })
            .with("robust", |_| {
                Ok(Box::new(OneWay {
                    name: "robust",
                    pick: |l| Grouping::from_labels(&(0..l.firm.len()).collect::<Vec<_>>()),
                }))
            })
            .with("firm-time", |_| Ok(Box::new(TwoWay)))
    })
}

/// `c (X'X)⁻¹ (Σ_g s_g s_gᵀ) (X'X)⁻¹` with `s_g = Σ_{i∈g} x_i e_i` and
/// `c = G/(G−1) · (N−1)/(N−K)`.
fn one_way(x: &Matrix, resid: &[f64], bread: &Matrix, g: &Grouping) -> Matrix {
    let (n, k) = x.shape();
    let mut scores = Matrix::zeros(g.groups, k);
    for i in 0..n {
        for j in 0..k {
            scores[(g.ids[i], j)] += x[(i, j)] * resid[i];
        }
    }
    let meat = scores.transpose() * &scores;
    let gc = g.groups as f64;
    let c = gc / (gc - 1.0) * (n as f64 - 1.0) / (n as f64 - k as f64);
    linalg::symmetrize(&(bread * meat * bread * c))
}

/// One label set gives the one-way estimator; two give `V_A + V_B − V_{A∩B}`.
/// Fewer clusters than regressors only warns.
pub fn clustered_vcov(x: &Matrix, resid: &[f64], sets: &[Grouping]) -> Result<Vcov> {
    let (n, k) = x.shape();
    if resid.len() != n || sets.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(
            "residuals and cluster labels must match X rows".into(),
        ));
    }
    if sets.is_empty() || sets.len() > 2 {
        return Err(Error::InvalidSpec(
            "clustering needs one or two label sets".into(),
        ));
    }
    if n <= k {
        return Err(Error::InsufficientObservations { rows: n, needed: k });
    }
    let clusters: Vec<usize> = sets.iter().map(|s| s.groups).collect();
    if let Some(&g) = clusters.iter().find(|&&g| g < 2) {
        return Err(Error::InvalidSpec(format!(
            "clustered errors need at least two clusters, got {g}"
        )));
    }
    let mut warnings = Vec::new();
    for &g in &clusters {
        if g < k {
            warnings.push(format!(
                "FewerClustersThanRegressors: {g} clusters for {k} regressors"
            ));
        }
    }
    let bread = linalg::spd_inverse(&(x.transpose() * x))?;
    let first = one_way(x, resid, &bread, &sets[0]);
    if sets.len() == 1 {
        return Ok(Vcov {
            matrix: first,
            clusters,
            floored: false,
            warnings,
        });
    }
    let second = one_way(x, resid, &bread, &sets[1]);
    let pairs: Vec<(usize, usize)> = sets[0]
        .ids
        .iter()
        .copied()
        .zip(sets[1].ids.iter().copied())
        .collect();
    let both = one_way(x, resid, &bread, &Grouping::from_labels(&pairs));
    let mut matrix = &first + &second - &both;
    let mut floored = false;
    for j in 0..k {
        if matrix[(j, j)] < 0.0 {
            matrix[(j, j)] = first[(j, j)].max(second[(j, j)]);
            floored = true;
        }
    }
    if floored {
        warnings.push(
            "two-way variance had a negative diagonal; floored at the one-way maximum".into(),
        );
    }
    Ok(Vcov {
        matrix,
        clusters,
        floored,
        warnings,
    })
}
