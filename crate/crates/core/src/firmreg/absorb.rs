//! Fixed-effect absorption by alternating projections.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Convergence threshold on the largest group-mean update, relative to the
/// column's largest absolute value.
pub const ABSORB_TOL: f64 = 1e-13;
pub const ABSORB_MAX_SWEEPS: usize = 100_000;

/// Dense group ids `0..groups` for one fixed-effect dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grouping {
    pub ids: Vec<usize>,
    pub groups: usize,
}

impl Grouping {
    pub fn from_labels<T: Eq + Hash + Clone>(labels: &[T]) -> Self {
        let mut index: HashMap<T, usize> = HashMap::new();
        let ids = labels
            .iter()
            .map(|l| {
                let next = index.len();
                *index.entry(l.clone()).or_insert(next)
            })
            .collect();
        Grouping {
            ids,
            groups: index.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Restrict to `rows` and renumber.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Grouping::from_labels(&rows.iter().map(|&r| self.ids[r]).collect::<Vec<_>>())
    }

    fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.groups];
        for &g in &self.ids {
            c[g] += 1;
        }
        c
    }
}

/// Rows surviving iterative removal of singleton groups in any dimension.
pub fn drop_singletons(sets: &[Grouping]) -> Vec<usize> {
    let n = sets.first().map_or(0, Grouping::len);
    let mut keep: Vec<usize> = (0..n).collect();
    loop {
        let subsets: Vec<Grouping> = sets.iter().map(|s| s.subset(&keep)).collect();
        let counts: Vec<Vec<usize>> = subsets.iter().map(Grouping::counts).collect();
        let before = keep.len();
        keep = keep
            .iter()
            .enumerate()
            .filter(|(i, _)| subsets.iter().zip(&counts).all(|(s, c)| c[s.ids[*i]] > 1))
            .map(|(_, &r)| r)
            .collect();
        if keep.len() == before {
            return keep;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Absorbed {
    /// Demeaned columns, in input order.
    pub columns: Vec<Vec<f64>>,
    /// Largest number of sweeps any column needed.
    pub iterations: usize,
}

/// Demean every column within the groups of every set, sweeping the sets in
/// turn until no group mean exceeds the tolerance.
pub fn absorb_fixed_effects(columns: &[Vec<f64>], sets: &[Grouping]) -> Result<Absorbed> {
    let n = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != n) || sets.iter().any(|s| s.len() != n) {
        return Err(Error::DimensionMismatch(
            "absorption columns and groups differ in length".into(),
        ));
    }
    let counts: Vec<Vec<usize>> = sets.iter().map(Grouping::counts).collect();
    let mut iterations = 0;
    let mut out = Vec::with_capacity(columns.len());
    for col in columns {
        let mut v = col.clone();
        let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mut sweeps = 0;
        if scale > 0.0 {
            loop {
                sweeps += 1;
                let mut largest = 0.0_f64;
                for (set, count) in sets.iter().zip(&counts) {
                    let mut sums = vec![0.0; set.groups];
                    for (x, &g) in v.iter().zip(&set.ids) {
                        sums[g] += x;
                    }
                    for (s, &c) in sums.iter_mut().zip(count) {
                        *s /= c as f64;
                        largest = largest.max(s.abs());
                    }
                    for (x, &g) in v.iter_mut().zip(&set.ids) {
                        *x -= sums[g];
                    }
                }
                if largest <= ABSORB_TOL * scale {
                    break;
                }
                if sweeps >= ABSORB_MAX_SWEEPS {
                    return Err(Error::InvalidSpec(format!(
                        "fixed-effect absorption did not converge in {ABSORB_MAX_SWEEPS} sweeps"
                    )));
                }
            }
        }
        iterations = iterations.max(sweeps);
        out.push(v);
    }
    Ok(Absorbed {
        columns: out,
        iterations,
    })
}
