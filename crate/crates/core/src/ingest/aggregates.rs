//! Quarterly aggregate controls (inflation, log GDP, log exchange rate).

use std::path::Path;

use super::calendar::Quarter;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateControls {
    pub start: Quarter,
    pub names: Vec<String>,
    /// `values[series][offset from start]`.
    pub values: Vec<Vec<f64>>,
}

impl AggregateControls {
    pub fn get(&self, series: usize, q: Quarter) -> Option<f64> {
        let offset = usize::try_from(q.index() - self.start.index()).ok()?;
        self.values[series].get(offset).copied()
    }

    /// Lags `1..=lags` of every series at `q`, series-major; `None` if any is missing.
    pub fn lagged(&self, q: Quarter, lags: usize) -> Option<Vec<f64>> {
        (0..self.names.len())
            .flat_map(|s| (1..=lags).map(move |l| (s, l)))
            .map(|(s, l)| self.get(s, q.offset(-(l as i32))))
            .collect()
    }

    pub fn lagged_names(&self, lags: usize) -> Vec<String> {
        self.names
            .iter()
            .flat_map(|n| (1..=lags).map(move |l| format!("{n}_l{l}")))
            .collect()
    }
}

/// Read `quarter,<series…>` with one row per consecutive quarter.
pub fn load_aggregate_controls(path: &Path) -> Result<AggregateControls> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "quarter" {
        return Err(Error::SchemaMismatch(
            "aggregate controls need `quarter` then series columns".into(),
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut values = vec![Vec::new(); names.len()];
    let mut start: Option<Quarter> = None;
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let q: Quarter = record[0].parse()?;
        let expected = start.map(|s| s.offset(line as i32));
        match expected {
            None => start = Some(q),
            Some(e) if e != q => {
                return Err(Error::InteriorMissing(format!(
                    "aggregate controls expected {e}, found {q}"
                )));
            }
            _ => {}
        }
        for (s, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::SchemaMismatch(format!("bad aggregate value `{field}` at {q}"))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite("aggregate controls"));
            }
            values[s].push(v);
        }
    }
    let start = start.ok_or(Error::EmptyInput("aggregate controls"))?;
    Ok(AggregateControls {
        start,
        names,
        values,
    })
}
