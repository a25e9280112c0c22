//! Firm-quarter balance-sheet panel and derived regressors.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calendar::Quarter;
use crate::error::{Error, Result};
use crate::format::num;
use crate::linalg;

const FIRM_HEADER: [&str; 11] = [
    "firm_id",
    "sector",
    "quarter",
    "capital",
    "assets",
    "liab_total",
    "liab_short",
    "liab_long",
    "liab_bank",
    "fc_liab",
    "fc_assets",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirmRecord {
    pub firm_id: String,
    pub sector: String,
    pub quarter: Quarter,
    pub capital: Option<f64>,
    pub assets: Option<f64>,
    pub liab_total: Option<f64>,
    pub liab_short: Option<f64>,
    pub liab_long: Option<f64>,
    pub liab_bank: Option<f64>,
    pub fc_liab: Option<f64>,
    pub fc_assets: Option<f64>,
}

/// Which liabilities enter the leverage ratio.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeverageDef {
    #[default]
    Total,
    Short,
    Long,
    Bank,
}

impl LeverageDef {
    fn liabilities(self, r: &FirmRecord) -> Option<f64> {
        match self {
            LeverageDef::Total => r.liab_total,
            LeverageDef::Short => r.liab_short,
            LeverageDef::Long => r.liab_long,
            LeverageDef::Bank => r.liab_bank,
        }
    }
}

/// Per-row data-quality flags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RowFlags(u8);

impl RowFlags {
    /// Assets non-positive or a needed balance-sheet item missing.
    pub const UNDEFINED_LEVERAGE: u8 = 1;
    /// Previous quarter absent, so no growth or lag is defined.
    pub const BROKEN_CHAIN: u8 = 1 << 1;
    /// Capital non-positive or missing at a growth endpoint.
    pub const UNDEFINED_GROWTH: u8 = 1 << 2;
    /// Firm has fewer than three leverage observations.
    pub const FEW_OBSERVATIONS: u8 = 1 << 3;

    pub fn set(&mut self, bit: u8) {
        self.0 |= bit;
    }

    pub fn has(self, bit: u8) -> bool {
        self.0 & bit != 0
    }

    pub fn is_clean(self) -> bool {
        self.0 == 0
    }
}

/// Columns derived from the raw records, aligned with `FirmPanel::records`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Derived {
    pub leverage_def: LeverageDef,
    pub leverage: Vec<Option<f64>>,
    pub mismatch: Vec<Option<f64>>,
    /// `growth[j][row] = log k_{t+j} − log k_{t−1}`.
    pub growth: Vec<Vec<Option<f64>>>,
    pub lagged_leverage: Vec<Option<f64>>,
    pub lagged_asset_growth: Vec<Option<f64>>,
    pub lagged_mismatch: Vec<Option<f64>>,
    /// `log k_{t−1} − log k_{t−2}`.
    pub lagged_investment: Vec<Option<f64>>,
    /// `(l_t − mean_i l) / sd_i l`.
    pub leverage_z: Vec<Option<f64>>,
    /// `(l_{t−1} − mean_i l) / sd_i l`, the interaction regressor.
    pub lagged_leverage_z: Vec<Option<f64>>,
    pub flags: Vec<RowFlags>,
    pub excluded_firms: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FirmPanel {
    /// Sorted by `(firm_id, quarter)`, one row per pair.
    pub records: Vec<FirmRecord>,
    pub derived: Derived,
}

impl FirmPanel {
    pub fn new(mut records: Vec<FirmRecord>) -> Result<Self> {
        records.sort_by(|a, b| (&a.firm_id, a.quarter).cmp(&(&b.firm_id, b.quarter)));
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert((r.firm_id.as_str(), r.quarter)) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicated firm-quarter ({}, {})",
                    r.firm_id, r.quarter
                )));
            }
        }
        Ok(Self {
            records,
            derived: Derived::default(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn horizons(&self) -> usize {
        self.derived.growth.len()
    }

    /// Row holding the same firm `offset` quarters away, if observed.
    pub fn shifted(&self, row: usize, offset: i32) -> Option<usize> {
        let target = row as i64 + offset as i64;
        if target < 0 || target as usize >= self.records.len() {
            return None;
        }
        let (r, t) = (&self.records[row], &self.records[target as usize]);
        (t.firm_id == r.firm_id && t.quarter == r.quarter.offset(offset)).then_some(target as usize)
    }

    pub fn firm_rows(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.firm_id.as_str()).or_default().push(i);
        }
        map
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", FIRM_HEADER.join(","))?;
        let f = |v: Option<f64>| v.map(num).unwrap_or_default();
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.firm_id,
                r.sector,
                r.quarter,
                f(r.capital),
                f(r.assets),
                f(r.liab_total),
                f(r.liab_short),
                f(r.liab_long),
                f(r.liab_bank),
                f(r.fc_liab),
                f(r.fc_assets)
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn load_firm_panel(path: &Path) -> Result<FirmPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != FIRM_HEADER {
        return Err(Error::SchemaMismatch(format!(
            "expected firm header `{}`",
            FIRM_HEADER.join(",")
        )));
    }
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<FirmRecord>, _>>()?;
    FirmPanel::new(records)
}

fn positive(v: Option<f64>) -> Option<f64> {
    v.filter(|x| *x > 0.0 && x.is_finite())
}

/// Add growth, leverage, mismatch and lagged controls for horizons `0..=max_horizon`.
pub fn build_firm_regressors(
    panel: &FirmPanel,
    leverage_def: LeverageDef,
    max_horizon: usize,
) -> FirmPanel {
    let n = panel.len();
    let mut d = Derived {
        leverage_def,
        flags: vec![RowFlags::default(); n],
        ..Derived::default()
    };

    for (i, r) in panel.records.iter().enumerate() {
        let assets = positive(r.assets);
        let lev = assets.zip(leverage_def.liabilities(r)).map(|(a, l)| l / a);
        let mis = assets.and_then(|a| Some((r.fc_liab? - r.fc_assets?) / a));
        if lev.is_none() {
            d.flags[i].set(RowFlags::UNDEFINED_LEVERAGE);
        }
        d.leverage.push(lev);
        d.mismatch.push(mis);
    }

    let log_k = |i: usize| positive(panel.records[i].capital).map(f64::ln);
    let log_a = |i: usize| positive(panel.records[i].assets).map(f64::ln);
    d.growth = vec![vec![None; n]; max_horizon + 1];
    for i in 0..n {
        let prev = panel.shifted(i, -1);
        if prev.is_none() {
            d.flags[i].set(RowFlags::BROKEN_CHAIN);
        }
        let base = prev.and_then(log_k);
        if prev.is_some() && base.is_none() {
            d.flags[i].set(RowFlags::UNDEFINED_GROWTH);
        }
        for j in 0..=max_horizon {
            let lead = panel.shifted(i, j as i32).and_then(log_k);
            d.growth[j][i] = base.zip(lead).map(|(b, l)| l - b);
        }
        if prev.is_some() && d.growth[0][i].is_none() {
            d.flags[i].set(RowFlags::UNDEFINED_GROWTH);
        }
        let prev2 = prev.and_then(|p| panel.shifted(p, -1));
        d.lagged_leverage.push(prev.and_then(|p| d.leverage[p]));
        d.lagged_mismatch.push(prev.and_then(|p| d.mismatch[p]));
        d.lagged_asset_growth.push(
            prev.and_then(log_a)
                .zip(prev2.and_then(log_a))
                .map(|(a1, a2)| a1 - a2),
        );
        d.lagged_investment.push(
            prev.and_then(log_k)
                .zip(prev2.and_then(log_k))
                .map(|(k1, k2)| k1 - k2),
        );
    }
    d.leverage_z = vec![None; n];
    d.lagged_leverage_z = vec![None; n];
    FirmPanel {
        records: panel.records.clone(),
        derived: d,
    }
}

/// Minimum observations for a firm's leverage to be standardized.
pub const MIN_FIRM_OBSERVATIONS: usize = 3;

/// Firm-by-firm standardization of leverage (sample sd, `n − 1`). Firms with
/// fewer than three observations are flagged and left without a z-score.
pub fn standardize_leverage(panel: &FirmPanel) -> Result<FirmPanel> {
    if panel.derived.leverage.len() != panel.len() {
        return Err(Error::InvalidSpec(
            "build_firm_regressors must run before standardize_leverage".into(),
        ));
    }
    let mut out = panel.clone();
    let d = &mut out.derived;
    d.excluded_firms.clear();
    d.leverage_z = vec![None; panel.len()];
    d.lagged_leverage_z = vec![None; panel.len()];
    for (firm, rows) in panel.firm_rows() {
        let values: Vec<f64> = rows.iter().filter_map(|&i| d.leverage[i]).collect();
        if values.len() < MIN_FIRM_OBSERVATIONS {
            for &i in &rows {
                d.flags[i].set(RowFlags::FEW_OBSERVATIONS);
            }
            d.excluded_firms.push(firm.to_string());
            continue;
        }
        let mean = linalg::mean(&values);
        let sd = linalg::sample_sd(&values);
        if !(sd > f64::EPSILON * mean.abs().max(1.0)) {
            return Err(Error::ZeroVariance {
                firm: firm.to_string(),
            });
        }
        for &i in &rows {
            d.leverage_z[i] = d.leverage[i].map(|l| (l - mean) / sd);
            d.lagged_leverage_z[i] = d.lagged_leverage[i].map(|l| (l - mean) / sd);
        }
    }
    Ok(out)
}

/// Clamp every growth horizon to its `[lower, upper]` percentiles (in `[0, 1]`).
pub fn winsorize_growth(panel: &FirmPanel, lower: f64, upper: f64) -> Result<FirmPanel> {
    if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower >= upper {
        return Err(Error::InvalidSpec(format!(
            "bad winsorization bounds [{lower}, {upper}]"
        )));
    }
    let mut out = panel.clone();
    for col in &mut out.derived.growth {
        let values: Vec<f64> = col.iter().flatten().copied().collect();
        if values.is_empty() {
            continue;
        }
        let q = linalg::quantiles(&values, &[lower, upper])?;
        for v in col.iter_mut().flatten() {
            *v = v.clamp(q[0], q[1]);
        }
    }
    Ok(out)
}
