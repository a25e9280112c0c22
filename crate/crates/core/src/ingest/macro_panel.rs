use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::calendar::{parse_date, Month};
use crate::error::{Error, Result};
use crate::format::num;

/// Country label marking a series shared by every country (US variables, the shock).
pub const GLOBAL_COUNTRY: &str = "*";

const MACRO_HEADER: [&str; 4] = ["country", "date", "variable", "value"];

/// Country × variable × month panel plus the exogenous shock series.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroPanel {
    pub countries: Vec<String>,
    /// Non-shock variables, in schema order.
    pub variables: Vec<String>,
    /// Contiguous monthly index.
    pub months: Vec<Month>,
    /// `values[country][variable][t]`.
    pub values: Vec<Vec<Vec<f64>>>,
    pub shock_name: String,
    pub shock: Vec<f64>,
    /// Human-readable notes on months trimmed at the edges.
    pub coverage_gaps: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacroSchema {
    pub variables: Vec<String>,
    pub shock_variable: String,
    pub start: Option<Month>,
    pub end: Option<Month>,
    /// Restrict to these countries (all non-global countries when absent).
    pub countries: Option<Vec<String>>,
}

impl MacroPanel {
    pub fn new(
        countries: Vec<String>,
        variables: Vec<String>,
        start: Month,
        values: Vec<Vec<Vec<f64>>>,
        shock_name: impl Into<String>,
        shock: Vec<f64>,
    ) -> Result<Self> {
        let t = shock.len();
        if values.len() != countries.len() {
            return Err(Error::DimensionMismatch(
                "one value block per country".into(),
            ));
        }
        for block in &values {
            if block.len() != variables.len() || block.iter().any(|s| s.len() != t) {
                return Err(Error::DimensionMismatch(
                    "every series must span the shock's months".into(),
                ));
            }
            if block.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::InteriorMissing("non-finite panel value".into()));
            }
        }
        let months = (0..t as i32)
            .map(|i| Month::from_index(start.index() + i))
            .collect();
        Ok(Self {
            countries,
            variables,
            months,
            values,
            shock_name: shock_name.into(),
            shock,
            coverage_gaps: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn has_variable(&self, name: &str) -> bool {
        name == self.shock_name || self.variables.iter().any(|v| v == name)
    }

    /// Series for `name` in country `c` (the shock is shared by all countries).
    pub fn series(&self, c: usize, name: &str) -> Option<&[f64]> {
        if name == self.shock_name {
            return Some(&self.shock);
        }
        let v = self.variables.iter().position(|x| x == name)?;
        Some(&self.values[c][v])
    }

    pub fn select_countries(&self, ids: &[String]) -> Result<MacroPanel> {
        if ids.is_empty() {
            return Err(Error::EmptyPartition("no countries selected".into()));
        }
        let mut values = Vec::with_capacity(ids.len());
        for id in ids {
            let c = self
                .countries
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| Error::SchemaMismatch(format!("unknown country `{id}`")))?;
            values.push(self.values[c].clone());
        }
        Ok(MacroPanel {
            countries: ids.to_vec(),
            values,
            ..self.clone()
        })
    }

    /// Write in the long `country,date,variable,value` layout; the shock goes
    /// under the global country label.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{}", MACRO_HEADER.join(","))?;
        for (t, m) in self.months.iter().enumerate() {
            writeln!(
                out,
                "{GLOBAL_COUNTRY},{m}-01,{},{}",
                self.shock_name,
                num(self.shock[t])
            )?;
        }
        for (c, country) in self.countries.iter().enumerate() {
            for (v, var) in self.variables.iter().enumerate() {
                for (t, m) in self.months.iter().enumerate() {
                    writeln!(out, "{country},{m}-01,{var},{}", num(self.values[c][v][t]))?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }
}

type SeriesObs = BTreeMap<Month, (Option<u32>, f64)>;

/// Load a long-format macro CSV into a balanced panel over the common window.
pub fn load_macro_panel(path: &Path, schema: &MacroSchema) -> Result<MacroPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    read_macro_panel(&mut reader, schema)
}

pub fn read_macro_panel<R: std::io::Read>(
    reader: &mut csv::Reader<R>,
    schema: &MacroSchema,
) -> Result<MacroPanel> {
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != MACRO_HEADER {
        return Err(Error::SchemaMismatch(format!(
            "expected header `{}`, found `{}`",
            MACRO_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    if schema.shock_variable.is_empty() {
        return Err(Error::SchemaMismatch(
            "schema names no shock variable".into(),
        ));
    }

    let mut obs: HashMap<(String, String), SeriesObs> = HashMap::new();
    let mut country_order: Vec<String> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::SchemaMismatch(format!(
                "row {} has {} fields",
                line + 2,
                record.len()
            )));
        }
        let country = record[0].to_string();
        let variable = record[2].to_string();
        let raw = record[3].trim();
        if country != GLOBAL_COUNTRY && !country.is_empty() && !country_order.contains(&country) {
            country_order.push(country.clone());
        }
        let (month, day) = parse_date(&record[1])?;
        if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
            continue;
        }
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::SchemaMismatch(format!("row {}: bad value `{raw}`", line + 2)))?;
        let country = if country.is_empty() {
            GLOBAL_COUNTRY.to_string()
        } else {
            country
        };
        let series = obs.entry((country.clone(), variable.clone())).or_default();
        if let Some((prev_day, _)) = series.get(&month) {
            return Err(if *prev_day == day {
                Error::SchemaMismatch(format!(
                    "duplicated row ({country}, {}, {variable})",
                    &record[1]
                ))
            } else {
                Error::NonMonthlyDates(format!(
                    "({country}, {variable}) has several observations in {month}"
                ))
            });
        }
        series.insert(month, (day, value));
    }

    let countries = match &schema.countries {
        Some(wanted) => {
            for c in wanted {
                if !country_order.contains(c) {
                    return Err(Error::SchemaMismatch(format!("country `{c}` not in file")));
                }
            }
            wanted.clone()
        }
        None => country_order,
    };
    if countries.is_empty() {
        return Err(Error::SchemaMismatch("no country rows in file".into()));
    }

    let shock_obs = obs
        .get(&(GLOBAL_COUNTRY.to_string(), schema.shock_variable.clone()))
        .ok_or_else(|| {
            Error::SchemaMismatch(format!(
                "shock `{}` must be given under country `{GLOBAL_COUNTRY}`",
                schema.shock_variable
            ))
        })?;
    let mut spans: Vec<(String, &SeriesObs)> = vec![(schema.shock_variable.clone(), shock_obs)];
    let mut per_country: Vec<Vec<&SeriesObs>> = Vec::new();
    for c in &countries {
        let mut row = Vec::new();
        for v in &schema.variables {
            let s = obs
                .get(&(c.clone(), v.clone()))
                .or_else(|| obs.get(&(GLOBAL_COUNTRY.to_string(), v.clone())))
                .ok_or_else(|| {
                    Error::SchemaMismatch(format!("variable `{v}` missing for `{c}`"))
                })?;
            spans.push((format!("{c}/{v}"), s));
            row.push(s);
        }
        per_country.push(row);
    }

    let mut start = schema.start;
    let mut end = schema.end;
    let mut gaps = Vec::new();
    for (label, s) in &spans {
        let first = *s
            .keys()
            .next()
            .ok_or_else(|| Error::SchemaMismatch(format!("`{label}` is empty")))?;
        let last = *s.keys().next_back().expect("nonempty");
        let expected = (last.index() - first.index() + 1) as usize;
        if s.len() != expected {
            let hole = (first.index()..=last.index())
                .map(Month::from_index)
                .find(|m| !s.contains_key(m))
                .expect("a missing month exists");
            return Err(Error::InteriorMissing(format!(
                "`{label}` has no value for {hole}"
            )));
        }
        if let Some(st) = start {
            if first > st {
                gaps.push(format!("`{label}` starts {first}, after {st}"));
            }
        }
        if let Some(en) = end {
            if last < en {
                gaps.push(format!("`{label}` ends {last}, before {en}"));
            }
        }
        start = Some(start.map_or(first, |st| st.max(first)));
        end = Some(end.map_or(last, |en| en.min(last)));
    }
    let (start, end) = (
        start.expect("at least one series"),
        end.expect("at least one series"),
    );
    if start > end {
        return Err(Error::SchemaMismatch(format!(
            "no common coverage ({start} > {end})"
        )));
    }
    let months: Vec<Month> = (start.index()..=end.index())
        .map(Month::from_index)
        .collect();
    let take = |s: &SeriesObs| -> Vec<f64> { months.iter().map(|m| s[m].1).collect() };
    let values = per_country
        .iter()
        .map(|row| row.iter().map(|s| take(s)).collect())
        .collect();

    Ok(MacroPanel {
        countries,
        variables: schema.variables.clone(),
        shock_name: schema.shock_variable.clone(),
        shock: take(shock_obs),
        months,
        values,
        coverage_gaps: gaps,
    })
}
