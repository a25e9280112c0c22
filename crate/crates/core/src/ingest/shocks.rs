//! Monetary-policy shock series: event aggregation and futures-based surprises.

use std::path::Path;
use std::sync::OnceLock;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::calendar::{Month, Quarter};
use crate::error::{Error, Result};
use crate::linalg;
use crate::registry::Registry;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Month,
    Quarter,
}

impl Frequency {
    pub fn period_of(self, date: NaiveDate) -> i32 {
        match self {
            Frequency::Month => Month::of(date).index(),
            Frequency::Quarter => Month::of(date).quarter().index(),
        }
    }

    /// Median for monthly targets, mean for quarterly ones.
    pub fn default_aggregator(self) -> &'static str {
        match self {
            Frequency::Month => "median",
            Frequency::Quarter => "mean",
        }
    }
}

/// Regular series indexed by [`Month::index`] or [`Quarter::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodSeries {
    pub frequency: Frequency,
    pub start: i32,
    pub values: Vec<f64>,
}

impl PeriodSeries {
    pub fn get(&self, period: i32) -> Option<f64> {
        let offset = usize::try_from(period - self.start).ok()?;
        self.values.get(offset).copied()
    }

    pub fn at_quarter(&self, q: Quarter) -> Option<f64> {
        debug_assert_eq!(self.frequency, Frequency::Quarter);
        self.get(q.index())
    }

    pub fn end(&self) -> i32 {
        self.start + self.values.len() as i32 - 1
    }
}

pub trait ShockAggregator: Send + Sync {
    fn name(&self) -> &'static str;
    /// Combine the nonempty set of shocks that fall in one period.
    fn aggregate(&self, values: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct MedianShock;

#[derive(Debug, Clone, Copy)]
pub struct MeanShock;

impl ShockAggregator for MedianShock {
    fn name(&self) -> &'static str {
        "median"
    }

    fn aggregate(&self, values: &[f64]) -> f64 {
        linalg::median(values).unwrap_or(0.0)
    }
}

impl ShockAggregator for MeanShock {
    fn name(&self) -> &'static str {
        "mean"
    }

    fn aggregate(&self, values: &[f64]) -> f64 {
        linalg::mean(values)
    }
}

pub fn aggregators() -> &'static Registry<dyn ShockAggregator, ()> {
    static REG: OnceLock<Registry<dyn ShockAggregator, ()>> = OnceLock::new();
    REG.get_or_init(|| {
        Registry::<dyn ShockAggregator, ()>::new("shock aggregator")
            .with("median", |_| Ok(Box::new(MedianShock)))
            .with("mean", |_| Ok(Box::new(MeanShock)))
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatedShock {
    pub date: NaiveDate,
    pub value: f64,
}

/// Aggregate dated shocks onto the periods `first..=last`; periods without an
/// announcement carry 0.
pub fn aggregate_shocks(
    events: &[DatedShock],
    target: Frequency,
    method: &dyn ShockAggregator,
    first: i32,
    last: i32,
) -> PeriodSeries {
    let len = (last - first + 1).max(0) as usize;
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); len];
    for e in events {
        let p = target.period_of(e.date);
        if (first..=last).contains(&p) {
            buckets[(p - first) as usize].push(e.value);
        }
    }
    PeriodSeries {
        frequency: target,
        start: first,
        values: buckets
            .iter()
            .map(|b| {
                if b.is_empty() {
                    0.0
                } else {
                    method.aggregate(b)
                }
            })
            .collect(),
    }
}

/// Futures quotes bracketing one policy announcement.
#[derive(Clone, Debug, PartialEq)]
pub struct ShockEvent {
    pub timestamp: NaiveDateTime,
    pub value_before: Option<f64>,
    pub value_after: Option<f64>,
}

/// Observation window around an announcement, in minutes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurpriseWindow {
    pub minutes_before: i64,
    pub minutes_after: i64,
}

impl Default for SurpriseWindow {
    fn default() -> Self {
        Self {
            minutes_before: 10,
            minutes_after: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FffConvention {
    /// `after − before` on the contract price.
    #[default]
    Raw,
    /// Implied-rate change `(100 − after) − (100 − before)` scaled by
    /// `D / (D − d + 1)`, with `D` days in the month and `d` the announcement day.
    RateScaled,
}

pub fn compute_fff_surprise(event: &ShockEvent, convention: FffConvention) -> Result<f64> {
    let before = event.value_before.ok_or_else(|| {
        Error::MissingTick(format!("no pre-announcement quote at {}", event.timestamp))
    })?;
    let after = event.value_after.ok_or_else(|| {
        Error::MissingTick(format!("no post-announcement quote at {}", event.timestamp))
    })?;
    Ok(match convention {
        FffConvention::Raw => after - before,
        FffConvention::RateScaled => {
            let date = event.timestamp.date();
            let days = Month::of(date).days() as f64;
            let remaining = days - date.day() as f64 + 1.0;
            ((100.0 - after) - (100.0 - before)) * days / remaining
        }
    })
}

/// Build an event from a tick history: the last quote at or before `t − before`
/// and the last quote in `(t, t + after]`.
pub fn event_from_ticks(
    timestamp: NaiveDateTime,
    ticks: &[(NaiveDateTime, f64)],
    window: SurpriseWindow,
) -> ShockEvent {
    let lo = timestamp - Duration::minutes(window.minutes_before);
    let hi = timestamp + Duration::minutes(window.minutes_after);
    let value_before = ticks
        .iter()
        .filter(|(t, _)| *t <= lo)
        .max_by_key(|(t, _)| *t)
        .map(|(_, p)| *p);
    let value_after = ticks
        .iter()
        .filter(|(t, _)| *t > timestamp && *t <= hi)
        .max_by_key(|(t, _)| *t)
        .map(|(_, p)| *p);
    ShockEvent {
        timestamp,
        value_before,
        value_after,
    }
}

pub fn parse_timestamp(s: &str) -> Result<NaiveDateTime> {
    let s = s.trim();
    for fmt in [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight exists"));
    }
    Err(Error::SchemaMismatch(format!(
        "unparseable timestamp `{s}`"
    )))
}

/// Read `timestamp,value_before,value_after`; empty price fields mean a missing tick.
pub fn load_shock_events(path: &Path) -> Result<Vec<ShockEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "value_before", "value_after"] {
        return Err(Error::SchemaMismatch(
            "shock events need header `timestamp,value_before,value_after`".into(),
        ));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| Error::SchemaMismatch(format!("bad price `{s}`")))
        }
    };
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record?;
        events.push(ShockEvent {
            timestamp: parse_timestamp(&record[0])?,
            value_before: parse_opt(&record[1])?,
            value_after: parse_opt(&record[2])?,
        });
    }
    Ok(events)
}

pub fn surprises(events: &[ShockEvent], convention: FffConvention) -> Result<Vec<DatedShock>> {
    events
        .iter()
        .map(|e| {
            Ok(DatedShock {
                date: e.timestamp.date(),
                value: compute_fff_surprise(e, convention)?,
            })
        })
        .collect()
}
