//! Hot-day exposure: per-node counts of days whose maximum temperature
//! exceeds a threshold, period deltas against a baseline, and ensemble
//! statistics across climate models.

mod ensemble;
mod grid;
mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::NodeId;

pub use ensemble::{ensemble_stats, summarize, top_k_frequency, EnsembleSummary, StatTarget, SummaryStats};
pub(crate) use grid::haversine_km;
pub use grid::{map_nodes_to_grid, GridCell, RegularGrid};
pub use io::{
    read_daily_series, read_grid_series, read_profiles, write_deltas_csv, write_ensemble_csv,
    write_profiles_csv, GridSeries,
};

/// Hot days are days with `tmax > DEFAULT_THRESHOLD_C`.
pub const DEFAULT_THRESHOLD_C: f64 = 35.0;

#[derive(Debug, Error)]
pub enum ClimateError {
    #[error("threshold must be finite, got {0}")]
    NonFiniteThreshold(f64),
    #[error("series for model {model} node {node}: {message}")]
    InvalidSeries { model: String, node: NodeId, message: String },
    #[error("invalid date `{0}` (expected YYYY-MM-DD)")]
    InvalidDate(String),
    #[error("invalid period `{0}` (expected YYYY-YYYY with start <= end)")]
    InvalidPeriod(String),
    #[error("profiles disagree on {what}: {left} vs {right}")]
    ProfileMismatch { what: &'static str, left: String, right: String },
    #[error("node {0} is present in one input but not the other")]
    NodeSetMismatch(NodeId),
    #[error("at least one model is required")]
    NoModels,
    #[error("ranking of {len} entries is shorter than k = {k}")]
    RankingTooShort { len: usize, k: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("node {node} at ({lat}, {lon}) lies outside the grid")]
    OutsideGrid { node: NodeId, lat: f64, lon: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("{table} line {line}: {message}")]
    MalformedRow { table: &'static str, line: u64, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A calendar day taken at face value: model calendars with 360 or 365
/// days per year are accepted as-is, so only ranges are checked
/// (month 1..=12, day 1..=31).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDay {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CalendarDay {
    pub fn new(year: i32, month: u8, day: u8) -> Option<Self> {
        ((1..=12).contains(&month) && (1..=31).contains(&day)).then_some(CalendarDay { year, month, day })
    }
}

impl fmt::Display for CalendarDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for CalendarDay {
    type Err = ClimateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClimateError::InvalidDate(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let (y, m, d) = (parts.next(), parts.next(), parts.next());
        let (Some(y), Some(m), Some(d)) = (y, m, d) else {
            return Err(bad());
        };
        if y.len() != 4 || m.len() != 2 || d.len() != 2 {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        let day = d.parse().map_err(|_| bad())?;
        CalendarDay::new(year, month, day).ok_or_else(bad)
    }
}

/// Daily maximum temperature (°C) for one node under one climate model.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyTmaxSeries {
    model: String,
    node: NodeId,
    days: Vec<CalendarDay>,
    tmax: Vec<f64>,
}

impl DailyTmaxSeries {
    /// `days` must be strictly increasing and every value finite.
    pub fn new(
        model: impl Into<String>,
        node: NodeId,
        days: Vec<CalendarDay>,
        tmax: Vec<f64>,
    ) -> Result<Self, ClimateError> {
        let model = model.into();
        let invalid = |message: String| ClimateError::InvalidSeries { model: model.clone(), node, message };
        if days.len() != tmax.len() {
            return Err(invalid(format!("{} dates but {} values", days.len(), tmax.len())));
        }
        if let Some(w) = days.windows(2).find(|w| w[0] >= w[1]) {
            return Err(invalid(format!("dates not strictly increasing at {}", w[1])));
        }
        if let Some((d, v)) = days.iter().zip(&tmax).find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("non-finite tmax {v} on {d}")));
        }
        Ok(DailyTmaxSeries { model, node, days, tmax })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn days(&self) -> &[CalendarDay] {
        &self.days
    }

    pub fn tmax(&self) -> &[f64] {
        &self.tmax
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    /// Index range of days falling inside `period`.
    fn period_range(&self, period: &PeriodSpec) -> std::ops::Range<usize> {
        let start = self.days.partition_point(|d| d.year < period.start_year);
        let end = self.days.partition_point(|d| d.year <= period.end_year);
        start..end.max(start)
    }

    pub fn days_in(&self, period: &PeriodSpec) -> usize {
        self.period_range(period).len()
    }
}

/// Inclusive range of calendar years.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PeriodSpec {
    pub start_year: i32,
    pub end_year: i32,
}

impl PeriodSpec {
    pub const BASELINE: PeriodSpec = PeriodSpec { start_year: 1991, end_year: 2020 };
    pub const NEAR_FUTURE: PeriodSpec = PeriodSpec { start_year: 2021, end_year: 2050 };
    pub const FAR_FUTURE: PeriodSpec = PeriodSpec { start_year: 2051, end_year: 2080 };

    pub fn new(start_year: i32, end_year: i32) -> Result<Self, ClimateError> {
        if start_year > end_year {
            return Err(ClimateError::InvalidPeriod(format!("{start_year}-{end_year}")));
        }
        Ok(PeriodSpec { start_year, end_year })
    }

    /// Label in `YYYY-YYYY` form, also used in file names.
    pub fn label(&self) -> String {
        format!("{}-{}", self.start_year, self.end_year)
    }

    pub fn years(&self) -> u32 {
        (self.end_year - self.start_year + 1) as u32
    }

    pub fn contains_year(&self, year: i32) -> bool {
        (self.start_year..=self.end_year).contains(&year)
    }
}

impl fmt::Display for PeriodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for PeriodSpec {
    type Err = ClimateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClimateError::InvalidPeriod(s.to_string());
        let (a, b) = s.trim().split_once('-').ok_or_else(bad)?;
        let start = a.trim().parse().map_err(|_| bad())?;
        let end = b.trim().parse().map_err(|_| bad())?;
        PeriodSpec::new(start, end).map_err(|_| bad())
    }
}

impl TryFrom<String> for PeriodSpec {
    type Error = ClimateError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<PeriodSpec> for String {
    fn from(p: PeriodSpec) -> String {
        p.label()
    }
}

/// Number of days in `period` with `tmax > threshold_c` (strict).
pub fn count_hot_days(series: &DailyTmaxSeries, period: &PeriodSpec, threshold_c: f64) -> Result<u32, ClimateError> {
    if !threshold_c.is_finite() {
        return Err(ClimateError::NonFiniteThreshold(threshold_c));
    }
    let range = series.period_range(period);
    Ok(series.tmax[range].iter().filter(|&&t| t > threshold_c).count() as u32)
}

/// Total hot days per node for one model and period.
#[derive(Debug, Clone, PartialEq)]
pub struct HotDayProfile {
    pub model: String,
    pub period: PeriodSpec,
    pub counts: BTreeMap<NodeId, u32>,
    pub threshold_c: f64,
}

impl HotDayProfile {
    /// Builds a profile from every series of one model. Series of other
    /// models are rejected.
    pub fn from_series<'a>(
        model: &str,
        series: impl IntoIterator<Item = &'a DailyTmaxSeries>,
        period: &PeriodSpec,
        threshold_c: f64,
    ) -> Result<Self, ClimateError> {
        let mut counts = BTreeMap::new();
        for s in series {
            if s.model() != model {
                return Err(ClimateError::ProfileMismatch {
                    what: "model",
                    left: model.to_string(),
                    right: s.model().to_string(),
                });
            }
            counts.insert(s.node(), count_hot_days(s, period, threshold_c)?);
        }
        Ok(HotDayProfile { model: model.to_string(), period: period.clone(), counts, threshold_c })
    }

    /// Mean hot days per year over the period.
    pub fn annual_mean(&self) -> BTreeMap<NodeId, f64> {
        let years = f64::from(self.period.years());
        self.counts.iter().map(|(&id, &c)| (id, f64::from(c) / years)).collect()
    }
}

/// `future - baseline` per node; models and thresholds must match.
pub fn hot_day_delta(future: &HotDayProfile, baseline: &HotDayProfile) -> Result<BTreeMap<NodeId, i64>, ClimateError> {
    if future.model != baseline.model {
        return Err(ClimateError::ProfileMismatch {
            what: "model",
            left: future.model.clone(),
            right: baseline.model.clone(),
        });
    }
    if future.threshold_c != baseline.threshold_c {
        return Err(ClimateError::ProfileMismatch {
            what: "threshold_c",
            left: future.threshold_c.to_string(),
            right: baseline.threshold_c.to_string(),
        });
    }
    if let Some(id) = future
        .counts
        .keys()
        .find(|id| !baseline.counts.contains_key(id))
        .or_else(|| baseline.counts.keys().find(|id| !future.counts.contains_key(id)))
    {
        return Err(ClimateError::NodeSetMismatch(*id));
    }
    Ok(future
        .counts
        .iter()
        .map(|(&id, &f)| (id, i64::from(f) - i64::from(baseline.counts[&id])))
        .collect())
}
