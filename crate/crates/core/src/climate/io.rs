use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{CalendarDay, ClimateError, DailyTmaxSeries, EnsembleSummary, GridCell, HotDayProfile, PeriodSpec, RegularGrid};
use crate::network::{NodeId, NodeRecord};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input)
}

fn columns<R: Read>(
    r: &mut csv::Reader<R>,
    table: &'static str,
    names: &[&str],
) -> Result<Vec<usize>, ClimateError> {
    let headers = r.headers().map_err(|e| row_error(table, e))?.clone();
    names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| ClimateError::MalformedRow {
                table,
                line: 1,
                message: format!("missing column `{name}`"),
            })
        })
        .collect()
}

fn row_error(table: &'static str, e: csv::Error) -> ClimateError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    ClimateError::MalformedRow { table, line, message: e.to_string() }
}

struct Row<'a> {
    table: &'static str,
    record: &'a csv::StringRecord,
    idx: &'a [usize],
}

impl Row<'_> {
    fn line(&self) -> u64 {
        self.record.position().map(|p| p.line()).unwrap_or(0)
    }

    fn raw(&self, i: usize) -> &str {
        self.record.get(self.idx[i]).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, i: usize, what: &str) -> Result<T, ClimateError> {
        let raw = self.raw(i);
        raw.parse().map_err(|_| ClimateError::MalformedRow {
            table: self.table,
            line: self.line(),
            message: format!("invalid {what} `{raw}`"),
        })
    }
}

type RawSeries = BTreeMap<CalendarDay, f64>;

fn insert_day(
    group: &mut RawSeries,
    day: CalendarDay,
    value: f64,
    table: &'static str,
    line: u64,
) -> Result<(), ClimateError> {
    if group.insert(day, value).is_some() {
        return Err(ClimateError::MalformedRow { table, line, message: format!("duplicate date {day}") });
    }
    Ok(())
}

fn finish_series(model: &str, node: NodeId, raw: RawSeries) -> Result<DailyTmaxSeries, ClimateError> {
    let (days, tmax) = raw.into_iter().unzip();
    DailyTmaxSeries::new(model, node, days, tmax)
}

/// Reads the per-node daily series CSV (`model,node_id,date,tmax_c`).
/// Rows may come in any order; they are grouped by (model, node) and
/// sorted by date.
pub fn read_daily_series<R: Read>(input: R) -> Result<Vec<DailyTmaxSeries>, ClimateError> {
    const TABLE: &str = "daily series";
    let mut r = reader(input);
    let idx = columns(&mut r, TABLE, &["model", "node_id", "date", "tmax_c"])?;
    let mut groups: BTreeMap<(String, NodeId), RawSeries> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while r.read_record(&mut record).map_err(|e| row_error(TABLE, e))? {
        let row = Row { table: TABLE, record: &record, idx: &idx };
        let node: NodeId = row.parse(1, "node id")?;
        let day: CalendarDay = row.parse(2, "date")?;
        let tmax: f64 = row.parse(3, "tmax")?;
        let group = groups.entry((row.raw(0).to_string(), node)).or_default();
        insert_day(group, day, tmax, TABLE, row.line())?;
    }
    groups.into_iter().map(|((model, node), raw)| finish_series(&model, node, raw)).collect()
}

/// Daily series on a regular grid, keyed by (model, cell).
#[derive(Debug, Clone)]
pub struct GridSeries {
    pub grid: RegularGrid,
    cells: BTreeMap<(String, GridCell), RawSeries>,
}

impl GridSeries {
    pub fn models(&self) -> Vec<String> {
        let mut m: Vec<String> = self.cells.keys().map(|(m, _)| m.clone()).collect();
        m.dedup();
        m
    }

    /// Per-node series, taking each node's values from its nearest cell.
    pub fn node_series(&self, nodes: &[NodeRecord]) -> Result<Vec<DailyTmaxSeries>, ClimateError> {
        let mapping = super::map_nodes_to_grid(nodes, &self.grid)?;
        let mut out = Vec::new();
        for model in self.models() {
            for (&node, &cell) in &mapping {
                let raw = self.cells.get(&(model.clone(), cell)).ok_or_else(|| ClimateError::InvalidSeries {
                    model: model.clone(),
                    node,
                    message: format!("nearest grid cell (row {}, col {}) has no data", cell.row, cell.col),
                })?;
                out.push(finish_series(&model, node, raw.clone())?);
            }
        }
        Ok(out)
    }
}

/// Reads the gridded daily series CSV (`model,lat,lon,date,tmax_c`).
pub fn read_grid_series<R: Read>(input: R) -> Result<GridSeries, ClimateError> {
    const TABLE: &str = "grid series";
    let mut r = reader(input);
    let idx = columns(&mut r, TABLE, &["model", "lat", "lon", "date", "tmax_c"])?;
    let mut points: BTreeMap<(String, u64, u64), RawSeries> = BTreeMap::new();
    let mut lats = Vec::new();
    let mut lons = Vec::new();
    let mut record = csv::StringRecord::new();
    while r.read_record(&mut record).map_err(|e| row_error(TABLE, e))? {
        let row = Row { table: TABLE, record: &record, idx: &idx };
        let lat: f64 = row.parse(1, "lat")?;
        let lon: f64 = row.parse(2, "lon")?;
        let day: CalendarDay = row.parse(3, "date")?;
        let tmax: f64 = row.parse(4, "tmax")?;
        let key = (row.raw(0).to_string(), lat.to_bits(), lon.to_bits());
        let group = points.entry(key).or_insert_with(|| {
            lats.push(lat);
            lons.push(lon);
            RawSeries::new()
        });
        insert_day(group, day, tmax, TABLE, row.line())?;
    }
    let grid = RegularGrid::from_centers(&lats, &lons)?;
    let mut cells = BTreeMap::new();
    for ((model, lat, lon), raw) in points {
        let (lat, lon) = (f64::from_bits(lat), f64::from_bits(lon));
        let cell = grid
            .cell_at(lat, lon)
            .ok_or_else(|| ClimateError::InvalidGrid(format!("point ({lat}, {lon}) is off the grid")))?;
        cells.insert((model, cell), raw);
    }
    Ok(GridSeries { grid, cells })
}

/// Reads `model,period_label,node_id,hot_days,threshold_c`. Profiles are
/// returned sorted by (model, period).
pub fn read_profiles<R: Read>(input: R) -> Result<Vec<HotDayProfile>, ClimateError> {
    const TABLE: &str = "hot-day profiles";
    let mut r = reader(input);
    let idx = columns(&mut r, TABLE, &["model", "period_label", "node_id", "hot_days", "threshold_c"])?;
    let mut groups: BTreeMap<(String, PeriodSpec), HotDayProfile> = BTreeMap::new();
    let mut record = csv::StringRecord::new();
    while r.read_record(&mut record).map_err(|e| row_error(TABLE, e))? {
        let row = Row { table: TABLE, record: &record, idx: &idx };
        let period: PeriodSpec = row.parse(1, "period label")?;
        let node: NodeId = row.parse(2, "node id")?;
        let hot_days: u32 = row.parse(3, "hot-day count")?;
        let threshold_c: f64 = row.parse(4, "threshold")?;
        let model = row.raw(0).to_string();
        let profile = groups.entry((model.clone(), period.clone())).or_insert_with(|| HotDayProfile {
            model,
            period,
            counts: BTreeMap::new(),
            threshold_c,
        });
        let bad = |message: String| ClimateError::MalformedRow { table: TABLE, line: row.line(), message };
        if profile.threshold_c != threshold_c {
            return Err(bad(format!("threshold {threshold_c} differs from {} earlier in this profile", profile.threshold_c)));
        }
        if profile.counts.insert(node, hot_days).is_some() {
            return Err(bad(format!("duplicate node {node}")));
        }
    }
    Ok(groups.into_values().collect())
}

pub fn write_profiles_csv<W: Write>(out: W, profiles: &[HotDayProfile]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "period_label", "node_id", "hot_days", "threshold_c"])?;
    for p in profiles {
        let label = p.period.label();
        let threshold = p.threshold_c.to_string();
        for (id, count) in &p.counts {
            w.write_record([p.model.as_str(), &label, &id.to_string(), &count.to_string(), &threshold])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `model,node_id,delta_hot_days`, models in the given order.
pub fn write_deltas_csv<W: Write>(out: W, deltas: &[(String, BTreeMap<NodeId, i64>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "node_id", "delta_hot_days"])?;
    for (model, delta) in deltas {
        for (id, d) in delta {
            w.write_record([model.as_str(), &id.to_string(), &d.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `node_id,mean,sd,min,max,n_models`.
pub fn write_ensemble_csv<W: Write>(out: W, summary: &EnsembleSummary<NodeId>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node_id", "mean", "sd", "min", "max", "n_models"])?;
    let n = summary.n_models.to_string();
    for (id, s) in &summary.entries {
        w.write_record([
            id.to_string(),
            s.mean.to_string(),
            s.sd.to_string(),
            s.min.to_string(),
            s.max.to_string(),
            n.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Mode, Tonnage};

    #[test]
    fn daily_rows_any_order() {
        let csv = "model,node_id,date,tmax_c\nm,1,2000-01-02,36\nm,1,2000-01-01,30\nm,2,2000-01-01,40\n";
        let s = read_daily_series(csv.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tmax(), &[30.0, 36.0]);
        let dup = "model,node_id,date,tmax_c\nm,1,2000-01-01,30\nm,1,2000-01-01,31\n";
        assert!(matches!(read_daily_series(dup.as_bytes()), Err(ClimateError::MalformedRow { line: 3, .. })));
    }

    #[test]
    fn grid_rows_map_to_nodes() {
        let csv = "model,lat,lon,date,tmax_c\n\
                   m,30.0,-90.0,2000-01-01,30\nm,30.0,-89.0,2000-01-01,40\n\
                   m,31.0,-90.0,2000-01-01,20\nm,31.0,-89.0,2000-01-01,10\n";
        let g = read_grid_series(csv.as_bytes()).unwrap();
        let node = NodeRecord {
            id: NodeId(4),
            name: "x".into(),
            mode: Mode::Water,
            lat: 30.2,
            lon: -89.1,
            tonnage: Tonnage::ZERO,
        };
        let s = g.node_series(&[node]).unwrap();
        assert_eq!(s[0].tmax(), &[40.0]);
    }

    #[test]
    fn profile_round_trip() {
        let csv = "model,period_label,node_id,hot_days,threshold_c\nA,1991-2020,2,10,35\nA,1991-2020,1,3,35\nA,2051-2080,1,30,35\n";
        let p = read_profiles(csv.as_bytes()).unwrap();
        assert_eq!(p.len(), 2);
        let mut buf = Vec::new();
        write_profiles_csv(&mut buf, &p).unwrap();
        let again = read_profiles(buf.as_slice()).unwrap();
        assert_eq!(p, again);
        let mixed = "model,period_label,node_id,hot_days,threshold_c\nA,1991-2020,2,10,35\nA,1991-2020,1,3,30\n";
        assert!(read_profiles(mixed.as_bytes()).is_err());
    }
}
