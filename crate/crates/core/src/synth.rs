//! Seeded synthetic inputs: freight networks with log-normal tonnage and
//! daily maximum temperature series with a warming trend.
//!
//! Temperature model for node `i`, model `m`, year `y` and day-of-year `d`:
//!
//! ```text
//! tmax = peak(lat_i) + offset_m - amplitude * (1 - cos(2π (d - 200) / 365))
//!      + trend * scale_m * (y - start_year) + anomaly(i, m, (y - start_year) mod cycle, d)
//! ```
//!
//! The anomaly term repeats every `anomaly_cycle_years`, so two periods of
//! that length differ only by the trend. With a positive trend every later
//! period has pointwise warmer days and therefore at least as many hot days.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::climate::{count_hot_days, CalendarDay, DailyTmaxSeries, HotDayProfile, PeriodSpec};
use crate::climate::write_profiles_csv;
use crate::network::{FreightNetwork, Mode, NodeId, NodeRecord, Tonnage};
use crate::rng::{seeded_rng, uniform_below, unit_f64, SimRng};

/// The eight-member model ensemble used by default.
pub const DEFAULT_MODELS: [&str; 8] = [
    "ACCESS-ESM1-5",
    "CanESM5",
    "GFDL-ESM4",
    "INM-CM5-0",
    "IPSL-CM6A-LR",
    "MIROC6",
    "MPI-ESM1-2-HR",
    "NorESM2-LM",
];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// Each node linked to its geographically nearest peers.
    #[default]
    Geometric,
    /// Barabási–Albert growth.
    Preferential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthNetworkSpec {
    pub mode: Mode,
    pub nodes: usize,
    pub avg_degree: f64,
    pub topology: Topology,
}

impl Default for SynthNetworkSpec {
    fn default() -> Self {
        SynthNetworkSpec { mode: Mode::Rail, nodes: 12, avg_degree: 4.0, topology: Topology::Geometric }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub seed: u64,
    pub networks: Vec<SynthNetworkSpec>,
    /// Log-normal tonnage parameters (of ln tons).
    pub tonnage_log_mean: f64,
    pub tonnage_log_sd: f64,
    pub models: Vec<String>,
    pub start_year: i32,
    pub end_year: i32,
    /// Warming in °C per year before per-model scaling.
    pub warming_trend_c_per_year: f64,
    pub noise_sd_c: f64,
    pub anomaly_cycle_years: u32,
    /// Periods written to the profile table.
    pub periods: Vec<PeriodSpec>,
    pub threshold_c: f64,
    /// Also write the full daily series table.
    pub write_series: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 7,
            networks: vec![SynthNetworkSpec::default()],
            tonnage_log_mean: 13.0,
            tonnage_log_sd: 1.2,
            models: DEFAULT_MODELS.iter().map(|s| s.to_string()).collect(),
            start_year: 1991,
            end_year: 2080,
            warming_trend_c_per_year: 0.05,
            noise_sd_c: 2.5,
            anomaly_cycle_years: 30,
            periods: vec![PeriodSpec::BASELINE, PeriodSpec::NEAR_FUTURE, PeriodSpec::FAR_FUTURE],
            threshold_c: crate::climate::DEFAULT_THRESHOLD_C,
            write_series: false,
        }
    }
}

/// SplitMix64 finalizer; derives independent stream seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream(seed: u64, tag: u64, a: u64, b: u64) -> SimRng {
    seeded_rng(mix(mix(mix(seed ^ tag) ^ a) ^ b))
}

/// Standard normal draw (Box–Muller, one value per call).
fn normal(rng: &mut impl RngCore) -> f64 {
    let u1 = 1.0 - unit_f64(rng);
    let u2 = unit_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

const LAT_RANGE: (f64, f64) = (25.0, 49.0);
const LON_RANGE: (f64, f64) = (-124.0, -67.0);

impl SynthSpec {
    fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Infeasible(m));
        if self.networks.is_empty() {
            return bad("at least one network is required".into());
        }
        for net in &self.networks {
            if net.nodes < 2 || net.nodes >= 100_000 {
                return bad(format!("{} network needs between 2 and 99999 nodes, got {}", net.mode, net.nodes));
            }
            let max = (net.nodes - 1) as f64;
            if !(net.avg_degree.is_finite() && net.avg_degree >= 0.0 && net.avg_degree <= max) {
                return bad(format!(
                    "{} average degree {} is outside [0, {}] for {} nodes",
                    net.mode, net.avg_degree, max, net.nodes
                ));
            }
        }
        let mut modes: Vec<Mode> = self.networks.iter().map(|n| n.mode).collect();
        modes.sort();
        if modes.windows(2).any(|w| w[0] == w[1]) {
            return bad("each mode may appear only once".into());
        }
        if self.start_year > self.end_year {
            return bad("start_year is after end_year".into());
        }
        if self.anomaly_cycle_years == 0 {
            return bad("anomaly_cycle_years must be positive".into());
        }
        if !(self.noise_sd_c >= 0.0 && self.tonnage_log_sd >= 0.0) {
            return bad("standard deviations must be non-negative".into());
        }
        Ok(())
    }
}

/// Builds all networks of `spec` into one table. Node ids are
/// `100_000 * (mode index + 1) + k`, so each mode occupies its own id block.
pub fn generate_network(spec: &SynthSpec) -> Result<FreightNetwork, SynthError> {
    spec.validate()?;
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for net in &spec.networks {
        let mode_index = Mode::ALL.iter().position(|m| *m == net.mode).unwrap() as u64;
        let base = 100_000 * (mode_index + 1);
        let mut rng = stream(spec.seed, 1, mode_index, 0);
        let placed: Vec<NodeRecord> = (0..net.nodes)
            .map(|k| {
                let lat = LAT_RANGE.0 + (LAT_RANGE.1 - LAT_RANGE.0) * unit_f64(&mut rng);
                let lon = LON_RANGE.0 + (LON_RANGE.1 - LON_RANGE.0) * unit_f64(&mut rng);
                let tons = (spec.tonnage_log_mean + spec.tonnage_log_sd * normal(&mut rng)).exp().round();
                NodeRecord {
                    id: NodeId(base + k as u64),
                    name: format!("Synthetic {} {:03}", capitalize(net.mode.as_str()), k + 1),
                    mode: net.mode,
                    lat: (lat * 1e4).round() / 1e4,
                    lon: (lon * 1e4).round() / 1e4,
                    tonnage: Tonnage::from_tons(tons).expect("finite tonnage"),
                }
            })
            .collect();
        let pairs = match net.topology {
            Topology::Geometric => geometric_edges(&placed, net.avg_degree),
            Topology::Preferential => preferential_edges(net.nodes, net.avg_degree, &mut rng),
        };
        edges.extend(pairs.into_iter().map(|(a, b)| (placed[a].id, placed[b].id)));
        nodes.extend(placed);
    }
    Ok(FreightNetwork::new(nodes, edges).expect("generated network is valid"))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn distance(a: &NodeRecord, b: &NodeRecord) -> f64 {
    crate::climate::haversine_km(a.lat, a.lon, b.lat, b.lon)
}

/// The `round(n * d / 2)` geographically shortest pairs, then the shortest
/// link from each remaining component to the rest until connected.
fn geometric_edges(nodes: &[NodeRecord], avg_degree: f64) -> Vec<(usize, usize)> {
    let n = nodes.len();
    let target = ((n as f64 * avg_degree / 2.0).round() as usize).min(n * (n - 1) / 2);
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            pairs.push((distance(&nodes[a], &nodes[b]), a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut edges: Vec<(usize, usize)> = pairs[..target].iter().map(|&(_, a, b)| (a, b)).collect();
    loop {
        let comp = components(n, &edges);
        if comp.iter().all(|&c| c == comp[0]) {
            break;
        }
        // Shortest pair leaving the component of node 0.
        let link = pairs
            .iter()
            .find(|&&(_, a, b)| (comp[a] == comp[0]) != (comp[b] == comp[0]))
            .expect("disconnected graph has a crossing pair");
        edges.push((link.1, link.2));
    }
    edges
}

fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], mut v: usize) -> usize {
        while label[v] != v {
            label[v] = label[label[v]];
            v = label[v];
        }
        v
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut label, a), find(&mut label, b));
        if ra != rb {
            label[ra.max(rb)] = ra.min(rb);
        }
    }
    (0..n).map(|v| find(&mut label, v)).collect()
}

/// Barabási–Albert growth attaching `max(1, round(d / 2))` edges per node
/// to a seed clique.
fn preferential_edges(n: usize, avg_degree: f64, rng: &mut SimRng) -> Vec<(usize, usize)> {
    let m = ((avg_degree / 2.0).round() as usize).clamp(1, n - 1);
    let mut edges = Vec::new();
    let mut endpoints = Vec::new();
    let core = (m + 1).min(n);
    for a in 0..core {
        for b in a + 1..core {
            edges.push((a, b));
            endpoints.extend([a, b]);
        }
    }
    for v in core..n {
        let mut chosen = Vec::with_capacity(m);
        while chosen.len() < m {
            let t = endpoints[uniform_below(rng, endpoints.len() as u64) as usize];
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        for t in chosen {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    edges
}

/// Per-model warming offsets, stable for a given seed.
struct ModelClimate {
    offset_c: f64,
    trend_scale: f64,
}

fn model_climate(spec: &SynthSpec, model_index: usize) -> ModelClimate {
    let mut rng = stream(spec.seed, 2, model_index as u64, 0);
    ModelClimate { offset_c: 2.0 * unit_f64(&mut rng) - 1.0, trend_scale: 0.7 + 0.6 * unit_f64(&mut rng) }
}

const DAYS_IN_MONTH: [u8; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];

/// 365-day calendar (no leap days).
fn calendar(start_year: i32, end_year: i32) -> Vec<CalendarDay> {
    let mut days = Vec::with_capacity(((end_year - start_year + 1) * 365) as usize);
    for year in start_year..=end_year {
        for (m, &len) in DAYS_IN_MONTH.iter().enumerate() {
            for d in 1..=len {
                days.push(CalendarDay { year, month: m as u8 + 1, day: d });
            }
        }
    }
    days
}

/// Daily series of one node under the `model_index`-th model.
pub fn generate_series(spec: &SynthSpec, node: &NodeRecord, model_index: usize) -> DailyTmaxSeries {
    let climate = model_climate(spec, model_index);
    let cycle = spec.anomaly_cycle_years as usize;
    let mut rng = stream(spec.seed, 3, model_index as u64, node.id.0);
    let anomalies: Vec<f64> = (0..cycle * 365).map(|_| spec.noise_sd_c * normal(&mut rng)).collect();
    let peak = 37.0 - 0.55 * (node.lat - LAT_RANGE.0) + climate.offset_c;
    let amplitude = 11.0;
    let days = calendar(spec.start_year, spec.end_year);
    let tmax = days
        .iter()
        .enumerate()
        .map(|(i, day)| {
            let doy = i % 365;
            let year_offset = day.year - spec.start_year;
            let seasonal = peak - amplitude * (1.0 - (2.0 * PI * (doy as f64 - 200.0) / 365.0).cos());
            let trend = spec.warming_trend_c_per_year * climate.trend_scale * f64::from(year_offset);
            let anomaly = anomalies[(year_offset as usize % cycle) * 365 + doy];
            ((seasonal + trend + anomaly) * 100.0).round() / 100.0
        })
        .collect();
    DailyTmaxSeries::new(spec.models[model_index].clone(), node.id, days, tmax).expect("generated series is valid")
}

/// Hot-day profiles of every (model, period), computed from generated series.
pub fn generate_profiles(spec: &SynthSpec, net: &FreightNetwork) -> Result<Vec<HotDayProfile>, SynthError> {
    spec.validate()?;
    let mut profiles = Vec::new();
    for (mi, model) in spec.models.iter().enumerate() {
        let counts: Vec<Vec<u32>> = net
            .nodes()
            .par_iter()
            .map(|node| {
                let series = generate_series(spec, node, mi);
                spec.periods
                    .iter()
                    .map(|p| count_hot_days(&series, p, spec.threshold_c).expect("finite threshold"))
                    .collect()
            })
            .collect();
        for (pi, period) in spec.periods.iter().enumerate() {
            let per_node: BTreeMap<NodeId, u32> =
                net.nodes().iter().zip(&counts).map(|(n, c)| (n.id, c[pi])).collect();
            profiles.push(HotDayProfile {
                model: model.clone(),
                period: period.clone(),
                counts: per_node,
                threshold_c: spec.threshold_c,
            });
        }
    }
    Ok(profiles)
}

/// Files written by [`write_synthetic`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub profiles: PathBuf,
    pub series: Option<PathBuf>,
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, SynthError> {
    std::fs::File::create(path)
        .map(std::io::BufWriter::new)
        .map_err(|e| SynthError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn io_err(path: &Path) -> impl Fn(csv::Error) -> SynthError + '_ {
    move |e| SynthError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Writes `nodes.csv`, `edges.csv`, `hot_day_profiles.csv` and, when
/// requested, `daily_tmax.csv` into `dir`.
pub fn write_synthetic(spec: &SynthSpec, dir: &Path) -> Result<SynthFiles, SynthError> {
    std::fs::create_dir_all(dir).map_err(|e| SynthError::Io { path: dir.to_path_buf(), message: e.to_string() })?;
    let net = generate_network(spec)?;
    let files = SynthFiles {
        nodes: dir.join("nodes.csv"),
        edges: dir.join("edges.csv"),
        profiles: dir.join("hot_day_profiles.csv"),
        series: spec.write_series.then(|| dir.join("daily_tmax.csv")),
    };
    net.write_nodes_csv(create(&files.nodes)?).map_err(io_err(&files.nodes))?;
    net.write_edges_csv(create(&files.edges)?).map_err(io_err(&files.edges))?;
    let profiles = generate_profiles(spec, &net)?;
    write_profiles_csv(create(&files.profiles)?, &profiles).map_err(io_err(&files.profiles))?;
    if let Some(path) = &files.series {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["model", "node_id", "date", "tmax_c"]).map_err(io_err(path))?;
        for mi in 0..spec.models.len() {
            for node in net.nodes() {
                let s = generate_series(spec, node, mi);
                let id = node.id.to_string();
                for (day, t) in s.days().iter().zip(s.tmax()) {
                    w.write_record([s.model(), &id, &day.to_string(), &t.to_string()]).map_err(io_err(path))?;
                }
            }
        }
        w.flush().map_err(|e| SynthError::Io { path: path.clone(), message: e.to_string() })?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(nodes: usize, avg_degree: f64) -> SynthSpec {
        SynthSpec {
            networks: vec![SynthNetworkSpec { nodes, avg_degree, ..SynthNetworkSpec::default() }],
            models: vec!["A".into(), "B".into()],
            ..SynthSpec::default()
        }
    }

    #[test]
    fn rail_shaped_network() {
        let s = SynthSpec { seed: 7, ..spec(84, 20.19) };
        let net = generate_network(&s).unwrap();
        assert_eq!(net.node_count(), 84);
        let d = net.average_degree().unwrap();
        assert!((d - 20.19).abs() / 20.19 < 0.05, "avg degree {d}");
        assert_eq!(crate::metrics::gcc_size(&net), 84);
    }

    #[test]
    fn two_nodes_single_edge() {
        let net = generate_network(&spec(2, 1.0)).unwrap();
        assert_eq!((net.node_count(), net.edge_count()), (2, 1));
        let sparse = generate_network(&spec(2, 0.0)).unwrap();
        assert_eq!(sparse.edge_count(), 1, "connectivity repair adds the edge");
    }

    #[test]
    fn infeasible_parameters() {
        assert!(matches!(generate_network(&spec(5, 5.0)), Err(SynthError::Infeasible(_))));
        assert!(matches!(generate_network(&spec(1, 0.0)), Err(SynthError::Infeasible(_))));
        assert!(generate_network(&spec(5, f64::NAN)).is_err());
    }

    #[test]
    fn preferential_is_connected() {
        let mut s = spec(60, 4.0);
        s.networks[0].topology = Topology::Preferential;
        let net = generate_network(&s).unwrap();
        assert_eq!(crate::metrics::gcc_size(&net), 60);
        assert!((net.average_degree().unwrap() - 4.0).abs() < 0.5);
    }

    #[test]
    fn seed_determines_output() {
        let a = generate_network(&spec(30, 4.0)).unwrap();
        let b = generate_network(&spec(30, 4.0)).unwrap();
        assert_eq!(a, b);
        let c = generate_network(&SynthSpec { seed: 8, ..spec(30, 4.0) }).unwrap();
        assert_ne!(a, c);
        let node = &a.nodes()[0];
        assert_eq!(generate_series(&spec(30, 4.0), node, 1), generate_series(&spec(30, 4.0), node, 1));
    }
}
