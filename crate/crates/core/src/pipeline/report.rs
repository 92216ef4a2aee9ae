use std::collections::BTreeMap;

use super::{PipelineError, Stage};
use crate::climate::summarize;
use crate::plot::{line_chart, scatter_map, MapPoint, PlotSeries};

fn bad(name: &str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::data(Stage::Report, format!("{name}: {e}"))
}

/// Rows of a CSV as header-keyed maps.
fn rows(name: &str, bytes: &[u8]) -> Result<Vec<BTreeMap<String, String>>, PipelineError> {
    let mut r = csv::Reader::from_reader(bytes);
    let headers = r.headers().map_err(|e| bad(name, e))?.clone();
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(name, e))?;
            Ok(headers.iter().map(String::from).zip(rec.iter().map(String::from)).collect())
        })
        .collect()
}

fn field<'a>(name: &str, row: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str, PipelineError> {
    row.get(key).map(String::as_str).ok_or_else(|| bad(name, format!("missing column {key}")))
}

fn num(name: &str, row: &BTreeMap<String, String>, key: &str) -> Result<f64, PipelineError> {
    field(name, row, key)?.parse().map_err(|e| bad(name, format!("column {key}: {e}")))
}

struct Curve {
    scenario: String,
    model: String,
    /// `(fraction_removed, scf, tonnage_fraction)` per step.
    points: Vec<(f64, f64, f64)>,
}

fn read_curves(name: &str, bytes: &[u8]) -> Result<Vec<Curve>, PipelineError> {
    let mut curves: Vec<Curve> = Vec::new();
    let mut last_key = None;
    for row in rows(name, bytes)? {
        let key = (
            field(name, &row, "scenario")?.to_string(),
            field(name, &row, "model")?.to_string(),
            field(name, &row, "seed")?.to_string(),
        );
        let point = (num(name, &row, "fraction_removed")?, num(name, &row, "scf")?, num(name, &row, "tonnage_fraction")?);
        if last_key.as_ref() != Some(&key) {
            curves.push(Curve { scenario: key.0.clone(), model: key.1.clone(), points: Vec::new() });
            last_key = Some(key);
        }
        curves.last_mut().expect("pushed above").points.push(point);
    }
    Ok(curves)
}

/// One plotted series per scenario, except that random trials collapse to
/// their mean with a min/max band and hot-day curves get one line per model.
fn chart_series(curves: &[Curve], metric: fn(&(f64, f64, f64)) -> f64) -> Vec<PlotSeries> {
    let mut out = Vec::new();
    let mut random: Vec<&Curve> = Vec::new();
    let mut random_at = None;
    for c in curves {
        if c.scenario == "random" {
            random_at.get_or_insert(out.len());
            random.push(c);
            continue;
        }
        let label = if c.model.is_empty() { c.scenario.clone() } else { format!("{} {}", c.scenario, c.model) };
        let mut series = PlotSeries::line(label, c.points.iter().map(|p| (p.0, metric(p))).collect());
        series.dashed = !c.model.is_empty();
        out.push(series);
    }
    if let Some(at) = random_at {
        let steps = random.iter().map(|c| c.points.len()).min().unwrap_or(0);
        let mut points = Vec::with_capacity(steps);
        let mut band = Vec::with_capacity(steps);
        for k in 0..steps {
            let values: Vec<f64> = random.iter().map(|c| metric(&c.points[k])).collect();
            let s = summarize(&values);
            let x = random[0].points[k].0;
            points.push((x, s.mean));
            band.push((x, s.min, s.max));
        }
        let mut series = PlotSeries::line(format!("random (mean of {})", random.len()), points);
        series.band = Some(band);
        out.insert(at, series);
    }
    out
}

/// Renders SVG charts from the CSV products of a bundle: per mode an SCF
/// chart and a tonnage chart, and per future period a map of the
/// model-mean hot-day change.
pub fn render_plots(files: &BTreeMap<String, Vec<u8>>) -> Result<BTreeMap<String, Vec<u8>>, PipelineError> {
    let mut out = BTreeMap::new();
    for (name, bytes) in files {
        if let Some(mode) = name.strip_suffix("_curves.csv") {
            let curves = read_curves(name, bytes)?;
            if curves.is_empty() {
                continue;
            }
            let charts = [
                ("scf", "Size of the connected fraction", "SCF", (|p: &(f64, f64, f64)| p.1) as fn(&_) -> f64),
                ("tonnage", "Surviving freight tonnage", "tonnage fraction", |p: &(f64, f64, f64)| p.2),
            ];
            for (suffix, title, y_label, metric) in charts {
                let svg = line_chart(&format!("{mode}: {title}"), "fraction of nodes removed", y_label, &chart_series(&curves, metric))
                    .map_err(|e| bad(name, e))?;
                out.insert(format!("{mode}_{suffix}.svg"), svg.into_bytes());
            }
        }
    }
    if let Some(nodes) = files.get("network_nodes.csv") {
        let nodes = rows("network_nodes.csv", nodes)?;
        let mut coords = BTreeMap::new();
        for n in &nodes {
            let id = field("network_nodes.csv", n, "id")?.to_string();
            let lat = num("network_nodes.csv", n, "lat")?;
            let lon = num("network_nodes.csv", n, "lon")?;
            let label = field("network_nodes.csv", n, "name")?.to_string();
            coords.insert(id, (lon, lat, label));
        }
        for (name, bytes) in files {
            let Some(period) = name.strip_prefix("hotday_ensemble_").and_then(|s| s.strip_suffix(".csv")) else {
                continue;
            };
            let mut points = Vec::new();
            for row in rows(name, bytes)? {
                let id = field(name, &row, "node_id")?;
                let (lon, lat, label) =
                    coords.get(id).ok_or_else(|| bad(name, format!("node {id} is not in network_nodes.csv")))?;
                points.push(MapPoint { lon: *lon, lat: *lat, value: num(name, &row, "mean")?, label: label.clone() });
            }
            if points.is_empty() {
                continue;
            }
            let svg = scatter_map(
                &format!("Change in hot days, {period} vs baseline (model mean)"),
                "change in hot days",
                &points,
            )
            .map_err(|e| bad(name, e))?;
            out.insert(format!("hotday_delta_{period}.svg"), svg.into_bytes());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_trials_fold_into_one_banded_series() {
        let csv = "scenario,model,seed,step,node_id,fraction_removed,ff,scf,tonnage_fraction,tonnage_fraction_gcc\n\
                   random,,1,0,,0,2,1,1,1\nrandom,,1,1,5,0.5,1,0.5,0.4,0.4\n\
                   random,,2,0,,0,2,1,1,1\nrandom,,2,1,6,0.5,1,0.3,0.6,0.6\n\
                   degree,,,0,,0,2,1,1,1\ndegree,,,1,5,0.5,1,0.5,0.4,0.4\n\
                   hot_days,M1,,0,,0,2,1,1,1\nhot_days,M1,,1,6,0.5,1,0.5,0.6,0.6\n";
        let mut files = BTreeMap::new();
        files.insert("rail_curves.csv".to_string(), csv.as_bytes().to_vec());
        let plots = render_plots(&files).unwrap();
        let svg = String::from_utf8(plots["rail_scf.svg"].clone()).unwrap();
        assert_eq!(svg.matches("<polyline class=\"series\"").count(), 3);
        assert!(svg.contains("random (mean of 2)") && svg.contains("hot_days M1"));
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(plots.contains_key("rail_tonnage.svg"));
    }
}
