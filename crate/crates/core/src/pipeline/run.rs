use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;

use rayon::prelude::*;

use super::{render_plots, ClimateInputs, ErrorKind, PipelineError, ReportBundle, RunConfig, Stage};
use crate::centrality::{self, rank_nodes, NodeScores, ScoreKind};
use crate::climate::{
    self, ensemble_stats, hot_day_delta, top_k_frequency, DailyTmaxSeries, HotDayProfile, PeriodSpec, StatTarget,
};
use crate::disruption::{hot_day_sequence, random_sequence, targeted_sequence, write_sequences_csv, RemovalSequence, Scenario};
use crate::metrics::{
    aggregate_curves, collapse_point, gcc_size, replay, write_collapse_csv, write_collapse_ensemble_csv,
    write_curve_ensemble_csv, write_curves_csv, CurveEnsemble, RobustnessCurve,
};
use crate::network::{load_network_with, FreightNetwork, Mode, NodeId};

/// Environment variable that caps the worker threads of a run.
pub const THREADS_ENV: &str = "FREIGHT_RESILIENCE_THREADS";

/// Which products a run computes. Network tables and the summary are
/// always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub centrality: bool,
    pub hotdays: bool,
    pub simulate: bool,
    pub report: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { centrality: true, hotdays: true, simulate: true, report: true };
    pub const INGEST: Stages = Stages { centrality: false, hotdays: false, simulate: false, report: false };
}

/// Per-model hot-day deltas, in model order.
pub type ModelDeltas = Vec<(String, BTreeMap<NodeId, i64>)>;

/// Hot-day profiles restricted to the analysed nodes, with per-period deltas.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimateData {
    pub models: Vec<String>,
    pub threshold_c: f64,
    /// Sorted by (model, period).
    pub profiles: Vec<HotDayProfile>,
    /// Per future period, `(model, future - baseline)` in model order.
    pub deltas: BTreeMap<PeriodSpec, ModelDeltas>,
}

impl ClimateData {
    fn deltas_for(&self, period: &PeriodSpec) -> &[(String, BTreeMap<NodeId, i64>)] {
        self.deltas.get(period).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Loads the network and keeps the configured modes.
pub fn ingest(cfg: &RunConfig) -> Result<FreightNetwork, PipelineError> {
    let net = load_network_with(&cfg.network.nodes, &cfg.network.edges, &cfg.network.columns)
        .map_err(|e| PipelineError::data(Stage::Ingest, e))?;
    let present = net.modes();
    for mode in &cfg.modes {
        if !present.contains(mode) {
            return Err(PipelineError::data(Stage::Ingest, format!("the network has no {mode} nodes")));
        }
    }
    if cfg.modes.is_empty() || cfg.modes.iter().collect::<BTreeSet<_>>().len() == present.len() {
        return Ok(net);
    }
    let drop: Vec<NodeId> = net.nodes().iter().filter(|n| !cfg.modes.contains(&n.mode)).map(|n| n.id).collect();
    net.remove_nodes(&drop).map_err(|e| PipelineError::internal(Stage::Ingest, e))
}

fn analysed_modes(net: &FreightNetwork) -> Vec<Mode> {
    net.modes().into_iter().collect()
}

fn open(stage: Stage, path: &std::path::Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::data(stage, format!("cannot open {}: {e}", path.display())))
}

fn profiles_from_series(
    series: &[DailyTmaxSeries],
    models: &[String],
    periods: &[PeriodSpec],
    threshold_c: f64,
) -> Result<Vec<HotDayProfile>, PipelineError> {
    let per_model: Vec<Result<Vec<HotDayProfile>, PipelineError>> = models
        .par_iter()
        .map(|model| {
            let own: Vec<&DailyTmaxSeries> = series.iter().filter(|s| s.model() == model).collect();
            periods
                .iter()
                .map(|p| {
                    HotDayProfile::from_series(model, own.iter().copied(), p, threshold_c)
                        .map_err(|e| PipelineError::data(Stage::Hotdays, e))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_model {
        out.extend(r?);
    }
    out.sort_by(|a, b| (&a.model, &a.period).cmp(&(&b.model, &b.period)));
    Ok(out)
}

fn select_models(available: BTreeSet<String>, wanted: &[String]) -> Result<Vec<String>, PipelineError> {
    if available.is_empty() {
        return Err(PipelineError::data(Stage::Hotdays, "the climate input holds no models"));
    }
    if wanted.is_empty() {
        return Ok(available.into_iter().collect());
    }
    let mut out = BTreeSet::new();
    for m in wanted {
        if !available.contains(m) {
            return Err(PipelineError::data(Stage::Hotdays, format!("model {m} is not in the climate input")));
        }
        out.insert(m.clone());
    }
    Ok(out.into_iter().collect())
}

/// Reads the configured climate input and derives profiles and deltas for
/// every node of `net`.
pub fn load_climate(c: &ClimateInputs, net: &FreightNetwork) -> Result<ClimateData, PipelineError> {
    let stage = Stage::Hotdays;
    let mut periods = vec![c.baseline.clone()];
    periods.extend(c.futures.iter().filter(|p| **p != c.baseline).cloned());
    periods.sort();
    periods.dedup();

    let profiles = if let Some(path) = &c.profiles {
        let all = climate::read_profiles(open(stage, path)?).map_err(|e| PipelineError::data(stage, e))?;
        let models = select_models(all.iter().map(|p| p.model.clone()).collect(), &c.models)?;
        let mut kept = Vec::new();
        for model in &models {
            for period in &periods {
                let p = all
                    .iter()
                    .find(|p| &p.model == model && &p.period == period)
                    .ok_or_else(|| PipelineError::data(stage, format!("model {model} has no profile for {period}")))?;
                if p.threshold_c != c.threshold_c {
                    return Err(PipelineError::data(
                        stage,
                        format!(
                            "profile for {model} {period} uses threshold {} C but the run asks for {} C",
                            p.threshold_c, c.threshold_c
                        ),
                    ));
                }
                kept.push(p.clone());
            }
        }
        kept
    } else if let Some(path) = &c.series {
        let series = climate::read_daily_series(open(stage, path)?).map_err(|e| PipelineError::data(stage, e))?;
        let models = select_models(series.iter().map(|s| s.model().to_string()).collect(), &c.models)?;
        profiles_from_series(&series, &models, &periods, c.threshold_c)?
    } else if let Some(path) = &c.grid_series {
        let grid = climate::read_grid_series(open(stage, path)?).map_err(|e| PipelineError::data(stage, e))?;
        let models = select_models(grid.models().into_iter().collect(), &c.models)?;
        let series = grid.node_series(net.nodes()).map_err(|e| PipelineError::data(stage, e))?;
        profiles_from_series(&series, &models, &periods, c.threshold_c)?
    } else {
        return Err(PipelineError::new(Stage::Config, ErrorKind::Config, "field `climate`: no input set"));
    };

    // Every analysed node needs a count; nodes outside the network are dropped.
    let mut profiles = profiles;
    for p in &mut profiles {
        if let Some(id) = net.ids().find(|id| !p.counts.contains_key(id)) {
            return Err(PipelineError::data(
                stage,
                format!("profile for {} {} has no count for node {id}", p.model, p.period),
            ));
        }
        p.counts.retain(|id, _| net.contains(*id));
    }
    let models: Vec<String> = profiles.iter().map(|p| p.model.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let find = |model: &str, period: &PeriodSpec| {
        profiles.iter().find(|p| p.model == model && &p.period == period).expect("profile built above")
    };
    let mut deltas = BTreeMap::new();
    for future in &c.futures {
        let per_model = models
            .iter()
            .map(|m| {
                hot_day_delta(find(m, future), find(m, &c.baseline))
                    .map(|d| (m.clone(), d))
                    .map_err(|e| PipelineError::data(stage, e))
            })
            .collect::<Result<Vec<_>, _>>()?;
        deltas.insert(future.clone(), per_model);
    }
    Ok(ClimateData { models, threshold_c: c.threshold_c, profiles, deltas })
}

fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(v.trim().parse::<usize>().ok().filter(|&t| t > 0).ok_or_else(|| {
            PipelineError::new(Stage::Config, ErrorKind::Config, format!("{THREADS_ENV}={v} is not a positive integer"))
        })?),
        Err(_) => None,
    };
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| PipelineError::internal(Stage::Config, e))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs the selected stages and returns the finished bundle without
/// touching the output directory.
pub fn build(cfg: &RunConfig, stages: Stages) -> Result<ReportBundle, PipelineError> {
    cfg.validate()?;
    with_pool(|| build_inner(cfg, stages))?
}

fn build_inner(cfg: &RunConfig, stages: Stages) -> Result<ReportBundle, PipelineError> {
    let mut seen = BTreeSet::new();
    if let Some(dup) = cfg.scenarios.iter().find(|s| !seen.insert(**s)) {
        return Err(PipelineError::new(
            Stage::Config,
            ErrorKind::Config,
            format!("field `scenarios`: {dup} is listed more than once"),
        ));
    }
    let mut bundle = ReportBundle::new(cfg.digest());
    let net = ingest(cfg)?;
    let modes = analysed_modes(&net);
    write_network(&mut bundle, &net, &modes)?;

    let needs_climate = stages.hotdays || (stages.simulate && cfg.scenarios.contains(&Scenario::HotDays));
    let climate = match (&cfg.climate, needs_climate) {
        (Some(c), true) => Some(load_climate(c, &net)?),
        _ => None,
    };

    for &mode in &modes {
        let sub = net.filter_mode(mode);
        if stages.centrality {
            write_centrality(&mut bundle, cfg, mode, &sub)?;
        }
        if stages.hotdays {
            if let (Some(c), Some(data)) = (&cfg.climate, &climate) {
                write_top_k(&mut bundle, cfg, c, data, mode, &sub)?;
            }
        }
        if stages.simulate {
            simulate(&mut bundle, cfg, climate.as_ref(), mode, &sub)?;
        }
    }
    if stages.hotdays {
        if let Some(data) = &climate {
            write_climate(&mut bundle, data)?;
        }
    }
    if stages.report {
        let plots = render_plots(&bundle.files)?;
        bundle.files.extend(plots);
    }
    Ok(bundle)
}

fn write_network(bundle: &mut ReportBundle, net: &FreightNetwork, modes: &[Mode]) -> Result<(), PipelineError> {
    let stage = Stage::Ingest;
    bundle.csv(stage, "network_nodes.csv".into(), |w| net.write_nodes_csv(w))?;
    bundle.csv(stage, "network_edges.csv".into(), |w| net.write_edges_csv(w))?;
    let subs: Vec<(Mode, FreightNetwork)> = modes.iter().map(|&m| (m, net.filter_mode(m))).collect();
    bundle.csv(stage, "network_summary.csv".into(), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mode", "nodes", "edges", "average_degree", "giant_component", "total_tonnage"])?;
        for (mode, sub) in &subs {
            let avg = sub.average_degree().map(|d| d.to_string()).unwrap_or_default();
            let total: u128 = sub.nodes().iter().map(|n| u128::from(n.tonnage.micro_tons())).sum();
            let tons = crate::Tonnage::from_micro_tons(u64::try_from(total).unwrap_or(u64::MAX));
            w.write_record([
                mode.to_string(),
                sub.node_count().to_string(),
                sub.edge_count().to_string(),
                avg,
                gcc_size(sub).to_string(),
                tons.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn write_centrality(bundle: &mut ReportBundle, cfg: &RunConfig, mode: Mode, net: &FreightNetwork) -> Result<(), PipelineError> {
    let stage = Stage::Centrality;
    let all: Vec<(NodeScores, NodeScores)> = ScoreKind::CENTRALITIES
        .iter()
        .map(|&kind| {
            let raw = centrality::centrality(net, kind);
            let norm = raw.normalized();
            (raw, norm)
        })
        .collect();
    bundle.csv(stage, format!("{mode}_centrality.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "kind", "score", "normalized_score"])?;
        for (raw, norm) in &all {
            for (id, s) in &raw.scores {
                w.write_record([id.to_string(), raw.kind.to_string(), s.to_string(), norm.scores[id].to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    })?;
    let k = cfg.top_k.min(net.node_count());
    for (raw, norm) in &all {
        let ranked = rank_nodes(raw, k).map_err(|e| PipelineError::internal(stage, e))?;
        bundle.csv(stage, format!("{mode}_ranking_{}.csv", raw.kind), |out| {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["rank", "node_id", "name", "score", "normalized_score"])?;
            for e in &ranked.entries {
                let name = net.node(e.node).map(|n| n.name.as_str()).unwrap_or_default();
                w.write_record([
                    e.rank.to_string(),
                    e.node.to_string(),
                    name.to_string(),
                    e.score.to_string(),
                    norm.scores[&e.node].to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}

fn delta_scores(net: &FreightNetwork, delta: &BTreeMap<NodeId, i64>) -> NodeScores {
    NodeScores {
        kind: ScoreKind::HotDays,
        scores: net.ids().map(|id| (id, delta[&id] as f64)).collect(),
        normalized: false,
    }
}

fn write_top_k(
    bundle: &mut ReportBundle,
    cfg: &RunConfig,
    c: &ClimateInputs,
    data: &ClimateData,
    mode: Mode,
    net: &FreightNetwork,
) -> Result<(), PipelineError> {
    let stage = Stage::Hotdays;
    let k = cfg.top_k.min(net.node_count());
    let deltas = data.deltas_for(&c.removal_period);
    let rankings = deltas
        .iter()
        .map(|(_, d)| rank_nodes(&delta_scores(net, d), k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::internal(stage, e))?;
    let freq = top_k_frequency(&rankings, k).map_err(|e| PipelineError::internal(stage, e))?;
    let mean: BTreeMap<NodeId, f64> = net
        .ids()
        .map(|id| (id, deltas.iter().map(|(_, d)| d[&id] as f64).sum::<f64>() / deltas.len() as f64))
        .collect();
    let mut rows: Vec<(NodeId, usize)> = freq.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(mean[&b.0].total_cmp(&mean[&a.0])).then(a.0.cmp(&b.0)));
    bundle.csv(stage, format!("{mode}_hotday_top_k.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node_id", "name", "period_label", "k", "models_in_top_k", "n_models", "mean_delta_hot_days"])?;
        for (id, count) in &rows {
            let name = net.node(*id).map(|n| n.name.as_str()).unwrap_or_default();
            w.write_record([
                id.to_string(),
                name.to_string(),
                c.removal_period.label(),
                k.to_string(),
                count.to_string(),
                deltas.len().to_string(),
                mean[id].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })
}

fn write_climate(bundle: &mut ReportBundle, data: &ClimateData) -> Result<(), PipelineError> {
    let stage = Stage::Hotdays;
    bundle.csv(stage, "hotday_profiles.csv".into(), |w| climate::write_profiles_csv(w, &data.profiles))?;
    for (period, deltas) in &data.deltas {
        let label = period.label();
        bundle.csv(stage, format!("hotday_delta_{label}.csv"), |w| climate::write_deltas_csv(w, deltas))?;
        let as_f64: Vec<BTreeMap<NodeId, f64>> =
            deltas.iter().map(|(_, d)| d.iter().map(|(&id, &v)| (id, v as f64)).collect()).collect();
        let summary =
            ensemble_stats(StatTarget::DeltaHotDays, &as_f64).map_err(|e| PipelineError::internal(stage, e))?;
        bundle.csv(stage, format!("hotday_ensemble_{label}.csv"), |w| climate::write_ensemble_csv(w, &summary))?;
    }
    Ok(())
}

fn sequences(
    cfg: &RunConfig,
    climate: Option<&ClimateData>,
    net: &FreightNetwork,
) -> Result<Vec<RemovalSequence>, PipelineError> {
    let stage = Stage::Simulate;
    let mut out = Vec::new();
    for &scenario in &cfg.scenarios {
        match scenario {
            Scenario::Random => {
                let seeds: Vec<u64> =
                    (0..cfg.random.trials as u64).map(|i| cfg.random.base_seed.wrapping_add(i)).collect();
                out.par_extend(seeds.into_par_iter().map(|s| random_sequence(net, s)));
            }
            Scenario::Degree | Scenario::Closeness | Scenario::Betweenness => {
                out.push(targeted_sequence(net, scenario, cfg.ranking).map_err(|e| PipelineError::internal(stage, e))?);
            }
            Scenario::HotDays => {
                let c = cfg.climate.as_ref().expect("validated: hot_days has climate inputs");
                let data = climate.expect("climate loaded for hot_days");
                for (model, delta) in data.deltas_for(&c.removal_period) {
                    out.push(hot_day_sequence(net, model, delta).map_err(|e| PipelineError::data(stage, e))?);
                }
            }
        }
    }
    Ok(out)
}

type CollapseRow = (Scenario, Option<String>, f64, Option<f64>);

fn simulate(
    bundle: &mut ReportBundle,
    cfg: &RunConfig,
    climate: Option<&ClimateData>,
    mode: Mode,
    net: &FreightNetwork,
) -> Result<(), PipelineError> {
    let stage = Stage::Simulate;
    let seqs = sequences(cfg, climate, net)?;
    let curves = seqs
        .par_iter()
        .map(|s| replay(net, s))
        .collect::<Result<Vec<RobustnessCurve>, _>>()
        .map_err(|e| PipelineError::internal(stage, e))?;

    let threshold = cfg.collapse_threshold;
    let mut ensembles: Vec<CurveEnsemble> = Vec::new();
    let mut collapse: Vec<CollapseRow> = Vec::new();
    let mut checkpoints: Vec<[String; 6]> = Vec::new();
    let point = |c: &RobustnessCurve, k: usize| {
        let s = &c.steps[k];
        (s.scf, s.tonnage_fraction, Some(s.tonnage_fraction_gcc))
    };
    for &scenario in &cfg.scenarios {
        let group: Vec<RobustnessCurve> = curves.iter().filter(|c| c.scenario == scenario).cloned().collect();
        if group.is_empty() {
            continue;
        }
        let label = |c: &RobustnessCurve| c.model.clone().unwrap_or_default();
        match scenario {
            Scenario::Random => {
                let e = aggregate_curves(&group, threshold).map_err(|e| PipelineError::internal(stage, e))?;
                collapse.push((scenario, None, threshold, e.mean_curve_collapse()));
                for &k in cfg.checkpoints.iter().filter(|&&k| k <= net.node_count()) {
                    let (scf, tf) = (e.scf.entries[&k].mean, e.tonnage_fraction.entries[&k].mean);
                    checkpoints.push(row(scenario, String::new(), k, scf, tf, None));
                }
                ensembles.push(e);
            }
            _ => {
                for c in &group {
                    let r = collapse_point(c, threshold).map_err(|e| PipelineError::internal(stage, e))?;
                    collapse.push((scenario, c.model.clone(), threshold, r.collapse_fraction));
                    for &k in cfg.checkpoints.iter().filter(|&&k| k <= net.node_count()) {
                        let (scf, tf, gcc) = point(c, k);
                        checkpoints.push(row(scenario, label(c), k, scf, tf, gcc));
                    }
                }
                if scenario == Scenario::HotDays {
                    ensembles.push(aggregate_curves(&group, threshold).map_err(|e| PipelineError::internal(stage, e))?);
                }
            }
        }
    }

    bundle.csv(stage, format!("{mode}_sequences.csv"), |w| write_sequences_csv(w, &seqs))?;
    bundle.csv(stage, format!("{mode}_curves.csv"), |w| write_curves_csv(w, &curves))?;
    bundle.csv(stage, format!("{mode}_collapse.csv"), |w| write_collapse_csv(w, &collapse))?;
    bundle.csv(stage, format!("{mode}_curve_ensemble.csv"), |w| write_curve_ensemble_csv(w, &ensembles))?;
    bundle.csv(stage, format!("{mode}_collapse_ensemble.csv"), |w| write_collapse_ensemble_csv(w, &ensembles))?;
    bundle.csv(stage, format!("{mode}_checkpoints.csv"), |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["scenario", "model", "removed", "scf", "tonnage_fraction", "tonnage_fraction_gcc"])?;
        for r in &checkpoints {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn row(scenario: Scenario, model: String, k: usize, scf: f64, tf: f64, gcc: Option<f64>) -> [String; 6] {
    [
        scenario.to_string(),
        model,
        k.to_string(),
        scf.to_string(),
        tf.to_string(),
        gcc.map(|g| g.to_string()).unwrap_or_default(),
    ]
}
