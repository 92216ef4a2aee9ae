//! Replay of removal sequences: giant-component size, state of critical
//! functionality (SCF = FF / TF), residual tonnage and collapse points.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use thiserror::Error;

use crate::climate::{summarize, EnsembleSummary, StatTarget, SummaryStats};
use crate::disruption::{RankingMode, RemovalSequence, Scenario};
use crate::network::{FreightNetwork, NodeId};

/// Collapse is declared at the first step with `SCF <= DEFAULT_COLLAPSE_THRESHOLD`.
pub const DEFAULT_COLLAPSE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("cannot replay on an empty network")]
    EmptyNetwork,
    #[error("sequence references node {0} that is not in the network")]
    UnknownNode(NodeId),
    #[error("sequence lists node {0} more than once")]
    Duplicate(NodeId),
    #[error("collapse threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("curves cover different network sizes or lengths ({0} vs {1} steps)")]
    MixedSizes(usize, usize),
    #[error("no curves to aggregate")]
    NoCurves,
}

/// Size of the largest connected component; 0 for an empty network.
pub fn gcc_size(net: &FreightNetwork) -> usize {
    let n = net.node_count();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in net.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        best = best.max(size);
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveStep {
    pub step: usize,
    /// Node removed at this step; `None` at step 0.
    pub removed: Option<NodeId>,
    pub fraction_removed: f64,
    /// Giant component size after this step's removals.
    pub ff: usize,
    pub scf: f64,
    /// Surviving nodes' tonnage over the intact network's tonnage.
    pub tonnage_fraction: f64,
    /// Giant component's tonnage over the intact network's tonnage.
    pub tonnage_fraction_gcc: f64,
    pub beyond_criterion: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessCurve {
    pub scenario: Scenario,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub ranking: RankingMode,
    pub node_count: usize,
    /// Giant component size of the intact network.
    pub tf: usize,
    pub steps: Vec<CurveStep>,
}

impl RobustnessCurve {
    /// Trapezoid area under SCF against fraction removed.
    pub fn scf_area(&self) -> f64 {
        self.steps
            .windows(2)
            .map(|w| (w[1].fraction_removed - w[0].fraction_removed) * (w[0].scf + w[1].scf) / 2.0)
            .sum()
    }

    pub fn step(&self, k: usize) -> Option<&CurveStep> {
        self.steps.get(k)
    }
}

/// Union-find over dense node positions carrying component size, exact
/// tonnage and smallest member position.
struct Components {
    parent: Vec<usize>,
    size: Vec<usize>,
    tonnage: Vec<u128>,
    min_index: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Components {
            parent: (0..n).collect(),
            size: vec![0; n],
            tonnage: vec![0; n],
            min_index: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn activate(&mut self, v: usize, tonnage: u128) {
        self.size[v] = 1;
        self.tonnage[v] = tonnage;
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.tonnage[ra] += self.tonnage[rb];
        self.min_index[ra] = self.min_index[ra].min(self.min_index[rb]);
        ra
    }

    /// Ordering key for the giant component: larger first, then the one
    /// holding the smallest node id.
    fn key(&self, root: usize) -> (usize, std::cmp::Reverse<usize>) {
        (self.size[root], std::cmp::Reverse(self.min_index[root]))
    }
}

/// Fraction of `part` in `whole`; a network without tonnage weighs every
/// node equally, so callers pass node counts instead.
fn fraction(part: u128, whole: u128) -> f64 {
    part as f64 / whole as f64
}

/// Replays `seq` on `net`. Step `k` describes the network after the first
/// `k` removals; step 0 is the intact network.
///
/// Giant components are found by adding nodes back in reverse removal order
/// into a union-find. Among equally large components the one containing
/// the smallest node id supplies `tonnage_fraction_gcc`.
pub fn replay(net: &FreightNetwork, seq: &RemovalSequence) -> Result<RobustnessCurve, MetricsError> {
    let n = net.node_count();
    if n == 0 {
        return Err(MetricsError::EmptyNetwork);
    }
    let mut removed_at = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(seq.order.len());
    for (k, &id) in seq.order.iter().enumerate() {
        let i = net.index_of(id).ok_or(MetricsError::UnknownNode(id))?;
        if removed_at[i] != usize::MAX {
            return Err(MetricsError::Duplicate(id));
        }
        removed_at[i] = k;
        order.push(i);
    }

    let unit_weights = net.total_tonnage() == 0;
    let weight = |i: usize| -> u128 {
        if unit_weights {
            1
        } else {
            u128::from(net.nodes()[i].tonnage.micro_tons())
        }
    };
    let total: u128 = (0..n).map(weight).sum();

    let len = order.len();
    let mut ff = vec![0usize; len + 1];
    let mut gcc_tonnage = vec![0u128; len + 1];
    let mut uf = Components::new(n);
    let mut active = vec![false; n];
    let mut best: Option<usize> = None;

    let add = |v: usize, uf: &mut Components, active: &mut Vec<bool>, best: &mut Option<usize>| {
        active[v] = true;
        uf.activate(v, weight(v));
        let mut root = v;
        for &w in net.neighbors(v) {
            if active[w] {
                root = uf.union(root, w);
            }
        }
        let root = uf.find(root);
        *best = match *best {
            Some(b) => {
                let b = uf.find(b);
                Some(if uf.key(root) > uf.key(b) { root } else { b })
            }
            None => Some(root),
        };
    };

    for v in (0..n).filter(|&v| removed_at[v] == usize::MAX) {
        add(v, &mut uf, &mut active, &mut best);
    }
    let record = |k: usize, uf: &mut Components, best: Option<usize>, ff: &mut [usize], gt: &mut [u128]| {
        if let Some(b) = best {
            let r = uf.find(b);
            ff[k] = uf.size[r];
            gt[k] = uf.tonnage[r];
        }
    };
    record(len, &mut uf, best, &mut ff, &mut gcc_tonnage);
    for k in (0..len).rev() {
        add(order[k], &mut uf, &mut active, &mut best);
        record(k, &mut uf, best, &mut ff, &mut gcc_tonnage);
    }

    let tf = ff[0];
    let mut surviving = total;
    let mut steps = Vec::with_capacity(len + 1);
    for k in 0..=len {
        let removed = (k > 0).then(|| seq.order[k - 1]);
        if k > 0 {
            surviving -= weight(order[k - 1]);
        }
        steps.push(CurveStep {
            step: k,
            removed,
            fraction_removed: k as f64 / n as f64,
            ff: ff[k],
            scf: ff[k] as f64 / tf as f64,
            tonnage_fraction: fraction(surviving, total),
            tonnage_fraction_gcc: fraction(gcc_tonnage[k], total),
            beyond_criterion: k > 0 && seq.beyond_criterion[k - 1],
        });
    }
    Ok(RobustnessCurve {
        scenario: seq.scenario,
        model: seq.model.clone(),
        seed: seq.seed,
        ranking: seq.ranking,
        node_count: n,
        tf,
        steps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseReport {
    pub scenario: Scenario,
    pub model: Option<String>,
    pub seed: Option<u64>,
    pub threshold: f64,
    pub collapse_step: Option<usize>,
    /// `collapse_step / n`, or `None` if SCF never reaches the threshold.
    pub collapse_fraction: Option<f64>,
}

fn check_threshold(threshold: f64) -> Result<(), MetricsError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(MetricsError::InvalidThreshold(threshold))
    }
}

fn first_at_or_below(scf: impl Iterator<Item = f64>, threshold: f64) -> Option<usize> {
    scf.enumerate().find(|&(_, s)| s <= threshold).map(|(k, _)| k)
}

pub fn collapse_point(curve: &RobustnessCurve, threshold: f64) -> Result<CollapseReport, MetricsError> {
    check_threshold(threshold)?;
    let step = first_at_or_below(curve.steps.iter().map(|s| s.scf), threshold);
    Ok(CollapseReport {
        scenario: curve.scenario,
        model: curve.model.clone(),
        seed: curve.seed,
        threshold,
        collapse_step: step,
        collapse_fraction: step.map(|k| k as f64 / curve.node_count as f64),
    })
}

/// Per-step statistics over several curves of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveEnsemble {
    pub scenario: Scenario,
    pub node_count: usize,
    pub scf: EnsembleSummary<usize>,
    pub tonnage_fraction: EnsembleSummary<usize>,
    pub threshold: f64,
    /// Statistics of the collapse fractions of curves that collapse.
    pub collapse: Option<SummaryStats>,
    /// How many curves reach the threshold.
    pub collapsed: usize,
}

impl CurveEnsemble {
    pub fn n_curves(&self) -> usize {
        self.scf.n_models
    }

    /// Collapse fraction of the step-wise mean SCF curve.
    pub fn mean_curve_collapse(&self) -> Option<f64> {
        first_at_or_below(self.scf.entries.values().map(|s| s.mean), self.threshold)
            .map(|k| k as f64 / self.node_count as f64)
    }
}

pub fn aggregate_curves(curves: &[RobustnessCurve], threshold: f64) -> Result<CurveEnsemble, MetricsError> {
    check_threshold(threshold)?;
    let first = curves.first().ok_or(MetricsError::NoCurves)?;
    for c in curves {
        if c.node_count != first.node_count || c.steps.len() != first.steps.len() {
            return Err(MetricsError::MixedSizes(first.steps.len(), c.steps.len()));
        }
    }
    let per_step = |metric: fn(&CurveStep) -> f64| -> BTreeMap<usize, SummaryStats> {
        (0..first.steps.len())
            .map(|k| {
                let values: Vec<f64> = curves.iter().map(|c| metric(&c.steps[k])).collect();
                (k, summarize(&values))
            })
            .collect()
    };
    let summary = |target, entries| EnsembleSummary {
        target,
        entries,
        n_models: curves.len(),
        sd_defined: curves.len() > 1,
    };
    let fractions: Vec<f64> = curves
        .iter()
        .filter_map(|c| collapse_point(c, threshold).ok().and_then(|r| r.collapse_fraction))
        .collect();
    Ok(CurveEnsemble {
        scenario: first.scenario,
        node_count: first.node_count,
        scf: summary(StatTarget::Scf, per_step(|s| s.scf)),
        tonnage_fraction: summary(StatTarget::TonnageFraction, per_step(|s| s.tonnage_fraction)),
        threshold,
        collapse: (!fractions.is_empty()).then(|| summarize(&fractions)),
        collapsed: fractions.len(),
    })
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

/// `scenario,model,seed,step,node_id,fraction_removed,ff,scf,tonnage_fraction,tonnage_fraction_gcc`.
pub fn write_curves_csv<W: Write>(out: W, curves: &[RobustnessCurve]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "model",
        "seed",
        "step",
        "node_id",
        "fraction_removed",
        "ff",
        "scf",
        "tonnage_fraction",
        "tonnage_fraction_gcc",
    ])?;
    for c in curves {
        let (scenario, model, seed) = (c.scenario.to_string(), opt(&c.model), opt(&c.seed));
        for s in &c.steps {
            w.write_record([
                scenario.clone(),
                model.clone(),
                seed.clone(),
                s.step.to_string(),
                opt(&s.removed),
                s.fraction_removed.to_string(),
                s.ff.to_string(),
                s.scf.to_string(),
                s.tonnage_fraction.to_string(),
                s.tonnage_fraction_gcc.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `scenario,model,threshold,collapse_fraction`; empty fraction when the
/// curve never collapses.
pub fn write_collapse_csv<W: Write>(out: W, rows: &[(Scenario, Option<String>, f64, Option<f64>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "model", "threshold", "collapse_fraction"])?;
    for (scenario, model, threshold, fraction) in rows {
        w.write_record([scenario.to_string(), opt(model), threshold.to_string(), opt(fraction)])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step ensemble statistics:
/// `scenario,step,fraction_removed,metric,mean,sd,min,max,n_curves`.
pub fn write_curve_ensemble_csv<W: Write>(out: W, ensembles: &[CurveEnsemble]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "step", "fraction_removed", "metric", "mean", "sd", "min", "max", "n_curves"])?;
    for e in ensembles {
        for (metric, summary) in [("scf", &e.scf), ("tonnage_fraction", &e.tonnage_fraction)] {
            for (&k, s) in &summary.entries {
                w.write_record([
                    e.scenario.to_string(),
                    k.to_string(),
                    (k as f64 / e.node_count as f64).to_string(),
                    metric.to_string(),
                    s.mean.to_string(),
                    s.sd.to_string(),
                    s.min.to_string(),
                    s.max.to_string(),
                    summary.n_models.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Collapse-fraction statistics per scenario ensemble:
/// `scenario,threshold,n_curves,n_collapsed,mean,sd,min,max,mean_curve_collapse`.
pub fn write_collapse_ensemble_csv<W: Write>(out: W, ensembles: &[CurveEnsemble]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "threshold",
        "n_curves",
        "n_collapsed",
        "mean",
        "sd",
        "min",
        "max",
        "mean_curve_collapse",
    ])?;
    for e in ensembles {
        let stat = |f: fn(&SummaryStats) -> f64| e.collapse.as_ref().map(|s| f(s).to_string()).unwrap_or_default();
        w.write_record([
            e.scenario.to_string(),
            e.threshold.to_string(),
            e.n_curves().to_string(),
            e.collapsed.to_string(),
            stat(|s| s.mean),
            stat(|s| s.sd),
            stat(|s| s.min),
            stat(|s| s.max),
            opt(&e.mean_curve_collapse()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
