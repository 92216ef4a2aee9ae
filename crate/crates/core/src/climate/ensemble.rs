use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::ClimateError;
use crate::centrality::RankedNodes;
use crate::network::NodeId;

/// What an ensemble summary describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatTarget {
    DeltaHotDays,
    CollapseFraction,
    Scf,
    TonnageFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Two-pass mean and sample standard deviation. Panics on an empty slice.
pub fn summarize(values: &[f64]) -> SummaryStats {
    assert!(!values.is_empty(), "summarize needs at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Rounding can push the mean of near-identical values a hair outside.
    SummaryStats { mean: mean.clamp(min, max), sd, min, max }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary<K: Ord> {
    pub target: StatTarget,
    pub entries: BTreeMap<K, SummaryStats>,
    pub n_models: usize,
    /// False when only one model was supplied and `sd` is reported as 0.
    pub sd_defined: bool,
}

/// Per-node statistics across models. Values are taken in model order.
pub fn ensemble_stats(
    target: StatTarget,
    per_model: &[BTreeMap<NodeId, f64>],
) -> Result<EnsembleSummary<NodeId>, ClimateError> {
    let first = per_model.first().ok_or(ClimateError::NoModels)?;
    for model in &per_model[1..] {
        if let Some(id) = first
            .keys()
            .find(|id| !model.contains_key(id))
            .or_else(|| model.keys().find(|id| !first.contains_key(id)))
        {
            return Err(ClimateError::NodeSetMismatch(*id));
        }
    }
    let entries = first
        .keys()
        .map(|id| {
            let values: Vec<f64> = per_model.iter().map(|m| m[id]).collect();
            (*id, summarize(&values))
        })
        .collect();
    Ok(EnsembleSummary { target, entries, n_models: per_model.len(), sd_defined: per_model.len() > 1 })
}

/// For every node of the shared universe, the number of rankings whose
/// first `k` entries contain it.
pub fn top_k_frequency(rankings: &[RankedNodes], k: usize) -> Result<BTreeMap<NodeId, usize>, ClimateError> {
    if k == 0 {
        return Err(ClimateError::ZeroK);
    }
    let first = rankings.first().ok_or(ClimateError::NoModels)?;
    let mut freq: BTreeMap<NodeId, usize> = first.universe.iter().map(|&id| (id, 0)).collect();
    for ranking in rankings {
        if ranking.universe != first.universe {
            let id = ranking.universe.symmetric_difference(&first.universe).next().copied();
            return Err(ClimateError::NodeSetMismatch(id.unwrap_or(NodeId(0))));
        }
        if ranking.entries.len() < k {
            return Err(ClimateError::RankingTooShort { len: ranking.entries.len(), k });
        }
        let top: BTreeSet<NodeId> = ranking.entries[..k].iter().map(|e| e.node).collect();
        for id in top {
            *freq.get_mut(&id).expect("ranked node outside its universe") += 1;
        }
    }
    Ok(freq)
}
