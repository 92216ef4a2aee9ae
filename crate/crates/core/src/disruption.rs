//! Removal sequences for the five disruption scenarios: random failure,
//! degree/closeness/betweenness-targeted attack, and hot-day exposure.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centrality::{centrality, rank_nodes, score_order, ScoreKind};
use crate::network::{FreightNetwork, NodeId};
use crate::rng::{seeded_rng, shuffle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Random,
    Degree,
    Closeness,
    Betweenness,
    HotDays,
}

impl Scenario {
    pub const ALL: [Scenario; 5] =
        [Scenario::Random, Scenario::Degree, Scenario::Closeness, Scenario::Betweenness, Scenario::HotDays];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Random => "random",
            Scenario::Degree => "degree",
            Scenario::Closeness => "closeness",
            Scenario::Betweenness => "betweenness",
            Scenario::HotDays => "hot_days",
        }
    }

    /// The centrality a targeted scenario ranks by.
    pub fn centrality_kind(self) -> Option<ScoreKind> {
        match self {
            Scenario::Degree => Some(ScoreKind::Degree),
            Scenario::Closeness => Some(ScoreKind::Closeness),
            Scenario::Betweenness => Some(ScoreKind::Betweenness),
            Scenario::Random | Scenario::HotDays => None,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| format!("unknown scenario `{s}` (expected random, degree, closeness, betweenness or hot_days)"))
    }
}

/// Whether a targeted ranking is computed once or refreshed after every removal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMode {
    #[default]
    Static,
    Adaptive,
}

impl RankingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RankingMode::Static => "static",
            RankingMode::Adaptive => "adaptive",
        }
    }
}

impl FromStr for RankingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(RankingMode::Static),
            "adaptive" => Ok(RankingMode::Adaptive),
            other => Err(format!("unknown ranking mode `{other}` (expected static or adaptive)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DisruptionError {
    #[error("scenario {0} is not a centrality-targeted scenario")]
    NotTargeted(Scenario),
    #[error("hot-day deltas are missing node {0}")]
    MissingDelta(NodeId),
    #[error("sequence lists node {0} more than once")]
    Duplicate(NodeId),
    #[error("sequence references node {0} that is not in the network")]
    UnknownNode(NodeId),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalSequence {
    pub scenario: Scenario,
    /// Climate model label; set for hot-day sequences only.
    pub model: Option<String>,
    /// Generator seed; set for random sequences only.
    pub seed: Option<u64>,
    pub ranking: RankingMode,
    pub order: Vec<NodeId>,
    /// Per-step flag: the node was appended after the removal criterion was
    /// exhausted (only hot-day sequences set it).
    pub beyond_criterion: Vec<bool>,
}

impl RemovalSequence {
    pub fn new(
        scenario: Scenario,
        model: Option<String>,
        seed: Option<u64>,
        ranking: RankingMode,
        order: Vec<NodeId>,
        beyond_criterion: Vec<bool>,
    ) -> Result<Self, DisruptionError> {
        if order.len() != beyond_criterion.len() {
            return Err(DisruptionError::Invalid("criterion flags do not match the order length".into()));
        }
        if (scenario == Scenario::HotDays) != model.is_some() {
            return Err(DisruptionError::Invalid("a model label is required for hot_days and only for hot_days".into()));
        }
        if (scenario == Scenario::Random) != seed.is_some() {
            return Err(DisruptionError::Invalid("a seed is required for random and only for random".into()));
        }
        let mut seen = BTreeSet::new();
        if let Some(dup) = order.iter().find(|id| !seen.insert(**id)) {
            return Err(DisruptionError::Duplicate(*dup));
        }
        Ok(RemovalSequence { scenario, model, seed, ranking, order, beyond_criterion })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Removals that satisfy the scenario's criterion.
    pub fn criterion_prefix(&self) -> &[NodeId] {
        let end = self.beyond_criterion.iter().position(|&b| b).unwrap_or(self.order.len());
        &self.order[..end]
    }

    /// Checks that every listed node exists in `net`.
    pub fn validate_for(&self, net: &FreightNetwork) -> Result<(), DisruptionError> {
        match self.order.iter().find(|id| !net.contains(**id)) {
            Some(id) => Err(DisruptionError::UnknownNode(*id)),
            None => Ok(()),
        }
    }
}

/// Uniform random permutation of all nodes, determined by `seed`.
///
/// Nodes are shuffled from ascending id order with [`crate::rng::shuffle`].
pub fn random_sequence(net: &FreightNetwork, seed: u64) -> RemovalSequence {
    let mut order: Vec<NodeId> = net.ids().collect();
    shuffle(&mut seeded_rng(seed), &mut order);
    let flags = vec![false; order.len()];
    RemovalSequence::new(Scenario::Random, None, Some(seed), RankingMode::Static, order, flags)
        .expect("permutation is valid")
}

/// Highest-centrality-first removal order.
pub fn targeted_sequence(
    net: &FreightNetwork,
    scenario: Scenario,
    mode: RankingMode,
) -> Result<RemovalSequence, DisruptionError> {
    let kind = scenario.centrality_kind().ok_or(DisruptionError::NotTargeted(scenario))?;
    let order = match mode {
        RankingMode::Static if net.is_empty() => Vec::new(),
        RankingMode::Static => {
            let scores = centrality(net, kind);
            rank_nodes(&scores, scores.len()).expect("k = n is in range").ids().collect()
        }
        RankingMode::Adaptive => {
            let mut current = net.clone();
            let mut order = Vec::with_capacity(net.node_count());
            while !current.is_empty() {
                let scores = centrality(&current, kind);
                let best = scores
                    .scores
                    .iter()
                    .map(|(&id, &s)| (id, s))
                    .min_by(|&a, &b| score_order(a, b))
                    .expect("non-empty network")
                    .0;
                order.push(best);
                current = current.remove_nodes(&[best]).expect("node is present");
            }
            order
        }
    };
    let flags = vec![false; order.len()];
    RemovalSequence::new(scenario, None, None, mode, order, flags)
}

/// Nodes whose hot-day count rose above baseline, most-increased first
/// (ties by ascending id), then the rest by ascending id flagged as beyond
/// the criterion.
pub fn hot_day_sequence(
    net: &FreightNetwork,
    model: &str,
    delta: &BTreeMap<NodeId, i64>,
) -> Result<RemovalSequence, DisruptionError> {
    let mut exposed = Vec::new();
    let mut rest = Vec::new();
    for id in net.ids() {
        let d = *delta.get(&id).ok_or(DisruptionError::MissingDelta(id))?;
        if d > 0 {
            exposed.push((id, d));
        } else {
            rest.push(id);
        }
    }
    exposed.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut flags = vec![false; exposed.len()];
    flags.resize(exposed.len() + rest.len(), true);
    let order = exposed.into_iter().map(|(id, _)| id).chain(rest).collect();
    RemovalSequence::new(Scenario::HotDays, Some(model.to_string()), None, RankingMode::Static, order, flags)
}

/// `step,node_id,scenario,model,seed,beyond_criterion`, steps from 1.
pub fn write_sequences_csv<W: Write>(out: W, sequences: &[RemovalSequence]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "node_id", "scenario", "model", "seed", "beyond_criterion"])?;
    for seq in sequences {
        let model = seq.model.clone().unwrap_or_default();
        let seed = seq.seed.map(|s| s.to_string()).unwrap_or_default();
        for (i, (id, beyond)) in seq.order.iter().zip(&seq.beyond_criterion).enumerate() {
            w.write_record([
                (i + 1).to_string(),
                id.to_string(),
                seq.scenario.to_string(),
                model.clone(),
                seed.clone(),
                beyond.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
