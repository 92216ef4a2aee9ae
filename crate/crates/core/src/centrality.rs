//! Degree, closeness and betweenness centrality on the unweighted freight
//! graph, plus deterministic top-k ranking.
//!
//! Conventions:
//! - Shortest paths are hop counts (BFS).
//! - Betweenness counts each unordered pair `{s, t}` once. The ordered-pair
//!   sum is exactly twice these values and ranks nodes identically.
//! - Closeness applies the component-size correction
//!   `(r / (n - 1)) * (r / sum_dist)`, where `r` is the number of nodes
//!   reachable from `i`, so scores lie in `[0, 1]` on disconnected graphs too.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::{FreightNetwork, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Degree,
    Closeness,
    Betweenness,
    /// Future-minus-baseline hot-day count; used to rank climate exposure.
    HotDays,
}

impl ScoreKind {
    pub const CENTRALITIES: [ScoreKind; 3] =
        [ScoreKind::Degree, ScoreKind::Closeness, ScoreKind::Betweenness];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Degree => "degree",
            ScoreKind::Closeness => "closeness",
            ScoreKind::Betweenness => "betweenness",
            ScoreKind::HotDays => "hot_days",
        }
    }
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScoreKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "degree" => Ok(ScoreKind::Degree),
            "closeness" => Ok(ScoreKind::Closeness),
            "betweenness" => Ok(ScoreKind::Betweenness),
            "hot_days" => Ok(ScoreKind::HotDays),
            other => Err(format!("unknown score kind `{other}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CentralityError {
    #[error("k = {k} is out of range for {available} scored nodes")]
    KOutOfRange { k: usize, available: usize },
}

/// One score per node of the source network.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeScores {
    pub kind: ScoreKind,
    pub scores: BTreeMap<NodeId, f64>,
    pub normalized: bool,
}

pub type CentralityScores = NodeScores;

impl NodeScores {
    pub fn get(&self, id: NodeId) -> Option<f64> {
        self.scores.get(&id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Normalized copy. Degree divides by `n - 1`, betweenness by
    /// `(n - 1)(n - 2) / 2`; closeness is already normalized. Scores of
    /// graphs too small for the denominator become 0.
    pub fn normalized(&self) -> NodeScores {
        if self.normalized {
            return self.clone();
        }
        let n = self.scores.len() as f64;
        let denom = match self.kind {
            ScoreKind::Degree => n - 1.0,
            ScoreKind::Betweenness => (n - 1.0) * (n - 2.0) / 2.0,
            ScoreKind::Closeness | ScoreKind::HotDays => return self.clone(),
        };
        let scores = self
            .scores
            .iter()
            .map(|(&id, &s)| (id, if denom > 0.0 { s / denom } else { 0.0 }))
            .collect();
        NodeScores { kind: self.kind, scores, normalized: true }
    }
}

pub fn degree_centrality(net: &FreightNetwork) -> NodeScores {
    let scores = (0..net.node_count())
        .map(|i| (net.id_at(i), net.neighbors(i).len() as f64))
        .collect();
    NodeScores { kind: ScoreKind::Degree, scores, normalized: false }
}

fn bfs_distances(net: &FreightNetwork, source: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    dist.fill(u32::MAX);
    dist[source] = 0;
    queue.clear();
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in net.neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
}

/// Reachable-node count (excluding the source) and summed hop distance.
fn reach_and_distance_sum(net: &FreightNetwork, source: usize) -> (u64, u64) {
    let mut dist = vec![u32::MAX; net.node_count()];
    let mut queue = VecDeque::new();
    bfs_distances(net, source, &mut dist, &mut queue);
    dist.iter()
        .filter(|&&d| d != u32::MAX && d > 0)
        .fold((0, 0), |(r, s), &d| (r + 1, s + u64::from(d)))
}

pub fn closeness_centrality(net: &FreightNetwork) -> NodeScores {
    let n = net.node_count();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (reach, total) = reach_and_distance_sum(net, i);
            if reach == 0 {
                0.0
            } else {
                (reach * reach) as f64 / ((n as u64 - 1) * total) as f64
            }
        })
        .collect();
    let scores = values.into_iter().enumerate().map(|(i, v)| (net.id_at(i), v)).collect();
    NodeScores { kind: ScoreKind::Closeness, scores, normalized: true }
}

/// Raw closeness `1 / sum_dist` over the nodes reachable from each node;
/// isolated nodes score 0.
pub fn raw_closeness(net: &FreightNetwork) -> BTreeMap<NodeId, f64> {
    (0..net.node_count())
        .map(|i| {
            let (reach, total) = reach_and_distance_sum(net, i);
            (net.id_at(i), if reach == 0 { 0.0 } else { 1.0 / total as f64 })
        })
        .collect()
}

/// Single-source hop distances and exact shortest-path counts, indexed by
/// dense node position. Unreachable nodes have distance `None` and count 0.
/// Returns `None` if a path count overflows `u128`.
pub fn shortest_path_counts(net: &FreightNetwork, source: NodeId) -> Option<(Vec<Option<u32>>, Vec<u128>)> {
    let s = net.index_of(source)?;
    let mut work = BrandesWork::new(net.node_count());
    work.forward(net, s).ok()?;
    let dist = work.dist.iter().map(|&d| (d != u32::MAX).then_some(d)).collect();
    Some((dist, work.sigma))
}

struct BrandesWork {
    dist: Vec<u32>,
    sigma: Vec<u128>,
    sigma_f: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

struct Overflow;

impl BrandesWork {
    fn new(n: usize) -> Self {
        BrandesWork {
            dist: vec![u32::MAX; n],
            sigma: vec![0; n],
            sigma_f: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    /// BFS from `s` with exact integer path counts.
    fn forward(&mut self, net: &FreightNetwork, s: usize) -> Result<(), Overflow> {
        self.dist.fill(u32::MAX);
        self.sigma.fill(0);
        self.order.clear();
        self.queue.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            let dv = self.dist[v];
            for &w in net.neighbors(v) {
                if self.dist[w] == u32::MAX {
                    self.dist[w] = dv + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == dv + 1 {
                    self.sigma[w] = self.sigma[w].checked_add(self.sigma[v]).ok_or(Overflow)?;
                }
            }
        }
        for (f, &c) in self.sigma_f.iter_mut().zip(&self.sigma) {
            *f = c as f64;
        }
        Ok(())
    }

    /// Same traversal with floating path counts; used only when the exact
    /// counts overflow.
    fn forward_float(&mut self, net: &FreightNetwork, s: usize) {
        self.dist.fill(u32::MAX);
        self.sigma_f.fill(0.0);
        self.order.clear();
        self.queue.clear();
        self.dist[s] = 0;
        self.sigma_f[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            let dv = self.dist[v];
            for &w in net.neighbors(v) {
                if self.dist[w] == u32::MAX {
                    self.dist[w] = dv + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == dv + 1 {
                    self.sigma_f[w] += self.sigma_f[v];
                }
            }
        }
    }

    /// Dependency accumulation for source `s`; leaves the per-node
    /// dependencies in `self.delta` (source entry is 0).
    fn accumulate(&mut self, net: &FreightNetwork, s: usize) {
        if self.forward(net, s).is_err() {
            self.forward_float(net, s);
        }
        self.delta.fill(0.0);
        for &w in self.order.iter().rev() {
            let dw = self.dist[w];
            let coeff = (1.0 + self.delta[w]) / self.sigma_f[w];
            for &v in net.neighbors(w) {
                if dw > 0 && self.dist[v] == dw - 1 {
                    self.delta[v] += self.sigma_f[v] * coeff;
                }
            }
        }
        self.delta[s] = 0.0;
    }
}

const SOURCE_CHUNK: usize = 64;

/// Brandes betweenness, unordered-pair convention, unnormalized.
///
/// Per-source passes run in parallel; their contributions are added in
/// ascending source order, so the result does not depend on thread count.
pub fn betweenness_centrality(net: &FreightNetwork) -> NodeScores {
    let n = net.node_count();
    let mut total = vec![0.0f64; n];
    let sources: Vec<usize> = (0..n).collect();
    for chunk in sources.chunks(SOURCE_CHUNK) {
        let partials: Vec<Vec<f64>> = chunk
            .par_iter()
            .map_init(
                || BrandesWork::new(n),
                |work, &s| {
                    work.accumulate(net, s);
                    work.delta.clone()
                },
            )
            .collect();
        for delta in &partials {
            for (t, d) in total.iter_mut().zip(delta) {
                *t += d;
            }
        }
    }
    let scores = total
        .into_iter()
        .enumerate()
        .map(|(i, v)| (net.id_at(i), v / 2.0))
        .collect();
    NodeScores { kind: ScoreKind::Betweenness, scores, normalized: false }
}

pub fn centrality(net: &FreightNetwork, kind: ScoreKind) -> NodeScores {
    match kind {
        ScoreKind::Degree => degree_centrality(net),
        ScoreKind::Closeness => closeness_centrality(net),
        ScoreKind::Betweenness => betweenness_centrality(net),
        ScoreKind::HotDays => panic!("hot-day scores are not a graph centrality"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedEntry {
    pub rank: usize,
    pub node: NodeId,
    pub score: f64,
}

/// Top-k nodes by descending score; `universe` is the full scored node set.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedNodes {
    pub kind: ScoreKind,
    pub entries: Vec<RankedEntry>,
    pub universe: BTreeSet<NodeId>,
}

impl RankedNodes {
    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|e| e.node)
    }
}

/// Descending score, ties by ascending id. NaN never occurs in our scores
/// but sorts last if it does.
pub(crate) fn score_order(a: (NodeId, f64), b: (NodeId, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

pub fn rank_nodes(scores: &NodeScores, k: usize) -> Result<RankedNodes, CentralityError> {
    let available = scores.scores.len();
    if k == 0 || k > available {
        return Err(CentralityError::KOutOfRange { k, available });
    }
    let mut all: Vec<(NodeId, f64)> = scores.scores.iter().map(|(&id, &s)| (id, s)).collect();
    all.sort_by(|&a, &b| score_order(a, b));
    let entries = all
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (node, score))| RankedEntry { rank: i + 1, node, score })
        .collect();
    Ok(RankedNodes {
        kind: scores.kind,
        entries,
        universe: scores.scores.keys().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Mode, NodeRecord, Tonnage};

    fn net(n: u64, edges: &[(u64, u64)]) -> FreightNetwork {
        let nodes = (0..n).map(|i| NodeRecord {
            id: NodeId(i),
            name: format!("n{i}"),
            mode: Mode::Rail,
            lat: 0.0,
            lon: 0.0,
            tonnage: Tonnage::ZERO,
        });
        FreightNetwork::new(nodes, edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b)))).unwrap()
    }

    fn path3() -> FreightNetwork {
        net(3, &[(0, 1), (1, 2)])
    }

    fn star(leaves: u64) -> FreightNetwork {
        let edges: Vec<_> = (1..=leaves).map(|l| (0, l)).collect();
        net(leaves + 1, &edges)
    }

    #[test]
    fn degree_on_path_and_isolated() {
        let d = degree_centrality(&path3());
        assert_eq!(d.get(NodeId(0)), Some(1.0));
        assert_eq!(d.get(NodeId(1)), Some(2.0));
        assert_eq!(d.get(NodeId(2)), Some(1.0));
        assert_eq!(d.normalized().get(NodeId(1)), Some(1.0));
        let lone = degree_centrality(&net(1, &[]));
        assert_eq!(lone.get(NodeId(0)), Some(0.0));
        assert_eq!(lone.normalized().get(NodeId(0)), Some(0.0));
    }

    #[test]
    fn closeness_on_path() {
        let c = closeness_centrality(&path3());
        assert_eq!(c.get(NodeId(1)), Some(1.0));
        assert!((c.get(NodeId(0)).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn closeness_component_correction() {
        let c = closeness_centrality(&net(4, &[(0, 1), (2, 3)]));
        for i in 0..4 {
            assert!((c.get(NodeId(i)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        let iso = closeness_centrality(&net(3, &[(0, 1)]));
        assert_eq!(iso.get(NodeId(2)), Some(0.0));
    }

    #[test]
    fn betweenness_path_and_star() {
        let b = betweenness_centrality(&path3());
        assert_eq!(b.get(NodeId(1)), Some(1.0));
        assert_eq!(b.get(NodeId(0)), Some(0.0));
        let s = betweenness_centrality(&star(4));
        assert_eq!(s.get(NodeId(0)), Some(6.0));
        assert_eq!(s.normalized().get(NodeId(0)), Some(1.0));
    }

    #[test]
    fn betweenness_splits_over_parallel_paths() {
        // 4-cycle: each node sits on one of the two shortest paths of its
        // opposite pair.
        let b = betweenness_centrality(&net(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]));
        for i in 0..4 {
            assert_eq!(b.get(NodeId(i)), Some(0.5));
        }
    }

    #[test]
    fn path_counts_on_grid() {
        // 3x3 grid, corner to opposite corner has C(4,2) = 6 shortest paths.
        let mut edges = Vec::new();
        for r in 0..3u64 {
            for c in 0..3u64 {
                let v = r * 3 + c;
                if c < 2 {
                    edges.push((v, v + 1));
                }
                if r < 2 {
                    edges.push((v, v + 3));
                }
            }
        }
        let g = net(9, &edges);
        let (dist, sigma) = shortest_path_counts(&g, NodeId(0)).unwrap();
        assert_eq!(dist[8], Some(4));
        assert_eq!(sigma[8], 6);
    }

    #[test]
    fn rank_tie_break_and_range() {
        let scores = NodeScores {
            kind: ScoreKind::Degree,
            scores: [(NodeId(1), 2.0), (NodeId(0), 2.0), (NodeId(2), 1.0)].into_iter().collect(),
            normalized: false,
        };
        let r = rank_nodes(&scores, 2).unwrap();
        let got: Vec<_> = r.entries.iter().map(|e| (e.rank, e.node.0, e.score)).collect();
        assert_eq!(got, vec![(1, 0, 2.0), (2, 1, 2.0)]);
        assert_eq!(rank_nodes(&scores, 3).unwrap().entries.len(), 3);
        assert_eq!(
            rank_nodes(&scores, 4),
            Err(CentralityError::KOutOfRange { k: 4, available: 3 })
        );
        assert!(rank_nodes(&scores, 0).is_err());
    }
}
