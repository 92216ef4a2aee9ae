//! Graph generators and brute-force oracles shared by the integration
//! tests. The oracles work on plain adjacency matrices and never call the
//! library's graph algorithms.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use freight_resilience::network::{FreightNetwork, Mode, NodeId, NodeRecord, Tonnage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn node(id: u64, tons_micro: u64) -> NodeRecord {
    NodeRecord {
        id: NodeId(id),
        name: format!("n{id}"),
        mode: Mode::Rail,
        lat: 30.0 + (id % 17) as f64,
        lon: -100.0 + (id % 23) as f64,
        tonnage: Tonnage::from_micro_tons(tons_micro),
    }
}

/// Erdős–Rényi G(n, p) on ids `offset..offset + n` (ids need not start at 0
/// so index/id confusion shows up) with random integer tonnage.
pub fn er_graph(n: usize, p: f64, seed: u64) -> FreightNetwork {
    let mut r = rng(seed);
    let offset = 1000 + r.random_range(0..50u64) * 7;
    let nodes: Vec<NodeRecord> = (0..n as u64).map(|i| node(offset + 3 * i, r.random_range(0..5_000_000_000u64))).collect();
    let mut edges = Vec::new();
    for i in 0..n as u64 {
        for j in i + 1..n as u64 {
            if r.random_bool(p) {
                edges.push((NodeId(offset + 3 * i), NodeId(offset + 3 * j)));
            }
        }
    }
    FreightNetwork::new(nodes, edges).unwrap()
}

pub fn star(n: usize) -> FreightNetwork {
    let nodes: Vec<NodeRecord> = (0..n as u64).map(|i| node(i + 1, 1_000_000 * (i + 1))).collect();
    let edges: Vec<_> = (2..=n as u64).map(|i| (NodeId(1), NodeId(i))).collect();
    FreightNetwork::new(nodes, edges).unwrap()
}

/// Adjacency matrix in ascending-id order.
pub struct Dense {
    pub ids: Vec<NodeId>,
    pub adj: Vec<Vec<bool>>,
    pub tonnage: Vec<u128>,
}

pub fn dense(net: &FreightNetwork) -> Dense {
    let ids: Vec<NodeId> = net.nodes().iter().map(|n| n.id).collect();
    let pos: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut adj = vec![vec![false; ids.len()]; ids.len()];
    for (a, b) in net.edges() {
        adj[pos[&a]][pos[&b]] = true;
        adj[pos[&b]][pos[&a]] = true;
    }
    let tonnage = net.nodes().iter().map(|n| u128::from(n.tonnage.micro_tons())).collect();
    Dense { ids, adj, tonnage }
}

pub const INF: usize = usize::MAX / 4;

/// Floyd–Warshall hop distances.
pub fn floyd_warshall(d: &Dense) -> Vec<Vec<usize>> {
    let n = d.ids.len();
    let mut dist = vec![vec![INF; n]; n];
    for i in 0..n {
        dist[i][i] = 0;
        for j in 0..n {
            if d.adj[i][j] {
                dist[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if dist[i][k] + dist[k][j] < dist[i][j] {
                    dist[i][j] = dist[i][k] + dist[k][j];
                }
            }
        }
    }
    dist
}

/// Number of shortest paths between every pair, by dynamic programming over
/// the distance matrix: a shortest s-t path ends with an edge from some
/// neighbor of t one hop closer to s.
pub fn path_counts(d: &Dense, dist: &[Vec<usize>]) -> Vec<Vec<u128>> {
    let n = d.ids.len();
    let mut sigma = vec![vec![0u128; n]; n];
    for s in 0..n {
        let mut by_dist: Vec<usize> = (0..n).filter(|&t| dist[s][t] < INF).collect();
        by_dist.sort_by_key(|&t| dist[s][t]);
        for &t in &by_dist {
            sigma[s][t] = if t == s {
                1
            } else {
                (0..n).filter(|&u| d.adj[u][t] && dist[s][u] + 1 == dist[s][t]).map(|u| sigma[s][u]).sum()
            };
        }
    }
    sigma
}

/// Unordered-pair betweenness from the pair-dependency definition.
pub fn brute_betweenness(d: &Dense) -> Vec<f64> {
    let n = d.ids.len();
    let dist = floyd_warshall(d);
    let sigma = path_counts(d, &dist);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if dist[s][t] >= INF {
                continue;
            }
            for v in 0..n {
                if v != s && v != t && dist[s][v] + dist[v][t] == dist[s][t] {
                    bc[v] += (sigma[s][v] * sigma[v][t]) as f64 / sigma[s][t] as f64;
                }
            }
        }
    }
    bc
}

/// Closeness with the reachable-set correction, `(r/(n-1)) * (r/Σd)`.
pub fn brute_closeness(d: &Dense) -> Vec<f64> {
    let n = d.ids.len();
    let dist = floyd_warshall(d);
    (0..n)
        .map(|v| {
            let reach: Vec<usize> = (0..n).filter(|&u| u != v && dist[v][u] < INF).map(|u| dist[v][u]).collect();
            let total: usize = reach.iter().sum();
            if total == 0 || n < 2 {
                0.0
            } else {
                let r = reach.len() as f64;
                (r / (n - 1) as f64) * (r / total as f64)
            }
        })
        .collect()
}

/// Giant component of the surviving nodes by repeated flood fill: returns
/// (size, tonnage) of the largest component, ties to the one holding the
/// smallest id.
pub fn flood_gcc(d: &Dense, alive: &[bool]) -> (usize, u128) {
    let n = d.ids.len();
    let mut seen = vec![false; n];
    let mut best = (0usize, 0u128);
    // Ascending-id scan: a later component must be strictly larger to win.
    for s in 0..n {
        if !alive[s] || seen[s] {
            continue;
        }
        let mut stack = vec![s];
        seen[s] = true;
        let (mut size, mut tons) = (0usize, 0u128);
        while let Some(v) = stack.pop() {
            size += 1;
            tons += d.tonnage[v];
            for w in 0..n {
                if d.adj[v][w] && alive[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if size > best.0 {
            best = (size, tons);
        }
    }
    best
}

/// Per-step (ff, scf, tonnage_fraction, tonnage_fraction_gcc) obtained by
/// rebuilding the surviving graph from scratch after every removal.
pub fn naive_replay(d: &Dense, order: &[NodeId]) -> Vec<(usize, f64, f64, f64)> {
    let n = d.ids.len();
    let mut d = Dense { ids: d.ids.clone(), adj: d.adj.clone(), tonnage: d.tonnage.clone() };
    if d.tonnage.iter().all(|&t| t == 0) {
        d.tonnage = vec![1; n];
    }
    let total: u128 = d.tonnage.iter().sum();
    let mut alive = vec![true; n];
    let tf = flood_gcc(&d, &alive).0;
    let mut out = Vec::new();
    for k in 0..=order.len() {
        if k > 0 {
            let i = d.ids.iter().position(|&id| id == order[k - 1]).unwrap();
            alive[i] = false;
        }
        let (ff, gcc_tons) = flood_gcc(&d, &alive);
        let surviving: u128 = (0..n).filter(|&i| alive[i]).map(|i| d.tonnage[i]).sum();
        out.push((ff, ff as f64 / tf as f64, surviving as f64 / total as f64, gcc_tons as f64 / total as f64));
    }
    out
}

/// Mean, sample sd, min and max by the textbook two-pass method.
pub fn two_pass(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = if values.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, sd, min, max)
}

/// Hot days by plain iteration over every (date, value) pair.
pub fn linear_scan_hot_days(
    series: &freight_resilience::climate::DailyTmaxSeries,
    start_year: i32,
    end_year: i32,
    threshold: f64,
) -> u32 {
    series
        .days()
        .iter()
        .zip(series.tmax())
        .filter(|(d, &t)| d.year >= start_year && d.year <= end_year && t > threshold)
        .count() as u32
}

/// Synthetic per-node deltas between -range and +range.
pub fn random_deltas(net: &FreightNetwork, seed: u64, range: i64) -> BTreeMap<NodeId, i64> {
    let mut r = rng(seed);
    net.ids().map(|id| (id, r.random_range(-range..=range))).collect()
}
