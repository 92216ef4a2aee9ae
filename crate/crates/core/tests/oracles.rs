mod common;

use std::collections::BTreeMap;

use common::*;
use freight_resilience::centrality::{betweenness_centrality, closeness_centrality, degree_centrality, shortest_path_counts};
use freight_resilience::climate::{map_nodes_to_grid, GridCell, RegularGrid};
use freight_resilience::disruption::{random_sequence, targeted_sequence, RankingMode, Scenario};
use freight_resilience::metrics::{gcc_size, replay};
use freight_resilience::network::NodeId;
use rand::Rng;

#[test]
fn gcc_matches_flood_fill_after_random_deletions() {
    for seed in 0..40 {
        let net = er_graph(60, 0.04, seed);
        let d = dense(&net);
        let mut r = rng(seed + 999);
        let victims: Vec<NodeId> = net.ids().filter(|_| r.random_bool(0.3)).collect();
        let rest = net.remove_nodes(&victims).unwrap();
        let alive: Vec<bool> = d.ids.iter().map(|id| !victims.contains(id)).collect();
        assert_eq!(gcc_size(&rest), flood_gcc(&d, &alive).0, "seed {seed}");
    }
}

#[test]
fn path_counts_match_dynamic_programming() {
    for seed in 0..30 {
        let net = er_graph(25, 0.2, seed);
        let d = dense(&net);
        let dist = floyd_warshall(&d);
        let sigma = path_counts(&d, &dist);
        for (s, &id) in d.ids.iter().enumerate() {
            let (hops, counts) = shortest_path_counts(&net, id).unwrap();
            for t in 0..d.ids.len() {
                let t_idx = net.index_of(d.ids[t]).unwrap();
                let expect = (dist[s][t] < INF).then_some(dist[s][t] as u32);
                assert_eq!(hops[t_idx], expect);
                assert_eq!(counts[t_idx], sigma[s][t]);
            }
        }
    }
}

#[test]
fn grid_lattice_counts_are_binomial() {
    // On a w x h grid graph the corner-to-corner path count is C(w+h-2, w-1).
    let (w, h) = (7u64, 6u64);
    let id = |x: u64, y: u64| NodeId(y * w + x);
    let nodes: Vec<_> = (0..w * h).map(|i| node(i, 1)).collect();
    let mut edges = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if x + 1 < w {
                edges.push((id(x, y), id(x + 1, y)));
            }
            if y + 1 < h {
                edges.push((id(x, y), id(x, y + 1)));
            }
        }
    }
    let net = freight_resilience::FreightNetwork::new(nodes, edges).unwrap();
    let (_, counts) = shortest_path_counts(&net, id(0, 0)).unwrap();
    assert_eq!(counts[net.index_of(id(w - 1, h - 1)).unwrap()], 462); // C(11, 6)
}

#[test]
fn betweenness_total_equals_interior_hops() {
    // Summed over nodes, pair dependencies add up to Σ (d(s,t) - 1) over
    // connected unordered pairs.
    for seed in 0..25 {
        let net = er_graph(30, 0.12, seed);
        let d = dense(&net);
        let dist = floyd_warshall(&d);
        let interior: usize = dist.iter().enumerate().flat_map(|(s, row)| row[s + 1..].iter()).filter(|&&h| h < INF).map(|h| h - 1).sum();
        let total: f64 = betweenness_centrality(&net).scores.values().sum();
        assert!((total - interior as f64).abs() < 1e-9 * (1.0 + interior as f64), "seed {seed}");
    }
}

#[test]
fn disconnected_graphs_match_oracles() {
    for seed in 0..20 {
        let net = er_graph(35, 0.05, seed);
        let d = dense(&net);
        let bc = brute_betweenness(&d);
        let cc = brute_closeness(&d);
        let b = betweenness_centrality(&net);
        let c = closeness_centrality(&net);
        let deg = degree_centrality(&net);
        for (i, id) in d.ids.iter().enumerate() {
            assert!((b.get(*id).unwrap() - bc[i]).abs() < 1e-9);
            assert!((c.get(*id).unwrap() - cc[i]).abs() < 1e-9);
            assert_eq!(deg.get(*id).unwrap(), d.adj[i].iter().filter(|&&e| e).count() as f64);
        }
    }
}

fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let r = 6371.0088_f64;
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let a = ((p2 - p1) / 2.0).sin().powi(2) + p1.cos() * p2.cos() * ((lon2 - lon1).to_radians() / 2.0).sin().powi(2);
    2.0 * r * a.sqrt().min(1.0).asin()
}

#[test]
fn nearest_cell_matches_exhaustive_search() {
    let grid = RegularGrid::new(24.5, 0.75, 36, -125.0, 0.9, 66).unwrap();
    let mut r = rng(5);
    let mut nodes = Vec::new();
    for i in 0..400u64 {
        let mut n = node(i, 1);
        n.lat = r.random_range(24.2..50.9);
        n.lon = r.random_range(-125.4..-66.6);
        nodes.push(n);
    }
    let mapped = map_nodes_to_grid(&nodes, &grid).unwrap();
    for n in &nodes {
        let mut best: Option<(f64, GridCell)> = None;
        for row in 0..grid.rows {
            for col in 0..grid.cols {
                let (clat, clon) = (grid.lat0 + row as f64 * grid.dlat, grid.lon0 + col as f64 * grid.dlon);
                let dist = haversine(n.lat, n.lon, clat, clon);
                if best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, GridCell { row, col }));
                }
            }
        }
        assert_eq!(mapped[&n.id], best.unwrap().1, "node at ({}, {})", n.lat, n.lon);
    }
}

#[test]
fn random_first_removal_is_uniform() {
    let net = er_graph(5, 0.5, 1);
    let mut first: BTreeMap<NodeId, usize> = BTreeMap::new();
    let trials = 10_000;
    for seed in 0..trials {
        *first.entry(random_sequence(&net, seed).order[0]).or_default() += 1;
    }
    assert_eq!(first.len(), 5);
    for (id, count) in first {
        let freq = count as f64 / trials as f64;
        assert!((freq - 0.2).abs() <= 0.02, "node {id} first in {freq} of trials");
    }
}

#[test]
fn replay_matches_rebuild_on_weighted_graphs() {
    for seed in 0..30 {
        let net = er_graph(40, 0.07, seed);
        let d = dense(&net);
        for scenario in [Scenario::Degree, Scenario::Betweenness, Scenario::Closeness] {
            for mode in [RankingMode::Static, RankingMode::Adaptive] {
                let seq = targeted_sequence(&net, scenario, mode).unwrap();
                let curve = replay(&net, &seq).unwrap();
                let naive = naive_replay(&d, &seq.order);
                for (s, o) in curve.steps.iter().zip(&naive) {
                    assert_eq!((s.ff, s.scf, s.tonnage_fraction, s.tonnage_fraction_gcc), *o);
                }
            }
        }
    }
}

#[test]
fn adaptive_order_recomputes_on_survivors() {
    // Brute-force reference: re-rank the surviving graph after each removal.
    for seed in 0..10 {
        let net = er_graph(18, 0.2, seed);
        let seq = targeted_sequence(&net, Scenario::Betweenness, RankingMode::Adaptive).unwrap();
        let mut current = net.clone();
        for &id in &seq.order {
            let d = dense(&current);
            let bc = brute_betweenness(&d);
            let top = bc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let pick = d.ids.iter().zip(&bc).find(|(_, &b)| (b - top).abs() < 1e-9).unwrap().0;
            assert_eq!(id, *pick, "seed {seed}");
            current = current.remove_nodes(&[id]).unwrap();
        }
    }
}
