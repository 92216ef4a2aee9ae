mod common;

use std::collections::BTreeMap;

use common::*;
use freight_resilience::centrality::{betweenness_centrality, closeness_centrality, degree_centrality};
use freight_resilience::climate::{count_hot_days, CalendarDay, DailyTmaxSeries, PeriodSpec};
use freight_resilience::disruption::{hot_day_sequence, random_sequence, targeted_sequence, RankingMode, Scenario};
use freight_resilience::metrics::{replay, RobustnessCurve};
use freight_resilience::network::{FreightNetwork, NodeId, NodeRecord};
use proptest::prelude::*;

fn arb_graph() -> impl Strategy<Value = FreightNetwork> {
    (2usize..30, 0.02f64..0.5, any::<u64>()).prop_map(|(n, p, seed)| er_graph(n, p, seed))
}

/// Same graph with every id mapped through `f`.
fn relabel(net: &FreightNetwork, f: impl Fn(NodeId) -> NodeId) -> FreightNetwork {
    let nodes: Vec<NodeRecord> = net.nodes().iter().map(|n| NodeRecord { id: f(n.id), ..n.clone() }).collect();
    FreightNetwork::new(nodes, net.edges().map(|(a, b)| (f(a), f(b)))).unwrap()
}

fn check_curve(curve: &RobustnessCurve, net: &FreightNetwork, order: &[NodeId]) {
    let first = &curve.steps[0];
    assert_eq!((first.scf, first.tonnage_fraction), (1.0, 1.0));
    for w in curve.steps.windows(2) {
        assert!(w[1].scf <= w[0].scf);
        assert!(w[1].tonnage_fraction <= w[0].tonnage_fraction);
    }
    for s in &curve.steps {
        assert!(s.tonnage_fraction_gcc <= s.tonnage_fraction);
        assert!((0.0..=1.0).contains(&s.scf));
    }
    if order.len() == net.node_count() {
        assert_eq!(curve.steps.last().unwrap().scf, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn centrality_survives_relabeling(net in arb_graph(), shift in 1u64..1_000_000) {
        // Order-reversing relabel: tie-breaks change but scores must not.
        let top = net.ids().map(|id| id.0).max().unwrap();
        let f = |id: NodeId| NodeId(top + shift - id.0);
        let other = relabel(&net, f);
        for (a, b) in [
            (degree_centrality(&net), degree_centrality(&other)),
            (closeness_centrality(&net), closeness_centrality(&other)),
            (betweenness_centrality(&net), betweenness_centrality(&other)),
        ] {
            for (id, s) in &a.scores {
                prop_assert!((s - b.get(f(*id)).unwrap()).abs() <= 1e-9 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn removals_compose(net in arb_graph(), seed in any::<u64>(), split in 0usize..30) {
        let order = random_sequence(&net, seed).order;
        let k = split.min(order.len());
        let stepwise = net.remove_nodes(&order[..k]).unwrap().remove_nodes(&order[k..]).unwrap();
        prop_assert_eq!(stepwise, net.remove_nodes(&order).unwrap());
        let half = net.remove_nodes(&order[..k]).unwrap();
        let again = net.remove_nodes(&order[..k]).unwrap();
        prop_assert_eq!(half, again);
    }

    #[test]
    fn closeness_never_drops_when_an_edge_is_added(n in 3usize..25, seed in any::<u64>(), a in 0usize..25, b in 0usize..25) {
        // Connected base graph: a path plus random chords.
        let base = er_graph(n, 0.1, seed);
        let ids: Vec<NodeId> = base.ids().collect();
        let mut edges: Vec<(NodeId, NodeId)> = base.edges().collect();
        edges.extend(ids.windows(2).map(|w| (w[0], w[1])));
        let connected = FreightNetwork::new(base.nodes().to_vec(), edges.clone()).unwrap();
        let (a, b) = (ids[a % n], ids[b % n]);
        prop_assume!(a != b);
        edges.push((a, b));
        let denser = FreightNetwork::new(base.nodes().to_vec(), edges).unwrap();
        let (before, after) = (closeness_centrality(&connected), closeness_centrality(&denser));
        for id in &ids {
            prop_assert!(after.get(*id).unwrap() >= before.get(*id).unwrap() - 1e-12);
        }
    }

    #[test]
    fn curves_are_monotone_and_closed_form(net in arb_graph(), seed in any::<u64>()) {
        let deltas = random_deltas(&net, seed, 50);
        let mut seqs = vec![
            random_sequence(&net, seed),
            hot_day_sequence(&net, "m", &deltas).unwrap(),
        ];
        for s in [Scenario::Degree, Scenario::Closeness, Scenario::Betweenness] {
            seqs.push(targeted_sequence(&net, s, RankingMode::Static).unwrap());
        }
        let total: u128 = net.nodes().iter().map(|n| u128::from(n.tonnage.micro_tons())).sum();
        for seq in &seqs {
            let curve = replay(&net, seq).unwrap();
            check_curve(&curve, &net, &seq.order);
            let mut removed = 0u128;
            for (k, step) in curve.steps.iter().enumerate() {
                if k > 0 {
                    removed += u128::from(net.node(seq.order[k - 1]).unwrap().tonnage.micro_tons());
                }
                if total > 0 {
                    prop_assert_eq!(step.tonnage_fraction, (total - removed) as f64 / total as f64);
                }
            }
        }
    }

    #[test]
    fn hot_day_counts_add_over_split_periods(seed in any::<u64>(), split in 1991i32..2020, threshold in 20.0f64..45.0) {
        let series = synthetic_series(seed, 1991, 2020);
        let whole = count_hot_days(&series, &PeriodSpec::new(1991, 2020).unwrap(), threshold).unwrap();
        let lo = count_hot_days(&series, &PeriodSpec::new(1991, split).unwrap(), threshold).unwrap();
        let hi = if split < 2020 {
            count_hot_days(&series, &PeriodSpec::new(split + 1, 2020).unwrap(), threshold).unwrap()
        } else {
            0
        };
        prop_assert_eq!(whole, lo + hi);
    }

    #[test]
    fn hot_day_counts_fall_as_threshold_rises(seed in any::<u64>(), t1 in 20.0f64..45.0, dt in 0.0f64..10.0) {
        let series = synthetic_series(seed, 1991, 2000);
        let p = PeriodSpec::new(1991, 2000).unwrap();
        prop_assert!(count_hot_days(&series, &p, t1 + dt).unwrap() <= count_hot_days(&series, &p, t1).unwrap());
    }
}

fn synthetic_series(seed: u64, start: i32, end: i32) -> DailyTmaxSeries {
    use rand::Rng;
    let mut r = rng(seed);
    let mut days = Vec::new();
    let mut tmax = Vec::new();
    for year in start..=end {
        for month in 1..=12u8 {
            for day in 1..=28u8 {
                days.push(CalendarDay::new(year, month, day).unwrap());
                // Quantized to 0.5 so exact threshold values occur often.
                tmax.push((r.random_range(40..90) as f64) / 2.0);
            }
        }
    }
    DailyTmaxSeries::new("m", NodeId(1), days, tmax).unwrap()
}

/// Trapezoid SCF area of the replay of `order`.
fn area(net: &FreightNetwork, order: Vec<NodeId>) -> f64 {
    let flags = vec![false; order.len()];
    let seq = freight_resilience::disruption::RemovalSequence::new(Scenario::Random, None, Some(0), RankingMode::Static, order, flags)
        .unwrap();
    replay(net, &seq).unwrap().scf_area()
}

fn permutations(items: &[NodeId]) -> Vec<Vec<NodeId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn degree_attack_dominates_every_random_order_average_on_stars() {
    for n in 3..=7 {
        let net = star(n);
        let degree = targeted_sequence(&net, Scenario::Degree, RankingMode::Static).unwrap();
        let targeted = replay(&net, &degree).unwrap().scf_area();
        let ids: Vec<NodeId> = net.ids().collect();
        let perms = permutations(&ids);
        let mean = perms.iter().map(|p| area(&net, p.clone())).sum::<f64>() / perms.len() as f64;
        assert!(targeted <= mean, "S_{n}: targeted {targeted} vs exhaustive random mean {mean}");
    }
}

#[test]
fn warming_profiles_never_cool() {
    use freight_resilience::synth::{generate_network, generate_profiles, SynthSpec};
    let spec = SynthSpec::default();
    let net = generate_network(&spec).unwrap();
    let profiles = generate_profiles(&spec, &net).unwrap();
    let mut by_model: BTreeMap<&str, Vec<_>> = BTreeMap::new();
    for p in &profiles {
        by_model.entry(p.model.as_str()).or_default().push(p);
    }
    for (model, mut ps) in by_model {
        ps.sort_by_key(|p| p.period.start_year);
        for w in ps.windows(2) {
            for (id, &c) in &w[0].counts {
                assert!(w[1].counts[id] >= c, "{model} node {id}: {} then {}", c, w[1].counts[id]);
            }
        }
    }
}
