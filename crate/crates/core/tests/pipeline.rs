mod common;

use std::fmt::Write as _;
use std::fs;

use common::node;
use freight_resilience::climate::PeriodSpec;
use freight_resilience::disruption::Scenario;
use freight_resilience::network::{FreightNetwork, NodeId};
use freight_resilience::pipeline::{build, load_climate, ClimateInputs, ErrorKind, RunConfig, Stage, Stages};

/// Four nodes near the corners of a 2 x 2 grid. Cell (row, col) is hot on
/// `hot(row, col, year)` of its five days each year.
fn fixture(dir: &std::path::Path, hot: impl Fn(usize, usize, i32) -> usize) -> RunConfig {
    let coords = [(30.1, -95.2), (30.2, -93.9), (31.8, -95.1), (31.9, -94.1)];
    let nodes: Vec<_> = coords
        .iter()
        .enumerate()
        .map(|(i, &(lat, lon))| {
            let mut n = node(i as u64 + 1, 1_000_000 * (i as u64 + 1));
            (n.lat, n.lon) = (lat, lon);
            n
        })
        .collect();
    let net = FreightNetwork::new(nodes, [(NodeId(1), NodeId(2)), (NodeId(2), NodeId(4)), (NodeId(3), NodeId(4))]).unwrap();
    net.write_nodes_csv(fs::File::create(dir.join("nodes.csv")).unwrap()).unwrap();
    net.write_edges_csv(fs::File::create(dir.join("edges.csv")).unwrap()).unwrap();

    let mut csv = String::from("model,lat,lon,date,tmax_c\n");
    for model in ["A", "B"] {
        for row in 0..2 {
            for col in 0..2 {
                let (lat, lon) = (30.0 + 2.0 * row as f64, -95.0 + 1.0 * col as f64);
                for year in [2000, 2001, 2060, 2061] {
                    let k = hot(row, col, year) + usize::from(model == "B" && year > 2050);
                    for day in 1..=5 {
                        let t = if day <= k { 36.5 } else { 30.0 };
                        let _ = writeln!(csv, "{model},{lat},{lon},{year}-07-{day:02},{t}");
                    }
                }
            }
        }
    }
    fs::write(dir.join("grid.csv"), csv).unwrap();

    let mut cfg = RunConfig::new(dir.join("nodes.csv"), dir.join("edges.csv"));
    let period = |a, b| PeriodSpec::new(a, b).unwrap();
    cfg.climate = Some(ClimateInputs {
        grid_series: Some(dir.join("grid.csv")),
        baseline: period(2000, 2001),
        futures: vec![period(2060, 2061)],
        removal_period: period(2060, 2061),
        ..ClimateInputs::default()
    });
    cfg.random.trials = 3;
    cfg.out = dir.join("out");
    cfg
}

#[test]
fn gridded_input_maps_nodes_to_nearest_cells() {
    let dir = tempfile::tempdir().unwrap();
    // Warming only in cell (1, 1), where node 4 sits.
    let cfg = fixture(dir.path(), |row, col, year| if (row, col) == (1, 1) && year > 2050 { 3 } else { 1 });
    let net = freight_resilience::pipeline::ingest(&cfg).unwrap();
    let data = load_climate(cfg.climate.as_ref().unwrap(), &net).unwrap();
    assert_eq!(data.models, ["A", "B"]);
    let deltas = &data.deltas[&PeriodSpec::new(2060, 2061).unwrap()];
    // Two years, so +2 hot days a year becomes +4; model B adds one more a year.
    let a = &deltas[0].1;
    assert_eq!((a[&NodeId(1)], a[&NodeId(2)], a[&NodeId(3)], a[&NodeId(4)]), (0, 0, 0, 4));
    let b = &deltas[1].1;
    assert_eq!((b[&NodeId(1)], b[&NodeId(4)]), (2, 6));

    let bundle = build(&cfg, Stages::ALL).unwrap();
    let seqs = String::from_utf8(bundle.files["rail_sequences.csv"].clone()).unwrap();
    let first_a = seqs.lines().find(|l| l.contains(",hot_days,A,")).unwrap();
    assert!(first_a.starts_with("1,4,") && first_a.ends_with(",false"), "{first_a}");
    let beyond = seqs.lines().filter(|l| l.contains(",hot_days,A,") && l.ends_with(",true")).count();
    assert_eq!(beyond, 3, "nodes that did not warm are flagged beyond the criterion");
}

#[test]
fn missing_profile_node_is_a_hotdays_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture(dir.path(), |_, _, _| 1);
    let profiles = dir.path().join("profiles.csv");
    fs::write(
        &profiles,
        "model,period_label,node_id,hot_days,threshold_c\nA,2000-2001,1,3,35\nA,2060-2061,1,4,35\n",
    )
    .unwrap();
    let c = cfg.climate.as_mut().unwrap();
    c.grid_series = None;
    c.profiles = Some(profiles);
    let err = build(&cfg, Stages::ALL).unwrap_err();
    assert_eq!((err.stage, err.kind), (Stage::Hotdays, ErrorKind::Data));
    assert!(err.message.contains("node 2"), "{}", err.message);
}

#[test]
fn profile_threshold_must_match_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture(dir.path(), |_, _, _| 1);
    let profiles = dir.path().join("profiles.csv");
    let mut text = String::from("model,period_label,node_id,hot_days,threshold_c\n");
    for p in ["2000-2001", "2060-2061"] {
        for id in 1..=4 {
            let _ = writeln!(text, "A,{p},{id},1,40");
        }
    }
    fs::write(&profiles, text).unwrap();
    let c = cfg.climate.as_mut().unwrap();
    c.grid_series = None;
    c.profiles = Some(profiles);
    let err = build(&cfg, Stages::ALL).unwrap_err();
    assert!(err.message.contains("threshold"), "{}", err.message);
}

#[test]
fn duplicate_scenarios_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture(dir.path(), |_, _, _| 1);
    cfg.scenarios = vec![Scenario::Degree, Scenario::Degree];
    let err = build(&cfg, Stages::ALL).unwrap_err();
    assert_eq!(err.kind, ErrorKind::Config);
    assert!(err.message.contains("scenarios"));
}

#[test]
fn bundle_csvs_are_non_empty_and_manifest_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path(), |row, _, year| row + usize::from(year > 2050));
    let a = build(&cfg, Stages::ALL).unwrap();
    for (name, bytes) in &a.files {
        assert!(bytes.len() > 1, "{name} is empty");
    }
    let b = build(&cfg, Stages::ALL).unwrap();
    assert_eq!(a.manifest().sha256(), b.manifest().sha256());
    let other = RunConfig { top_k: 2, ..cfg.clone() };
    assert_ne!(build(&other, Stages::ALL).unwrap().manifest().config_sha256, a.manifest().config_sha256);
}
