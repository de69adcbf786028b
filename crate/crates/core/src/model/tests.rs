use super::*;
use crate::model::compute::ComputeModel;

fn minimal_doc() -> &'static str {
    r#"{
        "schema": 1,
        "nodes": [{"id": "n", "compute_model": {"kind": "constant", "ms": 10.0}}],
        "subchains": [{"id": "s", "node_ids": ["n"]}],
        "chains": [{"id": "c", "subchain_ids": ["s"]}]
    }"#
}

#[test]
fn parse_minimal_spec_applies_defaults() {
    let spec = parse_spec(minimal_doc()).unwrap();
    assert_eq!(spec.cores, 1);
    assert_eq!(spec.constants, Constants::default());
    assert_eq!(spec.constants.switch_overhead_ms, 0.12);
    assert_eq!(spec.constants.slack_fraction, 0.05);
    assert_eq!(spec.constants.stage1_period_s, 20.0);
    assert_eq!(spec.constants.stage2_period_s, 5.0);
    assert_eq!(spec.constants.estimator_window, 50);
    assert!(validate(&spec).is_empty());
}

#[test]
fn parse_facetrack_style_doc() {
    let doc = r#"{
        "schema": 1,
        "cores": 1,
        "nodes": [
            {"id": "camera", "compute_model": {"kind": "constant", "ms": 25.0}},
            {"id": "detector", "compute_model": {"kind": "uniform", "lo_ms": 55.0, "hi_ms": 60.0}},
            {"id": "planner", "compute_model": {"kind": "constant", "ms": 1.0}}
        ],
        "edges": [["camera", "detector"], ["detector", "planner"]],
        "subchains": [{"id": "track", "node_ids": ["camera", "detector", "planner"]}],
        "chains": [{"id": "track", "subchain_ids": ["track"]}],
        "objective": {"response_time_weights": {"track": 1.0}}
    }"#;
    let spec = parse_spec(doc).unwrap();
    assert_eq!(spec.nodes.len(), 3);
    assert_eq!(
        spec.node("detector").unwrap().compute_model,
        ComputeModel::Uniform {
            lo_ms: 55.0,
            hi_ms: 60.0
        }
    );
    assert!(validate(&spec).is_empty());
}

#[test]
fn chain_with_missing_subchain_is_unknown_reference() {
    let doc = r#"{
        "schema": 1,
        "nodes": [{"id": "n", "compute_model": {"kind": "constant", "ms": 10.0}}],
        "subchains": [{"id": "s", "node_ids": ["n"]}],
        "chains": [{"id": "c", "subchain_ids": ["nope"]}]
    }"#;
    match parse_spec(doc) {
        Err(Error::UnknownReference { kind, id }) => {
            assert_eq!(kind, "subchain");
            assert_eq!(id, "nope");
        }
        other => panic!("expected unknown reference, got {other:?}"),
    }
}

#[test]
fn syntax_error_reports_position() {
    let err = parse_spec("{\n  \"schema\": 1,\n  oops\n}").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("line 3"), "{msg}");
}

#[test]
fn duplicate_node_id_rejected() {
    let doc = r#"{
        "schema": 1,
        "nodes": [
            {"id": "n", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "n", "compute_model": {"kind": "constant", "ms": 2.0}}
        ],
        "subchains": [{"id": "s", "node_ids": ["n"]}]
    }"#;
    assert!(matches!(parse_spec(doc), Err(Error::DuplicateId { .. })));
}

#[test]
fn node_in_two_subchains_reported() {
    let mut spec = parse_spec(minimal_doc()).unwrap();
    spec.subchains.push(SubchainSpec {
        id: "s2".into(),
        node_ids: vec!["n".into()],
    });
    let report = validate(&spec);
    assert!(
        report.violations.iter().any(|v| v.contains("multiple subchains")),
        "{report}"
    );
}

#[test]
fn cycle_reported() {
    let doc = r#"{
        "schema": 1,
        "nodes": [
            {"id": "a", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "b", "compute_model": {"kind": "constant", "ms": 1.0}}
        ],
        "edges": [["a", "b"], ["b", "a"]],
        "subchains": [
            {"id": "sa", "node_ids": ["a"]},
            {"id": "sb", "node_ids": ["b"]}
        ]
    }"#;
    let spec = parse_spec(doc).unwrap();
    let report = validate(&spec);
    assert!(
        report.violations.iter().any(|v| v.contains("cycle detected")),
        "{report}"
    );
}

fn linear_three() -> DagSpec {
    parse_spec(
        r#"{
        "schema": 1,
        "nodes": [
            {"id": "a", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "b", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "c", "compute_model": {"kind": "constant", "ms": 1.0}}
        ],
        "edges": [["a", "b"], ["b", "c"]],
        "subchains": [
            {"id": "sa", "node_ids": ["a"]},
            {"id": "sb", "node_ids": ["b"]},
            {"id": "sc", "node_ids": ["c"]}
        ]
    }"#,
    )
    .unwrap()
}

#[test]
fn linear_pipeline_has_one_chain() {
    let chains = enumerate_chains(&linear_three()).unwrap();
    assert_eq!(chains.len(), 1);
    assert_eq!(chains[0].subchain_ids, vec!["sa", "sb", "sc"]);
}

#[test]
fn diamond_has_two_chains() {
    let doc = r#"{
        "schema": 1,
        "nodes": [
            {"id": "a", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "b", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "c", "compute_model": {"kind": "constant", "ms": 1.0}},
            {"id": "d", "compute_model": {"kind": "constant", "ms": 1.0}}
        ],
        "edges": [["a", "b"], ["a", "c"], ["b", "d"], ["c", "d"]],
        "subchains": [
            {"id": "sa", "node_ids": ["a"]},
            {"id": "sb", "node_ids": ["b"]},
            {"id": "sc", "node_ids": ["c"]},
            {"id": "sd", "node_ids": ["d"]}
        ]
    }"#;
    let chains = enumerate_chains(&parse_spec(doc).unwrap()).unwrap();
    assert_eq!(chains.len(), 2);
}

#[test]
fn nav2d_enumeration_includes_local_and_nc_paths() {
    let spec = preset("nav2d").unwrap();
    let chains = enumerate_chains(&spec).unwrap();
    let paths: Vec<Vec<&str>> = chains
        .iter()
        .map(|c| c.subchain_ids.iter().map(|s| s.as_str()).collect())
        .collect();
    assert!(paths.contains(&vec!["local"]));
    assert!(paths.contains(&vec!["gl", "nc", "local"]));
}

#[test]
fn declared_chain_mismatch_is_an_error() {
    let mut spec = linear_three();
    spec.chains = vec![ChainSpec {
        id: "wrong".into(),
        subchain_ids: vec!["sa".into(), "sb".into()],
    }];
    assert!(matches!(
        enumerate_chains(&spec),
        Err(Error::ChainMismatch(_))
    ));
}

#[test]
fn render_parse_round_trips() {
    for name in presets::PRESET_NAMES {
        let spec = preset(name).unwrap();
        let doc = render_spec(&spec);
        let back = parse_spec(&doc).unwrap();
        assert_eq!(spec, back, "{name}");
    }
    let spec = parse_spec(minimal_doc()).unwrap();
    let back = parse_spec(&render_spec(&spec)).unwrap();
    assert_eq!(spec, back);
}

#[test]
fn constants_set_override() {
    let mut c = Constants::default();
    c.set("switch_overhead_ms", "0.5").unwrap();
    assert_eq!(c.switch_overhead_ms, 0.5);
    c.set("max_reciprocal", "16").unwrap();
    assert_eq!(c.max_reciprocal, 16);
    assert!(c.set("nonsense", "1").is_err());
    assert!(c.set("slack_fraction", "abc").is_err());
}

// Independent depth-first oracle: path count over random subchain DAGs must
// match the enumerator.
#[test]
fn enumeration_count_matches_dfs_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
    for _ in 0..60 {
        let n = rng.gen_range(2..8usize);
        // random DAG on n single-node subchains, edges only i -> j for i < j
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.35) {
                    edges.push((format!("n{i}"), format!("n{j}")));
                }
            }
        }
        let spec = DagSpec {
            schema: 1,
            cores: 1,
            nodes: (0..n)
                .map(|i| NodeSpec::new(&format!("n{i}"), ComputeModel::Constant { ms: 1.0 }))
                .collect(),
            edges: edges.clone(),
            subchains: (0..n)
                .map(|i| SubchainSpec {
                    id: format!("n{i}"),
                    node_ids: vec![format!("n{i}")],
                })
                .collect(),
            chains: vec![],
            objective: Default::default(),
            constants: Default::default(),
        };
        let got = enumerate_chains(&spec).unwrap().len();

        // oracle: plain recursive path count source -> sink on node indices
        let mut adj = vec![Vec::new(); n];
        let mut has_in = vec![false; n];
        for (a, b) in &edges {
            let ai: usize = a[1..].parse().unwrap();
            let bi: usize = b[1..].parse().unwrap();
            adj[ai].push(bi);
            has_in[bi] = true;
        }
        fn count(v: usize, adj: &[Vec<usize>]) -> usize {
            if adj[v].is_empty() {
                return 1;
            }
            adj[v].iter().map(|&w| count(w, adj)).sum()
        }
        let want: usize = (0..n).filter(|&v| !has_in[v]).map(|v| count(v, &adj)).sum();
        assert_eq!(got, want);
    }
}
