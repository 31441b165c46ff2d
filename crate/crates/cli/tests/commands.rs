use std::path::PathBuf;
use std::process::{Command, Output};

use shapnet_cli::report::{Payload, StructurePayload};
use shapnet_cli::ReportEnvelope;

fn model(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
        .display()
        .to_string()
}

fn shapnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapnet"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> ReportEnvelope {
    let mut full = args.to_vec();
    full.extend(["--out", "json"]);
    let out = shapnet(&full);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let env = ReportEnvelope::from_json(&text).unwrap();
    assert_eq!(
        env.to_json().unwrap() + "\n",
        text,
        "json output must round-trip"
    );
    env
}

fn write_temp(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
    f
}

#[test]
fn shapley_table_ranks_the_sibling_first() {
    let out = shapnet(&["shapley", &model("sibling_proxy.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().nth(3).unwrap();
    assert!(first.starts_with("1     S         0.255208"), "{text}");
    assert!(text.contains("summands: 32"));
    assert!(text.contains("efficiency residual: 0"));
}

#[test]
fn shapley_exact_on_common_cause() {
    let env = json(&["shapley", &model("common_cause.json"), "--exact"]);
    let Payload::Shapley(p) = env.payload else {
        panic!("wrong payload")
    };
    let c = p.players.iter().find(|v| v.name == "C").unwrap();
    assert!((c.value - 0.2194).abs() < 1e-3);
    assert_eq!(c.rank, 1);
    assert_eq!(p.summand_count, 12);
    assert!(p.efficiency_residual.abs() < 1e-12);
}

#[test]
fn monte_carlo_runs_are_reproducible() {
    let args = [
        "shapley",
        &model("sibling_proxy.json"),
        "--mc",
        "1000",
        "--seed",
        "7",
        "--out",
        "json",
    ];
    let a = shapnet(&args);
    let b = shapnet(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let env = ReportEnvelope::from_json(std::str::from_utf8(&a.stdout).unwrap()).unwrap();
    assert_eq!(env.seed, Some(7));
    let table_a = shapnet(&[
        "shapley",
        &model("sibling_proxy.json"),
        "--mc",
        "1000",
        "--seed",
        "7",
    ]);
    let table_b = shapnet(&[
        "shapley",
        &model("sibling_proxy.json"),
        "--mc",
        "1000",
        "--seed",
        "7",
    ]);
    assert_eq!(table_a.stdout, table_b.stdout);
}

#[test]
fn structure_queries() {
    let cc = model("common_cause.json");
    match json(&["structure", &cc, "mb"]).payload {
        Payload::Structure(StructurePayload::MarkovBoundary {
            markov_boundary,
            spouses,
            ..
        }) => {
            assert_eq!(markov_boundary, ["A", "B"]);
            assert!(spouses.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
    match json(&["structure", &cc, "dsep", "T", "C", "A", "B"]).payload {
        Payload::Structure(StructurePayload::Dsep { d_separated, .. }) => assert!(d_separated),
        other => panic!("unexpected {other:?}"),
    }
    match json(&["structure", &cc, "dsep", "T", "C", "A"]).payload {
        Payload::Structure(StructurePayload::Dsep { d_separated, .. }) => assert!(!d_separated),
        other => panic!("unexpected {other:?}"),
    }
    match json(&["structure", &cc, "verify-faithfulness"]).payload {
        Payload::Structure(StructurePayload::Faithfulness {
            faithful,
            violations,
            ..
        }) => {
            assert!(faithful);
            assert!(violations.is_empty());
        }
        other => panic!("unexpected {other:?}"),
    }
    match json(&[
        "structure",
        &model("xor_collider.json"),
        "verify-faithfulness",
        "--scope",
        "all-pairs",
    ])
    .payload
    {
        Payload::Structure(StructurePayload::Faithfulness { faithful, .. }) => assert!(!faithful),
        other => panic!("unexpected {other:?}"),
    }
    let text = String::from_utf8(
        shapnet(&["structure", &model("sibling_proxy.json"), "relevance"]).stdout,
    )
    .unwrap();
    assert!(text.contains("S         weakly_relevant"), "{text}");
}

#[test]
fn unknown_variable_exits_2() {
    let out = shapnet(&["structure", &model("common_cause.json"), "dsep", "T", "Q"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variable `Q`"));
}

#[test]
fn select_commands() {
    let env = json(&[
        "select",
        &model("sibling_proxy.json"),
        "--strategy",
        "topk",
        "--k",
        "1",
    ]);
    let Payload::Selection(p) = env.payload else {
        panic!()
    };
    assert_eq!(p.result.selected_names, ["S"]);
    assert!((p.comparison.strategies[0].gap - 0.1875).abs() < 1e-12);

    let env = json(&["select", &model("common_cause.json"), "--strategy", "mb"]);
    let Payload::Selection(p) = env.payload else {
        panic!()
    };
    assert_eq!(p.result.selected_names, ["A", "B"]);
    assert!((p.result.performance - 0.9).abs() < 1e-12);

    let cc = model("common_cause.json");
    for bad in [
        &["--strategy", "topk", "--k", "0"][..],
        &["--strategy", "rfe"],
        &["--strategy", "best", "--k", "1"],
    ] {
        let mut args = vec!["select", cc.as_str()];
        args.extend_from_slice(bad);
        assert_eq!(shapnet(&args).status.code(), Some(2), "{bad:?}");
    }
}

#[test]
fn verify_theorems_reports_each_instance() {
    let env = json(&["verify-theorems", &model("common_cause.json")]);
    let Payload::Theorems(p) = env.payload else {
        panic!()
    };
    assert!(p.all_passed);
    let c = p
        .summand_structure
        .iter()
        .find(|s| s.variable == "C")
        .unwrap();
    assert_eq!(c.zero_at, vec![vec!["A".to_string(), "B".to_string()]]);

    let env = json(&["verify-theorems", &model("sibling_proxy.json")]);
    let Payload::Theorems(p) = env.payload else {
        panic!()
    };
    assert!(p.all_passed);
    assert_eq!(p.faithful, Some(true));
}

#[test]
fn disconnected_variable_has_only_zero_summands() {
    let f = write_temp(
        r#"{
  "schema_version": 1, "type": "gaussian",
  "variables": [{"name": "A"}, {"name": "D"}, {"name": "T"}],
  "edges": [["A", "T"]], "target": "T",
  "coefficients": [{"from": "A", "to": "T", "weight": 0.7}],
  "noise_variance": {"A": 1, "D": 2, "T": 1}
}"#,
    );
    let env = json(&["verify-theorems", f.path().to_str().unwrap()]);
    let Payload::Theorems(p) = env.payload else {
        panic!()
    };
    let d = p
        .summand_structure
        .iter()
        .find(|s| s.variable == "D")
        .unwrap();
    assert!(d.matches);
    assert_eq!(serde_json::to_value(d.observed).unwrap(), "all_zero");
    assert!(p.all_passed);
}

#[test]
fn schema_errors_exit_2_with_field_path() {
    let cases = [
        (r#"{"schema_version": 1, "type": "gaussian", "variables": [{"name": "A", "colour": 1}], "edges": [], "target": "A"}"#, "variables[0]"),
        (r#"{"schema_version": 1, "type": "gaussian", "variables": [{"name": "A"}], "edges": [["A", "Z"]], "target": "A", "coefficients": [], "noise_variance": {"A": 1}}"#, "edges[0][1]"),
        (r#"{"schema_version": 1, "type": "tabular", "variables": [], "edges": [], "target": "A"}"#, "type"),
        (r#"{"schema_version": 2, "type": "gaussian", "variables": [{"name": "A"}], "edges": [], "target": "A"}"#, "schema_version"),
        ("{\n  \"schema_version\": 1,\n  \"type\": \"gaussian\",\n  \"variables\": [{\"name\": \"A\"}],\n  \"edges\": [],\n  \"target\": 5\n}", "line 6"),
    ];
    for (text, needle) in cases {
        let f = write_temp(text);
        let out = shapnet(&["shapley", f.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "`{needle}` missing from: {err}");
    }
    assert_eq!(
        shapnet(&["shapley", "/nonexistent/model.json"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oversized_models_exit_3() {
    let n = 27;
    let vars: Vec<String> = (0..n).map(|i| format!(r#"{{"name": "V{i}"}}"#)).collect();
    let noise: Vec<String> = (0..n).map(|i| format!(r#""V{i}": 1"#)).collect();
    let text = format!(
        r#"{{"schema_version": 1, "type": "gaussian", "variables": [{}], "edges": [], "target": "V0", "coefficients": [], "noise_variance": {{{}}}}}"#,
        vars.join(","),
        noise.join(",")
    );
    let f = write_temp(&text);
    let out = shapnet(&["shapley", f.path().to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        shapnet(&["verify-theorems", f.path().to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
    // Monte Carlo has no enumeration cap.
    assert!(
        shapnet(&["shapley", f.path().to_str().unwrap(), "--mc", "10"])
            .status
            .success()
    );
}

#[test]
fn simulate_reports_frequencies() {
    let env = json(&["simulate", &model("default_sim.json")]);
    let Payload::Prevalence(r) = env.payload else {
        panic!()
    };
    assert_eq!(r.records.len(), 202);
    assert!(r.e1.ci_low <= r.e1.rate && r.e1.rate <= r.e1.ci_high);
    assert!(r.records.iter().all(|x| x.axioms_passed && (!x.e2 || x.e1)));

    let f = write_temp(
        r#"{"parameterization": "discrete_dirichlet", "edge_probability": 0.0, "n_networks": 20, "seed": 3}"#,
    );
    let env = json(&["simulate", f.path().to_str().unwrap()]);
    let Payload::Prevalence(r) = env.payload else {
        panic!()
    };
    assert_eq!((r.e1.count, r.e2.count, r.e3.count), (0, 0, 0));

    let bad = write_temp(r#"{"parameterization": "linear_gaussian", "n_network": 5}"#);
    let out = shapnet(&["simulate", bad.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_network"));
    let big = write_temp(r#"{"parameterization": "linear_gaussian", "n_vars": 40}"#);
    assert_eq!(
        shapnet(&["simulate", big.path().to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn metric_flag_rejected_for_gaussian_models() {
    let out = shapnet(&[
        "shapley",
        &model("sibling_proxy.json"),
        "--metric",
        "information",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let env = json(&[
        "shapley",
        &model("common_cause.json"),
        "--metric",
        "information",
    ]);
    let Payload::Shapley(p) = env.payload else {
        panic!()
    };
    assert!(p.players.iter().all(|v| v.value > 0.0));
}
