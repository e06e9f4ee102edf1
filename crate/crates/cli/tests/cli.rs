use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn procstar(args: &[&str], out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_procstar"));
    cmd.args(args);
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().expect("run procstar")
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .expect("read report")
        .lines()
        .map(|l| serde_json::from_str(l).expect("every line is JSON"))
        .collect()
}

fn write_spec(dir: &Path, text: &str) -> String {
    let path = dir.join("spec.json");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn bounded_l_at_horizon_100_threshold_50() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = procstar(
        &["bounded", "--element", "L", "--horizon", "100", "--threshold", "50"],
        Some(&out),
    );
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&out);
    let r = &recs[1]["result"];
    assert_eq!(r["verdict"], "unbounded");
    assert_eq!(r["witness_level"], 52);
    assert_eq!(r["witness_value"], 51.0);
    assert_eq!(r["in_bounded_part"], false);
}

#[test]
fn norm_of_scalar_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["norm", "--element", "three"], Some(&out));
    assert_eq!(o.status.code(), Some(0));
    let r = &records(&out)[1]["result"];
    assert_eq!(r["verdict"], "bounded");
    assert_eq!(r["value"], 3.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("Bounded(3)"));
}

#[test]
fn paper_examples_count_matches_summary_and_names_claims() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["paper-examples"], Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let recs = records(&out);
    assert_eq!(recs[0]["record"], "header");
    let checks: Vec<_> = recs.iter().filter(|r| r["record"] == "check").collect();
    let summary = recs.last().unwrap();
    assert_eq!(summary["record"], "summary");
    assert_eq!(summary["checks"].as_u64().unwrap() as usize, checks.len());
    assert_eq!(summary["failed"], 0);
    assert!(checks.iter().all(|c| c["claim"].as_str().is_some_and(|s| !s.is_empty())));
    assert_eq!(recs.len(), checks.len() + 2);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    procstar(&["paper-examples", "--seed", "99"], Some(&a));
    procstar(&["paper-examples", "--seed", "99"], Some(&b));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let c = dir.path().join("c.jsonl");
    procstar(&["paper-examples", "--seed", "100"], Some(&c));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn empty_run_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "{}");
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["run", "--spec", &spec], Some(&out));
    assert_eq!(o.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["record"], "header");
    assert_eq!(recs[0]["tolerances"]["trace_slack"], 1e-9);
}

#[test]
fn failing_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        r#"{"towers": [{"name": "t", "rule": "product_matrix"}],
            "elements": [{"name": "s", "tower": "t", "generator": {"kind": "scalar", "value": [2, 0]}}],
            "runs": [{"command": "norm", "element": "s", "expect": {"value": 3}},
                     {"command": "norm", "element": "s", "expect": {"value": 2}}]}"#,
    );
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["run", "--spec", &spec], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    let recs = records(&out);
    assert_eq!(recs[1]["passed"], false);
    assert_eq!(recs[1]["mismatches"][0]["field"], "value");
    assert_eq!(recs[2]["passed"], true);
    assert_eq!(recs[3]["failed"], 1);
}

#[test]
fn expected_failures_pass() {
    let dir = tempfile::tempdir().unwrap();
    // (a) ↦ (a, 0) lands inside ker 0 = C ⊕ C without filling it
    let spec = write_spec(
        dir.path(),
        r#"{"defaults": {"seed": 3},
            "towers": [{"name": "c1", "rule": "custom_table", "sizes": [1]},
                       {"name": "c2", "rule": "explicit", "levels": [[1, 1]]}],
            "homomorphisms": [
              {"name": "first", "kind": "explicit", "source": "c1", "target": "c2", "maps": [[{"source": 0}, null]]},
              {"name": "kill", "kind": "explicit", "source": "c2", "target": "c1", "maps": [[null]]}],
            "runs": [{"command": "check-exact", "alpha": "first", "beta": "kill", "horizon": 1, "probes": 3,
                      "expect": {"passed": false, "verdict_original": false}}]}"#,
    );
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["check-exact", "--spec", &spec], Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let recs = records(&out);
    assert_eq!(recs[1]["result"]["levels"][0]["image_rank"], 1);
    assert_eq!(recs[1]["result"]["levels"][0]["kernel_dim"], 2);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "{\n  \"towers\": [\n    {\"name\": \"t\", \"rule\": \"nope\"}\n  ]\n}");
    let o = procstar(&["run", "--spec", &spec], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");

    let spec = write_spec(
        dir.path(),
        r#"{"runs": [{"command": "norm", "element": "ghost"}]}"#,
    );
    let o = procstar(&["run", "--spec", &spec], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("\"ghost\""));

    let o = procstar(&["norm", "--element", "nobody"], None);
    assert_eq!(o.status.code(), Some(2));

    // randomized checks need a seed from somewhere
    let spec = write_spec(
        dir.path(),
        r#"{"spaces": [{"name": "x", "initial_segments": 3}],
            "runs": [{"command": "gelfand-roundtrip", "space": "x"}]}"#,
    );
    let o = procstar(&["run", "--spec", &spec], None);
    assert_eq!(o.status.code(), Some(2));
    let o = procstar(&["run", "--spec", &spec, "--seed", "1"], None);
    assert_eq!(o.status.code(), Some(0));

    let o = procstar(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(2));
    let o = procstar(&["run", "--spec", "/nonexistent/spec.json"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn computation_errors_fail_the_check() {
    // −1 is in the spectrum, so the principal logarithm does not exist
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["unitary-log", "--element", "flip"], Some(&out));
    assert_eq!(o.status.code(), Some(1));
    let recs = records(&out);
    assert!(recs[1]["result"]["error"].as_str().unwrap().contains("branch"));
}

#[test]
fn funcalc_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = procstar(&["funcalc", "--element", "d", "--function", "polynomial:0,0,1"], Some(&out));
    assert_eq!(o.status.code(), Some(0));
    let r = &records(&out)[1]["result"];
    // d has entries 1, −0.5, 0.25, 2, −3, so d² has norm 9
    assert_eq!(r["verdict"], "bounded");
    assert_eq!(r["value"], 9.0);
    assert_eq!(procstar(&["funcalc", "--element", "d"], None).status.code(), Some(2));
}

#[test]
fn command_line_beats_run_directives() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    procstar(&["bounded", "--horizon", "60"], Some(&out));
    let recs = records(&out);
    // the bundled run asks for horizon 200 and threshold 100
    assert_eq!(recs[1]["config"]["horizon"], 60);
    assert_eq!(recs[1]["result"]["verdict"], "unknown");
    assert_eq!(recs[1]["passed"], false);
}

#[test]
fn selftest_passes() {
    let o = procstar(&["selftest", "--seed", "5"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
