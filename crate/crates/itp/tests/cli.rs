use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn itp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itp")).args(args).output().expect("binary runs")
}

fn itp_at(args: &[&str], file: &Path) -> Output {
    let mut all = vec![args[0], file.to_str().unwrap()];
    all.extend_from_slice(&args[1..]);
    itp(&all)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn analyze_json_site_keys() {
    let out = itp_at(&["analyze", "--json"], &fixture("m1.mi"));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["manifest"]["subcommand"], "analyze");
    let mut keys: Vec<&str> = v["sites"][0].as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        [
            "VB_X",
            "VB_Y",
            "X",
            "Y",
            "Z",
            "c1",
            "c2",
            "c3",
            "c4",
            "computing_point",
            "itp",
            "node",
            "predicate",
            "witnesses"
        ]
    );
    let itp: Vec<&str> = v["sites"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["itp"] == true)
        .map(|s| s["predicate"].as_str().unwrap())
        .collect();
    assert!(itp.contains(&"t > 100") && itp.contains(&"st == 1"));
}

#[test]
fn analyze_writes_dot_and_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let dot = dir.path().join("g.dot");
    let df = dir.path().join("df.json");
    let evi = dir.path().join("evi.json");
    let out = itp(&[
        "analyze",
        fixture("i1.mi").to_str().unwrap(),
        "--dot",
        dot.to_str().unwrap(),
        "--dump-dataflow",
        df.to_str().unwrap(),
        "--dump-evi",
        evi.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read_to_string(&dot).unwrap().starts_with("digraph"));
    let df: Value = serde_json::from_str(&fs::read_to_string(&df).unwrap()).unwrap();
    assert!(!df.as_array().unwrap().is_empty());
    let evi: Value = serde_json::from_str(&fs::read_to_string(&evi).unwrap()).unwrap();
    assert_eq!(evi.as_array().unwrap().len(), 3);
}

#[test]
fn verify_exit_codes_and_schema() {
    let out = itp_at(&["verify", "--json"], &fixture("m1_mut.mi"));
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    for key in ["status", "exhaustive", "inputs", "nondet", "trace"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["status"], "violated");
    let first = &v["trace"][0];
    assert!(first[0].is_u64() && first[1].is_object());

    let out = itp_at(&["verify", "--json"], &fixture("m1.mi"));
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["status"], "holds");
    assert_eq!(v["exhaustive"], true);

    let out = itp_at(&["verify", "--budget", "3"], &fixture("w1.mi"));
    assert_eq!(out.status.code(), Some(3));
    assert!(stdout(&out).starts_with("budget_exceeded"));
}

#[test]
fn verify_accepts_negative_bounds() {
    let out = itp_at(&["verify", "--lo", "-1", "--hi", "1", "--json"], &fixture("r1.mi"));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["manifest"]["config"]["lo"], -1);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(itp(&["bogus"]).status.code(), Some(1));
    assert_eq!(itp_at(&["verify", "--lo", "3", "--hi", "0"], &fixture("r1.mi")).status.code(), Some(1));
    assert_eq!(itp(&["parse", "/nonexistent.mi"]).status.code(), Some(1));
    assert_eq!(itp(&["--help"]).status.code(), Some(0));
}

#[test]
fn parse_round_trips_and_reports_positions() {
    let out = itp_at(&["parse"], &fixture("m1.mi"));
    assert_eq!(out.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again.mi");
    fs::write(&again, &out.stdout).unwrap();
    assert_eq!(stdout(&itp_at(&["parse"], &again)), stdout(&out));

    let bad = dir.path().join("bad.mi");
    fs::write(&bad, "int x;\nx = ;\nassert(x > 0);\n").unwrap();
    let out = itp_at(&["parse"], &bad);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}

#[test]
fn slice_drops_irrelevant_code() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("p.mi");
    fs::write(&src, "int a = input(); int u; int w; u = a + 1; w = a; assert(w > 0);\n").unwrap();
    let out = itp_at(&["slice"], &src);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(!text.contains("u = a + 1") && text.contains("w = a;"));
    let v = json(&itp_at(&["slice", "--json"], &src));
    assert!(v["nodes"].as_array().unwrap().len() >= 3);
}

#[test]
fn derived_programs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, marker) in [("abstract", "= *;"), ("phat", "assert("), ("ptilde", "if (false)")] {
        let out = itp_at(&[cmd, "--predicate", "9"], &fixture("w1.mi"));
        assert_eq!(out.status.code(), Some(0), "{cmd}");
        let text = stdout(&out);
        assert!(text.contains(marker), "{cmd}: {text}");
        let path = dir.path().join(format!("{cmd}.mi"));
        fs::write(&path, &text).unwrap();
        assert_eq!(itp_at(&["parse"], &path).status.code(), Some(0), "{cmd}");
    }
    let out = itp_at(&["ptilde", "--predicate", "9", "--b", "false"], &fixture("w1.mi"));
    assert!(stdout(&out).contains("if (true)"));
    let v = json(&itp_at(&["wp", "--predicate", "9", "--json"], &fixture("w1.mi")));
    assert!(v["psi"].as_str().is_some_and(|s| !s.is_empty()));
    assert_eq!(v["violating_value"], true);
}

#[test]
fn unknown_predicate_is_an_error() {
    let out = itp_at(&["abstract", "--predicate", "1"], &fixture("w1.mi"));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn workflow_exit_codes() {
    let out = itp_at(&["workflow", "--json"], &fixture("w1.mi"));
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["labels"], serde_json::json!(["iii", "3c", "A", "WP"]));
    assert_eq!(v["final"]["kind"], "violated");

    let out = itp_at(&["workflow", "--predicate", "23"], &fixture("m1.mi"));
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("final: holds"));

    let r1 = fixture("r1.mi");
    assert_eq!(itp_at(&["workflow", "--predicate", "7"], &r1).status.code(), Some(1));
    assert_ne!(itp_at(&["workflow", "--predicate", "7", "--force"], &r1).status.code(), Some(1));
}

#[test]
fn corpus_matches_golden_and_detects_drift() {
    let out = itp(&["corpus", fixture("").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("golden: match"));

    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("r1.mi"), dir.path().join("r1.mi")).unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(itp(&["corpus", d]).status.code(), Some(1));
    assert_eq!(itp(&["corpus", d, "--bless"]).status.code(), Some(0));
    assert_eq!(itp(&["corpus", d]).status.code(), Some(0));
    fs::write(dir.path().join("r1.mi"), "int y = input();\nassert(y > 0);\n").unwrap();
    let out = itp(&["corpus", d, "--json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["golden_match"], false);
}

#[test]
fn generate_honours_seed_variable() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = Command::new(env!("CARGO_BIN_EXE_itp"))
            .args(["generate", "--count", "3", "--out-dir", dir.path().to_str().unwrap()])
            .env("ITP_SEED", seed)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        (0..3).map(|i| fs::read_to_string(dir.path().join(format!("gen_{i:02}.mi"))).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run("11"), run("11"));
    assert_ne!(run("11"), run("12"));
}
