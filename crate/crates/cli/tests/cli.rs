use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bcclace(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcclace")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn single_point_spec(d: u32, hi: [f64; 3], lo: f64) -> String {
    format!(
        "d_min = {d}\nd_max = {d}\n\
         k1_lo = {lo}\nk1_hi = {}\nk1_n = 1\n\
         k2_lo = {lo}\nk2_hi = {}\nk2_n = 1\n\
         k3_lo = {lo}\nk3_hi = {}\nk3_n = 1\n",
        hi[0], hi[1], hi[2]
    )
}

#[test]
fn verify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    for (args, want) in [
        (&["verify", "-d", "9"][..], 0),
        (&["verify", "-d", "10"], 0),
        (&["verify", "-d", "8"], 1),
        (&["verify", "-d", "4"], 2),
        (&["--policy", "fast", "verify", "-d", "9", "--mode", "paper-replay"], 0),
    ] {
        assert_eq!(code(&bcclace(dir.path(), args)), want, "{args:?}");
    }
}

#[test]
fn bad_usage_exits_64() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify"][..],
        &["validate", "nope"],
        &["rw-table", "--d-min", "5", "--d-max", "4"],
        &["simulate", "-d", "2", "-q", "0.3", "-p", "0.1"],
        &["simulate", "-d", "2", "-q", "1.5"],
        &["verify", "-d", "10", "--mode", "paper-replay"],
        &["verify", "-d", "9", "--k1", "0.5"],
    ] {
        assert_eq!(code(&bcclace(dir.path(), args)), 64, "{args:?}");
    }
    assert_eq!(code(&bcclace(dir.path(), &["--help"])), 0);
    assert_eq!(code(&bcclace(dir.path(), &["search", "missing.txt"])), 74);
}

#[test]
fn verify_json_reports_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let v = stdout_json(&bcclace(dir.path(), &["--json", "verify", "-d", "9"]));
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["policy"], "certified");
    assert_eq!(v["g2"]["display"], "1.042966e+00");
    assert!(v["max_ratio"].as_f64().unwrap() < 1.0);
    assert!(v["provenance"]["diagrams"]["bounds"]["B_2_2"]["value"].as_f64().unwrap() > 0.0);

    let d4 = stdout_json(&bcclace(dir.path(), &["--json", "verify", "-d", "4"]));
    assert_eq!(d4["verdict"], "DIVERGENT");
    assert!(!d4["divergence"].is_null());
}

#[test]
fn rw_table_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcclace(dir.path(), &["--policy", "fast", "--out", "t", "rw-table", "--d-min", "3", "--d-max", "4"]);
    assert_eq!(code(&out), 0);
    let csv = read(dir.path().join("t/rw_table.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "d,nu,eps1,eps2,N,policy");
    assert_eq!(lines[1], "3,1,3.932160e-01,inf,500,fast");
    assert_eq!(lines[4], "4,2,5.613669e-02,inf,500,fast");
    assert_eq!(lines.len(), 5);

    bcclace(dir.path(), &["--out", "u", "rw-table", "--d-min", "9", "--d-max", "9"]);
    let csv = read(dir.path().join("u/rw_table.csv"));
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("9,")));

    let out = bcclace(dir.path(), &["rw-table", "--nu-max", "1"]);
    assert_eq!(code(&out), 64);
}

#[test]
fn manifest_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = bcclace(dir.path(), &["--out", "a", "simulate", "-d", "2", "-q", "0.3", "--trials", "2000", "--seed", "5"]);
    assert_eq!(code(&first), 0);
    let manifest: Value = serde_json::from_str(&read(dir.path().join("a/manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert!(manifest["argv"].as_array().unwrap().iter().all(|a| a != "--out"));
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let replay = bcclace(dir.path(), &["--out", "b", "replay", "a/manifest.json"]);
    assert_eq!(code(&replay), 0, "{}", String::from_utf8_lossy(&replay.stderr));
    for f in ["sim.json", "two_point.csv"] {
        assert_eq!(read(dir.path().join("a").join(f)), read(dir.path().join("b").join(f)));
    }

    std::fs::write(dir.path().join("a/sim.json"), "tampered").unwrap();
    let mut m = manifest.clone();
    m["outputs"][0]["sha256"] = Value::from("00");
    std::fs::write(dir.path().join("bad.json"), m.to_string()).unwrap();
    assert_eq!(code(&bcclace(dir.path(), &["replay", "bad.json"])), 1);
}

#[test]
fn search_single_point_and_degenerate_grid() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.txt"), single_point_spec(9, [1.002, 1.05, 1.25], 1.0)).unwrap();
    let out = bcclace(dir.path(), &["--json", "--out", "s", "search", "one.txt", "--points", "all"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["minimal_passing_d"], 9);
    assert_eq!(read(dir.path().join("s/points.jsonl")).lines().count(), 1);

    let eps = 1.0 + 1e-9;
    std::fs::write(dir.path().join("flat.txt"), single_point_spec(9, [eps; 3], 1.0)).unwrap();
    let out = bcclace(dir.path(), &["--json", "search", "flat.txt"]);
    let v = stdout_json(&out);
    assert!(v["minimal_passing_d"].is_null());
    assert_eq!(v["dimensions"][0]["passing"], 0);

    std::fs::write(dir.path().join("bad.txt"), "d_min = 9\n").unwrap();
    assert_eq!(code(&bcclace(dir.path(), &["search", "bad.txt"])), 64);
}

#[test]
fn validate_writes_checks_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcclace(dir.path(), &["--out", "c", "validate", "d2k", "--dim", "1"]);
    assert_eq!(code(&out), 0);
    let line: Value = serde_json::from_str(read(dir.path().join("c/checks.jsonl")).lines().next().unwrap()).unwrap();
    assert_eq!(line["lemma"], "d2k");
    assert_eq!(line["min_margin"], 0.0);
    assert_eq!(line["pass"], true);

    bcclace(dir.path(), &["--out", "c", "validate", "green-lower", "--grid", "11"]);
    assert_eq!(read(dir.path().join("c/audit.jsonl")).lines().count(), 2);
}

#[test]
fn simulate_with_oracles() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcclace(dir.path(), &["--out", "z", "simulate", "-d", "1", "-p", "0", "--t-max", "3", "--trials", "100"]);
    assert_eq!(code(&out), 0);
    let csv = read(dir.path().join("z/two_point.csv"));
    assert!(csv.lines().nth(1).unwrap().starts_with("0,0,1,0,"));
    assert!(csv.lines().skip(2).all(|l| l.split(',').nth(2) == Some("0")));

    let out = bcclace(
        dir.path(),
        &["--json", "simulate", "-d", "1", "-q", "0.6", "--t-max", "8", "--trials", "20000", "--oracle"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!(v.to_string().contains("dp-1d"));
}
