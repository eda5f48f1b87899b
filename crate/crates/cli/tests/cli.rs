use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ideal-lab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_examples() {
    let o = run(&["analyze", "--seq", "alternating", "--ideal", "density"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict   Divergent"));

    let o = run(&["analyze", "--seq", "harmonic", "--ideal", "fin"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict   Convergent("));
    assert!(stdout(&o).contains("cauchy    Cauchy"));

    assert_eq!(run(&["analyze", "--seq", "alternating", "--ideal", "bogus"]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--seq", "nonsense"]).status.code(), Some(1));
    assert_eq!(run(&["analyze"]).status.code(), Some(1));
}

#[test]
fn analyze_json_and_csv_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let rows: String = (1..=8192).map(|n| format!("{n},{}\n", 2.0 + 1.0 / n as f64)).collect();
    fs::write(&csv, format!("index,value\n{rows}")).unwrap();
    let spec = format!("csv:{}", csv.display());
    let o = run(&["analyze", "--seq", &spec, "--ideal", "density", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["horizon"], 8192);
    let limit = v["limit"][0].as_f64().unwrap();
    assert!((limit - 2.0).abs() < 0.01);
}

#[test]
fn undecided_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    // ones on a set of density 0.1: between the member and non-member thresholds
    let rows: String = (1..=4096).map(|n| format!("{n},{}\n", u8::from(n % 10 == 0))).collect();
    fs::write(&csv, rows).unwrap();
    let o = run(&["analyze", "--seq", &format!("csv:{}", csv.display())]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

fn selection_entries(path: &Path) -> Vec<usize> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.trim().parse().unwrap())
        .collect()
}

#[test]
fn construct_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub");
    let o = run(&["construct", "--seq", "alternating", "--ideal", "density", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("replay    Divergent"));
    let s = selection_entries(&out.join("selection.txt"));
    assert!(s.len() >= 1 << 16);
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    assert!(!fs::read_to_string(out.join("trace.txt")).unwrap().is_empty());
    assert!(out.join("manifest.json").exists());

    let perm_dir = dir.path().join("perm");
    let o = run(&["construct", "--seq", "alternating", "--perm", "--target", "4000", "--out-dir", perm_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let mut p = selection_entries(&perm_dir.join("selection.txt"));
    let n = p.len();
    p.sort_unstable();
    p.dedup();
    assert_eq!(p.len(), n, "rearrangement repeats an index");

    let o = run(&["construct", "--seq", "harmonic", "--out-dir", dir.path().join("h").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not constructible"));
}

#[test]
fn experiment_reports_are_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sinpi.toml");
    fs::write(
        &cfg,
        "family = \"sin-pi\"\nideal = \"density\"\nhorizon = 2048\ntrials = 20\npoints = 20\nsampler = \"seeded-uniform\"\n",
    )
    .unwrap();
    let report = |workers: &str, name: &str| {
        let out = dir.path().join(name);
        let o = run(&["experiment", "tw3", "-c", cfg.to_str().unwrap(), "--workers", workers, "--out-dir", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let a = report("1", "a");
    let b = report("8", "b");
    let ja = fs::read(a.join("report.json")).unwrap();
    assert_eq!(ja, fs::read(b.join("report.json")).unwrap());
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    let names: Vec<&str> = v["proportions"].as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["i", "ii", "iii", "iv"]);
    assert!(fs::read_to_string(a.join("tallies.csv")).unwrap().starts_with("name,convergent"));

    // re-running from the manifest reproduces the canonical report
    let c = dir.path().join("c");
    let o = run(&["experiment", "tw3", "-c", a.join("manifest.json").to_str().unwrap(), "--out-dir", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(ja, fs::read(c.join("report.json")).unwrap());
}

#[test]
fn lk3_on_fin_warns_and_bad_configs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lk3");
    let o = run(&["experiment", "lk3", "--seq", "alternating", "--ideal", "fin", "--trials", "8", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(v["warnings"][0].as_str().unwrap().contains("property (G)"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "horizon = 10\n").unwrap();
    assert_eq!(run(&["experiment", "propg", "-c", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["experiment", "tw3", "--out-dir", out.to_str().unwrap()]).status.code(), Some(1));
    let o = run(&["experiment", "cc1", "--family", "power-x", "--trials", "4", "--points", "8", "--out-dir", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}
