//! Whole commands through `dispatch_to`, with files in a scratch directory.

use std::fs;
use std::path::Path;

use heursched_core::fixtures::WORKED_EXAMPLE_CSV;
use heursched_core::Schedule;

use crate::dispatch_to;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

/// Runs `heursched <args>`, resolving `@name` arguments inside `dir`.
fn run(dir: &Path, args: &[&str]) -> Run {
    let mut argv = vec!["heursched".to_string()];
    argv.extend(args.iter().map(|a| match a.strip_prefix('@') {
        Some(name) => dir.join(name).to_string_lossy().into_owned(),
        None => a.to_string(),
    }));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dispatch_to(&argv, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("worked.csv"), WORKED_EXAMPLE_CSV).unwrap();
    dir
}

const CONFIG: &str = "\
instances = 4
nodes_min = 8
nodes_max = 12
node_interarrival_seconds = 0.1
heuristic.slow.success_probability = 0.3
heuristic.slow.geometric_rate = 0.05
heuristic.slow.max_iterations = 60
heuristic.slow.seconds_per_iteration = 0.05
heuristic.cheap.success_probability = 0.9
heuristic.cheap.geometric_rate = 0.5
heuristic.cheap.max_iterations = 8
heuristic.cheap.seconds_per_iteration = 0.01
";

#[test]
fn build_writes_worked_schedule() {
    let dir = workspace();
    let p = dir.path();
    let r = run(p, &["build", "--data", "@worked.csv", "--alpha", "0.9", "--out", "@g.csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let g = Schedule::from_csv(&fs::read_to_string(p.join("g.csv")).unwrap()).unwrap();
    assert_eq!(g, Schedule::from_pairs(&[("h1", 1), ("h2", 3)]).unwrap());
    assert!(p.join("g.csv.manifest.json").exists());
    assert!(r.stdout.contains("schedule: <(h1, 1), (h2, 3)>"));
}

#[test]
fn eval_reports_objective_and_status() {
    let dir = workspace();
    let p = dir.path();
    run(p, &["build", "--data", "@worked.csv", "--alpha", "0.9", "--out", "@g.csv"]);
    let r = run(p, &["eval", "--data", "@worked.csv", "--schedule", "@g.csv", "--alpha", "0.9"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("objective: 9\n"), "{}", r.stdout);
    assert!(r.stdout.contains("success rate: 1\n"), "{}", r.stdout);
    assert!(r.stdout.contains("status: FEASIBLE"), "{}", r.stdout);
}

#[test]
fn metrics_without_incumbents() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("empty.csv"), "time_seconds,objective_value\n").unwrap();
    let r = run(
        p,
        &["metrics", "--timeline", "@empty.csv", "--best-known", "0", "--sense", "min", "--time-limit", "100"],
    );
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("P(T) = 100\n"));
}

#[test]
fn exact_and_export() {
    let dir = workspace();
    let p = dir.path();
    let r = run(p, &["exact", "--data", "@worked.csv", "--alpha", "1"]);
    assert!(r.stdout.contains("objective: 9"));
    let r = run(p, &["exact", "--data", "@worked.csv", "--alpha", "1", "--max-heuristics", "2"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("max_heuristics"));
    let r = run(p, &["export-miqp", "--data", "@worked.csv", "--alpha", "0.5"]);
    assert_eq!(r.code, 0);
    for section in ["VARIABLES", "OBJECTIVE", "LINEAR", "QUADRATIC", "COMMENTS", "END"] {
        assert!(r.stdout.lines().any(|l| l == section), "missing {section}");
    }
}

#[test]
fn input_rejections_exit_one() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("bad.csv"), "heuristic,node\nh,N\n").unwrap();
    let cases: [&[&str]; 5] = [
        &["build", "--data", "@bad.csv"],
        &["build", "--data", "@missing.csv"],
        &["build", "--data", "@worked.csv", "--alpha", "1.5"],
        &["frobnicate"],
        &["build", "--data", "@worked.csv", "--unknown-flag"],
    ];
    for args in cases {
        assert_eq!(run(p, args).code, 1, "{args:?}");
    }
}

#[test]
fn version_flag() {
    let r = run(Path::new("."), &["--version"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn simulate_run_compare_crossval() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("a.conf"), CONFIG).unwrap();
    fs::write(p.join("b.conf"), CONFIG.replace("nodes_max = 12", "nodes_max = 30")).unwrap();
    let r = run(p, &["simulate", "--config", "@a.conf", "--seed", "2", "--out", "@d.csv"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(run(p, &["build", "--data", "@d.csv", "--normalize", "--out", "@s.csv"]).code, 0);
    let r = run(
        p,
        &["run", "--config", "@a.conf", "--schedule", "@s.csv", "--seed", "9", "--time-limit", "5", "--out", "@tl.csv"],
    );
    assert!(r.stdout.contains("P(T) = "));
    let timeline = fs::read_to_string(p.join("tl.csv")).unwrap();
    assert!(timeline.starts_with("time_seconds,objective_value\n"));

    let r = run(
        p,
        &["compare", "--config", "@a.conf", "--schedule", "@s.csv", "--seeds", "0..4", "--time-limit", "5"],
    );
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("relative primal integral: "));

    let configs = format!("{},{}", p.join("a.conf").display(), p.join("b.conf").display());
    let r = run(p, &["crossval", "--configs", &configs, "--folds", "2", "--time-limit", "5"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("train: ")).count(), 2);
    assert_eq!(r.stdout.lines().filter(|l| l.starts_with("baseline P(T)")).count(), 1);
    assert_eq!(run(p, &["crossval", "--configs", &configs, "--folds", "5"]).code, 1);
}

#[test]
fn replay_detects_changed_output() {
    let dir = workspace();
    let p = dir.path();
    run(p, &["build", "--data", "@worked.csv", "--out", "@g.csv", "--manifest", "@run.json"]);
    assert!(!p.join("g.csv.manifest.json").exists());
    assert_eq!(run(p, &["replay", "@run.json"]).code, 0);

    let mut manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("run.json")).unwrap()).unwrap();
    manifest["outputs"][0]["sha256"] = serde_json::Value::String("0".repeat(64));
    fs::write(p.join("tampered.json"), manifest.to_string()).unwrap();
    let r = run(p, &["replay", "@tampered.json"]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("g.csv: DIFFERS"), "{}", r.stdout);
}
