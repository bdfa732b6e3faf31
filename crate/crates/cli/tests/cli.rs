use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn waypoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waypoint"))
        .args(args)
        .env_remove("WAYPOINT_TSP_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line:?}"))
        .parse()
        .unwrap()
}

fn gen(dir: &Path, n: usize) -> String {
    let path = dir.join("pts.csv");
    let p = path.to_str().unwrap();
    let o = waypoint(&["gen", "--n", &n.to_string(), "--seed", "5", "--out", p]);
    assert!(o.status.success(), "{}", stderr(&o));
    p.to_string()
}

#[test]
fn solve_christofides_writes_route_and_one_summary_line() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 25);
    let route = dir.path().join("route.json");
    let o = waypoint(&["solve", "--in", &pts, "--method", "christofides", "--out", route.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.contains("method=christofides"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&route).unwrap()).unwrap();
    assert_eq!(v["route"].as_array().unwrap().len(), 25);
    assert!((v["length_m"].as_f64().unwrap() - field(&out, "length_m")).abs() < 1e-3);
}

#[test]
fn unknown_method_exits_2_and_lists_methods() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 5);
    let o = waypoint(&["solve", "--in", &pts, "--method", "foo"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    for id in ["nn", "christofides", "sa", "ql", "held_karp"] {
        assert!(err.contains(id), "{id} not listed in {err}");
    }
}

#[test]
fn ql_route_files_are_byte_identical_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 12);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let o = waypoint(&[
            "solve", "--in", &pts, "--method", "ql", "--seed", "7", "--iters", "300", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn seed_defaults_from_environment() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 15);
    let run = |seed: Option<&str>, out: &str| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_waypoint"));
        c.args(["solve", "--in", &pts, "--method", "sa", "--iters", "300", "--out", out]);
        match seed {
            Some(s) => c.env("WAYPOINT_TSP_SEED", s),
            None => c.env_remove("WAYPOINT_TSP_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(out).unwrap()
    };
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let env_seeded = run(Some("11"), &d("env.json"));
    let flag = waypoint(&["solve", "--in", &pts, "--method", "sa", "--iters", "300", "--seed", "11", "--out", &d("flag.json")]);
    assert!(flag.status.success());
    assert_eq!(env_seeded, std::fs::read(d("flag.json")).unwrap());
    let _ = run(None, &d("none.json"));
}

#[test]
fn trace_csv_is_written() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 15);
    let trace = dir.path().join("trace.csv");
    let o = waypoint(&["solve", "--in", &pts, "--method", "tabu", "--iters", "200", "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(trace).unwrap();
    assert_eq!(text.lines().next(), Some("elapsed_ms,best_cost_m"));
    assert!(text.lines().count() > 1);
}

#[test]
fn missing_input_exits_1() {
    let o = waypoint(&["solve", "--in", "/nonexistent/pts.csv", "--method", "nn"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/pts.csv"));
}

#[test]
fn bad_parameter_exits_2() {
    let dir = TempDir::new().unwrap();
    let pts = gen(dir.path(), 6);
    let o = waypoint(&["solve", "--in", &pts, "--method", "sa", "--param", "alpha=1.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = waypoint(&["solve", "--in", &pts, "--method", "sa", "--param", "alpha"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(waypoint(&["bogus"]).status.code(), Some(2));
    assert_eq!(waypoint(&["solve", "--method", "nn"]).status.code(), Some(2));
    assert_eq!(waypoint(&["solve", "--in", "x.csv", "--method", "nn", "--frobnicate"]).status.code(), Some(2));
    for verb in ["solve", "bench", "landscape", "gen", "grid", "serve"] {
        let o = waypoint(&[verb, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{verb}");
        assert!(stdout(&o).contains("Usage"));
    }
}

#[test]
fn landscape_single_hc_reaches_zero() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = waypoint(&["landscape", "--kind", "single", "--method", "hc", "--start", "0,1", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(field(&stdout(&o), "objective"), 0.0);
    assert!(dir.path().join("landscape_single_hc.csv").exists());
    let svg = std::fs::read_to_string(dir.path().join("landscape_single_hc.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn landscape_multi_hc_stalls_on_local_peak() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = waypoint(&["landscape", "--kind", "multi", "--method", "hc", "--start", "0.8,-0.5", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(field(&stdout(&o), "objective") < -0.05);
}

#[test]
fn landscape_sa_csv_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let o = waypoint(&[
            "landscape", "--kind", "multi", "--method", "sa", "--seed", "3", "--start", "0.8,-0.5", "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(dir.path().join("landscape_multi_sa_schedule.svg").exists());
    }
    let read = |d: &TempDir| std::fs::read(d.path().join("landscape_multi_sa.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn landscape_off_grid_start_exits_2() {
    let dir = TempDir::new().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = waypoint(&["landscape", "--start", "0.81,0", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(2));
    let o = waypoint(&["landscape", "--start", "0,1.5", "--out-dir", d]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn grid_writes_rows_times_cols_points() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("grid.geojson");
    let o = waypoint(&[
        "grid", "--rows", "3", "--cols", "4", "--bbox", "6.87,6.89,-8.10,-8.08", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v["features"].as_array().unwrap().len(), 12);
    let o = waypoint(&["grid", "--rows", "2", "--cols", "2", "--bbox", "1,0,0,1", "--out", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_run_writes_reports_traces_and_curves() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    let o = waypoint(&[
        "bench", "run", "--methods", "nn,christofides,sa", "--sizes", "10,15", "--repeats", "2", "--seed", "42",
        "--budget-ms", "200", "--iters", "200", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["report.csv", "report.json", "report.md", "curves_10.svg", "curves_15.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(out.join("traces/trace_sa_10_1.csv").exists());
    assert!(stdout(&o).contains("Gap to best"));
    let o = waypoint(&["bench", "run", "--methods", "nn,foo", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
