use std::fs;
use std::path::{Path, PathBuf};

use evtrack::cli::{run_with_args, EXIT_CONFIG, EXIT_SIM};
use evtrack::output::TRAJECTORY_HEADER;

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn evtrack(args: &[&str]) -> i32 {
    run_with_args(std::iter::once("evtrack").chain(args.iter().copied()))
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("case1");
    let code = evtrack(&["run", &scenario("case1"), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    for f in ["trajectory.csv", "events.csv", "report.json", "figure.svg"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    assert_eq!(first_line(&out.join("trajectory.csv")), TRAJECTORY_HEADER.join(","));
    assert_eq!(
        first_line(&out.join("events.csv")),
        "i,t_i,normxt_i,L_1,L_2,L_3,L_4,L_5,reason"
    );
    let rows = fs::read_to_string(out.join("trajectory.csv")).unwrap().lines().count();
    assert_eq!(rows, 100_002);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let updates = report["metrics"]["total_updates"].as_u64().unwrap();
    assert!((150..=600).contains(&updates));
    assert!(report["arming_convention"].as_str().unwrap().contains("t0"));
    assert_eq!(report["bounds"][0]["theorem_id"], 1);
    assert_eq!(report["bounds"][0]["sound"], true);
    let svg = fs::read_to_string(out.join("figure.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
}

#[test]
fn config_flag_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("short");
    let path = scenario("case2.toml");
    let code = evtrack(&[
        "run", "--config", &path, "--out", out.to_str().unwrap(), "--horizon", "1", "--dt", "2e-4", "--no-checks",
    ]);
    assert_eq!(code, 0);
    let rows = fs::read_to_string(out.join("trajectory.csv")).unwrap().lines().count();
    assert_eq!(rows, 5_002);
}

#[test]
fn missing_or_invalid_config_exits_one_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nothing");
    assert_eq!(evtrack(&["run", "no/such/file", "--out", out.to_str().unwrap()]), EXIT_CONFIG);
    assert!(!out.exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "name = \"x\"\n[trigger]\nsigma = 0.95\n").unwrap();
    assert_eq!(evtrack(&["run", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(evtrack(&["bounds", bad.to_str().unwrap()]), EXIT_CONFIG);
    assert!(!out.exists());
    assert_eq!(evtrack(&["run", "--ledger", "sometimes", &scenario("case1")]), EXIT_CONFIG);
}

#[test]
fn simulation_failure_exits_two() {
    // a frozen ledger fires at every step near the ball and trips the default guard
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("frozen");
    let code = evtrack(&["run", &scenario("case1"), "--ledger", "frozen", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_SIM);
    assert!(!out.exists());
}

#[test]
fn bounds_reports_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let read = |name: &str| -> serde_json::Value {
        let out: PathBuf = dir.path().join(name);
        assert_eq!(evtrack(&["bounds", &scenario(name), "--out", out.to_str().unwrap()]), 0);
        serde_json::from_str(&fs::read_to_string(out.join("bounds.json")).unwrap()).unwrap()
    };
    let c1 = read("case1");
    assert!((c1["scenario"]["r1"].as_f64().unwrap() - 0.1).abs() < 1e-3);
    assert_eq!(c1["reports"][0]["theorem_id"], 1);
    assert!(c1["minimal_feasible_r"].is_null());

    let c2 = read("case2");
    assert_eq!(c2["reports"][0]["theorem_id"], 3);
    assert_eq!(c2["reports"][0]["feasible"], true);
    assert!((c2["minimal_feasible_r"].as_f64().unwrap() - 0.00744).abs() < 1e-4);

    let small = read("case2_small_r");
    assert_eq!(small["reports"][0]["feasible"], false);
    assert!(small["reports"][0]["t_lower"].is_null());
}

#[test]
fn compare_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ratio = |tag: &str| {
        let out = dir.path().join(tag);
        assert_eq!(evtrack(&["compare", &scenario("case1"), "--out", out.to_str().unwrap()]), 0);
        let v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("compare.json")).unwrap()).unwrap();
        (v["frequency_ratio"].as_f64().unwrap(), v["frozen"]["ultimate_bound_observed"].as_f64().unwrap())
    };
    let (a, bound) = ratio("a");
    let (b, _) = ratio("b");
    assert_eq!(a, b);
    assert!(a >= 5.0);
    assert!(bound <= 0.1);
}

#[test]
fn batch_writes_one_directory_per_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let code = evtrack(&[
        "batch", &scenario("case1"), &scenario("case2"), "--out", dir.path().to_str().unwrap(), "--horizon", "2",
    ]);
    assert_eq!(code, 0);
    for name in ["case1", "case2"] {
        assert!(dir.path().join(name).join("report.json").is_file());
    }
    let code = evtrack(&["batch", &scenario("case1"), "missing", "--out", dir.path().to_str().unwrap(), "--horizon", "1"]);
    assert_eq!(code, EXIT_CONFIG);
}
