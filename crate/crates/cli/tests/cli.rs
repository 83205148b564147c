use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn mmbm<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_mmbm")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

#[test]
fn two_point_violation() {
    let two = data("two_point.json");
    let two = two.to_str().unwrap();
    let out = mmbm([two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0", "--N", "1"]);
    assert_eq!(code(&out), 2, "missing subcommand is a usage error");
    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0", "--N", "1"]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["deficit"], -0.5);
    assert_eq!(v["lhs"], 0.0);
    assert_eq!(v["rhs"], 0.5);
    assert_eq!(v["status"], "violated");
    assert_eq!(v["K_indices"], serde_json::json!([0]));
    assert_eq!(v["witness_indices"], serde_json::json!([]));
}

#[test]
fn two_point_with_slack_and_mult() {
    let two = data("two_point.json");
    let two = two.to_str().unwrap();
    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0.5", "--N", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["lhs"], 1.0);

    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0", "--mult"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["kind"], "multiplicative");
    assert_eq!(v["N"], Value::Null);

    let out = mmbm(["bm-check", two, "--K", "", "--L", "1", "--s", "0.5", "--h", "0", "--N", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["status"], "vacuous");
}

#[test]
fn bm_check_csv_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("r.csv");
    let two = data("two_point.json");
    let out = mmbm([
        "bm-check",
        two.to_str().unwrap(),
        "--K",
        "0",
        "--L",
        "0,1",
        "--s",
        "0.5",
        "--h",
        "0",
        "--N",
        "2",
        "--csv",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "resolution,h,eps,s,N,lhs,rhs,deficit,status,K,L");
    assert!(lines.next().unwrap().ends_with(",0,0 1"), "{text}");
    assert!(code(&out) <= 1);
}

#[test]
fn bad_indices_and_flags() {
    let two = data("two_point.json");
    let two = two.to_str().unwrap();
    let out = mmbm(["bm-check", two, "--K", "5", "--L", "1", "--s", "0.5", "--h", "0", "--N", "1"]);
    assert_eq!(code(&out), 2);
    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "1.5", "--h", "0", "--N", "1"]);
    assert_eq!(code(&out), 2);
    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0"]);
    assert_eq!(code(&out), 2);
    let out = mmbm(["bm-check", two, "--K", "0", "--L", "1", "--s", "0.5", "--h", "0", "--N", "1", "--tol", "-1"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn fractional_dimension_is_noted() {
    let two = data("two_point.json");
    let out = mmbm(["bm-check", two.to_str().unwrap(), "--K", "0", "--L", "0", "--s", "0.5", "--h", "0", "--N", "1.5"]);
    assert_eq!(code(&out), 0);
    assert!(stderr(&out).contains("not an integer"));
}

#[test]
fn validate_names_worst_triple() {
    let out = mmbm(["validate", data("bad_triangle.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("(0,1,2)"), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["valid"], false);
    assert_eq!(v["violations"][0]["triple"], serde_json::json!([0, 1, 2]));

    let out = mmbm(["validate", data("two_point.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["valid"], true);

    let out = mmbm(["validate", data("bad_triangle.json").to_str().unwrap(), "--tri-tol", "1.5"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn malformed_input_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"weights\": [1, 1],\n  \"dist\": [[0, 1], [1, 0]\n").unwrap();
    let out = mmbm(["validate", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    std::fs::write(&p, r#"{"weights": [1], "dist": [[0]], "dsit": 1}"#).unwrap();
    let out = mmbm(["validate", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown field `dsit`"), "{}", stderr(&out));

    let out = mmbm(["validate", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn discretize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    let out = mmbm([
        "discretize",
        data("interval_model.json").to_str().unwrap(),
        "--cells",
        "4",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&grid).unwrap()).unwrap();
    assert_eq!(v["h"], 0.125);
    assert_eq!(v["weights"], serde_json::json!([0.25, 0.25, 0.25, 0.25]));
    assert_eq!(v["coords"], serde_json::json!([[0.125], [0.375], [0.625], [0.875]]));
    assert_eq!(v["metric"], "l2");
    assert_eq!(code(&mmbm(["validate", grid.to_str().unwrap()])), 0);

    let out = mmbm(["discretize", data("interval_model.json").to_str().unwrap(), "--cells", "4,4"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn ot_between_grids_is_within_covering_radius() {
    let dir = tempfile::tempdir().unwrap();
    let model = data("interval_model.json");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for (cells, p) in [("2", &a), ("8", &b)] {
        let out = mmbm(["discretize", model.to_str().unwrap(), "--cells", cells, "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    let out = mmbm(["ot", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    let cost = v["cost"].as_f64().unwrap();
    assert!(cost > 0.0 && cost <= 0.25 + 1e-12, "{cost}");
    let total: f64 = v["entries"].as_array().unwrap().iter().map(|e| e["q"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let cross = dir.path().join("cross.json");
    std::fs::write(&cross, "[[0, 0, 0, 0, 1, 1, 1, 1], [1, 1, 1, 1, 0, 0, 0, 0]]").unwrap();
    let out = mmbm(["ot", a.to_str().unwrap(), b.to_str().unwrap(), "--cross", cross.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(json(&out)["cost"], 0.0);
}

#[test]
fn sweep_emits_three_resolutions() {
    let out = mmbm(["sweep", data("interval_exp.json").to_str().unwrap(), "--csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "resolution,h,eps,s,N,lhs,rhs,deficit,status,K,L");
    let mut resolutions: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    resolutions.dedup();
    assert_eq!(resolutions, ["4", "8", "16"]);
}

#[test]
fn sweep_json_and_spec_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let spec: Value = serde_json::from_str(&std::fs::read_to_string(data("interval_exp.json")).unwrap()).unwrap();
    let mut spec = spec.as_object().unwrap().clone();
    let (j, c) = (dir.path().join("sweep.json"), dir.path().join("sweep.csv"));
    spec.insert("outputs".into(), serde_json::json!({"json": j, "csv": c}));
    let p = dir.path().join("exp.json");
    std::fs::write(&p, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = mmbm(["sweep", p.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["violations"], 0);
    // 3 resolutions x 10 pairs x 11 values of s
    assert_eq!(v["rows"].as_array().unwrap().len(), 330);
    assert_eq!(v["exhaustive"].as_array().unwrap().len(), 3);
    assert_eq!(std::fs::read(&j).unwrap(), out.stdout);
    assert!(std::fs::read_to_string(&c).unwrap().lines().count() == 331);
}

#[test]
fn sweep_capacity_error_names_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("big.json");
    std::fs::write(
        &p,
        r#"{"model": {"kind": "box", "sides": [1, 1]}, "resolutions": [[4, 4], [80, 80]],
            "query": {"N": 2}, "compacts": [{"name": "all", "type": "all"}]}"#,
    )
    .unwrap();
    let out = mmbm(["sweep", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("resolution 80x80"), "{}", stderr(&out));
}

#[test]
fn sweep_flags_violation_with_tiny_fixed_h() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("tight.json");
    std::fs::write(
        &p,
        r#"{"model": {"kind": "box", "sides": [1]}, "resolutions": [4],
            "query": {"N": 1, "s_grid": [0.5], "h_policy": {"fixed": 0.0}},
            "compacts": [{"name": "a", "type": "indices", "indices": [0]},
                         {"name": "b", "type": "indices", "indices": [1]}],
            "pairs": [["a", "b"]]}"#,
    )
    .unwrap();
    let out = mmbm(["sweep", p.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stderr(&out));
    assert_eq!(json(&out)["violations"], 1);
}

#[test]
fn stability_replay_passes() {
    for spec in ["interval_exp.json", "square_exp.json"] {
        let out = mmbm(["stability", data(spec).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{spec}: {}", stderr(&out));
        let v = json(&out);
        assert_eq!(v["failed_steps"], 0);
        for row in v["rows"].as_array().unwrap() {
            assert_eq!(row["steps"].as_array().unwrap().len(), 9);
            assert_eq!(row["inclusion"], true);
        }
    }
    let out = mmbm(["stability", data("interval_exp.json").to_str().unwrap(), "--csv"]);
    assert!(stdout(&out).lines().nth(1).unwrap().starts_with("8/64,"));
}

#[test]
fn search_and_exhaustive() {
    let two = data("two_point.json");
    let two = two.to_str().unwrap();
    let out = mmbm(["bm-search", two, "--N", "1", "--h", "0", "--iters", "1"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["reports"][0]["deficit"], -0.5);
    let out = mmbm(["exhaustive", two, "--N", "1", "--h", "0", "--s-grid", "0.5"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["deficit"], -0.5);
    let out = mmbm(["exhaustive", two, "--N", "1", "--h", "0.5", "--s-grid", "0.5"]);
    assert_eq!(code(&out), 0);
    // Off the midpoint, h = 0.5 is too small: K={a}, L={a,b}, s=0.4 misses b.
    let out = mmbm(["exhaustive", two, "--N", "1", "--h", "0.5"]);
    assert_eq!(code(&out), 1);
    let v = json(&out);
    assert_eq!(v["s"], 0.4);
    assert!((v["deficit"].as_f64().unwrap() + 0.2).abs() < 1e-15);
}

#[test]
fn reports_are_deterministic() {
    let exp = data("square_exp.json");
    let a = mmbm(["sweep", exp.to_str().unwrap(), "--threads", "1"]);
    let b = mmbm(["sweep", exp.to_str().unwrap(), "--threads", "3"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = mmbm(["sweep", exp.to_str().unwrap(), "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout, "the seed moves the random compacts");

    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.json");
    mmbm([
        "discretize",
        data("interval_model.json").to_str().unwrap(),
        "--cells",
        "12",
        "--out",
        grid.to_str().unwrap(),
    ]);
    let run = || mmbm(["bm-search", grid.to_str().unwrap(), "--N", "1", "--h", "0.05", "--iters", "50", "--seed", "9"]);
    let (x, y) = (run(), run());
    assert!(!x.stdout.is_empty());
    assert_eq!(x.stdout, y.stdout);
}
