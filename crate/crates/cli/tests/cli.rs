use std::fs;
use std::process::{Command, Output};

use toeplitz::presets;
use toeplitz::skeleton::SymbolWindow;
use toeplitz::{Budget, ToeplitzSkeleton};

fn toeplitz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toeplitz")).args(args).output().expect("spawn toeplitz")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eta_eval_example() {
    let o = toeplitz(&["eta", "eval", "--preset", "threeadic", "--depth", "4", "-g", "14"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn verify_all_threeadic_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = toeplitz(&["verify", "all", "--preset", "threeadic", "--depth", "5", "--json", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(v["summary"]["fail"], 0);
    for c in v["checks"].as_array().unwrap() {
        for key in ["name", "status", "scope", "witnesses", "counterexample", "millis"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
    }
}

#[test]
fn density_irregular_demo_upper_below_quarter() {
    let o = toeplitz(&["analyze", "density", "--preset", "irregular-demo", "--levels", "4", "--json", "-"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "Irregular", "{v}");
    let upper = &v["d_interval"]["upper"];
    let num: u128 = upper["num"].as_str().unwrap().parse().unwrap();
    let den: u128 = upper["den"].as_str().unwrap().parse().unwrap();
    assert!(num * 4 < den);
}

#[test]
fn window_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let o = toeplitz(&[
        "eta", "window", "--preset", "threeadic", "--depth", "4", "--level", "3", "--format", "csv", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let sk = ToeplitzSkeleton::from_config(&presets::by_name("threeadic").unwrap(), 4).unwrap();
    let back = SymbolWindow::from_csv(sk.tower(), 3, &fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, sk.materialize_window(3, &Budget::default()).unwrap());
}

#[test]
fn skeleton_file_feeds_eval() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sk.json");
    let o = toeplitz(&["eta", "build", "--preset", "threeadic", "--depth", "4", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("h = 14"));
    let o = toeplitz(&["eta", "eval", "--skeleton", path.to_str().unwrap(), "-g", "14"]);
    assert_eq!(stdout(&o).trim(), "1");
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let base = ["--preset", "threeadic", "--depth", "4"];
    let mut args = vec!["eta", "window", "--level", "4", "--out", path.to_str().unwrap()];
    args.extend(base);
    assert_eq!(toeplitz(&args).status.code(), Some(0));
    let check = |extra: &[&str]| {
        let mut args = vec!["verify", "per-eq", "--window", path.to_str().unwrap()];
        args.extend(base);
        args.extend(extra);
        toeplitz(&args)
    };
    assert_eq!(check(&[]).status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let flipped: Vec<String> = text
        .lines()
        .map(|l| match l {
            "4,1" => "4,0".to_string(),
            "4,0" => "4,1".to_string(),
            _ => l.to_string(),
        })
        .collect();
    fs::write(&path, flipped.join("\n") + "\n").unwrap();
    let o = check(&["--level", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(toeplitz(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(toeplitz(&["verify", "no-such-check", "--preset", "threeadic"]).status.code(), Some(2));
    assert_eq!(toeplitz(&["eta", "eval", "--preset", "nope", "-g", "1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    assert_eq!(toeplitz(&["tower", "validate", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn period_check_and_fibers() {
    let o = toeplitz(&["periods", "check", "per-eq", "--preset", "threeadic", "--depth", "4", "--level", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
    let o = toeplitz(&["factor", "pi", "--preset", "threeadic", "--depth", "4", "-v", "7", "--cross-check"]);
    assert_eq!(stdout(&o).trim(), "(1, 7, 7, 7)");
    let o = toeplitz(&["factor", "fibers", "--preset", "threeadic", "--depth", "4", "--level", "2"]);
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn measures_dual_rendered() {
    let dir = tempfile::tempdir().unwrap();
    let cyl = dir.path().join("cyl.json");
    fs::write(&cyl, r#"[{"support": [0, 1], "values": [1, 0]}]"#).unwrap();
    let o = toeplitz(&[
        "analyze", "measures", "--preset", "threeadic", "--depth", "4", "--levels", "1,2", "--cylinders",
        cyl.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("= 1/3 ≈ 0.333333333333"), "{}", stdout(&o));
}
