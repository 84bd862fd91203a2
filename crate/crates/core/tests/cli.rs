use std::process::{Command, Output};

fn loghls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loghls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn eval_json_is_deterministic() {
    let a = loghls(&[
        "eval",
        "mixture:weights=1;1,components=gaussian(sigma=1);optimizer(s=2,x=1)",
        "--json",
    ]);
    let b = loghls(&[
        "eval",
        "mixture:weights=1;1,components=gaussian(sigma=1);optimizer(s=2,x=1)",
        "--json",
    ]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["domain"], "planar");
    assert!((v["values"]["mass"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn invalid_input_exits_two() {
    let o = loghls(&["eval", "bad:spec"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error: cli: parse error"), "{}", stderr(&o));
    assert_eq!(loghls(&["eval", "gaussian:sigma=0"]).status.code(), Some(2));
    assert_eq!(
        loghls(&["stability", "gaussian", "--grid-n", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(loghls(&["flow", "ks", "gaussian"]).status.code(), Some(2));
    assert_eq!(loghls(&["eval"]).status.code(), Some(2));
}

#[test]
fn stability_passes_on_gaussian() {
    let o = loghls(&["stability", "gaussian:sigma=2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn out_dir_gets_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = loghls(&["heatflow", "1+0.3*P2", "--out", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("heat.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    assert!(csv.starts_with("t,free_energy,distance_L1,dissipation,mass_error\n"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("heat.json")).unwrap()).unwrap();
    assert_eq!(json["diagnostics"]["pass"], true);
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "grid_n = 128\nrmax = 1e3\n").unwrap();
    let p = path.to_str().unwrap();
    let coarse = loghls(&["eval", "optimizer", "--config", p, "--json"]);
    let fine = loghls(&["eval", "optimizer", "--config", p, "--grid-n", "4096", "--json"]);
    let grid_n = |o: &Output| {
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v["grid"]["n"].as_u64().unwrap()
    };
    assert_eq!(grid_n(&coarse), 128);
    assert_eq!(grid_n(&fine), 4096);

    std::fs::write(&path, "grid_m = 128\n").unwrap();
    let o = loghls(&["eval", "optimizer", "--config", p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn coarse_grid_fails_a_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("coarse.conf");
    std::fs::write(&path, "grid_n = 64\nrmax = 10\n").unwrap();
    let o = loghls(&["suite", "--only", "1", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
    assert!(stderr(&o).contains("failing criteria: 1"), "{}", stderr(&o));
}

#[test]
fn suite_subset_json() {
    let o = loghls(&["suite", "--only", "2,6", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ids: Vec<u64> = v["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![2, 6]);
    assert_eq!(v["pass"], true);
}

#[test]
fn duality_demo_two_dimensional() {
    let o = loghls(&["duality-demo", "--a", "1,0.5", "--b", "2,1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("dimension = 2"));
    assert_eq!(loghls(&["duality-demo", "--a", "3", "--b", "1"]).status.code(), Some(2));
}
