use std::path::Path;
use std::process::{Command, Output};

fn gpsing(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpsing"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("GPSING_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn wprofile_writes_profile_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpsing(&["wprofile", "--N", "1", "--p", "2", "--b", "0.5"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.path().join("wprofile.csv"));
    assert!(csv.starts_with("# gpsing "));
    assert!(csv.lines().nth(1).unwrap().starts_with("# config: "));
    assert_eq!(csv.lines().nth(2).unwrap(), "r,w");
    assert_eq!(csv.lines().count(), 3 + 4001);
    let json: serde_json::Value = serde_json::from_str(&read(&dir.path().join("wprofile.json"))).unwrap();
    assert_eq!(json["header"]["N"], 1);
    assert!(json["header"]["a_star"].as_f64().unwrap() > 0.9);
    let echo = read(&dir.path().join("config.resolved.toml"));
    assert!(echo.contains("nodes = 4001"));
    assert!(echo.contains("rmax = 20.0"));
}

#[test]
fn plain_format_is_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpsing(&["wprofile", "--format", "plain", "--nodes", "2001"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let dat = read(&dir.path().join("wprofile.dat"));
    let data: Vec<&str> = dat.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2001);
    assert!(data.iter().all(|l| l.split(' ').count() == 2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let regime = gpsing(&["sweep", "--p", "2", "--b", "1", "--N", "2"], dir.path());
    assert_eq!(regime.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&regime.stderr).contains("p must satisfy"));
    assert_eq!(gpsing(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(gpsing(&["wprofile", "--nodes", "lots"], dir.path()).status.code(), Some(1));
    assert_eq!(gpsing(&["verify", "--suite", "nope"], dir.path()).status.code(), Some(1));
    assert_eq!(gpsing(&["minimize"], dir.path()).status.code(), Some(1));
    assert_eq!(gpsing(&["wprofile", "--format", "xml"], dir.path()).status.code(), Some(1));
    let solver = gpsing(&["minimize", "--M", "10", "--max-iters", "1"], dir.path());
    assert_eq!(solver.status.code(), Some(3));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "nodes = 2001\nrmax = 18.0\n").unwrap();
    let out = gpsing(
        &["wprofile", "--config", cfg.to_str().unwrap(), "--nodes", "3001"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let echo = read(&dir.path().join("config.resolved.toml"));
    assert!(echo.contains("nodes = 3001"));
    assert!(echo.contains("rmax = 18.0"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_gpsing"))
        .args(["wprofile", "--nodes", "1001"])
        .env("GPSING_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("wprofile.json").exists());
}

#[test]
fn minimize_reports_energy_parts() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpsing(&["minimize", "--M", "10", "--format", "json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&read(&dir.path().join("minimize.json"))).unwrap();
    let parts = &doc["result"]["energy_parts"];
    let total = parts["total"].as_f64().unwrap();
    let rebuilt = parts["kinetic"].as_f64().unwrap() + parts["trap"].as_f64().unwrap()
        - 2.0 * 10f64.sqrt() / 3.0 * parts["interaction"].as_f64().unwrap();
    assert!((total - rebuilt).abs() < 1e-12 * total.abs());
    assert!(doc["result"]["converged"].as_bool().unwrap());
    assert!(doc["field"]["values"].as_array().unwrap().len() == 4001);
    assert!(doc["version"].as_str().unwrap().starts_with("gpsing "));
    assert_eq!(doc["config"]["command"], "minimize");
}

#[test]
fn sweep_then_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpsing(&["sweep", "--M-list", "10,100"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = read(&dir.path().join("sweep.csv"));
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(
        rows[0],
        "M,I_M,ratio,trap_mass,eps,mu_eps2,sup_dist,h1_dist,sing_mass,decay_rate,converged"
    );
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("10,") && rows[2].starts_with("100,"));

    let out = gpsing(&["plotdata"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".dat"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 4);
    let hash = names[0].rsplit('_').next().unwrap().trim_end_matches(".dat").to_string();
    assert_eq!(hash.len(), 12);
    for kind in ["decay", "profile", "ratio", "trap_mass"] {
        assert!(names.contains(&format!("{kind}_{hash}.dat")), "{names:?}");
    }
    let ratio = read(&dir.path().join(format!("ratio_{hash}.dat")));
    let data: Vec<Vec<f64>> = ratio
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(' ').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(data.len(), 2);
    assert!(data.iter().all(|r| r.len() == 3 && r[2] == -0.5));
    let profile = read(&dir.path().join(format!("profile_{hash}.dat")));
    assert!(profile.lines().filter(|l| !l.starts_with('#')).all(|l| l.split(' ').count() == 3));
}

#[test]
fn plotdata_without_sweep_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpsing(&["plotdata"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_is_bit_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let args = ["verify", "--suite", "gn,pohozaev,multiplier", "--M-list", "10,100"];
    // both runs write into the same directory so the echoed config matches
    let first = gpsing(&args, a.path());
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let one = read(&a.path().join("verify.json"));
    let second = gpsing(&args, a.path());
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(one, read(&a.path().join("verify.json")));
    let doc: serde_json::Value = serde_json::from_str(&one).unwrap();
    assert_eq!(doc["seed"], 42);
    assert_eq!(doc["suites"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_failure_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    // 41 nodes cannot resolve the Pohozaev identities to 1e-4
    let out = gpsing(&["verify", "--suite", "pohozaev", "--nodes", "41"], dir.path());
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
}
