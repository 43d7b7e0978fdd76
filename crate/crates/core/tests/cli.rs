use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fiberqed"))
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_in(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    bin().arg("--config").arg(config("caption.toml")).arg("--out").arg(dir).args(args).output().unwrap()
}

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run_in(d.path(), &["--seed", "11", "simulate"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["trajectory.csv", "run.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let csv = std::fs::read_to_string(a.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x,y,z,vx,vy,vz");
    assert!(!csv.contains('\r'));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(a.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["steps"], 30000);
}

#[test]
fn different_seeds_give_different_paths() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_in(a.path(), &["--seed", "1", "simulate"]);
    run_in(b.path(), &["--seed", "2", "simulate"]);
    assert_ne!(std::fs::read(a.path().join("trajectory.csv")).unwrap(), std::fs::read(b.path().join("trajectory.csv")).unwrap());
}

#[test]
fn modes_grid_has_the_documented_layout() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_in(d.path(), &["modes"]).status.success());
    let csv = std::fs::read_to_string(d.path().join("modes_grid.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,y,f,dfx,dfy");
    assert_eq!(lines.count(), 51 * 51);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("modes.json")).unwrap()).unwrap();
    assert_eq!(summary[0]["label"], "IG_o_5_5");
    assert_eq!(summary[0]["order"], 5);
}

#[test]
fn forces_export_has_all_channels() {
    let d = tempfile::tempdir().unwrap();
    assert!(run_in(d.path(), &["forces"]).status.success());
    let csv = std::fs::read_to_string(d.path().join("forces.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 23);
    assert_eq!(&header[..6], &["x", "y", "Fx", "Fy", "Fz", "fricxx"]);
    assert_eq!(header[22], "Dzz");
    let map = std::fs::read_to_string(d.path().join("gradient_map.csv")).unwrap();
    assert_eq!(map.lines().next().unwrap(), "x,y,gx,gy");
}

#[test]
fn spectrum_scan_changes_sign_once() {
    let d = tempfile::tempdir().unwrap();
    let out = bin().arg("--config").arg(config("threshold.toml")).arg("--out").arg(d.path()).arg("spectrum").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.path().join("spectrum.csv")).unwrap();
    let delta: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(delta.len(), 201);
    let changes = delta.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert_eq!(changes, 1);
}

#[test]
fn unknown_subcommand_exits_with_usage() {
    let out = bin().arg("teleport").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn errors_are_reported_as_json() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.toml");
    let text = std::fs::read_to_string(config("caption.toml")).unwrap().replace("m = 2.27369\n", "");
    std::fs::write(&bad, text).unwrap();
    let out = bin().arg("--config").arg(&bad).arg("--out").arg(d.path()).arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("`m`"));
}

#[test]
fn missing_sweep_section_is_an_error() {
    let d = tempfile::tempdir().unwrap();
    let out = bin().arg("--config").arg(config("threshold.toml")).arg("--out").arg(d.path()).arg("sweep").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_sweep_output() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("small.toml");
    let text = std::fs::read_to_string(config("caption.toml"))
        .unwrap()
        .replace("repetitions = 50", "repetitions = 4")
        .replace("t = 1500.0", "t = 100.0")
        .replace("../data/ig_modes.csv", config("../data/ig_modes.csv").to_str().unwrap());
    std::fs::write(&cfg, text).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let o = d.path().join(format!("t{threads}"));
        let out = bin().arg("--config").arg(&cfg).arg("--out").arg(&o).env("FIBERQED_THREADS", threads).arg("sweep").output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((std::fs::read(o.join("sweep_summary.csv")).unwrap(), std::fs::read(o.join("sweep_summary.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let csv = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "param_value,n,mean_trap_time,std_trap_time,censored_n");
    assert_eq!(csv.lines().count(), 7);
}
