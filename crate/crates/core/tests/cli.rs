use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dicke-fcs"))
}

fn run_ok(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{:?}: {}", args, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn cumulants_csv() {
    let s = run_ok(&["cumulants", "--N", "1", "--ns", "1", "--nd", "0", "--order", "2"]);
    let mut lines = s.lines();
    assert_eq!(lines.next(), Some("method,k,value"));
    assert_eq!(lines.next(), Some("me,1,2.5000000000000000e-1"));
    assert_eq!(s.lines().count(), 3);
}

#[test]
fn errors_are_machine_readable() {
    let out = bin().args(["limits", "--N", "5", "--ns", "3", "--regime", "linear"]).output().unwrap();
    assert!(!out.status.success());
    let line = String::from_utf8(out.stderr).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["error"], "regime_mismatch");
    let out = bin().args(["cumulants", "--N", "0"]).output().unwrap();
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().trim()).unwrap();
    assert_eq!(v["error"], "invalid_parameter");
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "N = 1\nn_s = 1.0\norder = 1\nmethod = \"approx2\"\n").unwrap();
    let a = run_ok(&["cumulants", "--config", cfg.to_str().unwrap()]);
    assert!(a.contains("approx2,1,"));
    let b = run_ok(&["cumulants", "--config", cfg.to_str().unwrap(), "--method", "me"]);
    assert!(b.contains("me,1,2.5000000000000000e-1"));
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = bin().args(["cumulants", "--config", cfg.to_str().unwrap()]).output().unwrap();
    assert!(String::from_utf8(out.stderr).unwrap().contains("\"config\""));
}

#[test]
fn sweep_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    run_ok(&[
        "sweep", "--axis", "n_s", "--grid", "log:0.1:10:5", "--method", "me,approx1,approx3", "--N", "4", "--order", "2",
        "--out", out.to_str().unwrap(),
    ]);
    let t = dicke_fcs::harness::Table::load(&out).unwrap();
    assert_eq!(t.rows.len(), 15);
    assert!(t.column_index("wall_time_s").is_some());
    assert!(t.column("error").unwrap().all(|c| *c == dicke_fcs::harness::Cell::Empty));
}

#[test]
fn reproduce_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for which in ["fig2", "fig3"] {
        run_ok(&["reproduce", which, "--out", a.path().to_str().unwrap()]);
        run_ok(&["reproduce", which, "--out", b.path().to_str().unwrap()]);
        for ext in ["csv", "py"] {
            let name = format!("{which}.{ext}");
            let x = std::fs::read(a.path().join(&name)).unwrap();
            let y = std::fs::read(b.path().join(&name)).unwrap();
            assert!(!x.is_empty());
            assert_eq!(x, y, "{name}");
        }
    }
    let t = dicke_fcs::harness::Table::load(&a.path().join("fig3.csv")).unwrap();
    assert_eq!(t.rows.len(), 5 * 41 * 4);
}

#[test]
fn scan_transient_distribution_limits() {
    let s = run_ok(&["cgf-scan", "--N", "3", "--grid", "7", "--chi-max", "2", "--method", "me,approx1"]);
    assert_eq!(s.lines().count(), 1 + 14);
    let s = run_ok(&["transient", "--N", "3", "--chi", "-0.4", "--t", "2", "--grid", "4"]);
    assert_eq!(s.lines().count(), 1 + 5);
    let s = run_ok(&["distribution", "--N", "2", "--t", "1", "--n-max", "40"]);
    assert_eq!(s.lines().count(), 1 + 81);
    let s = run_ok(&["limits", "--N", "10", "--ns", "1e8", "--regime", "super-transmittance"]);
    assert!(s.lines().nth(2).unwrap().starts_with("super-transmittance,approx2,3.0000000000000000e1"));
}
