use std::path::Path;
use std::process::{Command, Output};

fn nsp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsp"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("not JSON: {text} ({e})"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const SHORT_RUN: &str = "
[domain]
b = 4.0
cells = 48
[time]
t_end = 0.2
dump_cadence = 0.05
";

#[test]
fn init_writes_data_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ball.toml", "[initial]\npreset = \"uniform_ball\"\nmass = 1.0\n");
    let out = nsp(dir.path(), &["init", "--config", &cfg, "--out", "o"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/initial.json")).unwrap()).unwrap();
    assert!((side["M"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    for key in ["E0", "E1", "alpha", "eps", "b", "residual_stress", "residual_u_inner"] {
        assert!(side[key].is_number(), "{key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("o/initial.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "r,rho,u");
}

#[test]
fn small_outer_radius_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "b3.toml", "[domain]\nb = 3.0\ncells = 64\n");
    let out = nsp(dir.path(), &["init", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid_config");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn zero_viscosity_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e0.toml", "[model]\nn = 3\ngamma = 2.0\nkappa = 1.0\neps = 0.0\n");
    let out = nsp(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "invalid_input");
}

#[test]
fn heavy_star_in_conditional_range_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "heavy.toml",
        "[model]\nn = 3\ngamma = 1.3\nkappa = 1.0\neps = 0.1\n[initial]\npreset = \"uniform_ball\"\nmass = 50.0\n",
    );
    let out = nsp(dir.path(), &["init", "--config", &cfg, "--out", "o"]);
    assert!(out.status.success());
    let w = stderr_json(&out);
    assert_eq!(w["warning"], "mass_above_critical");
    assert!(w["M"].as_f64().unwrap() > w["M_c"].as_f64().unwrap());
}

#[test]
fn config_problems_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsp(dir.path(), &["run", "--config", "missing.toml"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "io");
    let cfg = write(dir.path(), "typo.toml", "[time]\nt_ned = 1.0\n");
    let out = nsp(dir.path(), &["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "parse");
    let cfg = write(dir.path(), "table.toml", "[initial]\npreset = \"table\"\ntable_path = \"nope.csv\"\n");
    let out = nsp(dir.path(), &["init", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_ledger_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", SHORT_RUN);
    for sub in ["a", "b"] {
        let out = nsp(dir.path(), &["run", "--config", &cfg, "--out", sub, "--format", "ndjson", "--format", "csv", "--format", "svg"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read(dir.path().join("a/ledger.ndjson")).unwrap();
    let b = std::fs::read(dir.path().join("b/ledger.ndjson")).unwrap();
    assert_eq!(a, b);
    let ledger = nsp::io::read_ledger(&dir.path().join("a/ledger.ndjson")).unwrap();
    assert_eq!(ledger.len(), 5);
    assert!(ledger.iter().all(|l| l.mass == ledger[0].mass));
    let snap = std::fs::read_to_string(dir.path().join("a/snapshot_0004.csv")).unwrap();
    assert_eq!(snap.lines().next().unwrap(), "x,r,u,rho");
    let slice = std::fs::read_to_string(dir.path().join("a/slice_0000.csv")).unwrap();
    assert_eq!(slice.lines().next().unwrap(), "r,rho,u,phir");
    let svg = std::fs::read_to_string(dir.path().join("a/boundary_density.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["completed"], true);
    assert!(summary["fields"]["b_of_t"]["final"].is_number());
}

#[test]
fn blow_up_keeps_partial_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "blow.toml",
        "[domain]\nb = 4.0\ncells = 32\n[time]\ncfl = 10000.0\nmax_retries = 2\ndump_cadence = 0.1\n",
    );
    let out = nsp(dir.path(), &["run", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "blow_up");
    assert!(err["tau"].is_number());
    let ledger = nsp::io::read_ledger(&dir.path().join("o/ledger.ndjson")).unwrap();
    assert!(!ledger.is_empty());
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["completed"], false);
}

#[test]
fn verify_passes_by_default_and_catches_mass_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsp(dir.path(), &["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.lines().count() >= 10);
    assert!(text.lines().all(|l| l.starts_with("PASS")));

    let cfg = write(dir.path(), "perturb.toml", "[verify]\nperturb_mass = 1e-9\n");
    let out = nsp(dir.path(), &["verify", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(4));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("lagrangian mass")));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "verify_failed");
}

#[test]
fn entropy_and_mc_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "tab.toml",
        "[entropy]\nrho_points = 3\nu_points = 4\n[mc]\ndims = [3, 4]\ngammas = [1.3, 2.0]\n",
    );
    assert!(nsp(dir.path(), &["entropy", "--config", &cfg, "--out", "o"]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("o/entropy.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "rho,u,eta,q,eta_rho,eta_m");
    assert_eq!(lines.count(), 12);

    let out = nsp(dir.path(), &["mc", "--config", &cfg, "--out", "o"]);
    assert!(out.status.success());
    let rows: Vec<serde_json::Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 4);
    // γ = 2 lies above 2(n-1)/n for n = 3, so M_c is undefined there
    let above = rows.iter().find(|r| r["n"] == 3 && r["gamma"] == 2.0).unwrap();
    assert!(above["m_c"].is_null());
    assert!(!above["note"].as_str().unwrap().is_empty());
    let inside = rows.iter().find(|r| r["n"] == 3 && r["gamma"] == 1.3).unwrap();
    assert!(inside["m_c"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("o/mc.csv").exists());
}
