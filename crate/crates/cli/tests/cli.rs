use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use winkler_contact_cli::commands::{cmd_run, cmd_sweep_gamma, cmd_sweep_layer};
use winkler_contact_cli::scenario::ScenarioConfig;
use winkler_contact_cli::verify::{broken_law, law_monotonicity};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winkler-contact"))
        .arg("--output")
        .arg(dir)
        .args(["--set", "mesh.nx=16", "--set", "mesh.ny=4"])
        .args(args)
        .output()
        .expect("binary runs")
}

fn coarse(dir: &Path) -> ScenarioConfig {
    ScenarioConfig { nx: 16, ny: 4, output_dir: dir.to_path_buf(), ..Default::default() }
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn run_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["run", "--strict"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("outcome=converged"));
    let iterations: usize = summary.lines().find_map(|l| l.strip_prefix("iterations=")).unwrap().parse().unwrap();
    let conv = fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert!(conv.starts_with("k,rho_1,rho_2,energy_F1,active_nodes,gamma\n"));
    assert_eq!(conv.lines().count() - 1, iterations);
    let pressure = rows(&dir.path().join("pressure.csv"));
    assert_eq!(pressure.len(), 17);
    assert!(pressure.iter().all(|r| r[1].parse::<f64>().unwrap() <= 0.0));
}

#[test]
fn outputs_are_bit_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    cmd_run(&coarse(a.path())).unwrap();
    cmd_run(&coarse(b.path())).unwrap();
    for file in ["convergence.csv", "pressure.csv"] {
        assert_eq!(fs::read(a.path().join(file)).unwrap(), fs::read(b.path().join(file)).unwrap(), "{file}");
    }
    let line = fs::read_to_string(a.path().join("pressure.csv")).unwrap();
    let first = line.lines().nth(1).unwrap().split(',').next().unwrap().to_string();
    assert_eq!(first, "0.0000000000000000e0");
}

#[test]
fn zero_load_gives_negligible_pressure() {
    // the upper block loses its only support as the contact force vanishes,
    // so the run may stop on a near-singular local solve; the pressure left
    // over from the initial trace must still be negligible
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig { load_q: 0.0, ..coarse(dir.path()) };
    let run = cmd_run(&cfg).unwrap();
    assert!(run.summary.exists());
    assert!(rows(&run.pressure).iter().all(|r| r[1].parse::<f64>().unwrap().abs() <= 1e-8));
}

#[test]
fn strict_run_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["--set", "solver.gamma=1.95", "--set", "solver.max_iterations=40", "run", "--strict"]);
    assert_eq!(out.status.code(), Some(3));
    // artifacts are written regardless
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(!summary.contains("outcome=converged"));
    let lax = bin(dir.path(), &["--set", "solver.gamma=1.95", "--set", "solver.max_iterations=40", "run"]);
    assert_eq!(lax.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bin(dir.path(), &["--set", "material.nu=0.5", "run"]).status.code(), Some(1));
    assert_eq!(bin(dir.path(), &["--set", "no.such=1", "mesh-info"]).status.code(), Some(1));
    let file = dir.path().join("bad.cfg");
    fs::write(&file, "layer.B\n").unwrap();
    assert_eq!(bin(dir.path(), &["--config", file.to_str().unwrap(), "mesh-info"]).status.code(), Some(1));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.cfg");
    fs::write(&file, "# coarse instance\nmesh.nx = 4\nmesh.ny = 2\n").unwrap();
    let out =
        Command::new(env!("CARGO_BIN_EXE_winkler-contact")).args(["--config", file.to_str().unwrap(), "--set", "mesh.ny=3", "mesh-info"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("body 1: 20 nodes, 24 triangles"), "{text}");
    assert!(text.contains("contact pair 1: 5 paired nodes"));
}

#[test]
fn gamma_sweep_records_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig { max_iterations: 60, ..coarse(dir.path()) };
    let table = cmd_sweep_gamma(&cfg, &[0.6, 1.5]).unwrap();
    assert_eq!(table.len(), 2);
    assert_eq!(table[0].outcome, "converged");
    assert_ne!(table[1].outcome, "converged");
    let csv = rows(&dir.path().join("gamma_sweep.csv"));
    assert_eq!(csv.len(), 2);
    assert_eq!(cmd_sweep_gamma(&cfg, &[0.6]).unwrap().len(), 1);
    assert!(cmd_sweep_gamma(&cfg, &[]).is_err());
}

#[test]
fn layer_sweep_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = coarse(dir.path());
    assert!(cmd_sweep_layer(&cfg, &[]).unwrap().is_empty());
    assert!(fs::read_dir(dir.path()).map_or(true, |mut d| d.next().is_none()));
    let table = cmd_sweep_layer(&cfg, &[(1e-5, 0.3), (1e-5, 1.0), (1e-8, 1.0)]).unwrap();
    assert!(table.iter().all(|r| r.outcome == "converged" && r.profile.exists()));
    let rigid = table[2].max_abs_pressure;
    assert!((table[0].max_abs_pressure - rigid).abs() < (table[1].max_abs_pressure - rigid).abs());
    assert_eq!(rows(&dir.path().join("layer_sweep.csv")).len(), 3);
}

#[test]
fn verify_passes_and_catches_a_broken_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["verify"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(!text.contains("FAIL"));
    assert!(!law_monotonicity(&[broken_law()], 1e-3).passed);
}
