//! Subcommand implementations. Each writes its CSV files into the configured
//! output directory and returns an in-memory summary.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use winkler_contact::contact::contact_pressure;
use winkler_contact::dd_solver::{ddm_solve, monolithic_newton, IterationReport, Outcome, SolverError, SolverState};
use winkler_contact::fem2d::Discretization;

use crate::scenario::{generate_scenario, ConfigError, ScenarioConfig};

/// Environment variable capping concurrent sweep entries.
pub const WORKERS_ENV: &str = "WINKLER_CONTACT_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

/// 17 significant digits, so values round-trip exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CommandError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CommandError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| CommandError::Io { path: path.to_path_buf(), source })
}

pub fn build(cfg: &ScenarioConfig) -> Result<Discretization, CommandError> {
    let problem = generate_scenario(cfg)?;
    Ok(Discretization::new(&problem).map_err(SolverError::from)?)
}

pub fn convergence_csv(report: &IterationReport, bodies: usize) -> String {
    let mut out = String::from("k");
    for b in 1..=bodies {
        let _ = write!(out, ",rho_{b}");
    }
    out.push_str(",energy_F1,active_nodes,gamma\n");
    for r in &report.records {
        let _ = write!(out, "{}", r.k);
        for rho in &r.rho {
            let _ = write!(out, ",{}", fmt_float(*rho));
        }
        let _ = writeln!(out, ",{},{},{}", fmt_float(r.energy), r.active_nodes, fmt_float(r.gamma));
    }
    out
}

/// Pressure profile of the first contact pair, one row per paired node.
pub fn pressure_csv(disc: &Discretization, state: &SolverState) -> String {
    let mut out = String::from("x1_cm,sigma_n_MPa,gap_cm,t_cm\n");
    let Some(pair) = disc.pairs().first() else { return out };
    let fields = state.fields(disc);
    let sigma = contact_pressure(pair, &fields[pair.alpha], &fields[pair.beta]);
    for (((node, s), gap), ns) in pair.nodes.iter().zip(&sigma).zip(&pair.gaps).zip(&state.gap_states[0].nodes) {
        let _ = writeln!(out, "{},{},{},{}", fmt_float(node.abscissa), fmt_float(*s), fmt_float(*gap), fmt_float(ns.t));
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub convergence: PathBuf,
    pub pressure: PathBuf,
    pub summary: PathBuf,
    pub outcome: Outcome,
    pub iterations: usize,
    pub seconds: f64,
    pub failure: Option<String>,
}

pub fn cmd_run(cfg: &ScenarioConfig) -> Result<RunArtifacts, CommandError> {
    let start = Instant::now();
    let disc = build(cfg)?;
    let (state, report) = ddm_solve(&disc, &cfg.solver_config())?;
    let seconds = start.elapsed().as_secs_f64();
    let dir = &cfg.output_dir;
    let artifacts = RunArtifacts {
        convergence: dir.join("convergence.csv"),
        pressure: dir.join("pressure.csv"),
        summary: dir.join("summary.txt"),
        outcome: report.outcome,
        iterations: report.iterations(),
        seconds,
        failure: report.failure.clone(),
    };
    write_file(&artifacts.convergence, &convergence_csv(&report, disc.bodies().len()))?;
    write_file(&artifacts.pressure, &pressure_csv(&disc, &state))?;
    let mut summary = format!("outcome={}\niterations={}\nseconds={seconds:.3}\n", report.outcome, report.iterations());
    if let Some(f) = &report.failure {
        let _ = writeln!(summary, "failure={f}");
    }
    write_file(&artifacts.summary, &summary)?;
    Ok(artifacts)
}

fn worker_pool() -> rayon::ThreadPool {
    let workers = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaRow {
    pub gamma: f64,
    /// Outcome name, or `error` when the run aborted.
    pub outcome: String,
    pub iterations: usize,
}

pub fn cmd_sweep_gamma(cfg: &ScenarioConfig, gammas: &[f64]) -> Result<Vec<GammaRow>, CommandError> {
    if gammas.is_empty() {
        return Err(ConfigError::Invalid(vec!["gamma list is empty".into()]).into());
    }
    cfg.validate()?;
    let disc = build(cfg)?;
    let rows: Vec<GammaRow> = worker_pool().install(|| {
        gammas
            .par_iter()
            .map(|&gamma| match ddm_solve(&disc, &cfg.solver_config().with_gamma(gamma)) {
                Ok((_, r)) => GammaRow { gamma, outcome: r.outcome.to_string(), iterations: r.iterations() },
                Err(_) => GammaRow { gamma, outcome: "error".into(), iterations: 0 },
            })
            .collect()
    });
    let mut csv = String::from("gamma,outcome,iterations\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{}", fmt_float(r.gamma), r.outcome, r.iterations);
    }
    write_file(&cfg.output_dir.join("gamma_sweep.csv"), &csv)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRow {
    pub compliance: f64,
    pub exponent: f64,
    pub outcome: String,
    pub iterations: usize,
    pub max_abs_pressure: f64,
    pub profile: PathBuf,
}

/// File name of the pressure profile for one layer.
pub fn layer_profile_name(compliance: f64, exponent: f64) -> String {
    format!("pressure_B{compliance:e}_a{exponent}.csv")
}

/// Solves once per `(B, a)` with the monolithic Newton iteration, which stays
/// fast for the very stiff layers used as the rigid reference.
pub fn cmd_sweep_layer(cfg: &ScenarioConfig, layers: &[(f64, f64)]) -> Result<Vec<LayerRow>, CommandError> {
    cfg.validate()?;
    let solve = |&(compliance, exponent): &(f64, f64)| -> Result<LayerRow, CommandError> {
        let c = ScenarioConfig { layer_b: compliance, layer_a: exponent, ..cfg.clone() };
        let disc = build(&c)?;
        let profile = cfg.output_dir.join(layer_profile_name(compliance, exponent));
        let solver_cfg = c.solver_config().with_eps_u(c.eps_u.min(1e-10)).with_max_iterations(c.max_iterations.max(200));
        match monolithic_newton(&disc, &solver_cfg) {
            Ok((state, report)) => {
                let csv = pressure_csv(&disc, &state);
                write_file(&profile, &csv)?;
                let fields = state.fields(&disc);
                let pair = &disc.pairs()[0];
                let max_abs_pressure = contact_pressure(pair, &fields[0], &fields[1]).iter().fold(0.0f64, |m, s| m.max(s.abs()));
                Ok(LayerRow { compliance, exponent, outcome: report.outcome.to_string(), iterations: report.iterations(), max_abs_pressure, profile })
            }
            Err(_) => Ok(LayerRow { compliance, exponent, outcome: "error".into(), iterations: 0, max_abs_pressure: f64::NAN, profile }),
        }
    };
    let rows = worker_pool().install(|| layers.par_iter().map(solve).collect::<Result<Vec<_>, _>>())?;
    if !rows.is_empty() {
        let mut csv = String::from("B,a,outcome,iterations,max_abs_sigma_n_MPa\n");
        for r in &rows {
            let _ = writeln!(csv, "{},{},{},{},{}", fmt_float(r.compliance), fmt_float(r.exponent), r.outcome, r.iterations, fmt_float(r.max_abs_pressure));
        }
        write_file(&cfg.output_dir.join("layer_sweep.csv"), &csv)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshInfo {
    pub bodies: Vec<BodyInfo>,
    pub contact_nodes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodyInfo {
    pub nodes: usize,
    pub elements: usize,
    pub dofs: usize,
    pub free_dofs: usize,
}

pub fn cmd_mesh_info(cfg: &ScenarioConfig) -> Result<MeshInfo, CommandError> {
    let disc = build(cfg)?;
    let bodies = disc
        .problem()
        .bodies()
        .iter()
        .zip(disc.bodies())
        .map(|(b, s)| BodyInfo { nodes: b.mesh.node_count(), elements: b.mesh.element_count(), dofs: s.dofs.total(), free_dofs: s.n_free() })
        .collect();
    Ok(MeshInfo { bodies, contact_nodes: disc.pairs().iter().map(|p| p.len()).collect() })
}

impl std::fmt::Display for MeshInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, b) in self.bodies.iter().enumerate() {
            writeln!(f, "body {}: {} nodes, {} triangles, {} dofs ({} free)", i + 1, b.nodes, b.elements, b.dofs, b.free_dofs)?;
        }
        for (i, n) in self.contact_nodes.iter().enumerate() {
            writeln!(f, "contact pair {}: {n} paired nodes", i + 1)?;
        }
        Ok(())
    }
}
