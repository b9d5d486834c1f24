//! Property suite behind the `verify` subcommand. Every check reports the
//! measured quantity next to the requirement it was held to.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use winkler_contact::contact::{check_complementarity, PsiStrategy};
use winkler_contact::dd_solver::{abstract_iterate, ddm_solve, ddm_step, estimate_theorem3, monolithic_newton, relative_increments, SolverConfig, SolverState};
use winkler_contact::fem2d::{apply_dirichlet, assemble_load, assemble_stiffness, total_energy, Discretization, DofMap, SparseSystem};
use winkler_contact::linsolve::{factorize, CsrMatrix};
use winkler_contact::model::{validate_law, EdgeTag, IsotropicMaterial, LoadSpec, WinklerLaw};

use crate::commands::{build, CommandError};
use crate::scenario::{rectangle_mesh, Layout, ScenarioConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub required: String,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, required: format!("<= {bound:e}"), passed: measured <= bound }
    }

    fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, required: format!(">= {bound:e}"), passed: measured >= bound }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: measured {:.3e}, required {}", self.name, self.measured, self.required)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn random_state(disc: &Discretization, scale: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    disc.bodies().iter().map(|b| (0..b.n_free()).map(|_| rng.random_range(-scale..=scale)).collect()).collect()
}

fn axpy(u: &[Vec<f64>], h: f64, v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter().zip(v).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + h * y).collect()).collect()
}

fn dot(u: &[Vec<f64>], v: &[Vec<f64>]) -> f64 {
    u.iter().flatten().zip(v.iter().flatten()).map(|(a, b)| a * b).sum()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Discrete `∇F₁` against central differences of the total energy along
/// random directions. Entries are drawn up to `scale`, which should exceed
/// the gap so that some nodes penetrate.
pub fn gradient_check(disc: &Discretization, states: usize, scale: f64, rng: &mut impl Rng) -> Check {
    let energy = |u: &[Vec<f64>]| total_energy(disc, &disc.to_fields(u)).expect("fields match the discretization");
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..states {
        let u = random_state(disc, scale, rng);
        let v = random_state(disc, scale, rng);
        let analytic = dot(&disc.gradient(&u), &v);
        let fd = (energy(&axpy(&u, h, &v)) - energy(&axpy(&u, -h, &v))) / (2.0 * h);
        worst = worst.max((fd - analytic).abs() / analytic.abs().max(f64::MIN_POSITIVE));
    }
    Check::at_most(format!("gradient vs central differences ({states} states)"), worst, 1e-5)
}

/// Sampled strict monotonicity and `g(0) = 0` of every law on `[−w, w]`.
/// Measures the number of failing laws.
pub fn law_monotonicity(laws: &[WinklerLaw], w: f64) -> Check {
    let failing = laws.iter().filter(|law| !validate_law(law, (-w, w), 401).is_ok_and(|v| v.is_ok())).count();
    Check::at_most("layer laws strictly increasing", failing as f64, 0.0)
}

/// Decreasing response that [`law_monotonicity`] must reject.
pub fn broken_law() -> WinklerLaw {
    WinklerLaw::custom(|w| -w, |_| -1.0)
}

/// `min ⟨∇J(u+v) − ∇J(u), v⟩` over random pairs.
pub fn contact_monotonicity(disc: &Discretization, pairs: usize, scale: f64, rng: &mut impl Rng) -> Check {
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        let u = random_state(disc, scale, rng);
        let v = random_state(disc, scale, rng);
        let (g0, g1) = (disc.contact_gradient(&u), disc.contact_gradient(&axpy(&u, 1.0, &v)));
        let diff: Vec<Vec<f64>> = g1.iter().zip(&g0).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
        worst = worst.min(dot(&diff, &v));
    }
    Check::at_least(format!("contact gradient monotone ({pairs} pairs)"), worst, -1e-12)
}

/// A linear field imposed on the whole boundary of an unloaded block must be
/// reproduced at the interior nodes. Measures the largest nodal error
/// relative to the field's magnitude.
pub fn patch_test(cfg: &ScenarioConfig) -> Result<Check, CommandError> {
    let mesh = rectangle_mesh(cfg.length, cfg.height, 0.0, 8, 4, [EdgeTag::DirichletFull; 4]).map_err(|e| invalid(e.to_string()))?;
    let material = IsotropicMaterial::new(cfg.young_modulus, cfg.poisson_ratio).map_err(|e| invalid(e.to_string()))?;
    let exact = |x: [f64; 2]| [1e-3 + 2e-4 * x[0] - 3e-4 * x[1], -5e-4 + 1e-4 * x[0] + 4e-4 * x[1]];
    let mut prescribed = Vec::new();
    for edge in mesh.boundary_edges() {
        for n in edge.nodes {
            let v = exact(mesh.nodes()[n]);
            prescribed.extend([(2 * n, v[0]), (2 * n + 1, v[1])]);
        }
    }
    let dofs = DofMap::with_prescribed(mesh.node_count(), prescribed).map_err(|e| invalid(e.to_string()))?;
    let full = SparseSystem {
        matrix: assemble_stiffness(&mesh, &material).map_err(|e| invalid(e.to_string()))?,
        rhs: assemble_load(&mesh, &LoadSpec::none()).map_err(|e| invalid(e.to_string()))?,
    };
    let reduced = apply_dirichlet(&full, &dofs).map_err(|e| invalid(e.to_string()))?;
    let solver = factorize(&reduced.matrix).map_err(|e| invalid(e.to_string()))?;
    let u = dofs.expand(&solver.solve(&reduced.rhs, 1e-14).map_err(|e| invalid(e.to_string()))?);
    let mut err = 0.0f64;
    let mut magnitude = 0.0f64;
    for (n, x) in mesh.nodes().iter().enumerate() {
        let v = exact(*x);
        for c in 0..2 {
            err = err.max((u[2 * n + c] - v[c]).abs());
            magnitude = magnitude.max(v[c].abs());
        }
    }
    Ok(Check::at_most("patch test: linear field reproduced", err / magnitude, 1e-10))
}

fn invalid(msg: String) -> CommandError {
    crate::scenario::ConfigError::Invalid(vec![msg]).into()
}

/// Rigid motions (two translations, one linearized rotation) against the
/// unconstrained stiffness, scaled by `max|K_ij|·‖r‖∞`, plus the random-vector
/// semidefiniteness check.
pub fn rigid_motion_checks(cfg: &ScenarioConfig, rng: &mut impl Rng) -> Result<Vec<Check>, CommandError> {
    let mesh = rectangle_mesh(cfg.length, cfg.height, 0.0, 8, 4, [EdgeTag::DirichletFull, EdgeTag::Neumann, EdgeTag::Neumann, EdgeTag::Neumann])
        .map_err(|e| invalid(e.to_string()))?;
    let material = IsotropicMaterial::new(cfg.young_modulus, cfg.poisson_ratio).map_err(|e| invalid(e.to_string()))?;
    let k = assemble_stiffness(&mesh, &material).map_err(|e| invalid(e.to_string()))?;
    let kmax = k.triplets().fold(0.0f64, |m, (_, _, v)| m.max(v.abs()));
    let modes: [fn([f64; 2]) -> [f64; 2]; 3] = [|_| [1.0, 0.0], |_| [0.0, 1.0], |x| [-x[1], x[0]]];
    let mut worst = 0.0f64;
    for mode in modes {
        let r: Vec<f64> = mesh.nodes().iter().flat_map(|&x| mode(x)).collect();
        worst = worst.max(sup(&k.mul_vec(&r)) / (kmax * sup(&r)));
    }
    let mut min_q = f64::INFINITY;
    for _ in 0..20 {
        let v: Vec<f64> = (0..k.nrows()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        min_q = min_q.min(k.bilinear(&v, &v) / (kmax * v.iter().map(|x| x * x).sum::<f64>()));
    }
    let singular = factorize(&k).is_err();
    let dofs = DofMap::from_mesh(&mesh).map_err(|e| invalid(e.to_string()))?;
    let clamped = apply_dirichlet(&SparseSystem { matrix: k.clone(), rhs: vec![0.0; k.nrows()] }, &dofs).map_err(|e| invalid(e.to_string()))?;
    let definite = factorize(&clamped.matrix).is_ok();
    Ok(vec![
        Check::at_most("rigid motions in the stiffness kernel", worst, 1e-12),
        Check::at_least("stiffness positive semidefinite", min_q, -1e-12),
        Check {
            name: "factorization fails unconstrained, succeeds with one clamped edge".into(),
            measured: f64::from(u8::from(singular && definite)),
            required: "1 (true)".into(),
            passed: singular && definite,
        },
    ])
}

/// Largest relative sup-norm difference between the contact traces of two states.
pub fn trace_deviation(disc: &Discretization, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    disc.traces(a)
        .iter()
        .zip(disc.traces(b))
        .flat_map(|((aa, ab), (ba, bb))| [(aa.clone(), ba), (ab.clone(), bb)])
        .map(|(x, y)| {
            let d: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p - q).collect();
            sup(&d) / sup(&y).max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

/// Tight-tolerance Newton reference solution.
pub fn reference_solution(disc: &Discretization, cfg: &ScenarioConfig) -> Result<SolverState, CommandError> {
    let config = cfg.solver_config().with_eps_u(1e-13).with_max_iterations(200);
    let (state, report) = monolithic_newton(disc, &config)?;
    if !report.converged() {
        return Err(invalid(format!("reference Newton run ended with {}", report.outcome)));
    }
    Ok(state)
}

/// Converged DDM traces for each strategy against the Newton reference.
/// Strategies whose DDM run does not converge are reported as excluded.
pub fn oracle_equivalence(disc: &Discretization, reference: &SolverState, gamma: f64, initial_trace: f64) -> Vec<Check> {
    PsiStrategy::ALL
        .iter()
        .map(|&psi| {
            let config = SolverConfig { initial_trace, ..SolverConfig::default() }.with_gamma(gamma).with_psi(psi).with_eps_u(1e-10).with_max_iterations(5000);
            let name = format!("DDM ({psi}) matches Newton");
            match ddm_solve(disc, &config) {
                Ok((state, report)) if report.converged() => Check::at_most(name, trace_deviation(disc, &state.u, &reference.u), 1e-6),
                Ok((_, report)) => Check { name, measured: f64::NAN, required: format!("excluded: run {}", report.outcome), passed: true },
                Err(e) => Check { name, measured: f64::NAN, required: format!("excluded: {e}"), passed: true },
            }
        })
        .collect()
}

/// One DDM step from the reference solution must leave the traces in place.
pub fn fixed_point(disc: &Discretization, reference: &SolverState, psi: PsiStrategy) -> Result<Check, CommandError> {
    let start = SolverState::new(disc, reference.u.clone(), 0, psi)?;
    let next = ddm_step(disc, &start, 1.0, psi)?;
    let rho = relative_increments(disc, &start.u, &next.u).into_iter().fold(0.0, f64::max);
    Ok(Check::at_most(format!("solution is a DDM fixed point ({psi})"), rho, 1e-8))
}

/// `Φ(u) = a·u`, `G = g`: the iteration converges exactly for `γ·a/g ∈ (0, 2)`.
/// Measures the number of ratios whose outcome contradicts that window.
pub fn scalar_window() -> Check {
    let (a, g, y) = (3.0, 2.0, 6.0);
    let mut wrong = 0;
    for (ratio, expect) in [(0.1, true), (1.0, true), (1.9, true), (2.2, false)] {
        let gamma = ratio * g / a;
        let run = abstract_iterate(&|u| vec![a * u[0]], &[y], &mut |_, _| CsrMatrix::from_diagonal(&[g]), &|_| gamma, &[0.0], 1e-12, 5000);
        let converged = run.is_ok_and(|r| r.converged && (r.last()[0] - y / a).abs() <= 1e-9);
        wrong += usize::from(converged != expect);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let est = estimate_theorem3(&|u| vec![a * u[0]], &CsrMatrix::from_diagonal(&[g]), 4, 1.0, &mut rng);
    wrong += usize::from(est.map_or(true, |e| (e.gamma_star - g / a).abs() > 1e-12));
    Check::at_most("scalar gamma window (0, 2g/a)", wrong as f64, 0.0)
}

/// Worst complementarity product over all pairs, against `1e-8·q`, with the
/// sign and penetration conditions folded into the verdict.
pub fn complementarity(disc: &Discretization, state: &SolverState, load_q: f64) -> Check {
    let mut product = 0.0f64;
    let mut holds = true;
    for (pair, (ta, tb)) in disc.pairs().iter().zip(disc.traces(&state.u)) {
        let r = check_complementarity(pair, &ta, &tb);
        product = product.max(r.max_product);
        holds &= r.holds(load_q);
    }
    Check {
        name: "complementarity at convergence".into(),
        measured: product,
        required: format!("<= {:e} with sigma_n <= 0 and no penetration", 1e-8 * load_q),
        passed: holds,
    }
}

/// The reference solution must not be improved by small random perturbations.
/// Measures the smallest relative energy increase.
pub fn energy_minimality(disc: &Discretization, reference: &SolverState, rng: &mut impl Rng) -> Check {
    let f0 = disc.energy(&reference.u);
    let size = reference.u.iter().map(|u| sup(u)).fold(0.0, f64::max) * 1e-4;
    let worst = (0..20)
        .map(|_| (disc.energy(&axpy(&reference.u, 1.0, &random_state(disc, size, rng))) - f0) / f0.abs().max(f64::MIN_POSITIVE))
        .fold(f64::INFINITY, f64::min);
    Check::at_least("energy minimal at the solution", worst, -1e-12)
}

/// Runs the full property suite on the configured geometry. Solver-based
/// checks use the clamped layout, whose coupled system is nonsingular.
pub fn cmd_verify(cfg: &ScenarioConfig) -> Result<VerifyReport, CommandError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let clamped = ScenarioConfig { layout: Layout::Clamped, ..cfg.clone() };
    let disc = build(&clamped)?;
    let scale = 2.0 * cfg.gap_r;
    let mut report = VerifyReport::default();
    report.checks.push(gradient_check(&disc, 10, scale, &mut rng));

    let laws: Vec<WinklerLaw> = std::iter::once((cfg.layer_b, cfg.layer_a))
        .chain(cfg.sweep_layers.iter().copied())
        .map(|(b, a)| WinklerLaw::power(b, a))
        .collect::<Result<_, _>>()
        .map_err(|e| invalid(e.to_string()))?;
    report.checks.push(law_monotonicity(&laws, scale));
    let control = law_monotonicity(&[broken_law()], scale);
    report.checks.push(Check {
        name: "decreasing law rejected".into(),
        measured: control.measured,
        required: ">= 1 failing law".into(),
        passed: !control.passed,
    });
    report.checks.push(contact_monotonicity(&disc, 100, scale, &mut rng));
    report.checks.push(patch_test(cfg)?);
    report.checks.extend(rigid_motion_checks(cfg, &mut rng)?);
    report.checks.push(scalar_window());

    let reference = reference_solution(&disc, &clamped)?;
    report.checks.extend(oracle_equivalence(&disc, &reference, cfg.gamma[0], cfg.initial_trace));
    report.checks.push(fixed_point(&disc, &reference, cfg.strategy)?);
    report.checks.push(energy_minimality(&disc, &reference, &mut rng));

    let (state, _) = ddm_solve(&disc, &clamped.solver_config())?;
    report.checks.push(complementarity(&disc, &state, cfg.load_q));
    Ok(report)
}
