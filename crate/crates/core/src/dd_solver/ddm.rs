use std::sync::Mutex;

use rayon::prelude::*;

use super::{check_shape, relative_increments, IterationRecord, IterationReport, Monitor, Outcome, SolverConfig, SolverError, SolverState};
use crate::contact::{assemble_contact_rhs, assemble_robin, PsiStrategy, Side};
use crate::fem2d::Discretization;
use crate::linsolve::{factorize, SpdSolver};

/// Robin diagonal and factorization of `K_α + X_α` from the last solve.
struct CachedFactor {
    diag: Vec<f64>,
    solver: SpdSolver,
}

/// Domain decomposition driver. Keeps one factorization per body and only
/// refactorizes when the Robin diagonal moves.
pub struct DdmSolver<'a> {
    disc: &'a Discretization,
    cache: Vec<Mutex<Option<CachedFactor>>>,
    /// Absolute change in a Robin entry that triggers refactorization, per body.
    thresholds: Vec<f64>,
    factorizations: std::sync::atomic::AtomicUsize,
}

impl<'a> DdmSolver<'a> {
    pub fn new(disc: &'a Discretization) -> Self {
        let thresholds = disc.bodies().iter().map(|b| 1e-14 * b.stiffness.diagonal().iter().fold(1.0f64, |m, d| m.max(d.abs()))).collect();
        Self { disc, cache: disc.bodies().iter().map(|_| Mutex::new(None)).collect(), thresholds, factorizations: Default::default() }
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations.load(std::sync::atomic::Ordering::Relaxed)
    }

    /// Robin diagonal `X_α^k` and right-hand side `l_α + X_α^k u^k − ∇_α J(u^k)` of one body.
    pub fn local_system(&self, state: &SolverState, body: usize) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let sys = &self.disc.bodies()[body];
        let mut diag = vec![0.0; sys.n_free()];
        let mut rhs = sys.load.clone();
        for (i, pair) in self.disc.pairs().iter().enumerate() {
            for side in [Side::Alpha, Side::Beta] {
                if pair.body(side) != body {
                    continue;
                }
                let st = &state.gap_states[i];
                let trace = self.disc.trace(i, side, &state.u);
                for (d, x) in diag.iter_mut().zip(assemble_robin(pair, st, side, &sys.dofs)?) {
                    *d += x;
                }
                for (r, x) in rhs.iter_mut().zip(assemble_contact_rhs(pair, st, &trace, side, &sys.dofs)) {
                    *r += x;
                }
            }
        }
        Ok((diag, rhs))
    }

    fn solve_body(&self, state: &SolverState, body: usize, tol: f64) -> Result<Vec<f64>, SolverError> {
        let (diag, rhs) = self.local_system(state, body)?;
        let wrap = |source| SolverError::LinearSolve { body: Some(body), iteration: state.k, source };
        let mut slot = self.cache[body].lock().expect("factor cache poisoned");
        let stale = match slot.as_ref() {
            Some(c) => c.diag.iter().zip(&diag).any(|(a, b)| (a - b).abs() > self.thresholds[body]),
            None => true,
        };
        if stale {
            let matrix = self.disc.bodies()[body].stiffness.add_diagonal(&diag);
            let solver = factorize(&matrix).map_err(wrap)?;
            self.factorizations.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
            *slot = Some(CachedFactor { diag, solver });
        }
        slot.as_ref().expect("factor present").solver.solve(&rhs, tol).map_err(wrap)
    }

    /// One parallel step: independent body solves followed by relaxation with `gamma`.
    pub fn step(&self, state: &SolverState, gamma: f64, psi: PsiStrategy, tol: f64) -> Result<SolverState, SolverError> {
        check_shape(self.disc, &state.u)?;
        let tilde = (0..self.disc.bodies().len()).into_par_iter().map(|b| self.solve_body(state, b, tol)).collect::<Result<Vec<_>, _>>()?;
        let u = tilde.iter().zip(&state.u).map(|(t, old)| t.iter().zip(old).map(|(t, o)| gamma * t + (1.0 - gamma) * o).collect()).collect();
        SolverState::new(self.disc, u, state.k + 1, psi)
    }

    /// Iterates from `initial` until the traces settle, the budget runs out or divergence is detected.
    pub fn solve_from(&self, initial: SolverState, config: &SolverConfig) -> Result<(SolverState, IterationReport), SolverError> {
        config.validate()?;
        check_shape(self.disc, &initial.u)?;
        let mut state = SolverState::new(self.disc, initial.u, initial.k, config.psi)?;
        let mut monitor = Monitor::new(config, &state.u);
        let mut report = IterationReport {
            records: Vec::new(),
            outcome: Outcome::MaxIterations,
            initial_energy: self.disc.energy(&state.u),
            failure: None,
            factorizations: 0,
        };
        for k in 0..config.max_iterations {
            let gamma = config.gamma.at(k);
            let next = match self.step(&state, gamma, config.psi, config.solve_tolerance) {
                Ok(s) => s,
                Err(e @ SolverError::LinearSolve { .. }) => {
                    report.outcome = Outcome::Diverged;
                    report.failure = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            };
            let rho = relative_increments(self.disc, &state.u, &next.u);
            report.records.push(IterationRecord { k: next.k, energy: self.disc.energy(&next.u), active_nodes: next.active_nodes(), gamma, rho: rho.clone() });
            let verdict = monitor.check(&rho, &next.u);
            state = next;
            if let Some(outcome) = verdict {
                report.outcome = outcome;
                if outcome == Outcome::Diverged {
                    report.failure = Some("divergence guard triggered".into());
                }
                break;
            }
        }
        report.factorizations = self.factorizations();
        Ok((state, report))
    }
}

/// One DDM step without factorization reuse.
pub fn ddm_step(disc: &Discretization, state: &SolverState, gamma: f64, psi: PsiStrategy) -> Result<SolverState, SolverError> {
    DdmSolver::new(disc).step(state, gamma, psi, crate::linsolve::DEFAULT_SOLVE_TOLERANCE)
}

/// Runs the domain decomposition from the configured initial traces.
pub fn ddm_solve(disc: &Discretization, config: &SolverConfig) -> Result<(SolverState, IterationReport), SolverError> {
    config.validate()?;
    let initial = SolverState::initial(disc, config.initial_trace, config.psi)?;
    DdmSolver::new(disc).solve_from(initial, config)
}
