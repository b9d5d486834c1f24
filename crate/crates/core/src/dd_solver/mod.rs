//! Iterative solvers for the coupled contact problem.
//!
//! * [`ddm_solve`]: parallel Robin–Robin domain decomposition. Every body
//!   solves its own linear problem with Robin data from the previous iterate,
//!   followed by relaxation with `γ`.
//! * [`monolithic_newton`]: semismooth Newton on all bodies at once; used as
//!   the reference solution.
//! * [`abstract_iterate`]: the generic scheme
//!   `G^k u^{k+1} = G^k u^k − γ^k (Φ(u^k) − y)` both solvers specialize.
//! * [`estimate_theorem3`]: sampled estimates of the constants that bound the
//!   admissible `γ` window.
//!
//! All vectors are per body and restricted to the free (unconstrained) dofs
//! of [`Discretization::bodies`].

mod abstract_iter;
mod config;
mod ddm;
mod newton;
mod theorem3;

use thiserror::Error;

use crate::contact::{ContactError, GapState, Side};
use crate::fem2d::{Discretization, DisplacementField, FemError};
use crate::linsolve::{norm2, LinSolveError};

pub use abstract_iter::{abstract_iterate, AbstractRun};
pub use config::{DivergenceGuard, GammaSchedule, SolverConfig};
pub use ddm::{ddm_solve, ddm_step, DdmSolver};
pub use newton::monolithic_newton;
pub use theorem3::{estimate_theorem3, estimate_theorem3_from_samples, Theorem3Estimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("linear solve failed for {} at iteration {iteration}: {source}", body.map_or("the coupled system".to_string(), |b| format!("body {b}")))]
    LinearSolve { body: Option<usize>, iteration: usize, source: LinSolveError },
    #[error("operator G at iteration {iteration} is not symmetric positive definite: {source}")]
    NotSpd { iteration: usize, source: LinSolveError },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("state does not match the discretization: {0}")]
    StateMismatch(String),
}

/// Iterate `u^k` of every body (free dofs) with the gap states it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub u: Vec<Vec<f64>>,
    pub k: usize,
    pub gap_states: Vec<GapState>,
}

impl SolverState {
    pub fn new(disc: &Discretization, u: Vec<Vec<f64>>, k: usize, psi: crate::contact::PsiStrategy) -> Result<Self, SolverError> {
        check_shape(disc, &u)?;
        let gap_states = disc.pairs().iter().zip(disc.traces(&u)).map(|(p, (ta, tb))| crate::contact::gap_state_from_traces(p, &ta, &tb, psi)).collect();
        Ok(Self { u, k, gap_states })
    }

    /// Contact nodes get the normal displacement `trace`, everything else zero.
    pub fn initial(disc: &Discretization, trace: f64, psi: crate::contact::PsiStrategy) -> Result<Self, SolverError> {
        let mut u = disc.zeros();
        for p in disc.pairs() {
            for side in [Side::Alpha, Side::Beta] {
                let body = p.body(side);
                for i in 0..p.len() {
                    if let Some(f) = disc.bodies()[body].dofs.free_index(2 * p.node(side, i) + p.normal_axis) {
                        u[body][f] = p.normal_sign(side) * trace;
                    }
                }
            }
        }
        Self::new(disc, u, 0, psi)
    }

    pub fn fields(&self, disc: &Discretization) -> Vec<DisplacementField> {
        disc.to_fields(&self.u)
    }

    pub fn active_nodes(&self) -> usize {
        self.gap_states.iter().map(GapState::active_count).sum()
    }
}

fn check_shape(disc: &Discretization, u: &[Vec<f64>]) -> Result<(), SolverError> {
    if u.len() != disc.bodies().len() {
        return Err(SolverError::StateMismatch(format!("{} bodies, expected {}", u.len(), disc.bodies().len())));
    }
    for (b, (ub, sys)) in u.iter().zip(disc.bodies()).enumerate() {
        if ub.len() != sys.n_free() {
            return Err(SolverError::StateMismatch(format!("body {b} has {} values, expected {}", ub.len(), sys.n_free())));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Converged,
    MaxIterations,
    Diverged,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Converged => "converged",
            Outcome::MaxIterations => "max_iterations",
            Outcome::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Index of the iterate produced, starting at 1.
    pub k: usize,
    pub rho: Vec<f64>,
    pub energy: f64,
    pub active_nodes: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    pub records: Vec<IterationRecord>,
    pub outcome: Outcome,
    /// Energy of the initial state.
    pub initial_energy: f64,
    /// Why the run stopped early, when it did not converge.
    pub failure: Option<String>,
    pub factorizations: usize,
}

impl IterationReport {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn converged(&self) -> bool {
        self.outcome == Outcome::Converged
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }
}

/// Normal traces of each body on all of its contact segments, concatenated.
pub fn body_traces(disc: &Discretization, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); disc.bodies().len()];
    for i in 0..disc.pairs().len() {
        for side in [Side::Alpha, Side::Beta] {
            let body = disc.pairs()[i].body(side);
            out[body].extend(disc.trace(i, side, u));
        }
    }
    out
}

/// `ρ_α = ‖u_{αn}^{k+1} − u_{αn}^k‖₂ / ‖u_{αn}^{k+1}‖₂` over contact nodes. A
/// zero denominator yields 0 when the traces did not move and ∞ otherwise.
pub fn relative_increments(disc: &Discretization, previous: &[Vec<f64>], next: &[Vec<f64>]) -> Vec<f64> {
    body_traces(disc, previous)
        .iter()
        .zip(body_traces(disc, next))
        .map(|(old, new)| {
            let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
            let (num, den) = (norm2(&diff), norm2(&new));
            if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

fn max_abs(u: &[Vec<f64>]) -> f64 {
    u.iter().flatten().fold(0.0f64, |m, x| if x.is_finite() { m.max(x.abs()) } else { f64::INFINITY })
}

/// Tracks the stopping and divergence rules across iterations.
#[derive(Debug, Clone)]
pub(crate) struct Monitor {
    eps_u: f64,
    guard: DivergenceGuard,
    scale: f64,
    running_min: f64,
    streak: usize,
}

impl Monitor {
    pub(crate) fn new(config: &SolverConfig, initial: &[Vec<f64>]) -> Self {
        let scale = max_abs(initial).max(config.initial_trace.abs()).max(f64::MIN_POSITIVE);
        Self { eps_u: config.eps_u, guard: config.divergence, scale, running_min: f64::INFINITY, streak: 0 }
    }

    /// Outcome after an iterate with increments `rho`, or `None` to continue.
    pub(crate) fn check(&mut self, rho: &[f64], u: &[Vec<f64>]) -> Option<Outcome> {
        let m = max_abs(u);
        if !m.is_finite() || m > self.guard.blowup * self.scale || rho.iter().any(|r| r.is_nan()) {
            return Some(Outcome::Diverged);
        }
        if rho.iter().all(|&r| r <= self.eps_u) {
            return Some(Outcome::Converged);
        }
        let min_rho = rho.iter().copied().fold(f64::INFINITY, f64::min);
        if min_rho > self.guard.ratio * self.running_min {
            self.streak += 1;
            if self.streak >= self.guard.window {
                return Some(Outcome::Diverged);
            }
        } else {
            self.streak = 0;
        }
        self.running_min = self.running_min.min(min_rho);
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monitor_flags_sustained_growth() {
        let cfg = SolverConfig::default();
        let u = vec![vec![1e-4]];
        let mut m = Monitor::new(&cfg, &u);
        assert_eq!(m.check(&[0.1, 0.1], &u), None);
        for i in 0..19 {
            assert_eq!(m.check(&[2.0, 5.0], &u), None, "iteration {i}");
        }
        assert_eq!(m.check(&[2.0, 5.0], &u), Some(Outcome::Diverged));
    }

    #[test]
    fn monitor_requires_all_bodies() {
        let cfg = SolverConfig::default();
        let u = vec![vec![1e-4]];
        let mut m = Monitor::new(&cfg, &u);
        assert_eq!(m.check(&[1e-4, 2e-3], &u), None);
        assert_eq!(m.check(&[1e-4, 1e-3], &u), Some(Outcome::Converged));
        assert_eq!(m.check(&[0.0, 0.0], &[vec![f64::NAN]]), Some(Outcome::Diverged));
        assert_eq!(m.check(&[0.5, 0.5], &[vec![1e3]]), Some(Outcome::Diverged));
    }
}
