use crate::contact::PsiStrategy;

use super::SolverError;

/// Relaxation parameters `γ^k`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSchedule {
    Constant(f64),
    /// `γ^k = list[k]`, with the last entry repeated once the list runs out.
    List(Vec<f64>),
}

impl GammaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            GammaSchedule::Constant(g) => *g,
            GammaSchedule::List(gs) => gs[k.min(gs.len() - 1)],
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            GammaSchedule::Constant(g) => std::slice::from_ref(g),
            GammaSchedule::List(gs) => gs,
        }
    }
}

/// Declares divergence when `min_α ρ_α` stays above `ratio ×` its running
/// minimum for `window` consecutive iterations, or when a displacement
/// exceeds `blowup ×` the initial displacement scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceGuard {
    pub ratio: f64,
    pub window: usize,
    pub blowup: f64,
}

impl Default for DivergenceGuard {
    fn default() -> Self {
        Self { ratio: 10.0, window: 20, blowup: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub gamma: GammaSchedule,
    pub psi: PsiStrategy,
    /// Relative tolerance on the contact-trace increments.
    pub eps_u: f64,
    pub max_iterations: usize,
    pub divergence: DivergenceGuard,
    /// Normal displacement (cm) assigned to every contact node of every body at `k = 0`.
    pub initial_trace: f64,
    /// Relative residual demanded from each linear solve.
    pub solve_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: GammaSchedule::Constant(0.6),
            psi: PsiStrategy::ActiveSet,
            eps_u: 1e-3,
            max_iterations: 500,
            divergence: DivergenceGuard::default(),
            initial_trace: 1e-4,
            solve_tolerance: crate::linsolve::DEFAULT_SOLVE_TOLERANCE,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = GammaSchedule::Constant(gamma);
        self
    }

    pub fn with_psi(mut self, psi: PsiStrategy) -> Self {
        self.psi = psi;
        self
    }

    pub fn with_eps_u(mut self, eps_u: f64) -> Self {
        self.eps_u = eps_u;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let mut problems = Vec::new();
        let gammas = self.gamma.values();
        if gammas.is_empty() {
            problems.push("gamma list is empty".to_string());
        }
        for g in gammas {
            if !(*g > 0.0 && *g < 2.0) {
                problems.push(format!("gamma {g} outside (0, 2)"));
            }
        }
        if !(self.eps_u > 0.0) {
            problems.push(format!("eps_u must be positive, got {}", self.eps_u));
        }
        if self.max_iterations == 0 {
            problems.push("max_iterations must be at least 1".into());
        }
        if !self.initial_trace.is_finite() {
            problems.push("initial trace must be finite".into());
        }
        if !(self.solve_tolerance > 0.0) {
            problems.push("solve tolerance must be positive".into());
        }
        let d = &self.divergence;
        if !(d.ratio > 1.0) || d.window == 0 || !(d.blowup > 1.0) {
            problems.push("divergence guard needs ratio > 1, window ≥ 1 and blowup > 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(problems.join("; ")))
        }
    }
}
