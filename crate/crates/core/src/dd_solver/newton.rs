use super::{relative_increments, IterationRecord, IterationReport, Monitor, Outcome, SolverConfig, SolverError, SolverState};
use crate::fem2d::Discretization;
use crate::linsolve::{factorize, CsrMatrix};

/// Offsets of each body's block in the stacked vector.
fn offsets(disc: &Discretization) -> Vec<usize> {
    let mut off = vec![0];
    for b in disc.bodies() {
        off.push(off.last().unwrap() + b.n_free());
    }
    off
}

fn stack(u: &[Vec<f64>]) -> Vec<f64> {
    u.iter().flatten().copied().collect()
}

fn unstack(x: &[f64], off: &[usize]) -> Vec<Vec<f64>> {
    off.windows(2).map(|w| x[w[0]..w[1]].to_vec()).collect()
}

/// Coupled matrix `K + C^k`, where `C^k` adds `χ·g′(t)·trib·c cᵀ` per paired
/// node and `c` carries the two normal components.
fn coupled_matrix(disc: &Discretization, state: &SolverState, off: &[usize]) -> CsrMatrix {
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    for (b, sys) in disc.bodies().iter().enumerate() {
        triplets.extend(sys.stiffness.triplets().map(|(r, c, v)| (r + off[b], c + off[b], v)));
    }
    for (pair, st) in disc.pairs().iter().zip(&state.gap_states) {
        for (i, (ns, pn)) in st.nodes.iter().zip(&pair.nodes).enumerate() {
            if !ns.active || ns.g_prime == 0.0 {
                continue;
            }
            let w = ns.g_prime * pn.tributary;
            let entries: Vec<(usize, f64)> = [crate::contact::Side::Alpha, crate::contact::Side::Beta]
                .into_iter()
                .filter_map(|side| {
                    let body = pair.body(side);
                    disc.bodies()[body].dofs.free_index(2 * pair.node(side, i) + pair.normal_axis).map(|f| (f + off[body], pair.normal_sign(side)))
                })
                .collect();
            for &(r, sr) in &entries {
                for &(c, sc) in &entries {
                    triplets.push((r, c, w * sr * sc));
                }
            }
        }
    }
    let n = *off.last().unwrap();
    CsrMatrix::from_triplets(n, n, &triplets)
}

/// Semismooth Newton on the coupled system of all bodies:
/// `(K + C^k) u^{k+1} = C^k u^k − ∇J(u^k) + l`.
///
/// The full step is taken whenever it does not raise the energy; otherwise the
/// step is halved until it does, which keeps the iteration globally convergent
/// for laws with a kink at zero. `config.gamma` and `config.psi` are ignored.
pub fn monolithic_newton(disc: &Discretization, config: &SolverConfig) -> Result<(SolverState, IterationReport), SolverError> {
    config.validate()?;
    let psi = crate::contact::PsiStrategy::ActiveSet;
    let off = offsets(disc);
    let mut state = SolverState::initial(disc, config.initial_trace, psi)?;
    let mut monitor = Monitor::new(config, &state.u);
    let mut energy = disc.energy(&state.u);
    let mut report = IterationReport { records: Vec::new(), outcome: Outcome::MaxIterations, initial_energy: energy, failure: None, factorizations: 0 };
    let loads: Vec<f64> = disc.bodies().iter().flat_map(|b| b.load.iter().copied()).collect();
    for _ in 0..config.max_iterations {
        let matrix = coupled_matrix(disc, &state, &off);
        let x = stack(&state.u);
        let cu = matrix.mul_vec(&x);
        let ku: Vec<f64> = disc.bodies().iter().zip(&state.u).flat_map(|(b, ub)| b.stiffness.mul_vec(ub)).collect();
        let grad_j = stack(&disc.contact_gradient(&state.u));
        // C u^k = (K + C) u^k − K u^k
        let rhs: Vec<f64> = (0..x.len()).map(|i| cu[i] - ku[i] - grad_j[i] + loads[i]).collect();
        let wrap = |source| SolverError::LinearSolve { body: None, iteration: state.k, source };
        let solver = factorize(&matrix).map_err(wrap)?;
        report.factorizations += 1;
        let full = solver.solve(&rhs, config.solve_tolerance).map_err(wrap)?;

        let mut step = 1.0;
        let mut candidate = unstack(&full, &off);
        let mut candidate_energy = disc.energy(&candidate);
        let slack = 1e-12 * energy.abs().max(1e-300);
        while !(candidate_energy <= energy + slack) && step > 1e-10 {
            step *= 0.5;
            let blended: Vec<f64> = x.iter().zip(&full).map(|(a, b)| a + step * (b - a)).collect();
            candidate = unstack(&blended, &off);
            candidate_energy = disc.energy(&candidate);
        }
        let next = SolverState::new(disc, candidate, state.k + 1, psi)?;
        let rho = relative_increments(disc, &state.u, &next.u);
        report.records.push(IterationRecord { k: next.k, rho: rho.clone(), energy: candidate_energy, active_nodes: next.active_nodes(), gamma: step });
        let verdict = monitor.check(&rho, &next.u);
        state = next;
        energy = candidate_energy;
        if let Some(outcome) = verdict {
            report.outcome = outcome;
            break;
        }
    }
    Ok((state, report))
}
