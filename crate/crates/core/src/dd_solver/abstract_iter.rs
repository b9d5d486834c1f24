use super::SolverError;
use crate::linsolve::{factorize, norm2, CsrMatrix, LinSolveError};

/// Iterates produced by [`abstract_iterate`], starting with `u⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractRun {
    pub iterates: Vec<Vec<f64>>,
    pub converged: bool,
    pub diverged: bool,
}

impl AbstractRun {
    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("at least the initial iterate")
    }
}

/// `u^{k+1} = u^k − γ^k (G^k)⁻¹ (Φ(u^k) − y)`.
///
/// `g_form(k, u^k)` supplies `G^k`, which must be SPD. Stops when
/// `‖u^{k+1} − u^k‖ ≤ tol·‖u^{k+1}‖` (or the step is exactly zero), after
/// `max_k` steps, or once an iterate is non-finite or grows beyond `1e12`
/// times the initial scale.
pub fn abstract_iterate(
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    y: &[f64],
    g_form: &mut dyn FnMut(usize, &[f64]) -> CsrMatrix,
    gamma: &dyn Fn(usize) -> f64,
    u0: &[f64],
    tol: f64,
    max_k: usize,
) -> Result<AbstractRun, SolverError> {
    let scale = norm2(u0).max(norm2(y)).max(1.0);
    let mut run = AbstractRun { iterates: vec![u0.to_vec()], converged: false, diverged: false };
    for k in 0..max_k {
        let u = run.last().to_vec();
        let g = g_form(k, &u);
        let solver = factorize(&g).map_err(|source| SolverError::NotSpd { iteration: k, source })?;
        let residual: Vec<f64> = phi(&u).iter().zip(y).map(|(p, yi)| p - yi).collect();
        let dir = solver.solve(&residual, 1e-12).map_err(|source: LinSolveError| SolverError::LinearSolve { body: None, iteration: k, source })?;
        let gk = gamma(k);
        let next: Vec<f64> = u.iter().zip(&dir).map(|(a, d)| a - gk * d).collect();
        let step = norm2(&dir) * gk.abs();
        let size = norm2(&next);
        run.iterates.push(next);
        if !size.is_finite() || size > 1e12 * scale {
            run.diverged = true;
            break;
        }
        if step == 0.0 || step <= tol * size {
            run.converged = true;
            break;
        }
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, g: f64, y: f64, gamma: f64, u0: f64) -> AbstractRun {
        abstract_iterate(&|u| vec![a * u[0]], &[y], &mut |_, _| CsrMatrix::from_diagonal(&[g]), &|_| gamma, &[u0], 1e-12, 2000).unwrap()
    }

    #[test]
    fn scalar_window() {
        let (a, g, y) = (3.0, 2.0, 6.0);
        for ratio in [0.1, 1.0, 1.9] {
            let run = scalar(a, g, y, ratio * g / a, 0.0);
            assert!(run.converged, "ratio {ratio}");
            assert!((run.last()[0] - 2.0).abs() < 1e-9);
        }
        let run = scalar(a, g, y, 2.2 * g / a, 0.0);
        assert!(!run.converged);
    }

    #[test]
    fn optimal_gamma_converges_in_one_step() {
        let run = scalar(3.0, 2.0, 6.0, 2.0 / 3.0, 5.0);
        assert!((run.iterates[1][0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_start_is_stationary() {
        let run = scalar(3.0, 2.0, 6.0, 0.5, 2.0);
        assert!(run.converged);
        assert_eq!(run.iterates, vec![vec![2.0], vec![2.0]]);
    }

    #[test]
    fn linear_newton_is_exact() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let y = [1.0, 2.0];
        let run = abstract_iterate(&|u| a.mul_vec(u), &y, &mut |_, _| a.clone(), &|_| 1.0, &[0.0, 0.0], 1e-12, 5).unwrap();
        let r: Vec<f64> = a.mul_vec(&run.iterates[1]).iter().zip(&y).map(|(p, q)| p - q).collect();
        assert!(norm2(&r) < 1e-14);
    }

    #[test]
    fn non_spd_operator_rejected() {
        let err = abstract_iterate(&|u| u.to_vec(), &[1.0], &mut |_, _| CsrMatrix::from_diagonal(&[-1.0]), &|_| 1.0, &[0.0], 1e-12, 5);
        assert!(matches!(err, Err(SolverError::NotSpd { iteration: 0, .. })));
    }
}
