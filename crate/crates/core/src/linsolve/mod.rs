//! Sparse symmetric positive-definite solves.
//!
//! A direct envelope Cholesky factorization is used up to
//! [`SolverOptions::direct_dof_limit`] unknowns; larger systems fall back to
//! Jacobi-preconditioned conjugate gradients. Every solve verifies its residual.

mod csr;
mod skyline;

pub(crate) use csr::norm2;
pub use csr::CsrMatrix;
pub use skyline::{reverse_cuthill_mckee, SkylineCholesky};

use thiserror::Error;

/// Relative symmetry tolerance accepted by [`factorize`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Default relative residual demanded by [`SpdSolver::solve`].
pub const DEFAULT_SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinSolveError {
    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite: pivot {pivot:.6e} at row {pivot_index}")]
    NotPositiveDefinite { pivot_index: usize, pivot: f64 },
    #[error("right-hand side has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("residual {achieved:.3e} above tolerance {tolerance:.3e} after {iterations} iterations")]
    ToleranceNotMet { achieved: f64, tolerance: f64, iterations: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Systems with more unknowns than this use conjugate gradients.
    pub direct_dof_limit: usize,
    pub cg_max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { direct_dof_limit: 60_000, cg_max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Direct(SkylineCholesky),
    Cg { inv_diag: Vec<f64>, max_iterations: usize },
}

/// A factorized (or CG-prepared) SPD system. Immutable once built, so it can
/// serve concurrent solves.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: CsrMatrix,
    backend: Backend,
}

/// Factorizes with default options.
pub fn factorize(matrix: &CsrMatrix) -> Result<SpdSolver, LinSolveError> {
    factorize_with(matrix, SolverOptions::default())
}

pub fn factorize_with(matrix: &CsrMatrix, opts: SolverOptions) -> Result<SpdSolver, LinSolveError> {
    if matrix.nrows() != matrix.ncols() {
        return Err(LinSolveError::NotSquare { nrows: matrix.nrows(), ncols: matrix.ncols() });
    }
    let asymmetry = matrix.asymmetry();
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(LinSolveError::NotSymmetric { asymmetry });
    }
    let backend = if matrix.nrows() <= opts.direct_dof_limit {
        Backend::Direct(SkylineCholesky::factorize(matrix)?)
    } else {
        let diag = matrix.diagonal();
        if let Some((i, &d)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
            return Err(LinSolveError::NotPositiveDefinite { pivot_index: i, pivot: d });
        }
        Backend::Cg { inv_diag: diag.iter().map(|d| 1.0 / d).collect(), max_iterations: opts.cg_max_iterations }
    };
    Ok(SpdSolver { matrix: matrix.clone(), backend })
}

impl SpdSolver {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    /// Solves `A x = b` and checks `‖A x − b‖ ≤ tol·‖b‖`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>, LinSolveError> {
        if b.len() != self.dim() {
            return Err(LinSolveError::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let b_norm = norm2(b);
        if b_norm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        match &self.backend {
            Backend::Direct(chol) => {
                let mut x = chol.solve(b);
                // a few steps of iterative refinement cover ill-conditioned cases
                for step in 0..=3 {
                    let r = self.residual(&x, b);
                    let achieved = norm2(&r) / b_norm;
                    if achieved <= tol {
                        return Ok(x);
                    }
                    if step == 3 {
                        return Err(LinSolveError::ToleranceNotMet { achieved, tolerance: tol, iterations: step });
                    }
                    let dx = chol.solve(&r);
                    x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
                }
                unreachable!()
            }
            Backend::Cg { inv_diag, max_iterations } => self.pcg(b, inv_diag, tol, *max_iterations),
        }
    }

    fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let ax = self.matrix.mul_vec(x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    }

    fn pcg(&self, b: &[f64], inv_diag: &[f64], tol: f64, max_it: usize) -> Result<Vec<f64>, LinSolveError> {
        let n = b.len();
        let b_norm = norm2(b);
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        for it in 0..max_it {
            let ap = self.matrix.mul_vec(&p);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(LinSolveError::NotPositiveDefinite { pivot_index: it, pivot: pap });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm2(&r) <= tol * b_norm {
                // recompute to guard against drift of the recursive residual
                let achieved = norm2(&self.residual(&x, b)) / b_norm;
                if achieved <= tol {
                    return Ok(x);
                }
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let achieved = norm2(&self.residual(&x, b)) / b_norm;
        Err(LinSolveError::ToleranceNotMet { achieved, tolerance: tol, iterations: max_it })
    }
}
