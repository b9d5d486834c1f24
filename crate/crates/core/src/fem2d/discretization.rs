//! Assembled multi-body problem: constrained stiffness and loads per body plus contact pairings.

use rayon::prelude::*;

use super::{apply_dirichlet, assemble_load, assemble_stiffness, DisplacementField, DofMap, FemError, SparseSystem};
use crate::contact::{build_pairing, ContactError, ContactPair, Side};
use crate::linsolve::CsrMatrix;
use crate::model::Problem;

/// One body after Dirichlet elimination. Vectors live on the free dofs.
#[derive(Debug, Clone)]
pub struct BodySystem {
    pub dofs: DofMap,
    pub stiffness: CsrMatrix,
    pub load: Vec<f64>,
}

impl BodySystem {
    pub fn assemble(problem: &Problem, body: usize) -> Result<Self, FemError> {
        let b = &problem.bodies()[body];
        let dofs = DofMap::from_mesh(&b.mesh)?;
        let full = SparseSystem { matrix: assemble_stiffness(&b.mesh, &b.material)?, rhs: assemble_load(&b.mesh, &b.loads)? };
        let reduced = apply_dirichlet(&full, &dofs)?;
        Ok(Self { dofs, stiffness: reduced.matrix, load: reduced.rhs })
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }
}

#[derive(Debug, Clone)]
pub struct Discretization {
    problem: Problem,
    bodies: Vec<BodySystem>,
    pairs: Vec<ContactPair>,
}

impl Discretization {
    pub fn new(problem: &Problem) -> Result<Self, ContactError> {
        let bodies = (0..problem.body_count()).into_par_iter().map(|b| BodySystem::assemble(problem, b)).collect::<Result<Vec<_>, _>>()?;
        let pairs = (0..problem.contact_pairs().len()).map(|i| build_pairing(problem, i)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { problem: problem.clone(), bodies, pairs })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn bodies(&self) -> &[BodySystem] {
        &self.bodies
    }

    pub fn pairs(&self) -> &[ContactPair] {
        &self.pairs
    }

    pub fn zeros(&self) -> Vec<Vec<f64>> {
        self.bodies.iter().map(|b| vec![0.0; b.n_free()]).collect()
    }

    pub fn trace(&self, pair: usize, side: Side, u: &[Vec<f64>]) -> Vec<f64> {
        let p = &self.pairs[pair];
        let body = p.body(side);
        p.trace_free(side, &self.bodies[body].dofs, &u[body])
    }

    /// Normal traces `(u_{αn}, u_{βn})` of every pair.
    pub fn traces(&self, u: &[Vec<f64>]) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..self.pairs.len()).map(|i| (self.trace(i, Side::Alpha, u), self.trace(i, Side::Beta, u))).collect()
    }

    /// `Σ_α ½ uᵀK_αu − l_αᵀu`.
    pub fn elastic_energy(&self, u: &[Vec<f64>]) -> f64 {
        self.bodies.iter().zip(u).map(|(b, ub)| 0.5 * b.stiffness.bilinear(ub, ub) - b.load.iter().zip(ub).map(|(l, x)| l * x).sum::<f64>()).sum()
    }

    /// Contact functional `J(u)`.
    pub fn contact_energy(&self, u: &[Vec<f64>]) -> f64 {
        self.pairs.iter().zip(self.traces(u)).map(|(p, (ta, tb))| p.energy(&ta, &tb)).sum()
    }

    /// `F₁(u)` on free-dof vectors.
    pub fn energy(&self, u: &[Vec<f64>]) -> f64 {
        self.elastic_energy(u) + self.contact_energy(u)
    }

    /// `∇J(u)` per body on the free dofs.
    pub fn contact_gradient(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut grad = self.zeros();
        for (p, (ta, tb)) in self.pairs.iter().zip(self.traces(u)) {
            let dj = p.energy_gradient(&ta, &tb);
            for side in [Side::Alpha, Side::Beta] {
                let body = p.body(side);
                let s = p.normal_sign(side);
                for (i, &g) in dj.iter().enumerate() {
                    if let Some(f) = self.bodies[body].dofs.free_index(2 * p.node(side, i) + p.normal_axis) {
                        grad[body][f] += s * g;
                    }
                }
            }
        }
        grad
    }

    /// `∇F₁(u) = K u − l + ∇J(u)`.
    pub fn gradient(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut grad = self.contact_gradient(u);
        for ((g, b), ub) in grad.iter_mut().zip(&self.bodies).zip(u) {
            for ((gi, ki), li) in g.iter_mut().zip(b.stiffness.mul_vec(ub)).zip(&b.load) {
                *gi += ki - li;
            }
        }
        grad
    }

    pub fn to_fields(&self, u: &[Vec<f64>]) -> Vec<DisplacementField> {
        self.bodies.iter().zip(u).map(|(b, ub)| DisplacementField(b.dofs.expand(ub))).collect()
    }

    pub fn from_fields(&self, fields: &[DisplacementField]) -> Result<Vec<Vec<f64>>, FemError> {
        if fields.len() != self.bodies.len() {
            return Err(FemError::DimensionMismatch { expected: self.bodies.len(), got: fields.len() });
        }
        self.bodies
            .iter()
            .zip(fields)
            .map(|(b, f)| {
                if f.0.len() != b.dofs.total() {
                    return Err(FemError::DimensionMismatch { expected: b.dofs.total(), got: f.0.len() });
                }
                Ok(b.dofs.restrict(&f.0))
            })
            .collect()
    }
}

/// `F₁ = Σ_α [½ uᵀK_αu − l_αᵀu] + J(u)` for full nodal fields.
pub fn total_energy(disc: &Discretization, fields: &[DisplacementField]) -> Result<f64, FemError> {
    Ok(disc.energy(&disc.from_fields(fields)?))
}
