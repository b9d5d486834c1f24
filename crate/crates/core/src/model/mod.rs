//! Problem definition: bodies, materials, loads, Winkler layers and initial gaps.
//!
//! Units are centimetres for lengths and MPa for stresses throughout, so
//! nodal forces carry MPa·cm (per unit thickness).

mod law;
mod mesh;

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix3;
use thiserror::Error;

pub use law::{eval_g_minus, power_law, validate_law, LawValidation, WinklerLaw};
pub(crate) use mesh::twice_signed_area;
pub use mesh::{BodyMesh, BoundaryEdge, EdgeTag, TaggedEdge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid Winkler law: {0}")]
    InvalidLaw(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate or inverted triangle {element} (2·area = {twice_area:.3e})")]
    DegenerateTriangle { element: usize, twice_area: f64 },
    #[error("body has no Dirichlet-tagged boundary edge")]
    NoDirichletBoundary,
    #[error("invalid load: {0}")]
    InvalidLoad(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

/// Linear isotropic material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicMaterial {
    young_modulus: f64,
    poisson_ratio: f64,
}

impl IsotropicMaterial {
    pub fn new(young_modulus: f64, poisson_ratio: f64) -> Result<Self, ModelError> {
        if !(young_modulus > 0.0) || !young_modulus.is_finite() {
            return Err(ModelError::InvalidMaterial(format!("Young's modulus must be positive, got {young_modulus}")));
        }
        if !(0.0..0.5).contains(&poisson_ratio) {
            return Err(ModelError::InvalidMaterial(format!("Poisson's ratio must lie in [0, 0.5), got {poisson_ratio}")));
        }
        Ok(Self { young_modulus, poisson_ratio })
    }

    pub fn young_modulus(&self) -> f64 {
        self.young_modulus
    }

    pub fn poisson_ratio(&self) -> f64 {
        self.poisson_ratio
    }
}

/// Plane-strain stress–strain matrix in Voigt order `(ε₁₁, ε₂₂, γ₁₂)`.
pub fn plane_strain_matrix(mat: &IsotropicMaterial) -> Matrix3<f64> {
    let (e, nu) = (mat.young_modulus, mat.poisson_ratio);
    let c = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Matrix3::new(c * (1.0 - nu), c * nu, 0.0, c * nu, c * (1.0 - nu), 0.0, 0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0)
}

/// Volume force density (MPa/cm).
#[derive(Debug, Clone, PartialEq, Default)]
pub enum BodyForce {
    #[default]
    Zero,
    Uniform([f64; 2]),
    /// One vector per triangle.
    PerElement(Vec<[f64; 2]>),
}

/// Constant traction (MPa) on one boundary edge, addressed by its index in
/// [`BodyMesh::boundary_edges`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTraction {
    pub edge: usize,
    pub traction: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadSpec {
    pub body_force: BodyForce,
    pub tractions: Vec<EdgeTraction>,
}

impl LoadSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Uniform traction on every edge carrying `tag`.
    pub fn traction_on_tag(mesh: &BodyMesh, tag: EdgeTag, traction: [f64; 2]) -> Self {
        let tractions = mesh.boundary_edges().iter().enumerate().filter(|(_, e)| e.tag == tag).map(|(edge, _)| EdgeTraction { edge, traction }).collect();
        Self { body_force: BodyForce::Zero, tractions }
    }

    /// Checks finiteness and that tractions sit on Neumann edges of `mesh`.
    pub fn validate(&self, mesh: &BodyMesh) -> Result<(), ModelError> {
        let finite = |v: &[f64; 2]| v.iter().all(|x| x.is_finite());
        match &self.body_force {
            BodyForce::Zero => {}
            BodyForce::Uniform(f) if !finite(f) => return Err(ModelError::InvalidLoad("non-finite body force".into())),
            BodyForce::Uniform(_) => {}
            BodyForce::PerElement(fs) => {
                if fs.len() != mesh.element_count() {
                    return Err(ModelError::InvalidLoad(format!("{} body-force vectors for {} elements", fs.len(), mesh.element_count())));
                }
                if !fs.iter().all(finite) {
                    return Err(ModelError::InvalidLoad("non-finite body force".into()));
                }
            }
        }
        for t in &self.tractions {
            let edge = mesh.boundary_edges().get(t.edge).ok_or_else(|| ModelError::InvalidLoad(format!("traction on missing edge {}", t.edge)))?;
            if edge.tag != EdgeTag::Neumann {
                return Err(ModelError::InvalidLoad(format!("traction on edge {} tagged {:?}; only Neumann edges accept tractions", t.edge, edge.tag)));
            }
            if !finite(&t.traction) {
                return Err(ModelError::InvalidLoad(format!("non-finite traction on edge {}", t.edge)));
            }
        }
        Ok(())
    }
}

/// Initial normal distance between the bodies, evaluated at points of the first body's contact zone.
#[derive(Clone)]
pub struct GapFunction(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>);

impl fmt::Debug for GapFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GapFunction(..)")
    }
}

impl GapFunction {
    pub fn new(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    pub fn constant(d: f64) -> Self {
        Self::new(move |_| d)
    }

    /// Groove of depth `r` and half-width `b` centred at `x₁ = center`.
    pub fn groove(depth: f64, half_width: f64, center: f64) -> Self {
        Self::new(move |x| groove_gap(x[0], depth, half_width, center))
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        (self.0)(x)
    }
}

/// `r · (max(0, 1 − (x₁ − l)²/b²))^{3/2}`.
pub fn groove_gap(x1: f64, depth: f64, half_width: f64, center: f64) -> f64 {
    let s = (x1 - center) / half_width;
    let base = (1.0 - s * s).max(0.0);
    depth * base * base.sqrt()
}

/// One elastic body.
#[derive(Debug, Clone)]
pub struct Body {
    pub mesh: BodyMesh,
    pub material: IsotropicMaterial,
    pub loads: LoadSpec,
}

/// Contact zone shared by bodies `alpha < beta`. The zone on each body is the
/// set of edges tagged `EdgeTag::Contact(i)`, where `i` is this descriptor's
/// index in [`Problem::contact_pairs`].
#[derive(Debug, Clone)]
pub struct ContactPairSpec {
    pub alpha: usize,
    pub beta: usize,
    pub law: WinklerLaw,
    pub gap: GapFunction,
}

#[derive(Debug, Clone)]
pub struct Problem {
    bodies: Vec<Body>,
    contact_pairs: Vec<ContactPairSpec>,
}

impl Problem {
    pub fn new(bodies: Vec<Body>, contact_pairs: Vec<ContactPairSpec>) -> Result<Self, ModelError> {
        if bodies.is_empty() {
            return Err(ModelError::InvalidProblem("no bodies".into()));
        }
        for (i, b) in bodies.iter().enumerate() {
            b.loads.validate(&b.mesh).map_err(|e| ModelError::InvalidProblem(format!("body {i}: {e}")))?;
        }
        let mut seen_pairs = std::collections::HashSet::new();
        for (i, p) in contact_pairs.iter().enumerate() {
            if !(p.alpha < p.beta && p.beta < bodies.len()) {
                return Err(ModelError::InvalidProblem(format!("pair {i} has invalid body indices ({}, {})", p.alpha, p.beta)));
            }
            if !seen_pairs.insert((p.alpha, p.beta)) {
                return Err(ModelError::InvalidProblem(format!("bodies ({}, {}) appear in more than one pair", p.alpha, p.beta)));
            }
            for side in [p.alpha, p.beta] {
                if !bodies[side].mesh.contact_tags().contains(&i) {
                    return Err(ModelError::InvalidProblem(format!("pair {i}: body {side} has no edges tagged for it")));
                }
            }
        }
        for (b, body) in bodies.iter().enumerate() {
            for tag in body.mesh.contact_tags() {
                let owner = contact_pairs.get(tag);
                if !owner.is_some_and(|p| p.alpha == b || p.beta == b) {
                    return Err(ModelError::InvalidProblem(format!("body {b} carries contact tag {tag} not owned by a pair involving it")));
                }
            }
        }
        Ok(Self { bodies, contact_pairs })
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn contact_pairs(&self) -> &[ContactPairSpec] {
        &self.contact_pairs
    }

    pub fn body_count(&self) -> usize {
        self.bodies.len()
    }
}
