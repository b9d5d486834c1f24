//! Linear (P1) triangles for plane-strain elasticity.
//!
//! Node `i` of a body owns the degrees of freedom `2i` (x₁) and `2i + 1` (x₂).
//! Assembly works on the full unconstrained dof set; [`apply_dirichlet`]
//! eliminates constrained dofs symmetrically.

mod discretization;

use nalgebra::{Matrix3, SMatrix, SVector};
use thiserror::Error;

use crate::linsolve::CsrMatrix;
use crate::model::{plane_strain_matrix, twice_signed_area, BodyForce, BodyMesh, EdgeTag, IsotropicMaterial, LoadSpec, ModelError};

pub use discretization::{total_energy, BodySystem, Discretization};

pub type ElementMatrix = SMatrix<f64, 6, 6>;
pub type StrainDisplacement = SMatrix<f64, 3, 6>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("degenerate triangle {element}")]
    DegenerateElement { element: usize },
    #[error("no constrained degrees of freedom; the body would be free to move rigidly")]
    NoConstraints,
    #[error("boundary segment {tag:?} is missing from the mesh")]
    MissingSegment { tag: EdgeTag },
    #[error("boundary segment {tag:?} is not straight and axis-aligned")]
    NonStraightSegment { tag: EdgeTag },
    #[error("vector of length {got} does not match {expected} degrees of freedom")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Degrees of freedom of one body with their constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_count: usize,
    free_index: Vec<Option<usize>>,
    free_dofs: Vec<usize>,
    prescribed: Vec<(usize, f64)>,
}

impl DofMap {
    /// Homogeneous constraints from the mesh's Dirichlet tags: full clamps fix
    /// both components, rollers fix the component along the edge normal.
    pub fn from_mesh(mesh: &BodyMesh) -> Result<Self, FemError> {
        let mut fixed = vec![false; 2 * mesh.node_count()];
        for edge in mesh.boundary_edges() {
            match edge.tag {
                EdgeTag::DirichletFull => {
                    for n in edge.nodes {
                        fixed[2 * n] = true;
                        fixed[2 * n + 1] = true;
                    }
                }
                EdgeTag::DirichletNormal => {
                    let axis = edge.normal_axis().ok_or(FemError::NonStraightSegment { tag: edge.tag })?;
                    for n in edge.nodes {
                        fixed[2 * n + axis] = true;
                    }
                }
                _ => {}
            }
        }
        let prescribed = fixed.iter().enumerate().filter(|(_, f)| **f).map(|(d, _)| (d, 0.0)).collect();
        Self::with_prescribed(mesh.node_count(), prescribed)
    }

    /// Arbitrary (possibly inhomogeneous) prescribed values.
    pub fn with_prescribed(node_count: usize, prescribed: Vec<(usize, f64)>) -> Result<Self, FemError> {
        let n = 2 * node_count;
        let mut is_fixed = vec![false; n];
        for &(d, _) in &prescribed {
            if d >= n {
                return Err(FemError::DimensionMismatch { expected: n, got: d + 1 });
            }
            is_fixed[d] = true;
        }
        let mut free_index = vec![None; n];
        let mut free_dofs = Vec::new();
        for d in 0..n {
            if !is_fixed[d] {
                free_index[d] = Some(free_dofs.len());
                free_dofs.push(d);
            }
        }
        let mut prescribed = prescribed;
        prescribed.sort_by_key(|&(d, _)| d);
        prescribed.dedup_by_key(|&mut (d, _)| d);
        Ok(Self { node_count, free_index, free_dofs, prescribed })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn total(&self) -> usize {
        2 * self.node_count
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        self.free_index[dof]
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn prescribed(&self) -> &[(usize, f64)] {
        &self.prescribed
    }

    /// Full nodal vector from free values plus prescribed values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        assert_eq!(free.len(), self.n_free());
        let mut full = vec![0.0; self.total()];
        for (&d, &v) in self.free_dofs.iter().zip(free) {
            full[d] = v;
        }
        for &(d, v) in &self.prescribed {
            full[d] = v;
        }
        full
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        assert_eq!(full.len(), self.total());
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }
}

/// Nodal displacements of one body, `[u₁, u₂]` interleaved per node (cm).
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField(pub Vec<f64>);

impl DisplacementField {
    pub fn zeros(node_count: usize) -> Self {
        Self(vec![0.0; 2 * node_count])
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        [self.0[2 * i], self.0[2 * i + 1]]
    }

    pub fn from_fn(mesh: &BodyMesh, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        Self(mesh.nodes().iter().flat_map(|&p| f(p)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Matrix plus right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Constant strain–displacement matrix of a P1 triangle and its area.
pub fn strain_displacement(coords: &[[f64; 2]; 3]) -> Option<(StrainDisplacement, f64)> {
    let [p1, p2, p3] = *coords;
    let two_a = twice_signed_area(p1, p2, p3);
    if !(two_a > 0.0) {
        return None;
    }
    let b = [p2[1] - p3[1], p3[1] - p1[1], p1[1] - p2[1]];
    let c = [p3[0] - p2[0], p1[0] - p3[0], p2[0] - p1[0]];
    let mut bm = StrainDisplacement::zeros();
    for i in 0..3 {
        let (dx, dy) = (b[i] / two_a, c[i] / two_a);
        bm[(0, 2 * i)] = dx;
        bm[(1, 2 * i + 1)] = dy;
        bm[(2, 2 * i)] = dy;
        bm[(2, 2 * i + 1)] = dx;
    }
    Some((bm, 0.5 * two_a))
}

/// `area · Bᵀ D B` for one triangle.
pub fn element_stiffness(coords: &[[f64; 2]; 3], d: &Matrix3<f64>) -> Option<ElementMatrix> {
    let (b, area) = strain_displacement(coords)?;
    Some(b.transpose() * d * b * area)
}

fn element_dofs(tri: &[usize; 3]) -> [usize; 6] {
    [2 * tri[0], 2 * tri[0] + 1, 2 * tri[1], 2 * tri[1] + 1, 2 * tri[2], 2 * tri[2] + 1]
}

/// Global stiffness over all `2·nodes` dofs, before constraints.
pub fn assemble_stiffness(mesh: &BodyMesh, mat: &IsotropicMaterial) -> Result<CsrMatrix, FemError> {
    let d = plane_strain_matrix(mat);
    let mut triplets = Vec::with_capacity(36 * mesh.element_count());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let ke = element_stiffness(&mesh.element_coords(e), &d).ok_or(FemError::DegenerateElement { element: e })?;
        let dofs = element_dofs(tri);
        for i in 0..6 {
            for j in 0..6 {
                triplets.push((dofs[i], dofs[j], ke[(i, j)]));
            }
        }
    }
    let n = 2 * mesh.node_count();
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Consistent nodal forces: one-point quadrature for body forces, trapezoid rule on traction edges.
pub fn assemble_load(mesh: &BodyMesh, loads: &LoadSpec) -> Result<Vec<f64>, FemError> {
    loads.validate(mesh)?;
    let mut f = vec![0.0; 2 * mesh.node_count()];
    let force_of = |e: usize| match &loads.body_force {
        BodyForce::Zero => [0.0, 0.0],
        BodyForce::Uniform(v) => *v,
        BodyForce::PerElement(vs) => vs[e],
    };
    if loads.body_force != BodyForce::Zero {
        for (e, tri) in mesh.triangles().iter().enumerate() {
            let c = mesh.element_coords(e);
            let area = 0.5 * twice_signed_area(c[0], c[1], c[2]);
            let fe = force_of(e);
            for &n in tri {
                f[2 * n] += fe[0] * area / 3.0;
                f[2 * n + 1] += fe[1] * area / 3.0;
            }
        }
    }
    for t in &loads.tractions {
        let edge = &mesh.boundary_edges()[t.edge];
        for n in edge.nodes {
            f[2 * n] += t.traction[0] * edge.length / 2.0;
            f[2 * n + 1] += t.traction[1] * edge.length / 2.0;
        }
    }
    Ok(f)
}

/// Eliminates constrained dofs symmetrically, moving prescribed values to the right-hand side.
pub fn apply_dirichlet(system: &SparseSystem, dofs: &DofMap) -> Result<SparseSystem, FemError> {
    if dofs.prescribed().is_empty() {
        return Err(FemError::NoConstraints);
    }
    let n = dofs.total();
    if system.matrix.nrows() != n || system.rhs.len() != n {
        return Err(FemError::DimensionMismatch { expected: n, got: system.matrix.nrows() });
    }
    let mut values = vec![0.0; n];
    for &(d, v) in dofs.prescribed() {
        values[d] = v;
    }
    let mut rhs: Vec<f64> = dofs.free_dofs().iter().map(|&d| system.rhs[d]).collect();
    let mut triplets = Vec::with_capacity(system.matrix.nnz());
    for (r, c, v) in system.matrix.triplets() {
        let Some(fr) = dofs.free_index(r) else { continue };
        match dofs.free_index(c) {
            Some(fc) => triplets.push((fr, fc, v)),
            None => rhs[fr] -= v * values[c],
        }
    }
    Ok(SparseSystem { matrix: CsrMatrix::from_triplets(dofs.n_free(), dofs.n_free(), &triplets), rhs })
}

/// Straight boundary segment carrying one tag, nodes ordered along the tangent.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub outward_normal: [f64; 2],
    /// Axis the normal is aligned with.
    pub normal_axis: usize,
    /// Node indices sorted by tangential coordinate.
    pub nodes: Vec<usize>,
    /// Tangential coordinate of each node.
    pub abscissae: Vec<f64>,
    /// Trapezoid weight (half the adjacent edge lengths) of each node.
    pub tributary: Vec<f64>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.tributary.iter().sum()
    }
}

pub fn boundary_segment(mesh: &BodyMesh, tag: EdgeTag) -> Result<Segment, FemError> {
    let edges: Vec<_> = mesh.edges_with_tag(tag).collect();
    let first = edges.first().ok_or(FemError::MissingSegment { tag })?;
    let normal = first.outward_normal;
    let axis = first.normal_axis().ok_or(FemError::NonStraightSegment { tag })?;
    let tangent_axis = 1 - axis;
    let level = mesh.nodes()[first.nodes[0]][axis];
    let tol = 1e-12 * level.abs().max(1.0);
    let mut weights = std::collections::BTreeMap::new();
    for e in &edges {
        let aligned = (e.outward_normal[0] - normal[0]).abs() <= 1e-12 && (e.outward_normal[1] - normal[1]).abs() <= 1e-12;
        let level_ok = e.nodes.iter().all(|&n| (mesh.nodes()[n][axis] - level).abs() <= tol);
        if !aligned || !level_ok {
            return Err(FemError::NonStraightSegment { tag });
        }
        for n in e.nodes {
            *weights.entry(n).or_insert(0.0) += e.length / 2.0;
        }
    }
    let mut nodes: Vec<(usize, f64)> = weights.into_iter().collect();
    nodes.sort_by(|a, b| mesh.nodes()[a.0][tangent_axis].total_cmp(&mesh.nodes()[b.0][tangent_axis]));
    Ok(Segment {
        outward_normal: normal,
        normal_axis: axis,
        abscissae: nodes.iter().map(|&(n, _)| mesh.nodes()[n][tangent_axis]).collect(),
        tributary: nodes.iter().map(|&(_, w)| w).collect(),
        nodes: nodes.into_iter().map(|(n, _)| n).collect(),
    })
}

/// Normal displacement `n·u` at each node of the segment tagged `tag`, in segment order.
pub fn normal_trace(mesh: &BodyMesh, u: &DisplacementField, tag: EdgeTag) -> Result<Vec<(usize, f64)>, FemError> {
    if u.0.len() != 2 * mesh.node_count() {
        return Err(FemError::DimensionMismatch { expected: 2 * mesh.node_count(), got: u.0.len() });
    }
    let seg = boundary_segment(mesh, tag)?;
    let n = seg.outward_normal;
    Ok(seg
        .nodes
        .iter()
        .map(|&i| {
            let ui = u.node(i);
            (i, n[0] * ui[0] + n[1] * ui[1])
        })
        .collect())
}

/// Constant stress `(σ₁₁, σ₂₂, σ₁₂)` in each element.
pub fn recover_stresses(mesh: &BodyMesh, mat: &IsotropicMaterial, u: &DisplacementField) -> Result<Vec<[f64; 3]>, FemError> {
    if u.0.len() != 2 * mesh.node_count() {
        return Err(FemError::DimensionMismatch { expected: 2 * mesh.node_count(), got: u.0.len() });
    }
    let d = plane_strain_matrix(mat);
    mesh.triangles()
        .iter()
        .enumerate()
        .map(|(e, tri)| {
            let (b, _) = strain_displacement(&mesh.element_coords(e)).ok_or(FemError::DegenerateElement { element: e })?;
            let ue = SVector::<f64, 6>::from_iterator(element_dofs(tri).iter().map(|&k| u.0[k]));
            let s = d * (b * ue);
            Ok([s[0], s[1], s[2]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TaggedEdge;

    fn unit_triangle() -> BodyMesh {
        BodyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![
                TaggedEdge { nodes: [0, 1], tag: EdgeTag::DirichletFull },
                TaggedEdge { nodes: [1, 2], tag: EdgeTag::Neumann },
                TaggedEdge { nodes: [2, 0], tag: EdgeTag::Neumann },
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_triangle_stiffness_entry() {
        // Hand evaluation: B row for node 1 is dN/dx = −1, dN/dy = −1,
        // so (x,x) = A·(D₁₁·1 + D₃₃·1) = 0.5·(1 + 0.5) = 0.75.
        let k = assemble_stiffness(&unit_triangle(), &IsotropicMaterial::new(1.0, 0.0).unwrap()).unwrap();
        assert!((k.get(0, 0) - 0.75).abs() < 1e-15);
        assert!(k.is_symmetric(1e-14));
    }

    #[test]
    fn rigid_translation_in_kernel() {
        let k = assemble_stiffness(&unit_triangle(), &IsotropicMaterial::new(3.0, 0.25).unwrap()).unwrap();
        for t in [[1.0, 0.0], [0.0, 1.0]] {
            let v: Vec<f64> = (0..3).flat_map(|_| t).collect();
            assert!(k.mul_vec(&v).iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn edge_traction_trapezoid() {
        let mesh = unit_triangle();
        let loads = LoadSpec { body_force: BodyForce::Zero, tractions: vec![crate::model::EdgeTraction { edge: 2, traction: [0.0, -10.0] }] };
        let f = assemble_load(&mesh, &loads).unwrap();
        // edge 2 joins (0,1) and (0,0): length 1, each node gets −5
        assert_eq!(f, vec![0.0, -5.0, 0.0, 0.0, 0.0, -5.0]);
        assert!(assemble_load(&mesh, &LoadSpec::none()).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn traction_on_dirichlet_edge_rejected() {
        let loads = LoadSpec { body_force: BodyForce::Zero, tractions: vec![crate::model::EdgeTraction { edge: 0, traction: [1.0, 0.0] }] };
        assert!(assemble_load(&unit_triangle(), &loads).is_err());
    }

    #[test]
    fn dirichlet_elimination_cases() {
        let sys = SparseSystem { matrix: CsrMatrix::from_diagonal(&[4.0, 2.0]), rhs: vec![8.0, 3.0] };
        let all = DofMap::with_prescribed(1, vec![(0, 0.0), (1, 0.0)]).unwrap();
        let reduced = apply_dirichlet(&sys, &all).unwrap();
        assert_eq!(reduced.matrix.nrows(), 0);
        let one = DofMap::with_prescribed(1, vec![(1, 0.0)]).unwrap();
        let reduced = apply_dirichlet(&sys, &one).unwrap();
        assert_eq!(reduced.rhs[0] / reduced.matrix.get(0, 0), 2.0);
        let none = DofMap::with_prescribed(1, vec![]).unwrap();
        assert_eq!(apply_dirichlet(&sys, &none), Err(FemError::NoConstraints));
    }

    #[test]
    fn normal_trace_signs() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let mk = |top: EdgeTag, bottom: EdgeTag| {
            BodyMesh::new(
                nodes.clone(),
                vec![[0, 1, 2], [0, 2, 3]],
                vec![
                    TaggedEdge { nodes: [0, 1], tag: bottom },
                    TaggedEdge { nodes: [1, 2], tag: EdgeTag::DirichletNormal },
                    TaggedEdge { nodes: [2, 3], tag: top },
                    TaggedEdge { nodes: [3, 0], tag: EdgeTag::Neumann },
                ],
            )
            .unwrap()
        };
        let lower = mk(EdgeTag::Contact(0), EdgeTag::DirichletFull);
        let upper = mk(EdgeTag::Neumann, EdgeTag::Contact(0));
        let u = DisplacementField([0.3, 0.7].repeat(4));
        assert!(normal_trace(&lower, &u, EdgeTag::Contact(0)).unwrap().iter().all(|&(_, v)| (v - 0.7).abs() < 1e-15));
        assert!(normal_trace(&upper, &u, EdgeTag::Contact(0)).unwrap().iter().all(|&(_, v)| (v + 0.7).abs() < 1e-15));
        let zero = DisplacementField::zeros(4);
        assert!(normal_trace(&lower, &zero, EdgeTag::Contact(0)).unwrap().iter().all(|&(_, v)| v == 0.0));
        assert_eq!(normal_trace(&lower, &u, EdgeTag::Contact(3)), Err(FemError::MissingSegment { tag: EdgeTag::Contact(3) }));
    }

    #[test]
    fn stresses_of_simple_fields() {
        let mesh = unit_triangle();
        let mat = IsotropicMaterial::new(7.0, 0.0).unwrap();
        let zero = recover_stresses(&mesh, &mat, &DisplacementField::zeros(3)).unwrap();
        assert_eq!(zero, vec![[0.0; 3]]);
        let eps = 1e-3;
        let stretch = DisplacementField::from_fn(&mesh, |p| [0.0, eps * p[1]]);
        let s = recover_stresses(&mesh, &mat, &stretch).unwrap()[0];
        assert!((s[1] - 7.0 * eps).abs() < 1e-15 && s[0].abs() < 1e-15 && s[2].abs() < 1e-15);
        let theta = 1e-6;
        let rot = DisplacementField::from_fn(&mesh, |p| [-theta * p[1], theta * p[0]]);
        let s = recover_stresses(&mesh, &IsotropicMaterial::new(2.1e5, 0.3).unwrap(), &rot).unwrap()[0];
        assert!(s.iter().all(|v| v.abs() <= 1e-10));
    }

    /// Unit square with a perturbed interior node, fanned into four triangles.
    fn fan_square(clamp_bottom: bool) -> BodyMesh {
        let bottom = if clamp_bottom { EdgeTag::DirichletFull } else { EdgeTag::Neumann };
        BodyMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.37, 0.58]],
            vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
            vec![
                TaggedEdge { nodes: [0, 1], tag: bottom },
                TaggedEdge { nodes: [1, 2], tag: EdgeTag::Neumann },
                TaggedEdge { nodes: [2, 3], tag: EdgeTag::Neumann },
                TaggedEdge { nodes: [3, 0], tag: EdgeTag::DirichletNormal },
            ],
        )
        .unwrap()
    }

    fn linear_field(p: [f64; 2]) -> [f64; 2] {
        [2e-3 + 1e-3 * p[0] - 4e-4 * p[1], -1e-3 + 3e-4 * p[0] + 2e-3 * p[1]]
    }

    #[test]
    fn patch_test_reproduces_linear_field() {
        let mesh = fan_square(true);
        let mat = IsotropicMaterial::new(2.1e5, 0.3).unwrap();
        let exact = DisplacementField::from_fn(&mesh, linear_field);
        let prescribed = (0..4).flat_map(|n| [(2 * n, exact.0[2 * n]), (2 * n + 1, exact.0[2 * n + 1])]).collect();
        let dofs = DofMap::with_prescribed(5, prescribed).unwrap();
        let full = SparseSystem { matrix: assemble_stiffness(&mesh, &mat).unwrap(), rhs: vec![0.0; 10] };
        let reduced = apply_dirichlet(&full, &dofs).unwrap();
        let u = crate::linsolve::factorize(&reduced.matrix).unwrap().solve(&reduced.rhs, 1e-14).unwrap();
        assert!((u[0] - exact.0[8]).abs() < 1e-15 && (u[1] - exact.0[9]).abs() < 1e-15);
    }

    #[test]
    fn rigid_motions_have_zero_energy() {
        let mesh = fan_square(true);
        let k = assemble_stiffness(&mesh, &IsotropicMaterial::new(2.1e5, 0.3).unwrap()).unwrap();
        let theta = 1.0;
        let modes = [
            DisplacementField::from_fn(&mesh, |_| [1.0, 0.0]),
            DisplacementField::from_fn(&mesh, |_| [0.0, 1.0]),
            DisplacementField::from_fn(&mesh, |p| [-theta * p[1], theta * p[0]]),
        ];
        for r in &modes {
            assert!(k.mul_vec(&r.0).iter().all(|x| x.abs() < 1e-9), "K r should vanish");
            assert!(k.bilinear(&r.0, &r.0).abs() < 1e-9);
        }
        assert!(crate::linsolve::factorize(&k).is_err());
    }

    #[test]
    fn quadratic_form_matches_strain_energy() {
        // independent evaluation: constant strain from the exact gradient of
        // a linear field, σ = D ε, integrated over the square of area 1
        let mesh = fan_square(false);
        let mat = IsotropicMaterial::new(2.1e5, 0.3).unwrap();
        let k = assemble_stiffness(&mesh, &mat).unwrap();
        let u = DisplacementField::from_fn(&mesh, linear_field);
        let eps = [1e-3, 2e-3, -4e-4 + 3e-4];
        let (lambda, mu) = {
            let (e, nu) = (2.1e5, 0.3);
            (e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu)))
        };
        let trace = eps[0] + eps[1];
        let sigma = [lambda * trace + 2.0 * mu * eps[0], lambda * trace + 2.0 * mu * eps[1], mu * eps[2]];
        let a_uu = sigma[0] * eps[0] + sigma[1] * eps[1] + sigma[2] * eps[2];
        let quad = k.bilinear(&u.0, &u.0);
        assert!((quad - a_uu).abs() <= 1e-12 * a_uu.abs(), "{quad} vs {a_uu}");
    }
}
