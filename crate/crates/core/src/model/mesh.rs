//! Triangulated body meshes with tagged boundaries.

use std::collections::HashMap;

use super::ModelError;

/// Role of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    /// Both displacement components vanish.
    DirichletFull,
    /// The displacement component along the (axis-aligned) edge normal vanishes.
    DirichletNormal,
    /// Prescribed traction, zero unless a load says otherwise.
    Neumann,
    /// Possible contact zone of the given contact pair.
    Contact(usize),
}

impl EdgeTag {
    pub fn is_dirichlet(self) -> bool {
        matches!(self, EdgeTag::DirichletFull | EdgeTag::DirichletNormal)
    }
}

/// A tagged boundary edge as supplied by the caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaggedEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

/// A validated boundary edge with its outward geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
    pub outward_normal: [f64; 2],
    pub length: f64,
}

impl BoundaryEdge {
    /// Index (0 or 1) of the coordinate axis the normal points along, if the edge is axis-aligned.
    pub fn normal_axis(&self) -> Option<usize> {
        let [nx, ny] = self.outward_normal;
        if ny.abs() <= 1e-12 * nx.abs() {
            Some(0)
        } else if nx.abs() <= 1e-12 * ny.abs() {
            Some(1)
        } else {
            None
        }
    }
}

/// Linear triangle mesh of one body.
#[derive(Debug, Clone)]
pub struct BodyMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Twice the signed area of a triangle.
pub(crate) fn twice_signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
}

impl BodyMesh {
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, tagged: Vec<TaggedEdge>) -> Result<Self, ModelError> {
        if let Some(i) = nodes.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(ModelError::InvalidMesh(format!("node {i} has non-finite coordinates")));
        }
        let mut owners: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nodes.len()) {
                return Err(ModelError::InvalidMesh(format!("triangle {e} references a missing node")));
            }
            let [a, b, c] = *tri;
            let area2 = twice_signed_area(nodes[a], nodes[b], nodes[c]);
            let scale = [a, b, c].iter().flat_map(|&v| nodes[v]).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
            if !(area2 > 1e-14 * scale * scale) {
                return Err(ModelError::DegenerateTriangle { element: e, twice_area: area2 });
            }
            for (p, q) in [(a, b), (b, c), (c, a)] {
                let k = edge_key(p, q);
                *counts.entry(k).or_insert(0) += 1;
                owners.insert(k, (e, [p, q]));
            }
        }

        let mut seen: HashMap<(usize, usize), EdgeTag> = HashMap::new();
        let mut boundary = Vec::with_capacity(tagged.len());
        for te in &tagged {
            let k = edge_key(te.nodes[0], te.nodes[1]);
            match counts.get(&k) {
                Some(1) => {}
                Some(_) => return Err(ModelError::InvalidMesh(format!("edge {:?} is interior but tagged {:?}", te.nodes, te.tag))),
                None => return Err(ModelError::InvalidMesh(format!("edge {:?} is not a mesh edge", te.nodes))),
            }
            if let Some(prev) = seen.insert(k, te.tag) {
                return Err(ModelError::InvalidMesh(format!("edge {:?} tagged twice ({prev:?} and {:?})", te.nodes, te.tag)));
            }
            let (_, [p, q]) = owners[&k];
            let (dx, dy) = (nodes[q][0] - nodes[p][0], nodes[q][1] - nodes[p][1]);
            let length = dx.hypot(dy);
            let edge = BoundaryEdge { nodes: te.nodes, tag: te.tag, outward_normal: [dy / length, -dx / length], length };
            if te.tag == EdgeTag::DirichletNormal && edge.normal_axis().is_none() {
                return Err(ModelError::InvalidMesh(format!("roller edge {:?} is not axis-aligned", te.nodes)));
            }
            boundary.push(edge);
        }
        if let Some((k, _)) = counts.iter().filter(|(_, &c)| c == 1).find(|(k, _)| !seen.contains_key(k)) {
            return Err(ModelError::InvalidMesh(format!("boundary edge {k:?} has no tag")));
        }
        if !boundary.iter().any(|e| e.tag.is_dirichlet()) {
            return Err(ModelError::NoDirichletBoundary);
        }
        Ok(Self { nodes, triangles, boundary })
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 3] {
        self.triangles[e].map(|v| self.nodes[v])
    }

    pub fn edges_with_tag(&self, tag: EdgeTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary.iter().filter(move |e| e.tag == tag)
    }

    pub fn contact_tags(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .boundary
            .iter()
            .filter_map(|e| match e.tag {
                EdgeTag::Contact(i) => Some(i),
                _ => None,
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square(tags: [EdgeTag; 4]) -> Result<BodyMesh, ModelError> {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let tris = vec![[0, 1, 2], [0, 2, 3]];
        let edges = [[0, 1], [1, 2], [2, 3], [3, 0]].iter().zip(tags).map(|(&nodes, tag)| TaggedEdge { nodes, tag }).collect();
        BodyMesh::new(nodes, tris, edges)
    }

    #[test]
    fn outward_normals() {
        let m = unit_square([EdgeTag::DirichletFull, EdgeTag::Neumann, EdgeTag::Contact(0), EdgeTag::Neumann]).unwrap();
        let top = m.edges_with_tag(EdgeTag::Contact(0)).next().unwrap();
        assert!((top.outward_normal[1] - 1.0).abs() < 1e-15);
        let bottom = m.edges_with_tag(EdgeTag::DirichletFull).next().unwrap();
        assert!((bottom.outward_normal[1] + 1.0).abs() < 1e-15);
        assert_eq!(m.contact_tags(), vec![0]);
    }

    #[test]
    fn requires_dirichlet() {
        let err = unit_square([EdgeTag::Neumann; 4]).unwrap_err();
        assert_eq!(err, ModelError::NoDirichletBoundary);
    }

    #[test]
    fn rejects_clockwise_or_degenerate() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let edges = vec![
            TaggedEdge { nodes: [0, 1], tag: EdgeTag::DirichletFull },
            TaggedEdge { nodes: [1, 2], tag: EdgeTag::Neumann },
            TaggedEdge { nodes: [2, 0], tag: EdgeTag::Neumann },
        ];
        let err = BodyMesh::new(nodes.clone(), vec![[0, 2, 1]], edges.clone()).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateTriangle { element: 0, .. }));
        let flat = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(matches!(BodyMesh::new(flat, vec![[0, 1, 2]], edges).unwrap_err(), ModelError::DegenerateTriangle { element: 0, .. }));
    }

    #[test]
    fn untagged_or_double_tagged_edges_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let partial = vec![TaggedEdge { nodes: [0, 1], tag: EdgeTag::DirichletFull }];
        assert!(BodyMesh::new(nodes.clone(), vec![[0, 1, 2]], partial).is_err());
        let doubled = vec![
            TaggedEdge { nodes: [0, 1], tag: EdgeTag::DirichletFull },
            TaggedEdge { nodes: [1, 0], tag: EdgeTag::Neumann },
            TaggedEdge { nodes: [1, 2], tag: EdgeTag::Neumann },
            TaggedEdge { nodes: [2, 0], tag: EdgeTag::Neumann },
        ];
        assert!(BodyMesh::new(nodes, vec![[0, 1, 2]], doubled).is_err());
    }

    #[test]
    fn slanted_roller_rejected() {
        let nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let edges = vec![
            TaggedEdge { nodes: [0, 1], tag: EdgeTag::DirichletFull },
            TaggedEdge { nodes: [1, 2], tag: EdgeTag::DirichletNormal },
            TaggedEdge { nodes: [2, 0], tag: EdgeTag::Neumann },
        ];
        assert!(BodyMesh::new(nodes, vec![[0, 1, 2]], edges).is_err());
    }
}
