#![allow(dead_code)]

use winkler_contact::fem2d::Discretization;
use winkler_contact::model::{
    Body, BodyMesh, ContactPairSpec, EdgeTag, EdgeTraction, GapFunction, IsotropicMaterial, LoadSpec, Problem, TaggedEdge, WinklerLaw,
};

/// `[0, l]×[y0, y0+h]` with `nx × ny` cells; tags for bottom, right, top, left.
pub fn block(l: f64, h: f64, y0: f64, nx: usize, ny: usize, tags: [EdgeTag; 4]) -> BodyMesh {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let nodes = (0..=ny).flat_map(|j| (0..=nx).map(move |i| [l * i as f64 / nx as f64, y0 + h * j as f64 / ny as f64])).collect();
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                tris.extend([[a, b, c], [a, c, d]]);
            } else {
                tris.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    let [bottom, right, top, left] = tags;
    let mut edges = Vec::new();
    edges.extend((0..nx).map(|i| TaggedEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: bottom }));
    edges.extend((0..ny).map(|j| TaggedEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: right }));
    edges.extend((0..nx).map(|i| TaggedEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: top }));
    edges.extend((0..ny).map(|j| TaggedEdge { nodes: [id(0, j + 1), id(0, j)], tag: left }));
    BodyMesh::new(nodes, tris, edges).unwrap()
}

/// Two stacked 4×1 blocks, lower one clamped at its base, upper one pressed
/// down by `q` and clamped on its left side so that each body is coercive on
/// its own. Both right sides are on rollers.
pub fn two_blocks(nx: usize, ny: usize, q: f64, law: WinklerLaw, gap: GapFunction) -> Discretization {
    use EdgeTag::*;
    let lower = block(4.0, 1.0, 0.0, nx, ny, [DirichletFull, DirichletNormal, Contact(0), Neumann]);
    let upper = block(4.0, 1.0, 1.0, nx, ny, [Contact(0), DirichletNormal, Neumann, DirichletFull]);
    let material = IsotropicMaterial::new(2.1e5, 0.3).unwrap();
    let top: Vec<EdgeTraction> = upper
        .boundary_edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.tag == Neumann && e.nodes.iter().all(|&n| upper.nodes()[n][1] == 2.0))
        .map(|(edge, _)| EdgeTraction { edge, traction: [0.0, -q] })
        .collect();
    let bodies =
        vec![Body { mesh: lower, material, loads: LoadSpec::none() }, Body { mesh: upper, material, loads: LoadSpec { tractions: top, ..LoadSpec::none() } }];
    let problem = Problem::new(bodies, vec![ContactPairSpec { alpha: 0, beta: 1, law, gap }]).unwrap();
    Discretization::new(&problem).unwrap()
}

/// Groove of depth 5e-4 cm and half-width 1 cm at the right edge, power law
/// B = 2.5e-5, a = 0.5, q = 10.
pub fn groove_problem(nx: usize, ny: usize) -> Discretization {
    two_blocks(nx, ny, 10.0, WinklerLaw::power(2.5e-5, 0.5).unwrap(), GapFunction::groove(5e-4, 1.0, 4.0))
}
