//! Node-to-node coupling of matching contact segments through a Winkler layer.
//!
//! The gap argument at a paired node is `t = d − u_{αn} − u_{βn}`; the layer
//! transmits the normal stress `g⁻(t)` to both sides.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::fem2d::{boundary_segment, DisplacementField, DofMap, FemError};
use crate::model::{EdgeTag, Problem, WinklerLaw};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("contact pair {0} does not exist")]
    MissingPair(usize),
    #[error("contact segments have {alpha} and {beta} nodes")]
    NodeCountMismatch { alpha: usize, beta: usize },
    #[error("paired node {index} sits at {alpha} on the first body but {beta} on the second")]
    CoordinateMismatch { index: usize, alpha: f64, beta: f64 },
    #[error("contact segments are not facing each other (normals {alpha:?} and {beta:?})")]
    NormalsNotOpposed { alpha: [f64; 2], beta: [f64; 2] },
    #[error("layer derivative {value} < 0 at paired node {node}")]
    NegativeDerivative { node: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedNode {
    pub node_alpha: usize,
    pub node_beta: usize,
    /// Trapezoid weight (cm).
    pub tributary: f64,
    /// Coordinate along the segment (x₁ for a horizontal interface).
    pub abscissa: f64,
}

#[derive(Debug, Clone)]
pub struct ContactPair {
    pub alpha: usize,
    pub beta: usize,
    pub normal_alpha: [f64; 2],
    pub normal_beta: [f64; 2],
    /// Axis the normals lie along.
    pub normal_axis: usize,
    pub nodes: Vec<PairedNode>,
    /// Initial gap at each paired node (cm).
    pub gaps: Vec<f64>,
    pub law: WinklerLaw,
}

impl ContactPair {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn body(&self, side: Side) -> usize {
        match side {
            Side::Alpha => self.alpha,
            Side::Beta => self.beta,
        }
    }

    pub fn normal(&self, side: Side) -> [f64; 2] {
        match side {
            Side::Alpha => self.normal_alpha,
            Side::Beta => self.normal_beta,
        }
    }

    pub fn node(&self, side: Side, i: usize) -> usize {
        match side {
            Side::Alpha => self.nodes[i].node_alpha,
            Side::Beta => self.nodes[i].node_beta,
        }
    }

    pub fn segment_length(&self) -> f64 {
        self.nodes.iter().map(|n| n.tributary).sum()
    }

    pub fn max_tributary(&self) -> f64 {
        self.nodes.iter().map(|n| n.tributary).fold(0.0, f64::max)
    }

    /// Sign of the outward normal along [`Self::normal_axis`] for one side.
    pub fn normal_sign(&self, side: Side) -> f64 {
        self.normal(side)[self.normal_axis]
    }

    /// Normal trace of a full nodal field on one side.
    pub fn trace(&self, side: Side, u: &DisplacementField) -> Vec<f64> {
        let n = self.normal(side);
        (0..self.len())
            .map(|i| {
                let ui = u.node(self.node(side, i));
                n[0] * ui[0] + n[1] * ui[1]
            })
            .collect()
    }

    /// Normal trace of a free-dof vector on one side; constrained dofs read as zero.
    pub fn trace_free(&self, side: Side, dofs: &DofMap, u: &[f64]) -> Vec<f64> {
        let s = self.normal_sign(side);
        (0..self.len())
            .map(|i| {
                let dof = 2 * self.node(side, i) + self.normal_axis;
                dofs.free_index(dof).map_or(0.0, |f| s * u[f])
            })
            .collect()
    }

    /// Gap arguments `t = d − u_{αn} − u_{βn}` from normal traces.
    pub fn gap_arguments(&self, trace_alpha: &[f64], trace_beta: &[f64]) -> Vec<f64> {
        self.gaps.iter().zip(trace_alpha).zip(trace_beta).map(|((d, a), b)| d - a - b).collect()
    }

    /// Contact energy `Σ trib · ∫₀ᵗ g⁻` of this pair.
    pub fn energy(&self, trace_alpha: &[f64], trace_beta: &[f64]) -> f64 {
        self.gap_arguments(trace_alpha, trace_beta).iter().zip(&self.nodes).map(|(&t, n)| n.tributary * self.law.g_minus_antiderivative(t)).sum()
    }

    /// Derivative of [`Self::energy`] with respect to each normal trace value
    /// (identical on both sides): `−g⁻(t) · trib`.
    pub fn energy_gradient(&self, trace_alpha: &[f64], trace_beta: &[f64]) -> Vec<f64> {
        self.gap_arguments(trace_alpha, trace_beta).iter().zip(&self.nodes).map(|(&t, n)| -self.law.g_minus(t) * n.tributary).collect()
    }
}

/// Pairs the nodes of the two segments tagged for contact pair `index`.
pub fn build_pairing(problem: &Problem, index: usize) -> Result<ContactPair, ContactError> {
    let spec = problem.contact_pairs().get(index).ok_or(ContactError::MissingPair(index))?;
    let tag = EdgeTag::Contact(index);
    let mesh_a = &problem.bodies()[spec.alpha].mesh;
    let mesh_b = &problem.bodies()[spec.beta].mesh;
    let sa = boundary_segment(mesh_a, tag)?;
    let sb = boundary_segment(mesh_b, tag)?;
    let opposed = sa.normal_axis == sb.normal_axis
        && (sa.outward_normal[0] + sb.outward_normal[0]).abs() <= 1e-12
        && (sa.outward_normal[1] + sb.outward_normal[1]).abs() <= 1e-12;
    if !opposed {
        return Err(ContactError::NormalsNotOpposed { alpha: sa.outward_normal, beta: sb.outward_normal });
    }
    if sa.nodes.len() != sb.nodes.len() {
        return Err(ContactError::NodeCountMismatch { alpha: sa.nodes.len(), beta: sb.nodes.len() });
    }
    for (i, (&xa, &xb)) in sa.abscissae.iter().zip(&sb.abscissae).enumerate() {
        if (xa - xb).abs() > 1e-12 * xa.abs().max(1.0) {
            return Err(ContactError::CoordinateMismatch { index: i, alpha: xa, beta: xb });
        }
    }
    let nodes: Vec<PairedNode> = (0..sa.nodes.len())
        .map(|i| PairedNode { node_alpha: sa.nodes[i], node_beta: sb.nodes[i], tributary: sa.tributary[i], abscissa: sa.abscissae[i] })
        .collect();
    let gaps = nodes.iter().map(|n| spec.gap.eval(mesh_a.nodes()[n.node_alpha])).collect();
    Ok(ContactPair {
        alpha: spec.alpha,
        beta: spec.beta,
        normal_alpha: sa.outward_normal,
        normal_beta: sb.outward_normal,
        normal_axis: sa.normal_axis,
        nodes,
        gaps,
        law: spec.law.clone(),
    })
}

/// How the Robin weight ψ is chosen at each paired node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsiStrategy {
    /// ψ ≡ 0: each body only sees the neighbour's traction residual.
    Neumann,
    /// ψ ≡ 1.
    FullRobin,
    /// ψ = χ, the current active set.
    ActiveSet,
}

impl PsiStrategy {
    pub const ALL: [PsiStrategy; 3] = [PsiStrategy::Neumann, PsiStrategy::FullRobin, PsiStrategy::ActiveSet];

    pub fn psi(self, active: bool) -> f64 {
        match self {
            PsiStrategy::Neumann => 0.0,
            PsiStrategy::FullRobin => 1.0,
            PsiStrategy::ActiveSet => f64::from(u8::from(active)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PsiStrategy::Neumann => "neumann",
            PsiStrategy::FullRobin => "full_robin",
            PsiStrategy::ActiveSet => "active_set",
        }
    }
}

impl fmt::Display for PsiStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PsiStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neumann" => Ok(PsiStrategy::Neumann),
            "full_robin" => Ok(PsiStrategy::FullRobin),
            "active_set" => Ok(PsiStrategy::ActiveSet),
            other => Err(format!("unknown strategy '{other}' (expected neumann, full_robin or active_set)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub t: f64,
    pub active: bool,
    pub psi: f64,
    pub g_minus: f64,
    pub g_prime: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapState {
    pub nodes: Vec<NodeState>,
}

impl GapState {
    pub fn active_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.active).count()
    }
}

pub fn gap_state(pair: &ContactPair, u_alpha: &DisplacementField, u_beta: &DisplacementField, strategy: PsiStrategy) -> GapState {
    gap_state_from_traces(pair, &pair.trace(Side::Alpha, u_alpha), &pair.trace(Side::Beta, u_beta), strategy)
}

pub fn gap_state_from_traces(pair: &ContactPair, trace_alpha: &[f64], trace_beta: &[f64], strategy: PsiStrategy) -> GapState {
    let nodes = pair
        .gap_arguments(trace_alpha, trace_beta)
        .into_iter()
        .map(|t| {
            let active = t < 0.0;
            NodeState { t, active, psi: strategy.psi(active), g_minus: pair.law.g_minus(t), g_prime: pair.law.g_minus_derivative(t) }
        })
        .collect();
    GapState { nodes }
}

/// Diagonal of the lumped Robin addend over the free dofs of one side's body:
/// the normal dof of each paired node gains `ψ·g′(t)·trib`.
pub fn assemble_robin(pair: &ContactPair, state: &GapState, side: Side, dofs: &DofMap) -> Result<Vec<f64>, ContactError> {
    let mut diag = vec![0.0; dofs.n_free()];
    for (i, (ns, pn)) in state.nodes.iter().zip(&pair.nodes).enumerate() {
        if ns.g_prime < 0.0 || ns.g_prime.is_nan() {
            return Err(ContactError::NegativeDerivative { node: i, value: ns.g_prime });
        }
        if let Some(f) = dofs.free_index(2 * pair.node(side, i) + pair.normal_axis) {
            diag[f] += ns.psi * ns.g_prime * pn.tributary;
        }
    }
    Ok(diag)
}

/// Right-hand-side addend over the free dofs of one side's body: the normal
/// component at each paired node gains `[ψ·g′(t)·u_n^k + g⁻(t)]·trib`.
pub fn assemble_contact_rhs(pair: &ContactPair, state: &GapState, trace: &[f64], side: Side, dofs: &DofMap) -> Vec<f64> {
    let s = pair.normal_sign(side);
    let mut rhs = vec![0.0; dofs.n_free()];
    for (i, ((ns, pn), &un)) in state.nodes.iter().zip(&pair.nodes).zip(trace).enumerate() {
        if let Some(f) = dofs.free_index(2 * pair.node(side, i) + pair.normal_axis) {
            rhs[f] += s * (ns.psi * ns.g_prime * un + ns.g_minus) * pn.tributary;
        }
    }
    rhs
}

/// Normal stress `σ_n = g⁻(t)` transmitted at each paired node (MPa).
pub fn contact_pressure(pair: &ContactPair, u_alpha: &DisplacementField, u_beta: &DisplacementField) -> Vec<f64> {
    pair.gap_arguments(&pair.trace(Side::Alpha, u_alpha), &pair.trace(Side::Beta, u_beta)).into_iter().map(|t| pair.law.g_minus(t)).collect()
}

/// Worst-case residuals of the discrete complementarity conditions, with the
/// layer compression eliminated as `w = min(t, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplementarityReport {
    /// Largest σ_n (must be ≤ 0) and largest |σ_n − g(w)|.
    pub max_pressure: f64,
    pub max_law_mismatch: f64,
    /// Largest `u_{αn}+u_{βn}+w−d` (must be ≤ tolerance).
    pub max_penetration: f64,
    /// Largest `|(u_{αn}+u_{βn}+w−d)·σ_n|`.
    pub max_product: f64,
}

impl ComplementarityReport {
    /// Checks against the penetration tolerance `1e-10` and product tolerance `1e-8·load_scale`.
    pub fn holds(&self, load_scale: f64) -> bool {
        self.max_pressure <= 0.0
            && self.max_law_mismatch <= 1e-12 * load_scale.max(1.0)
            && self.max_penetration <= 1e-10
            && self.max_product <= 1e-8 * load_scale
    }
}

pub fn check_complementarity(pair: &ContactPair, trace_alpha: &[f64], trace_beta: &[f64]) -> ComplementarityReport {
    let mut report = ComplementarityReport { max_pressure: f64::NEG_INFINITY, max_law_mismatch: 0.0, max_penetration: f64::NEG_INFINITY, max_product: 0.0 };
    for ((&d, &a), &b) in pair.gaps.iter().zip(trace_alpha).zip(trace_beta) {
        let t = d - a - b;
        let w = t.min(0.0);
        let sigma = pair.law.g_minus(t);
        let opening = a + b + w - d;
        report.max_pressure = report.max_pressure.max(sigma);
        report.max_law_mismatch = report.max_law_mismatch.max((sigma - pair.law.response(w)).abs());
        report.max_penetration = report.max_penetration.max(opening);
        report.max_product = report.max_product.max((opening * sigma).abs());
    }
    report
}
