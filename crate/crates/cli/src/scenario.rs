//! Scenario configuration and the two-block groove geometry.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use winkler_contact::contact::PsiStrategy;
use winkler_contact::dd_solver::{GammaSchedule, SolverConfig};
use winkler_contact::model::{
    Body, BodyMesh, ContactPairSpec, EdgeTag, EdgeTraction, GapFunction, IsotropicMaterial, LoadSpec, Problem, TaggedEdge, WinklerLaw,
};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': cannot parse '{value}'")]
    BadValue { key: String, value: String },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("cannot read config: {0}")]
    Io(String),
}

/// Support and loading of the two blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Lower block clamped at its base, pressure `q` on the top of the upper block.
    Clamped,
    /// Both blocks pressed together by `q` on their outer faces and held only
    /// by the rollers on the symmetry line.
    Floating,
}

impl Layout {
    pub fn name(self) -> &'static str {
        match self {
            Layout::Clamped => "clamped",
            Layout::Floating => "floating",
        }
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clamped" => Ok(Layout::Clamped),
            "floating" => Ok(Layout::Floating),
            other => Err(format!("unknown layout '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub layout: Layout,
    /// Body length and height (cm).
    pub length: f64,
    pub height: f64,
    /// Cells per body along x₁ and x₂.
    pub nx: usize,
    pub ny: usize,
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// Pressure on the top edge (MPa).
    pub load_q: f64,
    /// Layer compliance (cm/MPa^a) and exponent.
    pub layer_b: f64,
    pub layer_a: f64,
    /// Groove depth and half-width (cm).
    pub gap_r: f64,
    pub gap_b: f64,
    pub gamma: Vec<f64>,
    pub strategy: PsiStrategy,
    pub eps_u: f64,
    pub max_iterations: usize,
    pub initial_trace: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// γ values for `sweep-gamma`.
    pub sweep_gammas: Vec<f64>,
    /// `(B, a)` pairs for `sweep-layer`.
    pub sweep_layers: Vec<(f64, f64)>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            layout: Layout::Clamped,
            length: 4.0,
            height: 1.0,
            nx: 128,
            ny: 32,
            young_modulus: 2.1e5,
            poisson_ratio: 0.3,
            load_q: 10.0,
            layer_b: 2.5e-5,
            layer_a: 0.5,
            gap_r: 5e-4,
            gap_b: 1.0,
            gamma: vec![0.6],
            strategy: PsiStrategy::ActiveSet,
            eps_u: 1e-3,
            max_iterations: 500,
            initial_trace: 1e-4,
            seed: 2012,
            output_dir: PathBuf::from("out"),
            sweep_gammas: vec![0.01, 0.02, 0.05, 0.3, 0.6, 0.8, 0.9, 0.95, 0.98, 0.99],
            sweep_layers: vec![(1e-5, 0.3), (1e-5, 0.6), (1e-5, 0.8), (1e-5, 1.0), (1e-8, 1.0)],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: value.into() })
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_layers(key: &str, value: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (b, a) = item.split_once(':').ok_or_else(|| ConfigError::BadValue { key: key.into(), value: item.into() })?;
            Ok((parse(key, b)?, parse(key, a)?))
        })
        .collect()
}

impl ScenarioConfig {
    pub const KEYS: [&'static str; 21] = [
        "geometry.layout",
        "geometry.l",
        "geometry.h",
        "mesh.nx",
        "mesh.ny",
        "material.E",
        "material.nu",
        "load.q",
        "layer.B",
        "layer.a",
        "gap.r",
        "gap.b",
        "solver.gamma",
        "solver.strategy",
        "solver.eps_u",
        "solver.max_iterations",
        "solver.initial_trace",
        "seed",
        "output.dir",
        "sweep.gammas",
        "sweep.layers",
    ];

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "geometry.layout" => self.layout = v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: v.into() })?,
            "geometry.l" => self.length = parse(key, v)?,
            "geometry.h" => self.height = parse(key, v)?,
            "mesh.nx" => self.nx = parse(key, v)?,
            "mesh.ny" => self.ny = parse(key, v)?,
            "material.E" => self.young_modulus = parse(key, v)?,
            "material.nu" => self.poisson_ratio = parse(key, v)?,
            "load.q" => self.load_q = parse(key, v)?,
            "layer.B" => self.layer_b = parse(key, v)?,
            "layer.a" => self.layer_a = parse(key, v)?,
            "gap.r" => self.gap_r = parse(key, v)?,
            "gap.b" => self.gap_b = parse(key, v)?,
            "solver.gamma" => self.gamma = parse_list(key, v)?,
            "solver.strategy" => self.strategy = v.parse().map_err(|_| ConfigError::BadValue { key: key.into(), value: v.into() })?,
            "solver.eps_u" => self.eps_u = parse(key, v)?,
            "solver.max_iterations" => self.max_iterations = parse(key, v)?,
            "solver.initial_trace" => self.initial_trace = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "output.dir" => self.output_dir = PathBuf::from(v),
            "sweep.gammas" => self.sweep_gammas = parse_list(key, v)?,
            "sweep.layers" => self.sweep_layers = parse_layers(key, v)?,
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Parses `key=value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut out = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.into() })?;
            out.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (k, v) in Self::parse_text(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Every range violation, not just the first.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let positive = |name: &str, v: f64, errs: &mut Vec<String>| {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("{name} must be positive, got {v}"));
            }
        };
        positive("geometry.l", self.length, &mut errs);
        positive("geometry.h", self.height, &mut errs);
        positive("material.E", self.young_modulus, &mut errs);
        positive("layer.B", self.layer_b, &mut errs);
        positive("gap.b", self.gap_b, &mut errs);
        positive("solver.eps_u", self.eps_u, &mut errs);
        if self.nx == 0 || self.ny == 0 {
            errs.push(format!("mesh needs at least one cell per direction, got {}x{}", self.nx, self.ny));
        }
        if !(0.0..0.5).contains(&self.poisson_ratio) {
            errs.push(format!("material.nu must lie in [0, 0.5), got {}", self.poisson_ratio));
        }
        if !(self.layer_a > 0.0 && self.layer_a <= 1.0) {
            errs.push(format!("layer.a must lie in (0, 1], got {}", self.layer_a));
        }
        if !(self.gap_r >= 0.0) {
            errs.push(format!("gap.r must be nonnegative, got {}", self.gap_r));
        }
        if !self.load_q.is_finite() {
            errs.push("load.q must be finite".into());
        }
        if self.gamma.is_empty() {
            errs.push("solver.gamma is empty".into());
        }
        for g in self.gamma.iter().chain(&self.sweep_gammas) {
            if !(*g > 0.0 && *g < 2.0) {
                errs.push(format!("gamma {g} outside (0, 2)"));
            }
        }
        for &(b, a) in &self.sweep_layers {
            if !(b > 0.0) || !(a > 0.0 && a <= 1.0) {
                errs.push(format!("layer pair B={b}, a={a} out of range"));
            }
        }
        if self.max_iterations == 0 {
            errs.push("solver.max_iterations must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let gamma = match self.gamma.as_slice() {
            [g] => GammaSchedule::Constant(*g),
            list => GammaSchedule::List(list.to_vec()),
        };
        SolverConfig {
            gamma,
            psi: self.strategy,
            eps_u: self.eps_u,
            max_iterations: self.max_iterations,
            initial_trace: self.initial_trace,
            ..SolverConfig::default()
        }
    }

    pub fn elements_per_body(&self) -> usize {
        2 * self.nx * self.ny
    }
}

/// Structured rectangle `[0, l]×[y0, y0+h]` split into `nx × ny` cells with
/// alternating diagonals. Edges are tagged by side: bottom, right, top, left.
pub fn rectangle_mesh(length: f64, height: f64, y0: f64, nx: usize, ny: usize, tags: [EdgeTag; 4]) -> Result<BodyMesh, winkler_contact::model::ModelError> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let nodes = (0..=ny).flat_map(|j| (0..=nx).map(move |i| [length * i as f64 / nx as f64, y0 + height * j as f64 / ny as f64])).collect();
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    let [bottom, right, top, left] = tags;
    let mut edges = Vec::with_capacity(2 * (nx + ny));
    edges.extend((0..nx).map(|i| TaggedEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: bottom }));
    edges.extend((0..ny).map(|j| TaggedEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: right }));
    edges.extend((0..nx).map(|i| TaggedEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: top }));
    edges.extend((0..ny).map(|j| TaggedEdge { nodes: [id(0, j + 1), id(0, j)], tag: left }));
    BodyMesh::new(nodes, triangles, edges)
}

fn edges_at_height(mesh: &BodyMesh, y: f64, traction: [f64; 2]) -> Vec<EdgeTraction> {
    mesh.boundary_edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.tag == EdgeTag::Neumann && e.nodes.iter().all(|&n| (mesh.nodes()[n][1] - y).abs() <= 1e-12 * y.abs().max(1.0)))
        .map(|(edge, _)| EdgeTraction { edge, traction })
        .collect()
}

/// Two stacked `l × h` blocks meeting at `x₂ = h`, with the groove centred on
/// the symmetry line `x₁ = l` whose edges are on rollers. The remaining
/// supports and loads follow [`Layout`].
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Problem, ConfigError> {
    cfg.validate()?;
    let invalid = |e: winkler_contact::model::ModelError| ConfigError::Invalid(vec![e.to_string()]);
    let (l, h) = (cfg.length, cfg.height);
    let base = match cfg.layout {
        Layout::Clamped => EdgeTag::DirichletFull,
        Layout::Floating => EdgeTag::Neumann,
    };
    let lower = rectangle_mesh(l, h, 0.0, cfg.nx, cfg.ny, [base, EdgeTag::DirichletNormal, EdgeTag::Contact(0), EdgeTag::Neumann]).map_err(invalid)?;
    let upper =
        rectangle_mesh(l, h, h, cfg.nx, cfg.ny, [EdgeTag::Contact(0), EdgeTag::DirichletNormal, EdgeTag::Neumann, EdgeTag::Neumann]).map_err(invalid)?;
    let lower_loads = match cfg.layout {
        Layout::Clamped => LoadSpec::none(),
        Layout::Floating => LoadSpec { tractions: edges_at_height(&lower, 0.0, [0.0, cfg.load_q]), ..LoadSpec::none() },
    };
    let upper_loads = LoadSpec { tractions: edges_at_height(&upper, 2.0 * h, [0.0, -cfg.load_q]), ..LoadSpec::none() };
    let material = IsotropicMaterial::new(cfg.young_modulus, cfg.poisson_ratio).map_err(invalid)?;
    let law = WinklerLaw::power(cfg.layer_b, cfg.layer_a).map_err(invalid)?;
    let bodies = vec![Body { mesh: lower, material, loads: lower_loads }, Body { mesh: upper, material, loads: upper_loads }];
    let pair = ContactPairSpec { alpha: 0, beta: 1, law, gap: GapFunction::groove(cfg.gap_r, cfg.gap_b, l) };
    Problem::new(bodies, vec![pair]).map_err(invalid)
}
