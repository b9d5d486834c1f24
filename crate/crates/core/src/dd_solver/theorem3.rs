use rand::Rng;

use super::SolverError;
use crate::linsolve::{norm2, CsrMatrix};

/// Sampled constants of the convergence theorem for the scheme
/// `G u^{k+1} = G u^k − γ (Φ(u^k) − y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem3Estimate {
    /// Largest `‖Φ(u)‖` over sampled `u`.
    pub r_phi: f64,
    /// Largest `‖Φ(u+w) − Φ(u)‖ / ‖w‖` (Lipschitz constant).
    pub d_phi: f64,
    /// Smallest `⟨Φ(u+v) − Φ(u), v⟩ / ‖v‖²` (strong monotonicity).
    pub b_phi: f64,
    /// Smallest and largest Rayleigh quotient of `G`.
    pub b_g: f64,
    pub m_g: f64,
    /// `B_Φ·B_G / D_Φ²`.
    pub gamma_star: f64,
}

impl Theorem3Estimate {
    /// `B_Φ ≤ 0`: the operator is not strongly monotone on the samples.
    pub fn violates_monotonicity(&self) -> bool {
        !(self.b_phi > 0.0)
    }

    /// Admissible `γ` interval `(0, 2γ*)`, if the sampled constants admit one.
    pub fn window(&self) -> Option<(f64, f64)> {
        (!self.violates_monotonicity() && self.gamma_star.is_finite()).then_some((0.0, 2.0 * self.gamma_star))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Estimates from explicit probe triples `(u, v, w)`. Triples with `v = 0` or `w = 0` are skipped.
pub fn estimate_theorem3_from_samples(
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    g: &CsrMatrix,
    samples: &[(Vec<f64>, Vec<f64>, Vec<f64>)],
) -> Result<Theorem3Estimate, SolverError> {
    let mut est = Theorem3Estimate { r_phi: 0.0, d_phi: 0.0, b_phi: f64::INFINITY, b_g: f64::INFINITY, m_g: 0.0, gamma_star: f64::NAN };
    let mut used = 0;
    for (u, v, w) in samples {
        let (nv, nw) = (norm2(v), norm2(w));
        if nv == 0.0 || nw == 0.0 {
            continue;
        }
        used += 1;
        let pu = phi(u);
        est.r_phi = est.r_phi.max(norm2(&pu));
        est.d_phi = est.d_phi.max(norm2(&sub(&phi(&add(u, w)), &pu)) / nw);
        est.b_phi = est.b_phi.min(dot(&sub(&phi(&add(u, v)), &pu), v) / (nv * nv));
        let q = g.bilinear(v, v) / (nv * nv);
        est.b_g = est.b_g.min(q);
        est.m_g = est.m_g.max(q);
    }
    if used == 0 {
        return Err(SolverError::InvalidConfig("no nonzero probe vectors".into()));
    }
    est.gamma_star = est.b_phi * est.b_g / (est.d_phi * est.d_phi);
    Ok(est)
}

/// Monte-Carlo estimates with `probes` random triples, entries uniform in `[−scale, scale]`.
pub fn estimate_theorem3(
    phi: &dyn Fn(&[f64]) -> Vec<f64>,
    g: &CsrMatrix,
    probes: usize,
    scale: f64,
    rng: &mut impl Rng,
) -> Result<Theorem3Estimate, SolverError> {
    if probes == 0 {
        return Err(SolverError::InvalidConfig("probe count must be positive".into()));
    }
    let n = g.nrows();
    let mut draw = || -> Vec<f64> { (0..n).map(|_| rng.random_range(-scale..=scale)).collect() };
    let samples: Vec<_> = (0..probes).map(|_| (draw(), draw(), draw())).collect();
    estimate_theorem3_from_samples(phi, g, &samples)
}
