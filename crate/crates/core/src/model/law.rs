//! Nonlinear Winkler layer laws.
//!
//! A law maps the layer compression `w` (cm, negative when compressed) to the
//! normal stress `g(w)` (MPa). It must vanish at zero and increase strictly.
//! Contact only ever sees the truncation `g⁻`, which is zero on separation.

use std::fmt;
use std::sync::Arc;

use super::ModelError;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum LawKind {
    /// `g(w) = B^{-1/a} sgn(w) |w|^{1/a}`.
    Power {
        compliance: f64,
        exponent: f64,
    },
    Custom {
        response: ScalarFn,
        derivative: ScalarFn,
    },
}

/// Normal response of a nonlinear Winkler cover.
#[derive(Clone)]
pub struct WinklerLaw {
    kind: LawKind,
    lipschitz_bound: Option<f64>,
}

impl fmt::Debug for WinklerLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            LawKind::Power { compliance, exponent } => f
                .debug_struct("WinklerLaw::Power")
                .field("compliance", compliance)
                .field("exponent", exponent)
                .field("lipschitz_bound", &self.lipschitz_bound)
                .finish(),
            LawKind::Custom { .. } => f.debug_struct("WinklerLaw::Custom").field("lipschitz_bound", &self.lipschitz_bound).finish_non_exhaustive(),
        }
    }
}

/// Builds the power law with compliance `B` (cm/MPa^a) and exponent `a ∈ (0, 1]`.
pub fn power_law(compliance: f64, exponent: f64) -> Result<WinklerLaw, ModelError> {
    WinklerLaw::power(compliance, exponent)
}

/// Convenience alias for [`WinklerLaw::g_minus`].
pub fn eval_g_minus(law: &WinklerLaw, z: f64) -> f64 {
    law.g_minus(z)
}

impl WinklerLaw {
    pub fn power(compliance: f64, exponent: f64) -> Result<Self, ModelError> {
        if !(compliance > 0.0) || !compliance.is_finite() {
            return Err(ModelError::InvalidLaw(format!("compliance B must be positive, got {compliance}")));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(ModelError::InvalidLaw(format!("exponent a must lie in (0, 1], got {exponent}")));
        }
        let lipschitz_bound = (exponent == 1.0).then(|| 1.0 / compliance);
        Ok(Self { kind: LawKind::Power { compliance, exponent }, lipschitz_bound })
    }

    /// Arbitrary law from a response and its derivative. No monotonicity is
    /// enforced here; use [`validate_law`] to check a sampled interval.
    pub fn custom(response: impl Fn(f64) -> f64 + Send + Sync + 'static, derivative: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { kind: LawKind::Custom { response: Arc::new(response), derivative: Arc::new(derivative) }, lipschitz_bound: None }
    }

    /// Linear law `g(w) = k w`.
    pub fn linear(stiffness: f64) -> Result<Self, ModelError> {
        Self::power(1.0 / stiffness, 1.0)
    }

    pub fn with_lipschitz_bound(mut self, bound: f64) -> Self {
        self.lipschitz_bound = Some(bound);
        self
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    /// `(B, a)` for power laws.
    pub fn power_parameters(&self) -> Option<(f64, f64)> {
        match self.kind {
            LawKind::Power { compliance, exponent } => Some((compliance, exponent)),
            LawKind::Custom { .. } => None,
        }
    }

    pub fn response(&self, w: f64) -> f64 {
        match &self.kind {
            LawKind::Power { compliance, exponent } => {
                let p = 1.0 / exponent;
                compliance.powf(-p) * w.signum() * w.abs().powf(p)
            }
            LawKind::Custom { response, .. } => response(w),
        }
    }

    pub fn derivative(&self, w: f64) -> f64 {
        match &self.kind {
            LawKind::Power { compliance, exponent } => {
                let p = 1.0 / exponent;
                if *exponent == 1.0 {
                    1.0 / compliance
                } else if w == 0.0 {
                    0.0
                } else {
                    compliance.powf(-p) * p * w.abs().powf(p - 1.0)
                }
            }
            LawKind::Custom { derivative, .. } => derivative(w),
        }
    }

    /// Truncated response: `0` for `z ≥ 0`, `g(z)` for `z < 0`.
    pub fn g_minus(&self, z: f64) -> f64 {
        if z >= 0.0 {
            0.0
        } else {
            self.response(z)
        }
    }

    /// Derivative of `g⁻` away from the kink: `0` for `z ≥ 0`, `g′(z)` otherwise.
    pub fn g_minus_derivative(&self, z: f64) -> f64 {
        if z >= 0.0 {
            0.0
        } else {
            self.derivative(z)
        }
    }

    /// `∫₀ᵗ g⁻(z) dz`, which is nonnegative for any `t`.
    pub fn g_minus_antiderivative(&self, t: f64) -> f64 {
        if t >= 0.0 {
            return 0.0;
        }
        match &self.kind {
            LawKind::Power { compliance, exponent } => {
                let p = 1.0 / exponent;
                compliance.powf(-p) * (-t).powf(p + 1.0) / (p + 1.0)
            }
            LawKind::Custom { response, .. } => {
                // ∫₀ᵗ g = −∫ₜ⁰ g
                -adaptive_simpson(&**response, t, 0.0, 1e-14 * (1.0 + response(t).abs() * -t), 40)
            }
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Outcome of a sampled check of a law on a working interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LawValidation {
    pub zero_at_origin: bool,
    pub monotone: bool,
    /// First sampled pair `(y, z)` with `y < z` but `g(y) ≥ g(z)`.
    pub first_violation: Option<(f64, f64)>,
    /// Largest sampled difference quotient (empirical Lipschitz constant).
    pub empirical_lipschitz: f64,
    pub exceeds_declared_bound: bool,
}

impl LawValidation {
    pub fn is_ok(&self) -> bool {
        self.zero_at_origin && self.monotone && !self.exceeds_declared_bound
    }
}

/// Samples `g` on `n_samples` evenly spaced points of `[w_min, w_max]`.
///
/// All pairs are compared for strict increase; the Lipschitz estimate uses
/// neighbouring samples, which bounds every pairwise quotient for a sampled
/// piecewise-linear interpolant.
pub fn validate_law(law: &WinklerLaw, interval: (f64, f64), n_samples: usize) -> Result<LawValidation, ModelError> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(ModelError::InvalidLaw(format!("empty interval [{lo}, {hi}]")));
    }
    if n_samples < 2 {
        return Err(ModelError::InvalidLaw("at least two samples are required".into()));
    }
    let step = (hi - lo) / (n_samples - 1) as f64;
    let ws: Vec<f64> = (0..n_samples).map(|i| if i + 1 == n_samples { hi } else { lo + step * i as f64 }).collect();
    let gs: Vec<f64> = ws.iter().map(|&w| law.response(w)).collect();

    let mut first_violation = None;
    'outer: for i in 0..n_samples {
        for j in i + 1..n_samples {
            if !(gs[i] < gs[j]) {
                first_violation = Some((ws[i], ws[j]));
                break 'outer;
            }
        }
    }
    let empirical_lipschitz = ws.windows(2).zip(gs.windows(2)).map(|(w, g)| ((g[1] - g[0]) / (w[1] - w[0])).abs()).fold(0.0, f64::max);
    let exceeds_declared_bound = law.lipschitz_bound.is_some_and(|m| empirical_lipschitz > m * (1.0 + 1e-12));
    Ok(LawValidation {
        zero_at_origin: law.response(0.0) == 0.0,
        monotone: first_violation.is_none(),
        first_violation,
        empirical_lipschitz,
        exceeds_declared_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let law = power_law(1e-5, 0.5).unwrap();
        // B^{-2} w^2 with B = 1e-5, w = 1e-4 → 1e10 · 1e-8
        assert!((law.response(-1e-4) + 100.0).abs() < 1e-9);
        assert!((eval_g_minus(&law, -1e-4) + 100.0).abs() < 1e-9);
        assert_eq!(law.response(0.0), 0.0);
        assert_eq!(law.derivative(0.0), 0.0);
    }

    #[test]
    fn linear_case() {
        let law = power_law(1e-5, 1.0).unwrap();
        assert!((law.response(2e-6) - 0.2).abs() < 1e-12);
        assert!((law.derivative(-3.0) - 1e5).abs() < 1e-9);
        assert_eq!(law.derivative(0.0), law.derivative(-3.0));
        assert!((law.lipschitz_bound().unwrap() - 1e5).abs() < 1e-9);
    }

    #[test]
    fn g_minus_branches() {
        let law = power_law(1e-5, 0.5).unwrap();
        assert_eq!(law.g_minus(0.1), 0.0);
        assert_eq!(law.g_minus(0.0), 0.0);
        assert!(law.g_minus(-1e-6) < 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(power_law(0.0, 0.5).is_err());
        assert!(power_law(-1.0, 0.5).is_err());
        assert!(power_law(1e-5, 0.0).is_err());
        assert!(power_law(1e-5, 1.5).is_err());
    }

    #[test]
    fn antiderivative_closed_form() {
        let law = power_law(1e-5, 0.5).unwrap();
        // B^{-2} |t|^3 / 3 with t = -1e-4
        let expected = 1e10 * 1e-12 / 3.0;
        assert!((law.g_minus_antiderivative(-1e-4) - expected).abs() < 1e-15);
        assert_eq!(law.g_minus_antiderivative(1e-3), 0.0);
    }

    #[test]
    fn custom_antiderivative_matches_power() {
        let p = power_law(2.5e-5, 0.5).unwrap();
        let q = p.clone();
        let r = p.clone();
        let custom = WinklerLaw::custom(move |w| q.response(w), move |w| r.derivative(w));
        for t in [-1e-5, -3e-4, -1e-3] {
            let exact = p.g_minus_antiderivative(t);
            let numeric = custom.g_minus_antiderivative(t);
            assert!((exact - numeric).abs() <= 1e-10 * exact, "{t}: {exact} vs {numeric}");
        }
    }

    #[test]
    fn validation_flags() {
        let law = power_law(1e-5, 0.5).unwrap();
        let v = validate_law(&law, (-1e-3, 1e-3), 100).unwrap();
        assert!(v.monotone && v.zero_at_origin);

        let flat = WinklerLaw::custom(|_| 0.0, |_| 0.0);
        assert!(!validate_law(&flat, (-1.0, 1.0), 10).unwrap().monotone);

        let lin = power_law(1e-5, 1.0).unwrap();
        let v = validate_law(&lin, (-1.0, 1.0), 11).unwrap();
        assert!((v.empirical_lipschitz - 1e5).abs() <= 1e-6 * 1e5);
        assert!(!v.exceeds_declared_bound);

        let tight = power_law(1e-5, 0.5).unwrap().with_lipschitz_bound(1.0);
        assert!(validate_law(&tight, (-1e-3, 1e-3), 50).unwrap().exceeds_declared_bound);

        assert!(validate_law(&law, (1.0, 1.0), 10).is_err());
        assert!(validate_law(&law, (0.0, 1.0), 1).is_err());
    }
}
