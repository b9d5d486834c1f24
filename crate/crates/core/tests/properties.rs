mod common;

use std::sync::OnceLock;

use common::groove_problem;
use proptest::prelude::*;
use winkler_contact::contact::{assemble_robin, gap_state_from_traces, PsiStrategy, Side};
use winkler_contact::fem2d::{Discretization, DofMap};
use winkler_contact::model::WinklerLaw;

fn disc() -> &'static Discretization {
    static DISC: OnceLock<Discretization> = OnceLock::new();
    DISC.get_or_init(|| groove_problem(6, 3))
}

fn law_params() -> impl Strategy<Value = (f64, f64)> {
    (1e-6f64..2e-4, 0.1f64..=1.0)
}

fn state(scale: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let sizes: Vec<usize> = disc().bodies().iter().map(|b| b.n_free()).collect();
    sizes.into_iter().map(|n| prop::collection::vec(-scale..scale, n)).collect::<Vec<_>>()
}

fn strategy() -> impl Strategy<Value = PsiStrategy> {
    prop::sample::select(PsiStrategy::ALL.to_vec())
}

fn add(u: &[Vec<f64>], v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter().zip(v).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect()
}

fn diff(u: &[Vec<f64>], v: &[Vec<f64>]) -> Vec<f64> {
    u.iter().flatten().zip(v.iter().flatten()).map(|(x, y)| x - y).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_law_is_strictly_increasing((b, a) in law_params(), y in -1e-3f64..1e-3, z in -1e-3f64..1e-3) {
        prop_assume!(z - y > 1e-9);
        let law = WinklerLaw::power(b, a).unwrap();
        prop_assert_eq!(law.response(0.0), 0.0);
        prop_assert!(law.response(y) < law.response(z));
        prop_assert!(law.g_minus(y) <= 0.0 && law.g_minus_derivative(y) >= 0.0);
    }

    #[test]
    fn power_law_lipschitz_on_working_interval((b, a) in law_params(), y in -1e-3f64..1e-3, z in -1e-3f64..1e-3) {
        let law = WinklerLaw::power(b, a).unwrap();
        // for a ≤ 1 the slope is largest at the interval ends
        let m = law.derivative(1e-3).max(law.derivative(-1e-3));
        prop_assert!((law.response(y) - law.response(z)).abs() <= m * (y - z).abs() * (1.0 + 1e-12));
    }

    #[test]
    fn contact_energy_nonnegative(u in state(1e-3)) {
        prop_assert!(disc().contact_energy(&u) >= 0.0);
    }

    #[test]
    fn contact_gradient_monotone(u in state(1e-3), v in state(1e-3)) {
        let d = disc();
        let g = diff(&d.contact_gradient(&add(&u, &v)), &d.contact_gradient(&u));
        let pairing: f64 = g.iter().zip(v.iter().flatten()).map(|(a, b)| a * b).sum();
        prop_assert!(pairing >= -1e-12, "{pairing}");
    }

    #[test]
    fn contact_gradient_lipschitz(u in state(1e-3), w in state(1e-4)) {
        // each paired node feeds both sides, hence the factor 2 over max g′·max tributary
        let d = disc();
        let pair = &d.pairs()[0];
        let slope = |s: &[Vec<f64>]| {
            let (ta, tb) = &d.traces(s)[0];
            pair.gap_arguments(ta, tb).iter().map(|&t| pair.law.g_minus_derivative(t)).fold(0.0f64, f64::max)
        };
        let uw = add(&u, &w);
        // g′ of a power law with a ≤ 1 is monotone in |t|, so the larger end bounds the segment
        let gmax = slope(&u).max(slope(&uw));
        let lhs = norm(&diff(&d.contact_gradient(&uw), &d.contact_gradient(&u)));
        let w_norm = norm(&w.iter().flatten().copied().collect::<Vec<_>>());
        prop_assert!(lhs <= 2.0 * gmax * pair.max_tributary() * w_norm * (1.0 + 1e-9));
    }

    #[test]
    fn robin_term_is_psd(u in state(1e-3), psi in strategy()) {
        let d = disc();
        let pair = &d.pairs()[0];
        let (ta, tb) = &d.traces(&u)[0];
        let st = gap_state_from_traces(pair, ta, tb, psi);
        for side in [Side::Alpha, Side::Beta] {
            let dofs = &d.bodies()[pair.body(side)].dofs;
            let x = assemble_robin(pair, &st, side, dofs).unwrap();
            prop_assert!(x.iter().all(|&e| e >= 0.0 && e.is_finite()));
        }
        for ns in &st.nodes {
            prop_assert_eq!(ns.active, ns.t < 0.0);
        }
    }

    #[test]
    fn stiffness_quadratic_form_nonnegative(u in state(1.0)) {
        for (b, ub) in disc().bodies().iter().zip(&u) {
            prop_assert!(b.stiffness.bilinear(ub, ub) >= 0.0);
        }
    }

    #[test]
    fn dof_map_roundtrip(values in prop::collection::vec(-1.0f64..1.0, 12), fixed in prop::collection::btree_set(0usize..12, 1..6)) {
        let prescribed: Vec<(usize, f64)> = fixed.iter().map(|&d| (d, 0.25)).collect();
        let dofs = DofMap::with_prescribed(6, prescribed).unwrap();
        let full = dofs.expand(&dofs.restrict(&values));
        for (d, (x, y)) in full.iter().zip(&values).enumerate() {
            prop_assert_eq!(*x, if fixed.contains(&d) { 0.25 } else { *y });
        }
    }
}
