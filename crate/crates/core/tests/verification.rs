use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renyi_core::functionals::Functionals;
use renyi_core::inequalities::{solve_triple, Theorem};
use renyi_core::verification::*;
use renyi_core::Density;

fn dd(w: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::new(w.to_vec()).unwrap()
}

/// Direct transcription of the discrete inequality with plain sums.
fn naive_gap(u: &[f64], v: &[f64], a: f64, b: f64) -> f64 {
    let g = solve_triple(a, b).unwrap().gamma;
    // ln Σ exp(h(ln x, ln y)); γ - 1 grows like 1/(α-β), so plain powers underflow.
    let s = |h: &dyn Fn(f64, f64) -> f64| {
        let logs: Vec<f64> = u.iter().zip(v).map(|(&x, &y)| h(x.ln(), y.ln())).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    };
    let lhs = s(&|x, _| a * x) / (1.0 - a) + s(&|x, y| b * x + (1.0 - b) * y) / (b - 1.0);
    let rhs = s(&|x, y| x + (g - 1.0) * y) / (1.0 - g);
    if a > b {
        rhs - lhs
    } else {
        lhs - rhs
    }
}

#[test]
fn discrete_distribution_validation() {
    assert!(DiscreteDistribution::new(vec![1.0]).is_err());
    assert!(DiscreteDistribution::new(vec![1.0, 0.0]).is_err());
    assert!(DiscreteDistribution::new(vec![1.0, f64::INFINITY]).is_err());
    assert!(discrete_rrr_check(&dd(&[1.0, 2.0]), &dd(&[1.0, 2.0, 3.0]), 2.0, 0.0).is_err());
    assert!(discrete_rrr_check(&dd(&[1.0, 2.0]), &dd(&[1.0, 2.0]), 1.0, 0.0).is_err());
}

#[test]
fn uniform_pair_has_zero_gap() {
    let u = dd(&[0.5, 0.5]);
    for (a, b) in [(2.0, 0.0), (0.5, 0.25), (3.0, 2.0), (0.3, 2.5)] {
        assert!(discrete_rrr_check(&u, &u, a, b).unwrap().abs() <= 1e-15);
    }
}

#[test]
fn discrete_matches_naive_sums() {
    let u = [0.2, 1.3, 0.7, 2.1];
    let v = [1.1, 0.4, 0.9, 0.3];
    for (a, b) in [(2.0, 0.0), (0.5, 0.25), (3.0, 2.0), (0.3, 2.5), (1.5, 0.8)] {
        let gap = discrete_rrr_check(&dd(&u), &dd(&v), a, b).unwrap();
        assert_relative_eq!(gap, naive_gap(&u, &v, a, b), epsilon = 1e-12);
    }
}

#[test]
fn discrete_escort_attains_equality() {
    let u = dd(&[0.5, 0.5]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (a, b) = random_orders(&mut rng);
        let k = solve_triple(a, b).unwrap().exponents().k;
        assert!(discrete_rrr_check(&u, &u.escort(k).unwrap(), a, b).unwrap().abs() <= 1e-14);
    }
    for (w, a, b) in [(vec![0.3, 0.7], 2.0, 0.0), (vec![0.1, 0.5, 0.4], 0.5, 0.25), (vec![2.0, 1.0, 0.5, 0.25], 3.0, 2.0)] {
        let u = dd(&w);
        let k = solve_triple(a, b).unwrap().exponents().k;
        let gap = discrete_rrr_check(&u, &u.escort(k).unwrap(), a, b).unwrap();
        assert!(gap.abs() <= 1e-14, "{w:?} ({a},{b}): {gap:e}");
    }
}

#[test]
fn discrete_search_is_deterministic_and_non_negative() {
    let a = discrete_jensen_search(20_000, 9);
    let b = discrete_jensen_search(20_000, 9);
    assert_eq!(a.worst_case.index, b.worst_case.index);
    assert_eq!(a.min_gap.to_bits(), b.min_gap.to_bits());
    assert!(a.min_gap >= -1e-12, "{a:?}");
    assert!(a.reversed > 0 && a.reversed < a.n);
}

#[test]
fn nelder_mead_finds_rosenbrock_minimum() {
    let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
    let opts = SimplexOptions { budget: 5000, gap_tol: 1e-20, param_tol: 1e-10, step: 0.5 };
    let r = nelder_mead(rosen, &[-1.2, 1.0], &opts);
    assert!(r.converged);
    assert!(r.best_gap <= r.initial_gap);
    assert_relative_eq!(r.best_params[0], 1.0, epsilon = 1e-6);
    assert_relative_eq!(r.best_params[1], 1.0, epsilon = 1e-6);
}

#[test]
fn nelder_mead_respects_budget() {
    let r = nelder_mead(|x: &[f64]| x[0] * x[0] + x[1] * x[1], &[3.0, 4.0], &SimplexOptions { budget: 5, ..Default::default() });
    assert!(!r.converged);
    assert!(r.iterations <= 5);
}

#[test]
fn sharpness_probes_recover_witnesses() {
    let fx = Functionals::default();
    let opts = SimplexOptions::default();
    let e1 = Density::exponential(1.0).unwrap();
    let r = minimize_gap(&fx, &Theorem::Rrr, &e1, ParamFamily::Exponential, &[1.0], 2.0, 0.0, &opts).unwrap();
    assert!((r.best_params[0] - 2.0).abs() <= 0.02 && r.best_gap <= 1e-6 && r.best_gap >= -1e-6, "{r:?}");
    let r = minimize_gap(&fx, &Theorem::UpExp, &e1, ParamFamily::Exponential, &[1.0], 2.0, 0.0, &opts).unwrap();
    assert!((r.best_params[0] - 2.0).abs() <= 0.02 && r.best_gap <= 1e-6 && r.best_gap >= -1e-6, "{r:?}");
    let n = Density::gaussian(0.0, 1.0).unwrap();
    let r = minimize_gap(&fx, &Theorem::Rrr, &n, ParamFamily::Gaussian, &[0.5, 1.2], 2.0, 0.0, &opts).unwrap();
    assert!(r.best_params[0].abs() <= 0.01, "{r:?}");
    assert!((r.best_params[1] - 0.5f64.sqrt()).abs() <= 0.01 * 0.5f64.sqrt(), "{r:?}");
    assert!(r.best_gap <= 1e-6 && r.best_gap >= -1e-6);
}

#[test]
fn failed_candidates_are_walls() {
    let fx = Functionals::default();
    let e1 = Density::exponential(1.0).unwrap();
    // the box lower bound is a wall the simplex must not cross
    let r = minimize_gap(&fx, &Theorem::Rrr, &e1, ParamFamily::Exponential, &[0.002], 2.0, 0.0, &SimplexOptions::default())
        .unwrap();
    assert!(r.best_params[0] >= 1e-3);
    assert!(minimize_gap(&fx, &Theorem::Rrr, &e1, ParamFamily::Exponential, &[-1.0], 2.0, 0.0, &SimplexOptions::default()).is_err());
}

#[test]
fn random_search_is_deterministic() {
    let fx = Functionals::default();
    let run = || random_search_violations(&fx, 40, 42, case_sampler("rrr").unwrap());
    let (a, oa) = run();
    let (b, ob) = run();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(oa.len(), ob.len());
    assert_eq!(a.count_failures, 0);
    assert!(a.worst_gap >= -1e-7);
    let worst = a.worst_case.unwrap();
    // the replay record rebuilds the same report
    let f = renyi_core::densities::parse(&worst.case.f).unwrap();
    let g = renyi_core::densities::parse(&worst.case.g).unwrap();
    let t = Theorem::parse(&worst.case.theorem).unwrap();
    let r = renyi_core::inequalities::check(&fx, &t, &f, &g, worst.case.alpha, worst.case.beta).unwrap();
    assert_eq!(r.gap.to_bits(), worst.report.gap.to_bits());
}

#[test]
fn samplers_respect_preconditions() {
    assert!(case_sampler("nope").is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for name in ["bip_down", "down_fisher"] {
        let s = case_sampler(name).unwrap();
        for _ in 0..30 {
            if let Ok(c) = s(&mut rng) {
                assert!(c.f.is_decreasing(), "{}", c.f);
            }
        }
    }
    let s = case_sampler("escort").unwrap();
    for _ in 0..30 {
        let c = s(&mut rng).unwrap();
        assert!((c.alpha - 1.0).abs() >= 1e-3 && (c.beta - 1.0).abs() >= 1e-3 && (c.alpha - c.beta).abs() >= 1e-3);
        assert!((0.15..3.0).contains(&c.alpha) && (0.15..3.0).contains(&c.beta));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn discrete_gap_non_negative(
        u in prop::collection::vec(0.01f64..10.0, 2..6),
        v_seed in prop::collection::vec(0.01f64..10.0, 6),
        a in 0.15f64..3.0,
        b in 0.15f64..3.0,
    ) {
        prop_assume!((a - 1.0).abs() > 1e-3 && (b - 1.0).abs() > 1e-3 && (a - b).abs() > 1e-3);
        let v = &v_seed[..u.len()];
        let gap = discrete_rrr_check(&dd(&u), &dd(v), a, b).unwrap();
        prop_assert!(gap >= -1e-12, "{}", gap);
    }

    #[test]
    fn discrete_gap_is_scale_invariant(s in 0.01f64..100.0, t in 0.01f64..100.0, a in 0.2f64..3.0, b in 0.2f64..3.0) {
        prop_assume!((a - 1.0).abs() > 1e-2 && (b - 1.0).abs() > 1e-2 && (a - b).abs() > 1e-2);
        let u = [0.3, 1.2, 0.8];
        let v = [0.9, 0.2, 1.4];
        let scaled = |w: &[f64], c: f64| dd(&w.iter().map(|x| x * c).collect::<Vec<_>>());
        let g0 = discrete_rrr_check(&dd(&u), &dd(&v), a, b).unwrap();
        let g1 = discrete_rrr_check(&scaled(&u, s), &scaled(&v, t), a, b).unwrap();
        prop_assert!((g0 - g1).abs() <= 1e-12);
        prop_assert!((naive_gap(&u.map(|x| x * s), &v.map(|x| x * t), a, b) - g0).abs() <= 1e-9);
    }
}

#[test]
fn preservation_search_stays_on_grid() {
    let fx = Functionals::default();
    for kind in ["escort", "relative_escort", "down", "up", "up_exp"] {
        let s = preservation_search(&fx, kind, 10, 42).unwrap();
        assert_eq!(s.evaluated, 10, "{kind}: {s:?}");
        assert!(s.max_gap <= 1e-4, "{kind}: {s:?}");
    }
    assert!(preservation_search(&fx, "sideways", 1, 0).is_err());
}

#[test]
fn identity_search_residuals_vanish() {
    let fx = Functionals::default();
    let s = identity_search(&fx, 20, 7);
    assert_eq!(s.evaluated, 20);
    assert_eq!(s.per_identity.len(), 7);
    assert!(s.max_residual <= 1e-7, "{s:?}");
}

#[test]
fn shannon_bridge_holds() {
    let fx = Functionals::default();
    let s = shannon_bridge_search(&fx, 20, 3);
    assert_eq!(s.evaluated, 20);
    assert!(s.max_residual <= 1e-8, "{s:?}");
}

#[test]
fn discrete_escort_equality() {
    let grid = discrete_escort_grid();
    assert!(grid <= 1e-14, "{grid:e}");
    // random orders reach k in the thousands; only the cancellation floor is expected
    let m = discrete_escort_search(5000, 11);
    assert!(m <= 1e-10, "{m:e}");
    assert_eq!(m.to_bits(), discrete_escort_search(5000, 11).to_bits());
}
