use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renyi_core::functionals::*;
use renyi_core::Density;

fn random_positive_density(rng: &mut ChaCha8Rng) -> Density {
    let log_uniform = |rng: &mut ChaCha8Rng| (rng.random_range(0.2f64.ln()..5f64.ln())).exp();
    match rng.random_range(0..3) {
        0 => Density::exponential(log_uniform(rng)).unwrap(),
        1 => Density::weibull(log_uniform(rng).clamp(0.5, 4.0), log_uniform(rng)).unwrap(),
        _ => Density::gamma(log_uniform(rng), log_uniform(rng)).unwrap(),
    }
}

fn closed_families() -> Vec<Density> {
    vec![
        Density::exponential(1.7).unwrap(),
        Density::gaussian(0.3, 1.4).unwrap(),
        Density::weibull(1.5, 2.0).unwrap(),
        Density::gamma(2.5, 0.7).unwrap(),
        Density::pareto(1.0, 3.0).unwrap(),
        Density::rayleigh(0.8).unwrap(),
        Density::half_generalized_normal(2.0, 1.0).unwrap(),
        Density::q_exponential(0.5, 1.0).unwrap(),
        Density::uniform(-1.0, 2.0).unwrap(),
    ]
}

#[test]
fn shannon_bridge_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let f = random_positive_density(&mut rng);
        let g = random_positive_density(&mut rng);
        let s = shannon_entropy(&f).unwrap().value;
        let d = kl_divergence(&f, &g).unwrap().value;
        let h = shannon_cross_entropy(&f, &g).unwrap().value;
        assert!((s + d - h).abs() <= 1e-8, "{f} {g}: {s} + {d} vs {h}");
    }
}

#[test]
fn renyi_limits_approach_shannon() {
    let g = Density::exponential(0.6).unwrap();
    for f in closed_families() {
        let s = shannon_entropy(&f).unwrap().value;
        for alpha in [1.0 - 1e-4, 1.0 + 1e-4] {
            let r = renyi_entropy(&f, alpha).unwrap().value;
            assert!((r - s).abs() <= 1e-3, "{f}: R_{alpha} = {r}, S = {s}");
        }
        if f.support() == g.support() {
            let kl = kl_divergence(&f, &g).unwrap().value;
            let h = shannon_cross_entropy(&f, &g).unwrap().value;
            for p in [1.0 - 1e-4, 1.0 + 1e-4] {
                assert!((renyi_divergence(&f, &g, p).unwrap().value - kl).abs() <= 1e-3);
                assert!((renyi_cross_entropy(&f, &g, p).unwrap().value - h).abs() <= 1e-3);
            }
        }
    }
}

#[test]
fn exponential_scale_law() {
    let one = Density::exponential(1.0).unwrap();
    for rate in [0.3, 2.0, 7.5] {
        let f = Density::exponential(rate).unwrap();
        for alpha in [0.4, 2.0, 3.5] {
            let r = renyi_entropy(&f, alpha).unwrap().value;
            let want = renyi_entropy(&one, alpha).unwrap().value - rate.ln();
            assert!((r - want).abs() <= 1e-8);
        }
    }
}

#[test]
fn cross_entropy_with_itself_is_renyi_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for f in closed_families() {
        for _ in 0..20 {
            let gamma = rng.random_range(0.2..2.5);
            match (renyi_cross_entropy(&f, &f, gamma), renyi_entropy(&f, gamma)) {
                (Ok(h), Ok(r)) => assert!((h.value - r.value).abs() <= 1e-8, "{f} γ={gamma}: {h:?} vs {r:?}"),
                // Heavy tails: ∫ f^γ diverges for small γ, and must do so on both sides.
                (Err(a), Err(b)) => assert_eq!(a.is_numerical(), b.is_numerical()),
                (h, r) => panic!("{f} γ={gamma}: {h:?} vs {r:?}"),
            }
        }
    }
}

#[test]
fn escort_cross_entropy_reductions() {
    let f = Density::exponential(1.0).unwrap();
    let g = Density::exponential(2.5).unwrap();
    let h = renyi_cross_entropy(&f, &g, 1.7).unwrap().value;
    assert_relative_eq!(escort_cross_entropy(&f, &g, 1.7, 1.0).unwrap().value, h, max_relative = 1e-12);
    let u = Density::uniform(0.0, 1.0).unwrap();
    for (gamma, xi) in [(0.5, 2.0), (1.8, -1.0), (3.0, 0.3)] {
        assert!(escort_cross_entropy(&u, &u, gamma, xi).unwrap().value.abs() < 1e-12);
    }
    // g = f: (1/(1-γ)) ln ∫ f^{1+ξ(γ-1)} = ξ R_{1+ξ(γ-1)}[f].
    let (gamma, xi) = (1.6, 2.0);
    let lhs = escort_cross_entropy(&f, &f, gamma, xi).unwrap().value;
    let rhs = xi * renyi_entropy(&f, 1.0 + xi * (gamma - 1.0)).unwrap().value;
    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
}

#[test]
fn cross_divergence_printed_reductions() {
    let f = Density::exponential(1.0).unwrap();
    let g = Density::exponential(2.0).unwrap();
    let h = Density::exponential(0.5).unwrap();
    let (a, b) = (1.7, 0.6);
    assert!(cross_divergence(&f, &h, &h, a, 1.0).unwrap().value.abs() < 1e-9);
    let ffh = cross_divergence(&f, &f, &h, a, b).unwrap().value;
    assert!((ffh + b * renyi_divergence(&f, &h, 1.0 + b * (a - 1.0)).unwrap().value).abs() < 1e-9);
    let d = renyi_divergence(&f, &g, 2.0 - a).unwrap().value;
    assert!((cross_divergence(&f, &g, &f, a, b).unwrap().value - d).abs() < 1e-9);
    assert!((cross_divergence(&f, &g, &h, a, 0.0).unwrap().value - d).abs() < 1e-9);
}

#[test]
fn fisher_of_exponential_closed_form() {
    for rate in [0.5, 1.0, 3.0] {
        let f = Density::exponential(rate).unwrap();
        for (p, lambda) in [(2.0, 1.0), (1.0, 0.5), (0.5, 3.0), (3.0, 0.8)] {
            if 1.0 + p * (lambda - 1.0) <= 0.0 {
                continue;
            }
            let want = rate.powf(p * lambda) / (1.0 + p * (lambda - 1.0));
            let r = generalized_fisher(&f, p, lambda).unwrap();
            assert!((r.integral.value - want).abs() <= 1e-8 * want.max(1.0), "rate {rate} p {p} λ {lambda}");
            assert_relative_eq!(r.phi, want.powf(1.0 / (p * lambda)), max_relative = 1e-9);
        }
    }
}

#[test]
fn cross_fisher_reduces_to_generalized_fisher() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let fs = [Density::exponential(1.0).unwrap(), Density::half_generalized_normal(2.0, 1.0).unwrap()];
    for _ in 0..20 {
        let f = &fs[rng.random_range(0..2)];
        let a = rng.random_range(1.2..2.5);
        let c = rng.random_range(0.5..2.0);
        // b = 1, g = f: ∫ f^{1+(a-2)c} |f'|^c, i.e. the (p, λ) = (c, a) integral.
        let cross = cross_fisher(f, f, a, 1.0, c).unwrap().value.powf(c);
        let direct = generalized_fisher(f, c, a).unwrap().integral.value;
        assert_relative_eq!(cross, direct, max_relative = 1e-8);
    }
    let f = Density::exponential(1.0).unwrap();
    let g = Density::exponential(1.5).unwrap();
    for c in [-1.0, 1.0] {
        let v = cross_fisher(&f, &g, 2.0, 1.0, c).unwrap().value;
        assert!(v.is_finite() && v > 0.0);
    }
}

#[test]
fn down_fisher_of_exponential() {
    let f = Density::exponential(1.0).unwrap();
    for (p, q, lambda) in [(1.0, 0.0, 2.0), (2.0, 0.5, 1.5), (0.5, 1.5, 3.0)] {
        let e = 1.0 + p * (lambda - 2.0) + q;
        let want = (p * lambda / (p - q) - 1.0f64).abs().powf(p) / e;
        assert_relative_eq!(down_fisher(&f, p, q, lambda).unwrap().value, want, max_relative = 1e-9);
    }
}

#[test]
fn cross_down_fisher_of_exponential_pair() {
    // a = b and ξ = 2: every factor but f collapses to 1.
    let f = Density::exponential(1.0).unwrap();
    for (ab, c) in [(0.5, 1.0), (1.0, -0.5), (2.0, 0.7)] {
        assert_relative_eq!(cross_down_fisher(&f, &f, ab, ab, c, 2.0).unwrap().value, 1.0, max_relative = 1e-10);
    }
}

#[test]
fn moment_functionals() {
    let f = Density::exponential(1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let p = rng.random_range(0.3..3.0);
        let gamma = rng.random_range(0.2..2.5);
        assert_relative_eq!(
            cross_deviation(&f, &f, p, gamma).unwrap().value,
            deviation(&f, p).unwrap().value,
            max_relative = 1e-10
        );
        let lambda = rng.random_range(-1.0..2.0);
        assert_relative_eq!(
            cross_upper_moment(&f, &f, p, lambda, 3.0).unwrap().moment.value,
            upper_moment(&f, p, 3.0).unwrap().moment.value,
            max_relative = 1e-10
        );
    }
    let u = Density::uniform(0.0, 1.0).unwrap();
    assert_relative_eq!(upper_moment(&u, 1.0, 3.0).unwrap().moment.value, 1.0 / 3.0, max_relative = 1e-9);
    assert_relative_eq!(upper_moment(&u, 2.0, 3.0).unwrap().moment.value, 2.0 / 15.0, max_relative = 1e-9);
    let m = upper_moment(&f, 1.0, 3.0).unwrap();
    assert_relative_eq!(m.deviation, 0.75, max_relative = 1e-9);
    // Exponential cross-deviation of f with itself is the exponential moment.
    let e = exp_cross_deviation(&f, &f, 1.5).unwrap().value;
    assert_relative_eq!(e, exp_moment(&f, -0.5).unwrap().value.powf(-2.0), max_relative = 1e-10);
}

#[test]
fn heavy_tails_and_mismatched_supports_fail() {
    let p = Density::pareto(1.0, 1.5).unwrap();
    assert!(deviation(&p, 2.0).is_err());
    let f = Density::exponential(1.0).unwrap();
    let n = Density::gaussian(0.0, 1.0).unwrap();
    assert!(matches!(kl_divergence(&f, &n), Err(renyi_core::Error::SupportMismatch(..))));
    assert!(upper_moment(&n, 1.0, 3.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_is_nonnegative_and_zero_on_diagonal(r1 in 0.2f64..5.0, r2 in 0.2f64..5.0, beta in 0.1f64..3.0) {
        let f = Density::exponential(r1).unwrap();
        let g = Density::exponential(r2).unwrap();
        // Exponential pair: ∫ f^β g^{1-β} is finite iff β r1 + (1-β) r2 > 0.
        prop_assume!(beta * r1 + (1.0 - beta) * r2 > 0.1 && (beta - 1.0).abs() > 0.05);
        let d = renyi_divergence(&f, &g, beta).unwrap().value;
        prop_assert!(d >= -1e-12);
        let closed = ((r1 / r2).ln() * beta - (beta * r1 + (1.0 - beta) * r2).ln() + r2.ln()) / (beta - 1.0);
        prop_assert!((d - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        prop_assert!(renyi_divergence(&f, &f, beta).unwrap().value.abs() < 1e-12);
    }
}
