use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renyi_core::functionals::Functionals;
use renyi_core::inequalities::*;
use renyi_core::{Density, Error};

fn fx() -> Functionals {
    Functionals::default()
}

fn exp(rate: f64) -> Density {
    Density::exponential(rate).unwrap()
}

#[test]
fn triples_from_orders() {
    for (a, b, c) in [(2.0, 0.0, 1.5), (3.0, 2.0, -1.0), (0.5, 0.25, -0.5)] {
        let t = solve_triple(a, b).unwrap();
        assert_relative_eq!(t.gamma, c, epsilon = 1e-15);
        assert!(t.residual().abs() < 1e-14);
        let back = solve_beta(a, c).unwrap();
        assert_relative_eq!(back.beta, b, epsilon = 1e-14);
    }
    for (a, b) in [(1.0, 0.5), (0.5, 1.0), (2.0, 2.0), (f64::NAN, 0.0)] {
        assert!(matches!(solve_triple(a, b), Err(Error::DegenerateParameters(_))), "({a}, {b})");
    }
}

#[test]
fn witness_exponents() {
    let e = solve_triple(2.0, 0.0).unwrap().exponents();
    assert_relative_eq!(e.k, 2.0, epsilon = 1e-15);
    assert_relative_eq!(e.tilt, 1.0, epsilon = 1e-15);
    assert_relative_eq!(e.paper_k, 0.5, epsilon = 1e-15);
    assert_relative_eq!(e.paper_tilt(), -0.5, epsilon = 1e-15);
}

#[test]
fn theorem_strings_round_trip() {
    for s in [
        "rrr",
        "escort:xi=2",
        "rel_escort:h=(exponential:rate=0.5),xi=1",
        "bip_down:a=1,b=1",
        "down_fisher:a=1,b=1,xi=2",
        "up:a=3",
        "up_exp",
        "upper_mom:a=1,b=3",
    ] {
        let t = Theorem::parse(s).unwrap();
        assert_eq!(Theorem::parse(&t.to_string()).unwrap().to_string(), t.to_string(), "{s}");
    }
    assert!(matches!(Theorem::parse("up:a=2").unwrap(), Theorem::UpExp));
    for bad in ["", "nope", "escort", "escort:xi=2,xi=3", "up:a=3,b=1", "rrr:a=1"] {
        assert!(Theorem::parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn rrr_reference_gap() {
    let f = exp(1.0);
    let paper = equality_witness(&Theorem::Rrr, &f, 2.0, 0.0, WitnessMode::Paper).unwrap();
    let r = check_rrr(&fx(), &f, &paper, 2.0, 0.0).unwrap();
    assert!(r.pass);
    assert_eq!(r.direction, Direction::Normal);
    assert!((r.gap - 0.446287).abs() <= 1e-5, "gap {}", r.gap);
    let corrected = equality_witness(&Theorem::Rrr, &f, 2.0, 0.0, WitnessMode::Corrected).unwrap();
    assert!(check_rrr(&fx(), &f, &corrected, 2.0, 0.0).unwrap().gap.abs() <= 1e-9);
}

#[test]
fn reversed_direction_when_alpha_below_beta() {
    let r = check_rrr(&fx(), &exp(1.0), &exp(2.0), 0.5, 0.75).unwrap();
    assert_eq!(r.direction, Direction::Reversed);
    assert_relative_eq!(r.gap, r.lhs - r.rhs, epsilon = 1e-15);
    assert!(r.pass, "{r:?}");
}

#[test]
fn report_serializes() {
    let r = check_escort(&fx(), &exp(1.0), &exp(2.0), 2.0, 0.0, 2.0).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    for key in ["theorem", "alpha", "beta", "gamma", "extras", "lhs", "rhs", "gap", "direction", "quad_error", "pass", "warning"] {
        assert!(v.get(key).is_some(), "{key} missing in {v}");
    }
    assert_eq!(v["extras"]["xi"], 2.0);
    assert_eq!(v["direction"], "normal");
}

fn equality_cases() -> Vec<(Theorem, Density, f64, f64)> {
    let half_gauss = Density::half_generalized_normal(2.0, 1.0).unwrap();
    vec![
        (Theorem::Rrr, exp(1.0), 2.0, 0.0),
        (Theorem::Rrr, exp(1.0), 0.5, 0.25),
        (Theorem::Rrr, Density::gaussian(0.0, 1.0).unwrap(), 2.0, 0.0),
        (Theorem::Escort { xi: 2.0 }, exp(1.0), 2.0, 0.0),
        (Theorem::Escort { xi: 0.5 }, Density::gamma(2.0, 1.0).unwrap(), 0.5, 0.25),
        (Theorem::RelEscort { h: exp(0.5), xi: 1.0 }, exp(1.0), 2.0, 0.0),
        (Theorem::BipDown { a: 1.0, b: 1.0 }, half_gauss.clone(), 0.5, 0.25),
        (Theorem::BipDown { a: 0.0, b: 2.0 }, half_gauss.clone(), 0.5, 0.0),
        (Theorem::DownFisher { a: 1.0, b: 1.0, xi: 2.0 }, exp(1.0), 2.0, 0.0),
        (Theorem::DownFisher { a: 0.4, b: 0.25, xi: 2.0 }, half_gauss, 0.5, 0.25),
        (Theorem::Up { a: 3.0 }, Density::pareto(1.0, 3.0).unwrap(), 2.0, 0.0),
        (Theorem::Up { a: 1.0 }, Density::gamma(2.0, 1.0).unwrap(), 0.5, 0.25),
        (Theorem::UpExp, exp(1.0), 2.0, 0.0),
        (Theorem::UpperMom { a: 1.0, b: 3.0 }, exp(1.0), 2.0, 0.0),
        (Theorem::UpperMom { a: 1.0, b: 3.0 }, exp(1.0), 0.5, 0.25),
    ]
}

#[test]
fn corrected_witnesses_attain_equality() {
    for (theorem, f, a, b) in equality_cases() {
        let g = equality_witness(&theorem, &f, a, b, WitnessMode::Corrected)
            .unwrap_or_else(|e| panic!("{theorem} {f} ({a},{b}): {e}"));
        let r = check(&fx(), &theorem, &f, &g, a, b).unwrap_or_else(|e| panic!("{theorem} {f} ({a},{b}): {e}"));
        assert!(r.gap.abs() <= 1e-7, "{theorem} {f} ({a},{b}): gap {}", r.gap);
        assert!(r.pass);
    }
}

#[test]
fn witnesses_cover_both_modes_when_tilts_agree() {
    // the two rules coincide when (α-1)/(1-β) = (1-α)/(α-β), i.e. α = 2β - 1, where both tilts are -2
    let f = Density::gaussian(0.3, 0.8).unwrap();
    for theorem in [Theorem::UpExp, Theorem::Escort { xi: 0.25 }] {
        let g = equality_witness(&theorem, &f, 0.5, 0.75, WitnessMode::Paper).unwrap();
        let r = check(&fx(), &theorem, &f, &g, 0.5, 0.75).unwrap();
        assert!(r.gap.abs() <= 1e-7, "{theorem}: {}", r.gap);
    }
}

#[test]
fn escort_with_zero_exponent_is_a_divergence_bound() {
    // ξ = 0: the lhs is D_β, the rhs the same divergence of order γ... both reduce to Rényi divergences
    let f = exp(1.0);
    let g = exp(1.7);
    let r = check_escort(&fx(), &f, &g, 2.0, 0.0, 0.0).unwrap();
    let d = fx().renyi_divergence(&f, &g, 0.0).unwrap().value;
    assert_relative_eq!(r.lhs, d, epsilon = 1e-10);
    assert!(r.pass);
}

#[test]
fn escort_at_unit_exponent_is_rrr() {
    let f = Density::weibull(1.5, 1.0).unwrap();
    let g = Density::gamma(1.5, 1.2).unwrap();
    let e = check_escort(&fx(), &f, &g, 2.0, 0.5, 1.0).unwrap();
    let r = check_rrr(&fx(), &f, &g, 2.0, 0.5).unwrap();
    assert_relative_eq!(e.lhs, r.lhs, epsilon = 1e-9);
    assert_relative_eq!(e.rhs, r.rhs, epsilon = 1e-9);
}

#[test]
fn preconditions() {
    let f = Density::gaussian(0.0, 1.0).unwrap();
    let g = Density::gaussian(0.5, 1.0).unwrap();
    assert!(matches!(check_bip_down(&fx(), &f, &g, 2.0, 0.0, 1.0, 1.0), Err(Error::PreconditionViolated(_))));
    assert!(matches!(check_up(&fx(), &f, &g, 2.0, 0.0, 3.0), Err(Error::PreconditionViolated(_))));
    let hg = Density::half_generalized_normal(2.0, 1.0).unwrap();
    assert!(matches!(
        check_bip_down(&fx(), &hg, &hg, 2.0, 0.0, 2.0, 1.0),
        Err(Error::DegenerateParameters(_))
    ));
    // a half-Gaussian has f f''/f'^2 = 1 - 1/x^2, so ξ = 0.5 is not above its supremum
    assert!(matches!(
        check_down_fisher(&fx(), &hg, &hg, 2.0, 0.0, 1.0, 1.0, 0.5),
        Err(Error::PreconditionViolated(_))
    ));
    assert!(check_rrr(&fx(), &exp(1.0), &f, 2.0, 0.0).is_err());
}

#[test]
fn conditioning_warning_near_degenerate_orders() {
    let f = exp(1.0);
    let g = exp(1.5);
    assert!(check_rrr(&fx(), &f, &g, 1.0 + 1e-7, 0.0).unwrap().conditioning_warning);
    assert!(!check_rrr(&fx(), &f, &g, 2.0, 0.0).unwrap().conditioning_warning);
}

fn random_exp_family(rng: &mut ChaCha8Rng) -> Density {
    let s = |rng: &mut ChaCha8Rng| rng.random_range(0.5f64..2.0);
    match rng.random_range(0..3) {
        0 => exp(s(rng)),
        1 => Density::weibull(rng.random_range(1.0..2.5), s(rng)).unwrap(),
        _ => Density::gamma(rng.random_range(1.0..3.0), s(rng)).unwrap(),
    }
}

fn random_orders(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let a: f64 = rng.random_range(0.2..3.0);
        let b: f64 = rng.random_range(0.0..2.5);
        if (a - b).abs() > 0.05 && (a - 1.0).abs() > 0.05 && (b - 1.0).abs() > 0.05 {
            return (a, b);
        }
    }
}

#[test]
fn rrr_holds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 200 {
        let (f, g) = (random_exp_family(&mut rng), random_exp_family(&mut rng));
        let (a, b) = random_orders(&mut rng);
        match check_rrr(&fx(), &f, &g, a, b) {
            Ok(r) => {
                assert!(r.gap >= -1e-7, "{f} {g} ({a},{b}): {}", r.gap);
                checked += 1;
            }
            Err(Error::DivergentIntegral(_)) => {}
            Err(e) => panic!("{f} {g} ({a},{b}): {e}"),
        }
    }
}

#[test]
fn cross_divergence_identities_on_examples() {
    let f = exp(1.0);
    let g = Density::gamma(2.0, 1.0 / 1.1).unwrap();
    let h = Density::gamma(1.5, 1.0 / 0.9).unwrap();
    let rep = cross_divergence_identities(&fx(), &f, &g, &h, 0.7, 0.6).unwrap();
    assert_eq!(rep.identities.len(), 7);
    assert!(rep.max_residual <= 1e-7, "{rep:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triple_relation_holds(a in -3.0f64..4.0, b in -3.0f64..4.0) {
        prop_assume!((a - 1.0).abs() > 1e-3 && (b - 1.0).abs() > 1e-3 && (a - b).abs() > 1e-3);
        let t = solve_triple(a, b).unwrap();
        prop_assert!(t.residual().abs() <= 1e-9 * (1.0 + t.gamma.abs() * (a - b).abs()));
        let e = t.exponents();
        prop_assert!((e.k - 1.0 - e.tilt).abs() <= 1e-9 * (1.0 + e.k.abs()));
    }

    #[test]
    fn rrr_gap_non_negative(r1 in 0.3f64..3.0, r2 in 0.3f64..3.0, a in 0.2f64..3.0, b in 0.0f64..0.9) {
        prop_assume!((a - 1.0).abs() > 0.05 && (a - b).abs() > 0.05);
        match check_rrr(&fx(), &exp(r1), &exp(r2), a, b) {
            Ok(r) => prop_assert!(r.gap >= -1e-7, "gap {}", r.gap),
            Err(Error::DivergentIntegral(_)) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
