//! Independent evidence for the inequalities: a quadrature-free discrete
//! oracle, seeded random violation search and simplex gap minimization over
//! parametric families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::functionals::Functionals;
use crate::inequalities::{
    check, cross_divergence_identities, solve_triple, sup_curvature, CheckReport, Direction, Theorem,
};
use crate::transforms::{verify_divergence_preservation, TransformSpec};

// ---- discrete oracle ----

/// Positive weights, not necessarily normalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 weights, got {}", weights.len())));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidParameter(format!("weights must be finite and positive, got {w}")));
        }
        Ok(DiscreteDistribution { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Normalized probabilities and their logs.
    fn normalized(&self) -> (Vec<f64>, Vec<f64>) {
        let total: f64 = self.weights.iter().sum();
        let p: Vec<f64> = self.weights.iter().map(|w| w / total).collect();
        let lp = p.iter().map(|x| x.ln()).collect();
        (p, lp)
    }

    /// `u^e`, renormalized.
    pub fn escort(&self, e: f64) -> Result<Self> {
        let (_, lp) = self.normalized();
        let m = lp.iter().map(|l| e * l).fold(f64::NEG_INFINITY, f64::max);
        DiscreteDistribution::new(lp.iter().map(|l| (e * l - m).exp()).collect())
    }
}

/// `ln Σ p_i e^{s d_i}` for probabilities `p`, accurate when `s` is small.
fn ln_mean_exp(p: &[f64], d: &[f64], s: f64) -> f64 {
    let spread = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if s.abs() * spread < 0.5 {
        p.iter().zip(d).map(|(p, d)| p * (s * d).exp_m1()).sum::<f64>().ln_1p()
    } else {
        let m = d.iter().map(|d| s * d).fold(f64::NEG_INFINITY, f64::max);
        m + p.iter().zip(d).map(|(p, d)| p * (s * d - m).exp()).sum::<f64>().ln()
    }
}

/// Oriented gap of `R_α[u] + D_β[u||v] ≤ H_γ[u;v]` with sums in place of
/// integrals. The inequality is invariant under rescaling either argument,
/// so both are normalized first.
pub fn discrete_rrr_check(u: &DiscreteDistribution, v: &DiscreteDistribution, alpha: f64, beta: f64) -> Result<f64> {
    if u.weights.len() != v.weights.len() {
        return Err(Error::InvalidParameter(format!("lengths differ: {} vs {}", u.weights.len(), v.weights.len())));
    }
    let t = solve_triple(alpha, beta)?;
    let (p, lp) = u.normalized();
    let (_, lq) = v.normalized();
    let ratio: Vec<f64> = lq.iter().zip(&lp).map(|(q, p)| q - p).collect();
    let renyi = ln_mean_exp(&p, &lp, alpha - 1.0) / (1.0 - alpha);
    let divergence = ln_mean_exp(&p, &ratio, 1.0 - beta) / (beta - 1.0);
    let cross = ln_mean_exp(&p, &lq, t.gamma - 1.0) / (1.0 - t.gamma);
    let lhs = renyi + divergence;
    Ok(if alpha > beta { cross - lhs } else { lhs - cross })
}

/// Orders drawn uniformly from `[0.15, 3]`, avoiding `1 ± 1e-3`, with `|α-β| ≥ 1e-3`.
pub fn random_orders<R: Rng>(rng: &mut R) -> (f64, f64) {
    let draw = |rng: &mut R| loop {
        let v: f64 = rng.random_range(0.15..3.0);
        if (v - 1.0).abs() >= 1e-3 {
            return v;
        }
    };
    loop {
        let (a, b) = (draw(rng), draw(rng));
        if (a - b).abs() >= 1e-3 {
            return (a, b);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteCase {
    pub index: u64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteSearch {
    pub n: u64,
    pub min_gap: f64,
    pub worst_case: DiscreteCase,
    pub reversed: u64,
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn discrete_case(seed: u64, index: u64) -> DiscreteCase {
    let mut rng = stream(seed, index);
    let len = rng.random_range(2..=8);
    let weights = |rng: &mut ChaCha8Rng| (0..len).map(|_| rng.random_range(-4.0f64..4.0).exp()).collect::<Vec<_>>();
    let (u, v) = (weights(&mut rng), weights(&mut rng));
    let (alpha, beta) = random_orders(&mut rng);
    let gap = discrete_rrr_check(
        &DiscreteDistribution::new(u.clone()).expect("positive weights"),
        &DiscreteDistribution::new(v.clone()).expect("positive weights"),
        alpha,
        beta,
    )
    .expect("valid orders");
    DiscreteCase { index, u, v, alpha, beta, gap }
}

/// Minimum discrete gap over `n` seeded random instances (2 to 8 atoms,
/// log-uniform weights over `[e^-4, e^4]`).
pub fn discrete_jensen_search(n: u64, seed: u64) -> DiscreteSearch {
    let (worst, reversed) = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = discrete_case(seed, i);
            let r = u64::from(c.alpha < c.beta);
            (c, r)
        })
        .reduce_with(|(a, ra), (b, rb)| {
            let keep_a = a.gap < b.gap || (a.gap == b.gap && a.index < b.index);
            (if keep_a { a } else { b }, ra + rb)
        })
        .expect("n > 0");
    DiscreteSearch { n, min_gap: worst.gap, worst_case: worst, reversed }
}

/// Orders of the deterministic escort-equality grid.
pub const ESCORT_GRID_ORDERS: [f64; 6] = [0.25, 0.5, 0.75, 1.5, 2.0, 3.0];

/// `|gap|` of the discrete inequality for `v` the escort of `u` of order
/// `k = (α-1)/(γ-1)`.
pub fn discrete_escort_gap(u: &DiscreteDistribution, alpha: f64, beta: f64) -> Result<f64> {
    let k = solve_triple(alpha, beta)?.exponents().k;
    Ok(discrete_rrr_check(u, &u.escort(k)?, alpha, beta)?.abs())
}

/// Largest escort-equality `|gap|` over two-atom `u = (i/10, 1 - i/10)`,
/// `i = 1..9`, and all ordered pairs of distinct [`ESCORT_GRID_ORDERS`].
pub fn discrete_escort_grid() -> f64 {
    let mut worst = 0.0f64;
    for i in 1..10 {
        let p = i as f64 / 10.0;
        let u = DiscreteDistribution::new(vec![p, 1.0 - p]).expect("positive weights");
        for &a in &ESCORT_GRID_ORDERS {
            for &b in ESCORT_GRID_ORDERS.iter().filter(|&&b| b != a) {
                worst = worst.max(discrete_escort_gap(&u, a, b).expect("grid orders are valid"));
            }
        }
    }
    worst
}

/// Largest `|gap|` of the discrete inequality at its equality case
/// `v = u^{(k)}` (escort of order `k = (α-1)/(γ-1)`) over `n` seeded
/// instances drawn like those of [`discrete_jensen_search`]. Draws whose
/// escort underflows to a point mass are redrawn. Orders near 1 make `k`
/// large and both sides of order `k`, so expect cancellation well above
/// machine epsilon there.
pub fn discrete_escort_search(n: u64, seed: u64) -> f64 {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let (gap, _) = first_success(seed, i, |rng| {
                let len = rng.random_range(2..=8);
                let u: Vec<f64> = (0..len).map(|_| rng.random_range(-4.0f64..4.0).exp()).collect();
                let (alpha, beta) = random_orders(rng);
                discrete_escort_gap(&DiscreteDistribution::new(u)?, alpha, beta)
            });
            gap.unwrap_or(0.0)
        })
        .reduce(|| 0.0, f64::max)
}

// ---- random search ----

/// One inequality instance.
#[derive(Debug, Clone)]
pub struct Case {
    pub theorem: Theorem,
    pub f: Density,
    pub g: Density,
    pub alpha: f64,
    pub beta: f64,
}

/// Serializable form of a [`Case`], enough to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub index: u64,
    pub theorem: String,
    pub f: String,
    pub g: String,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub case: CaseRecord,
    pub report: CheckReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub n: u64,
    /// Instances rejected by the sampler or by a failed evaluation before
    /// an evaluable one was drawn.
    pub count_errors: u64,
    pub count_warnings: u64,
    pub count_reversed: u64,
    pub count_failures: u64,
    pub worst_gap: f64,
    pub worst_case: Option<Outcome>,
}

/// Draws before an index gives up.
pub const MAX_ATTEMPTS: usize = 64;

/// First success of `attempt` on the stream of `index`, with the number of
/// failed draws before it.
fn first_success<T>(seed: u64, index: u64, mut attempt: impl FnMut(&mut ChaCha8Rng) -> Result<T>) -> (Option<T>, u64) {
    let mut rng = stream(seed, index);
    let mut errors = 0;
    for _ in 0..MAX_ATTEMPTS {
        match attempt(&mut rng) {
            Ok(v) => return (Some(v), errors),
            Err(_) => errors += 1,
        }
    }
    (None, errors)
}

/// Evaluates `n` instances, each from its own seeded stream; an index keeps
/// drawing until its instance evaluates (at most [`MAX_ATTEMPTS`] times).
/// Errors are counted, never returned. Indices that exhaust their attempts
/// contribute no outcome.
pub fn random_search_violations<S>(fx: &Functionals, n: u64, seed: u64, sampler: S) -> (SearchSummary, Vec<Outcome>)
where
    S: Fn(&mut ChaCha8Rng) -> Result<Case> + Sync,
{
    let results: Vec<(Option<Outcome>, u64)> = (0..n)
        .into_par_iter()
        .map(|index| {
            first_success(seed, index, |rng| {
                let c = sampler(rng)?;
                let report = check(fx, &c.theorem, &c.f, &c.g, c.alpha, c.beta)?;
                let case = CaseRecord {
                    index,
                    theorem: c.theorem.to_string(),
                    f: c.f.to_string(),
                    g: c.g.to_string(),
                    alpha: c.alpha,
                    beta: c.beta,
                };
                Ok(Outcome { case, report })
            })
        })
        .collect();
    let mut summary = SearchSummary {
        n,
        count_errors: 0,
        count_warnings: 0,
        count_reversed: 0,
        count_failures: 0,
        worst_gap: f64::INFINITY,
        worst_case: None,
    };
    let mut outcomes = Vec::with_capacity(results.len());
    for (o, errors) in results {
        summary.count_errors += errors;
        let Some(o) = o else { continue };
        let r = &o.report;
        summary.count_warnings += u64::from(r.conditioning_warning);
        summary.count_reversed += u64::from(r.direction == Direction::Reversed);
        summary.count_failures += u64::from(!r.pass);
        if r.gap < summary.worst_gap {
            summary.worst_gap = r.gap;
            summary.worst_case = Some(o.clone());
        }
        outcomes.push(o);
    }
    (summary, outcomes)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Exponential, Weibull or gamma with log-uniform parameters in `[0.2, 5]`
/// (shapes in `[0.5, 5]`, and at most 1 when `decreasing`).
pub fn random_positive_density(rng: &mut ChaCha8Rng, decreasing: bool) -> Result<Density> {
    let shape = |rng: &mut ChaCha8Rng| if decreasing { log_uniform(rng, 0.5, 1.0) } else { log_uniform(rng, 0.5, 5.0) };
    match rng.random_range(0..3) {
        0 => Density::exponential(log_uniform(rng, 0.2, 5.0)),
        1 => {
            let k = shape(rng);
            Density::weibull(k, log_uniform(rng, 0.2, 5.0))
        }
        _ => {
            let k = shape(rng);
            Density::gamma(k, log_uniform(rng, 0.2, 5.0))
        }
    }
}

/// Pair on a common support: two of exponential/Weibull/gamma on `(0, inf)`,
/// or (one time in four) two Pareto laws with the same scale.
pub fn random_pair(rng: &mut ChaCha8Rng, decreasing: bool) -> Result<(Density, Density)> {
    if rng.random_range(0..4) == 0 {
        let xm = log_uniform(rng, 0.2, 5.0);
        let p = |rng: &mut ChaCha8Rng| Density::pareto(xm, log_uniform(rng, 0.2, 5.0));
        let f = p(rng)?;
        Ok((f, p(rng)?))
    } else {
        let f = random_positive_density(rng, decreasing)?;
        Ok((f, random_positive_density(rng, false)?))
    }
}

fn random_exponent(rng: &mut ChaCha8Rng, lo: f64, hi: f64, avoid: &[f64]) -> f64 {
    loop {
        let v = rng.random_range(lo..hi);
        if avoid.iter().all(|a| (v - a).abs() > 1e-2) {
            return v;
        }
    }
}

/// Sampler of instances for a theorem name (`rrr`, `escort`, `rel_escort`,
/// `bip_down`, `down_fisher`, `up`, `up_exp`, `upper_mom`), respecting each
/// theorem's preconditions.
pub fn case_sampler(name: &str) -> Result<impl Fn(&mut ChaCha8Rng) -> Result<Case> + Sync + use<>> {
    const NAMES: [&str; 8] = ["rrr", "escort", "rel_escort", "bip_down", "down_fisher", "up", "up_exp", "upper_mom"];
    let Some(&name) = NAMES.iter().find(|n| **n == name) else {
        return Err(Error::InvalidParameter(format!("no sampler for theorem `{name}`")));
    };
    Ok(move |rng: &mut ChaCha8Rng| {
        let decreasing = matches!(name, "bip_down" | "down_fisher");
        let (f, g) = random_pair(rng, decreasing)?;
        let (alpha, beta) = random_orders(rng);
        let theorem = match name {
            "rrr" => Theorem::Rrr,
            "escort" => Theorem::Escort { xi: rng.random_range(-2.0..3.0) },
            "rel_escort" => {
                let h = if matches!(f.family(), crate::densities::Family::Pareto { .. }) {
                    Density::pareto(f.support().lo(), log_uniform(rng, 0.2, 5.0))?
                } else {
                    random_positive_density(rng, false)?
                };
                Theorem::RelEscort { h, xi: rng.random_range(-2.0..3.0) }
            }
            "bip_down" => {
                let b = random_exponent(rng, -2.0, 3.0, &[0.0]);
                Theorem::BipDown { a: random_exponent(rng, -2.0, 4.0, &[2.0 * b]), b }
            }
            "down_fisher" => {
                let b = random_exponent(rng, -2.0, 3.0, &[0.0]);
                let a = random_exponent(rng, -2.0, 4.0, &[2.0 * b]);
                let sup = sup_curvature(&f)?;
                if !sup.is_finite() {
                    return Err(Error::PreconditionViolated(format!("unbounded curvature ratio for {f}")));
                }
                Theorem::DownFisher { a, b, xi: sup + rng.random_range(0.1..2.0) }
            }
            "up" => Theorem::Up { a: random_exponent(rng, -2.0, 4.0, &[2.0]) },
            "up_exp" => Theorem::UpExp,
            _ => Theorem::UpperMom { a: random_exponent(rng, -2.0, 4.0, &[2.0]), b: random_exponent(rng, -2.0, 4.0, &[2.0]) },
        };
        Ok(Case { theorem, f, g, alpha, beta })
    })
}

// ---- transforms ----

/// One divergence-preservation instance.
#[derive(Debug, Clone)]
pub struct TransformCase {
    pub f: Density,
    pub g: Density,
    pub spec: TransformSpec,
    pub gamma: f64,
}

/// Sampler of preservation instances for a transform kind (`escort`,
/// `relative_escort`, `down`, `up`, `up_exp`). Down maps draw decreasing
/// `f`; the exponential up map draws `f` with `∫ e^x f < ∞`.
pub fn transform_case_sampler(kind: &str) -> Result<impl Fn(&mut ChaCha8Rng) -> Result<TransformCase> + Sync + use<>> {
    const KINDS: [&str; 5] = ["escort", "relative_escort", "down", "up", "up_exp"];
    let Some(&kind) = KINDS.iter().find(|k| **k == kind) else {
        return Err(Error::InvalidParameter(format!("unknown transform kind `{kind}`")));
    };
    Ok(move |rng: &mut ChaCha8Rng| {
        let (f, g) = match kind {
            "up_exp" => {
                let light = |rng: &mut ChaCha8Rng| match rng.random_range(0..3) {
                    0 => Density::exponential(log_uniform(rng, 1.5, 5.0)),
                    1 => Density::weibull(log_uniform(rng, 1.0, 4.0), log_uniform(rng, 0.2, 0.6)),
                    _ => Density::gamma(log_uniform(rng, 0.5, 5.0), log_uniform(rng, 0.1, 0.6)),
                };
                let f = light(rng)?;
                (f, light(rng)?)
            }
            _ => random_pair(rng, kind == "down")?,
        };
        let spec = match kind {
            "escort" => TransformSpec::Escort { xi: random_exponent(rng, -1.0, 2.5, &[0.0]) },
            "relative_escort" => {
                let h = if matches!(f.family(), crate::densities::Family::Pareto { .. }) {
                    Density::pareto(f.support().lo(), log_uniform(rng, 0.2, 5.0))?
                } else {
                    random_positive_density(rng, false)?
                };
                TransformSpec::RelativeEscort { h, xi: random_exponent(rng, -1.0, 2.0, &[0.0]) }
            }
            "down" => {
                let b = rng.random_range(0.3..2.0);
                TransformSpec::Down { a: random_exponent(rng, -1.0, 2.0, &[2.0 * b]), b }
            }
            "up" => TransformSpec::Up { a: random_exponent(rng, -1.0, 4.0, &[2.0]) },
            _ => TransformSpec::UpExp,
        };
        spec.validate(&f)?;
        Ok(TransformCase { f, g, spec, gamma: random_exponent(rng, 0.2, 2.5, &[1.0]) })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PreservationRecord {
    pub index: u64,
    pub transform: String,
    pub f: String,
    pub g: String,
    pub gamma: f64,
    pub grid: f64,
    pub direct: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PreservationSummary {
    pub kind: String,
    pub n: u64,
    pub evaluated: u64,
    pub count_errors: u64,
    pub max_gap: f64,
    pub worst_case: Option<PreservationRecord>,
}

/// `|D_γ[𝒪f||𝒪̄g] - D_γ[f||g]|` on `n` random instances of one transform kind.
pub fn preservation_search(fx: &Functionals, kind: &str, n: u64, seed: u64) -> Result<PreservationSummary> {
    let sampler = transform_case_sampler(kind)?;
    let results: Vec<(Option<PreservationRecord>, u64)> = (0..n)
        .into_par_iter()
        .map(|index| {
            first_success(seed, index, |rng| {
                let c = sampler(rng)?;
                let p = verify_divergence_preservation(fx, &c.f, &c.g, &c.spec, c.gamma)?;
                Ok(PreservationRecord {
                    index,
                    transform: c.spec.to_string(),
                    f: c.f.to_string(),
                    g: c.g.to_string(),
                    gamma: c.gamma,
                    grid: p.grid,
                    direct: p.direct,
                    gap: p.gap,
                })
            })
        })
        .collect();
    let mut out = PreservationSummary { kind: kind.to_string(), n, evaluated: 0, count_errors: 0, max_gap: 0.0, worst_case: None };
    for (r, errors) in results {
        out.count_errors += errors;
        let Some(r) = r else { continue };
        out.evaluated += 1;
        if out.worst_case.is_none() || r.gap > out.max_gap {
            out.max_gap = r.gap;
            out.worst_case = Some(r);
        }
    }
    Ok(out)
}

// ---- identities ----

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRecord {
    pub index: u64,
    pub f: String,
    pub g: String,
    pub h: String,
    pub a: f64,
    pub b: f64,
    pub identity: String,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySummary {
    pub n: u64,
    pub evaluated: u64,
    pub count_errors: u64,
    pub max_residual: f64,
    /// Largest residual of each identity.
    pub per_identity: Vec<(String, f64)>,
    pub worst_case: Option<IdentityRecord>,
}

/// Exponential or gamma law with log-uniform parameters; exponential tails
/// keep most of the mixed powers in the identities integrable.
fn random_light_density(rng: &mut ChaCha8Rng) -> Result<Density> {
    if rng.random_range(0..2) == 0 {
        Density::exponential(log_uniform(rng, 0.5, 2.0))
    } else {
        Density::gamma(log_uniform(rng, 0.7, 3.0), log_uniform(rng, 0.5, 2.0))
    }
}

/// Cross-divergence identity residuals on `n` random `(f, g, h, a, b)`;
/// draws with divergent integrals are redrawn.
pub fn identity_search(fx: &Functionals, n: u64, seed: u64) -> IdentitySummary {
    let results: Vec<(Option<(IdentityRecord, Vec<(String, f64)>)>, u64)> = (0..n)
        .into_par_iter()
        .map(|index| {
            first_success(seed, index, |rng| {
                let (f, g, h) = (random_light_density(rng)?, random_light_density(rng)?, random_light_density(rng)?);
                let a = random_exponent(rng, -1.0, 2.5, &[1.0, 0.0]);
                let b = random_exponent(rng, -1.5, 2.0, &[0.0, 1.0]);
                let rep = cross_divergence_identities(fx, &f, &g, &h, a, b)?;
                let worst = rep.identities.iter().max_by(|x, y| x.residual.total_cmp(&y.residual)).expect("identities");
                let record = IdentityRecord {
                    index,
                    f: f.to_string(),
                    g: g.to_string(),
                    h: h.to_string(),
                    a,
                    b,
                    identity: worst.name.to_string(),
                    residual: worst.residual,
                };
                Ok((record, rep.identities.iter().map(|r| (r.name.to_string(), r.residual)).collect()))
            })
        })
        .collect();
    let mut out =
        IdentitySummary { n, evaluated: 0, count_errors: 0, max_residual: 0.0, per_identity: Vec::new(), worst_case: None };
    for (r, errors) in results {
        out.count_errors += errors;
        let Some((record, all)) = r else { continue };
        out.evaluated += 1;
        for (name, res) in all {
            match out.per_identity.iter_mut().find(|(n, _)| *n == name) {
                Some(entry) => entry.1 = entry.1.max(res),
                None => out.per_identity.push((name, res)),
            }
        }
        if out.worst_case.is_none() || record.residual > out.max_residual {
            out.max_residual = record.residual;
            out.worst_case = Some(record);
        }
    }
    out
}

// ---- Shannon bridge ----

#[derive(Debug, Clone, Serialize)]
pub struct BridgeSummary {
    pub n: u64,
    pub evaluated: u64,
    pub count_errors: u64,
    /// Largest `|S[f] + D[f||g] - H[f;g]|`.
    pub max_residual: f64,
    pub worst_case: Option<(String, String)>,
}

/// `S[f] + KL[f||g] = H[f;g]` on `n` random pairs.
pub fn shannon_bridge_search(fx: &Functionals, n: u64, seed: u64) -> BridgeSummary {
    let results: Vec<(Option<(f64, String, String)>, u64)> = (0..n)
        .into_par_iter()
        .map(|index| {
            first_success(seed, index, |rng| {
                let (f, g) = random_pair(rng, false)?;
                let s = fx.shannon_entropy(&f)?.value;
                let d = fx.kl_divergence(&f, &g)?.value;
                let h = fx.shannon_cross_entropy(&f, &g)?.value;
                Ok(((s + d - h).abs(), f.to_string(), g.to_string()))
            })
        })
        .collect();
    let mut out = BridgeSummary { n, evaluated: 0, count_errors: 0, max_residual: 0.0, worst_case: None };
    for (r, errors) in results {
        out.count_errors += errors;
        let Some((res, f, g)) = r else { continue };
        out.evaluated += 1;
        if out.worst_case.is_none() || res > out.max_residual {
            out.max_residual = res;
            out.worst_case = Some((f, g));
        }
    }
    out
}

// ---- sharpness probing ----

/// Parametric families for the trial density `g`, with box bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamFamily {
    /// `[rate]`
    Exponential,
    /// `[mu, sigma]`
    Gaussian,
    /// `[shape, scale]`
    Gamma,
    /// `[shape, scale]`
    Weibull,
}

impl ParamFamily {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(ParamFamily::Exponential),
            "gaussian" => Ok(ParamFamily::Gaussian),
            "gamma" => Ok(ParamFamily::Gamma),
            "weibull" => Ok(ParamFamily::Weibull),
            _ => Err(Error::InvalidParameter(format!("unknown parametric family `{s}`"))),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            ParamFamily::Exponential => 1,
            _ => 2,
        }
    }

    /// Box `(lower, upper)` for each parameter.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            ParamFamily::Exponential => vec![(1e-3, 1e3)],
            ParamFamily::Gaussian => vec![(-1e3, 1e3), (1e-3, 1e3)],
            ParamFamily::Gamma | ParamFamily::Weibull => vec![(1e-2, 1e2), (1e-3, 1e3)],
        }
    }

    pub fn build(&self, p: &[f64]) -> Result<Density> {
        if p.len() != self.dimension() {
            return Err(Error::InvalidParameter(format!("{self:?} takes {} parameters, got {}", self.dimension(), p.len())));
        }
        if self.bounds().iter().zip(p).any(|((lo, hi), v)| !(lo <= v && v <= hi)) {
            return Err(Error::InvalidParameter(format!("{p:?} outside the box of {self:?}")));
        }
        match self {
            ParamFamily::Exponential => Density::exponential(p[0]),
            ParamFamily::Gaussian => Density::gaussian(p[0], p[1]),
            ParamFamily::Gamma => Density::gamma(p[0], p[1]),
            ParamFamily::Weibull => Density::weibull(p[0], p[1]),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub best_params: Vec<f64>,
    pub best_gap: f64,
    pub initial_gap: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Iteration budget.
    pub budget: usize,
    /// Stop when the spread of gaps over the simplex falls below this.
    pub gap_tol: f64,
    /// ... and the simplex diameter (relative to the parameters) below this.
    pub param_tol: f64,
    /// Initial step, relative to each starting parameter (absolute when it is 0).
    pub step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { budget: 2000, gap_tol: 1e-13, param_tol: 1e-9, step: 0.2 }
    }
}

/// Nelder–Mead minimization of `objective`; non-finite values act as walls.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(objective: F, x0: &[f64], opts: &SimplexOptions) -> OptimizationResult {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i] == 0.0 { opts.step } else { opts.step * x[i] };
        let v = eval(&x);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0, f64::max);
        if best.is_finite() && (worst - best).abs() <= opts.gap_tol && diameter <= opts.param_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (simplex[n].0[j] - centroid[j])).collect() };
        let xr = along(-alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-gamma);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for point in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = x_best.iter().zip(&point.0).map(|(b, x)| b + sigma * (x - b)).collect();
            let v = eval(&x);
            *point = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best_params, best_gap) = simplex.swap_remove(0);
    OptimizationResult { best_params, best_gap, initial_gap: f0, iterations, evaluations, converged }
}

/// Minimizes the oriented gap over `g` in `family`, starting from `x0`.
/// Candidates that fail to build or evaluate count as `+inf`.
#[allow(clippy::too_many_arguments)]
pub fn minimize_gap(
    fx: &Functionals,
    theorem: &Theorem,
    f: &Density,
    family: ParamFamily,
    x0: &[f64],
    alpha: f64,
    beta: f64,
    opts: &SimplexOptions,
) -> Result<OptimizationResult> {
    solve_triple(alpha, beta)?;
    family.build(x0)?;
    let objective = |p: &[f64]| {
        family
            .build(p)
            .and_then(|g| check(fx, theorem, f, &g, alpha, beta))
            .map(|r| r.gap)
            .unwrap_or(f64::INFINITY)
    };
    Ok(nelder_mead(objective, x0, opts))
}
