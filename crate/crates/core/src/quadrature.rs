//! Adaptive one-dimensional quadrature.
//!
//! Every integral in the crate goes through [`integrate`]: a globally adaptive
//! 21-point Gauss–Kronrod scheme that always refines the panel with the largest
//! error estimate. Unbounded intervals are mapped onto a finite parameter
//! interval first:
//!
//! | interval      | map                     |
//! |---------------|-------------------------|
//! | `(a, b)`      | identity                |
//! | `(a, +inf)`   | `x = a + t / (1 - t)`   |
//! | `(-inf, b)`   | `x = b - t / (1 - t)`   |
//! | `(-inf, inf)` | `x = t / (1 - t^2)`     |
//!
//! Kronrod nodes are interior, so the integrand is never evaluated at an
//! endpoint or at a declared singular point. Panels are split at
//! [`QuadratureConfig::singular_points`] and [`QuadratureConfig::breakpoints`].
//!
//! [`CumulativeTable`] tabulates `Y(x) = ∫_x^hi f` on a node grid and answers
//! tail-integral queries either by monotone interpolation or exactly (table
//! value plus one short adaptive integral).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integrand magnitudes above this are treated as overflow.
pub const OVERFLOW_GUARD: f64 = 1e300;

/// Relative width below which an edge panel that still dominates the error
/// triggers a divergence probe.
const EDGE_PROBE_WIDTH: f64 = 1e-30;

/// Shell ratio flagged by that probe; integrable `|x|^-s` singularities give `2^{-32(1-s)} < 1`.
const EDGE_PROBE_RATIO: f64 = 0.99;

/// Open interval `(lo, hi)` with possibly infinite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn positive() -> Self {
        Interval { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// Membership in the open interval.
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Integrable singularities; panels are split here.
    pub singular_points: Vec<f64>,
    /// Extra initial split points (scale hints such as a mode or a mean).
    pub breakpoints: Vec<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            singular_points: Vec::new(),
            breakpoints: Vec::new(),
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(Error::InvalidParameter(format!(
                "quadrature config needs rel_tol > 0, abs_tol > 0, max_subdivisions >= 1 (got {}, {}, {})",
                self.rel_tol, self.abs_tol, self.max_subdivisions
            )));
        }
        Ok(())
    }

    pub fn with_points(&self, singular: &[f64], breaks: &[f64]) -> Self {
        let mut cfg = self.clone();
        cfg.singular_points.extend_from_slice(singular);
        cfg.breakpoints.extend_from_slice(breaks);
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadratureResult {
    /// The value, or [`Error::NotConverged`] when the tolerance was not met.
    pub fn converged_value(&self) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::NotConverged { value: self.value, error: self.error_estimate })
        }
    }
}

/// Interval maps onto a finite `t` range. Half-line maps carry a length
/// scale `max(1, |end|)`, so tails starting far from the origin keep their
/// mass away from `t = 1`.
#[derive(Debug, Clone, Copy)]
enum Map {
    Identity,
    Upper(f64, f64),
    Lower(f64, f64),
    Both,
}

impl Map {
    fn for_interval(iv: &Interval) -> (Map, f64, f64) {
        let scale = |e: f64| e.abs().max(1.0);
        match (iv.lo.is_finite(), iv.hi.is_finite()) {
            (true, true) => (Map::Identity, iv.lo, iv.hi),
            (true, false) => (Map::Upper(iv.lo, scale(iv.lo)), 0.0, 1.0),
            (false, true) => (Map::Lower(iv.hi, scale(iv.hi)), 0.0, 1.0),
            (false, false) => (Map::Both, -1.0, 1.0),
        }
    }

    fn x(&self, t: f64) -> f64 {
        match *self {
            Map::Identity => t,
            Map::Upper(a, s) => a + s * t / (1.0 - t),
            Map::Lower(b, s) => b - s * t / (1.0 - t),
            Map::Both => t / ((1.0 - t) * (1.0 + t)),
        }
    }

    fn jacobian(&self, t: f64) -> f64 {
        match *self {
            Map::Identity => 1.0,
            Map::Upper(_, s) | Map::Lower(_, s) => {
                let u = 1.0 - t;
                s / (u * u)
            }
            Map::Both => {
                let s = (1.0 - t) * (1.0 + t);
                (1.0 + t * t) / (s * s)
            }
        }
    }

    fn t(&self, x: f64) -> f64 {
        let half_map = |u: f64| if u.is_infinite() { 1.0 } else { u / (1.0 + u) };
        match *self {
            Map::Identity => x,
            Map::Upper(a, s) => half_map((x - a) / s),
            Map::Lower(b, s) => half_map((b - x) / s),
            Map::Both => {
                if x.is_infinite() {
                    x.signum()
                } else {
                    2.0 * x / (1.0 + (1.0 + 4.0 * x * x).sqrt())
                }
            }
        }
    }
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct Mapped<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    map: Map,
    evaluations: usize,
    // Abscissae that must never be evaluated (endpoints, singular points).
    excluded: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Mapped<'_, F> {
    fn eval(&mut self, t: f64) -> Result<f64> {
        self.evaluations += 1;
        let x = self.map.x(t);
        // Nodes of a deeply bisected panel can round onto its endpoint.
        if !x.is_finite() || self.excluded.contains(&x) {
            return Ok(0.0);
        }
        let y = (self.f)(x);
        if y.is_nan() {
            return Err(Error::NonFiniteIntegrand { x });
        }
        if y.abs() > OVERFLOW_GUARD {
            return Err(Error::DivergentIntegral(format!("integrand overflow at x = {x:e}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        let v = y * self.map.jacobian(t);
        if !v.is_finite() || v.abs() > OVERFLOW_GUARD {
            return Err(Error::DivergentIntegral(format!("integrand overflow at x = {x:e}")));
        }
        Ok(v)
    }

    fn kronrod(&mut self, a: f64, b: f64) -> Result<Panel> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = self.eval(center)?;
        let mut res_g = 0.0;
        let mut res_k = WGK[10] * fc;
        let mut res_abs = res_k.abs();
        let mut fv1 = [0.0; 10];
        let mut fv2 = [0.0; 10];
        for j in 0..5 {
            let jtw = 2 * j + 1;
            let dx = half * XGK[jtw];
            let f1 = self.eval(center - dx)?;
            let f2 = self.eval(center + dx)?;
            fv1[jtw] = f1;
            fv2[jtw] = f2;
            res_g += WG[j] * (f1 + f2);
            res_k += WGK[jtw] * (f1 + f2);
            res_abs += WGK[jtw] * (f1.abs() + f2.abs());
        }
        for j in 0..5 {
            let jtwm1 = 2 * j;
            let dx = half * XGK[jtwm1];
            let f1 = self.eval(center - dx)?;
            let f2 = self.eval(center + dx)?;
            fv1[jtwm1] = f1;
            fv2[jtwm1] = f2;
            res_k += WGK[jtwm1] * (f1 + f2);
            res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[10] * (fc - mean).abs();
        for j in 0..10 {
            res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        }
        let value = res_k * half;
        res_abs *= half.abs();
        res_asc *= half.abs();
        let mut error = ((res_k - res_g) * half).abs();
        if res_asc != 0.0 && error != 0.0 {
            error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
        }
        if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            error = error.max(50.0 * f64::EPSILON * res_abs);
        }
        if !value.is_finite() || value.abs() > OVERFLOW_GUARD {
            return Err(Error::DivergentIntegral("panel sum overflow".into()));
        }
        Ok(Panel { a, b, value, error })
    }
}

fn splittable(a: f64, b: f64) -> bool {
    let mid = 0.5 * (a + b);
    mid > a && mid < b && (b - a) > 8.0 * f64::EPSILON * a.abs().max(b.abs())
}

/// Adaptive integral of `f` over `iv`.
///
/// Returns `converged = false` when the tolerance could not be met within
/// `max_subdivisions`; when in addition the unresolved error sits at an
/// endpoint or a singular point whose contribution does not decay under
/// geometric refinement, the integral is reported as divergent.
pub fn integrate<F: Fn(f64) -> f64>(f: F, iv: Interval, cfg: &QuadratureConfig) -> Result<QuadratureResult> {
    cfg.validate()?;
    let (map, t0, t1) = Map::for_interval(&iv);
    let mut excluded: Vec<f64> = cfg.singular_points.iter().copied().filter(|p| iv.contains(*p)).collect();
    excluded.extend([iv.lo, iv.hi].into_iter().filter(|v| v.is_finite()));
    let mut m = Mapped { f: &f, map, evaluations: 0, excluded };

    let mut cuts: Vec<f64> = cfg
        .singular_points
        .iter()
        .chain(cfg.breakpoints.iter())
        .filter(|p| iv.contains(**p))
        .map(|&p| map.t(p))
        .filter(|&t| t > t0 && t < t1)
        .collect();
    cuts.push(t0);
    cuts.push(t1);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let singular_t: Vec<f64> =
        cfg.singular_points.iter().filter(|p| iv.contains(**p)).map(|&p| map.t(p)).collect();

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Panel> = Vec::new();
    for w in cuts.windows(2) {
        heap.push(m.kronrod(w[0], w[1])?);
    }
    let tolerance = |v: f64| cfg.abs_tol.max(cfg.rel_tol * v.abs());
    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        heap.iter().chain(frozen.iter()).fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };

    let (mut value, mut error) = totals(&heap, &frozen);
    let mut splits = 0;
    let mut probed: Vec<f64> = Vec::new();
    while error > tolerance(value) && splits < cfg.max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        if !splittable(worst.a, worst.b) {
            frozen.push(worst);
            continue;
        }
        // A panel this thin still dominating the error: probe for divergence once
        // per edge instead of bisecting all the way down to overflow.
        if worst.b - worst.a < EDGE_PROBE_WIDTH * (t1 - t0).abs() {
            for (edge, dir) in edges_of(&worst, t0, t1, &singular_t) {
                if !probed.contains(&edge) {
                    probed.push(edge);
                    if tail_does_not_decay(&mut m, edge, dir, (t1 - t0).abs(), EDGE_PROBE_RATIO)? {
                        return Err(Error::DivergentIntegral(format!(
                            "contribution near x = {:e} does not decay under refinement",
                            map.x(edge)
                        )));
                    }
                }
            }
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = m.kronrod(worst.a, mid)?;
        let right = m.kronrod(mid, worst.b)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
        if splits % 64 == 0 {
            (value, error) = totals(&heap, &frozen);
        }
    }
    (value, error) = totals(&heap, &frozen);
    if value.abs() > OVERFLOW_GUARD {
        return Err(Error::DivergentIntegral(format!("partial sum {value:e} exceeds overflow guard")));
    }
    let converged = error <= tolerance(value);

    if !converged {
        let worst = heap.iter().chain(frozen.iter()).max().copied();
        if let Some(w) = worst {
            for (edge, dir) in edges_of(&w, t0, t1, &singular_t) {
                if tail_does_not_decay(&mut m, edge, dir, (t1 - t0).abs(), 0.25)? {
                    return Err(Error::DivergentIntegral(format!(
                        "contribution near x = {:e} does not decay under refinement",
                        map.x(edge)
                    )));
                }
            }
        }
    }

    Ok(QuadratureResult { value, error_estimate: error, evaluations: m.evaluations, converged })
}

/// Endpoints and singular points a panel touches, with the direction
/// pointing into the panel.
fn edges_of(w: &Panel, t0: f64, t1: f64, singular_t: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if w.a == t0 {
        out.push((t0, 1.0));
    }
    if w.b == t1 {
        out.push((t1, -1.0));
    }
    for &s in singular_t {
        if w.a == s {
            out.push((s, 1.0));
        }
        if w.b == s {
            out.push((s, -1.0));
        }
    }
    out
}

/// Compares integrals over geometric shells `[edge + 2^-k w, edge + 2^-(k-1) w]`
/// for a coarse and a fine `k`; a convergent endpoint singularity makes the
/// shell contributions shrink.
fn tail_does_not_decay<F: Fn(f64) -> f64>(
    m: &mut Mapped<'_, F>,
    edge: f64,
    dir: f64,
    width: f64,
    ratio: f64,
) -> Result<bool> {
    let shell = |m: &mut Mapped<'_, F>, k: i32| -> Result<f64> {
        let near = edge + dir * width * 2f64.powi(-k);
        let far = edge + dir * width * 2f64.powi(-k + 1);
        let (a, b) = if near < far { (near, far) } else { (far, near) };
        Ok(m.kronrod(a, b)?.value.abs())
    };
    let coarse = shell(m, 8)?;
    let fine = shell(m, 40)?;
    Ok(fine > 0.0 && fine >= ratio * coarse)
}

/// [`integrate`] for integrands that can fail; the first integrand error is
/// returned in place of the quadrature outcome.
pub fn integrate_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    iv: Interval,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let r = integrate(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        iv,
        cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r
}

/// Convenience wrapper with the default configuration; errors unless converged.
pub fn integrate_value<F: Fn(f64) -> f64>(f: F, iv: Interval) -> Result<f64> {
    integrate(f, iv, &QuadratureConfig::default())?.converged_value()
}

/// Tabulated tail integral `Y(x) = ∫_x^hi f(t) dt` of a non-negative `f`.
/// Tail values below this are recomputed in log scale by [`CumulativeTable::ln_refine`].
const TINY_TAIL: f64 = 1e-200;

#[derive(Debug, Clone)]
pub struct CumulativeTable {
    iv: Interval,
    t_nodes: Vec<f64>,
    x_nodes: Vec<f64>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    slopes: Vec<f64>,
    error: f64,
    cfg: QuadratureConfig,
}

impl CumulativeTable {
    /// Builds the table and lets the panel adjacent to `lo` be divergent
    /// (`Y(lo) = +inf`); all other panels must converge.
    pub fn tail<F: Fn(f64) -> f64>(f: F, iv: Interval, n: usize, cfg: &QuadratureConfig) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidParameter(format!("cumulative table needs n >= 16, got {n}")));
        }
        let (map, t0, t1) = Map::for_interval(&iv);
        let t_nodes: Vec<f64> = (0..=n).map(|i| t0 + (t1 - t0) * i as f64 / n as f64).collect();
        let mut x_nodes: Vec<f64> = t_nodes.iter().map(|&t| map.x(t)).collect();
        x_nodes[0] = iv.lo;
        x_nodes[n] = iv.hi;
        // Lower map runs right to left in x.
        let reversed = matches!(map, Map::Lower(..));
        let (t_nodes, x_nodes) = if reversed {
            let mut xs = x_nodes;
            xs.reverse();
            let ts: Vec<f64> = xs.iter().map(|&x| map.t(x)).collect();
            (ts, xs)
        } else {
            (t_nodes, x_nodes)
        };

        let mut panels = Vec::with_capacity(n);
        let mut error = 0.0;
        for i in 0..n {
            let piv = Interval::new(x_nodes[i], x_nodes[i + 1])?;
            match integrate(&f, piv, cfg) {
                Ok(r) if r.converged && r.value.is_finite() => {
                    panels.push(r.value);
                    error += r.error_estimate;
                }
                Ok(r) if i == 0 => {
                    if r.value.abs() > OVERFLOW_GUARD || !r.converged {
                        panels.push(f64::INFINITY);
                    } else {
                        panels.push(r.value);
                    }
                }
                Err(Error::DivergentIntegral(_)) if i == 0 => panels.push(f64::INFINITY),
                Ok(r) => return Err(Error::NotConverged { value: r.value, error: r.error_estimate }),
                Err(e) => return Err(e),
            }
        }
        let mut upper = vec![0.0; n + 1];
        for i in (0..n).rev() {
            upper[i] = upper[i + 1] + panels[i];
        }
        let mut lower = vec![0.0; n + 1];
        for i in 0..n {
            lower[i + 1] = lower[i] + panels[i];
        }
        let slopes = pchip_slopes(&t_nodes, &upper);
        Ok(CumulativeTable { iv, t_nodes, x_nodes, upper, lower, slopes, error, cfg: cfg.clone() })
    }

    pub fn interval(&self) -> Interval {
        self.iv
    }

    /// Total mass `∫_lo^hi f` (may be infinite for tables built with [`CumulativeTable::tail`]).
    pub fn total(&self) -> f64 {
        self.upper[0]
    }

    pub fn error_estimate(&self) -> f64 {
        self.error
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x_nodes.iter().copied().zip(self.upper.iter().copied())
    }

    fn locate(&self, x: f64) -> usize {
        let n = self.x_nodes.len() - 1;
        match self.x_nodes.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Monotone cubic (Fritsch–Carlson) interpolation of the table.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.iv.lo {
            return self.upper[0];
        }
        if x >= self.iv.hi {
            return 0.0;
        }
        let (map, _, _) = Map::for_interval(&self.iv);
        let t = map.t(x);
        let i = self.locate(x);
        let (ta, tb) = (self.t_nodes[i], self.t_nodes[i + 1]);
        let (ya, yb) = (self.upper[i], self.upper[i + 1]);
        if !ya.is_finite() {
            return f64::INFINITY;
        }
        hermite(ta, tb, ya, yb, self.slopes[i], self.slopes[i + 1], t)
    }

    /// Exact tail value: table entry at the next node plus a short adaptive
    /// integral from `x` to that node. `f` must be the tabulated function.
    pub fn refine<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        if !self.iv.contains(x) {
            return Err(Error::OutsideSupport { x, lo: self.iv.lo, hi: self.iv.hi });
        }
        let i = self.locate(x);
        let next = self.x_nodes[i + 1];
        if x >= next {
            return Ok(self.upper[i + 1]);
        }
        let r = self.integrate_graded(f, x, next)?;
        Ok(self.upper[i + 1] + r.converged_value()?)
    }

    /// `∫_a^b f` for `[a, b]` inside the table interval. When `a` (or `b`) is
    /// much closer to a finite end of the interval than the panel is long,
    /// integrates in `u = ln(t - lo)` (or `ln(hi - t)`), which grades the
    /// nodes towards a possible endpoint singularity.
    fn integrate_graded<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<QuadratureResult> {
        let (lo, hi) = (self.iv.lo, self.iv.hi);
        if lo.is_finite() && b.is_finite() && b - lo > 4.0 * (a - lo) {
            let to_u = |t: f64| (t - lo).ln();
            let cfg = self.graded_config(a, b, &to_u);
            let g = |u: f64| {
                let t = lo + u.exp();
                if t > lo { f(t) * u.exp() } else { 0.0 }
            };
            return integrate(g, Interval::new(to_u(a), to_u(b))?, &cfg);
        }
        if hi.is_finite() && hi - a > 4.0 * (hi - b) {
            let to_u = |t: f64| (hi - t).ln();
            let cfg = self.graded_config(a, b, &to_u);
            let g = |u: f64| {
                let t = hi - u.exp();
                if t < hi { f(t) * u.exp() } else { 0.0 }
            };
            return integrate(g, Interval::new(to_u(b), to_u(a))?, &cfg);
        }
        integrate(f, Interval::new(a, b)?, &self.cfg)
    }

    fn graded_config(&self, a: f64, b: f64, to_u: &dyn Fn(f64) -> f64) -> QuadratureConfig {
        let inside = |v: &Vec<f64>| v.iter().filter(|p| **p > a && **p < b).map(|p| to_u(*p)).collect();
        QuadratureConfig {
            singular_points: inside(&self.cfg.singular_points),
            breakpoints: inside(&self.cfg.breakpoints),
            ..self.cfg.clone()
        }
    }

    /// `ln ∫_x^hi e^{ln_f}`. Falls back to an integral scaled by `e^{-ln_f(x)}`
    /// where the tabulated tail underflows.
    pub fn ln_refine<L: Fn(f64) -> f64>(&self, ln_f: L, x: f64) -> Result<f64> {
        let v = self.refine(|t| ln_f(t).exp(), x)?;
        if v > TINY_TAIL || v.is_infinite() {
            return Ok(v.ln());
        }
        let l0 = ln_f(x);
        if !l0.is_finite() || x >= self.iv.hi {
            return Ok(v.ln());
        }
        let r = self.integrate_graded(|t| (ln_f(t) - l0).exp(), x, self.iv.hi)?;
        Ok(r.converged_value()?.ln() + l0)
    }
}

impl CumulativeTable {
    /// Node abscissae, increasing.
    pub fn abscissae(&self) -> &[f64] {
        &self.x_nodes
    }

    /// Tail values `∫_x^hi f` at the nodes.
    pub fn upper_values(&self) -> &[f64] {
        &self.upper
    }

    /// Prefix values `∫_lo^x f` at the nodes (infinite when the first panel diverges).
    pub fn lower_values(&self) -> &[f64] {
        &self.lower
    }

    /// Exact prefix value `∫_lo^x f`: table entry at the previous node plus
    /// a short adaptive integral.
    pub fn refine_lower<F: Fn(f64) -> f64>(&self, f: F, x: f64) -> Result<f64> {
        if !self.iv.contains(x) {
            return Err(Error::OutsideSupport { x, lo: self.iv.lo, hi: self.iv.hi });
        }
        let i = self.locate(x);
        let prev = self.x_nodes[i];
        if x <= prev {
            return Ok(self.lower[i]);
        }
        let r = self.integrate_graded(f, prev, x)?;
        Ok(self.lower[i] + r.converged_value()?)
    }
}

fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..n - 1)
        .map(|i| if y[i].is_finite() { (y[i + 1] - y[i]) / h[i] } else { f64::NAN })
        .collect();
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        let (d0, d1) = (d[i - 1], d[i]);
        if !d0.is_finite() || !d1.is_finite() || d0 * d1 <= 0.0 {
            m[i] = if d1.is_finite() { 0.0f64.min(d1).max(d1.min(0.0)) * 0.0 } else { 0.0 };
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        m[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
    }
    m
}

fn hermite(ta: f64, tb: f64, ya: f64, yb: f64, ma: f64, mb: f64, t: f64) -> f64 {
    let h = tb - ta;
    let s = (t - ta) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let ma = if ma.is_finite() { ma } else { 0.0 };
    let mb = if mb.is_finite() { mb } else { 0.0 };
    h00 * ya + h10 * h * ma + h01 * yb + h11 * h * mb
}

/// Tail-integral table of a non-negative `f` over `iv` with `n` panels.
/// Fails when the total mass is not finite.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, iv: Interval, n: usize, cfg: &QuadratureConfig) -> Result<CumulativeTable> {
    let table = CumulativeTable::tail(f, iv, n, cfg)?;
    if !table.total().is_finite() {
        return Err(Error::DivergentIntegral("cumulative total is infinite".into()));
    }
    Ok(table)
}
