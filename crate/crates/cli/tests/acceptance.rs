//! Acceptance suite: runs `renyi verify --seed 42` twice through the binary
//! and checks each criterion against reference values computed here.
//! Prints one PASS/FAIL line per criterion; exits non-zero on any failure.

use std::f64::consts::{LN_2, PI};
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_renyi");

struct Report {
    records: Vec<Value>,
}

impl Report {
    fn suite(&self, name: &str) -> Vec<&Value> {
        self.records.iter().filter(|r| r["suite"] == name).collect()
    }

    fn one(&self, name: &str) -> &Value {
        let rs = self.suite(name);
        assert_eq!(rs.len(), 1, "suite {name} should have one record");
        rs[0]
    }
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing or not a number in {v}"))
}

fn verify(out: &Path) -> (i32, String) {
    let status = Command::new(BIN)
        .args(["verify", "--seed", "42", "--no-timestamp", "--out"])
        .arg(out)
        .status()
        .expect("run renyi");
    (status.code().unwrap_or(-1), std::fs::read_to_string(out).expect("report"))
}

fn parse(text: &str) -> Report {
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect();
    Report { records: lines.into_iter().filter(|v| v["type"] == "record").collect() }
}

/// `ln` of the Rényi entropy of order `a` of Exp(λ): `ln(a)/(a-1) - ln λ`.
fn renyi_exponential(a: f64, rate: f64) -> f64 {
    a.ln() / (a - 1.0) - rate.ln()
}

/// Oriented RRR gap for f = Exp(1), g = Exp(λ) at (α, β) = (2, 0):
/// rhs `-2 ln(√λ / (1 + λ/2))` minus lhs `R_2[f] = ln 2` (D_0 vanishes).
fn rrr_gap_exponential(rate: f64) -> f64 {
    -2.0 * (rate.sqrt() / (1.0 + rate / 2.0)).ln() - LN_2
}

fn criteria(r: &Report, first: &str, second: &str, exit: i32) -> Vec<(usize, String, Result<(), String>)> {
    let mut out = Vec::new();
    let mut push = |n: usize, what: &str, res: Result<(), String>| out.push((n, what.to_string(), res));
    let ensure = |ok: bool, msg: String| if ok { Ok(()) } else { Err(msg) };

    // 1. closed forms
    let oracles = [
        ("renyi_entropy", "exponential:rate=1", renyi_exponential(2.0, 1.0)),
        ("renyi_entropy", "gaussian:mu=0,sigma=1", (2.0 * PI.sqrt()).ln()),
        ("renyi_divergence", "exponential:rate=2", (4.0f64 / 3.0).ln()),
        ("kl_divergence", "exponential:rate=2", LN_2 - 0.5),
    ];
    let closed = r.suite("closed_forms");
    let res = oracles.iter().try_for_each(|(functional, f, want)| {
        let rec = closed
            .iter()
            .find(|c| c["functional"] == *functional && c["densities"][0] == *f)
            .ok_or(format!("no record for {functional} {f}"))?;
        let got = num(rec, "value");
        ensure((got - want).abs() <= 1e-8, format!("{functional}[{f}] = {got}, want {want}"))
    });
    push(1, "closed-form functionals within 1e-8", res);

    // 2. Shannon bridge and the order-1 limits
    let bridge = r.one("shannon_bridge");
    let mut res = ensure(
        num(bridge, "evaluated") == 50.0 && num(bridge, "max_residual") <= 1e-8,
        format!("bridge: {bridge}"),
    );
    for lim in r.suite("shannon_limits") {
        if res.is_ok() {
            res = ensure(
                num(lim, "eps") == 1e-4 && num(lim, "max_deviation") <= 1e-3 && lim["status"] == "pass",
                format!("limits: {lim}"),
            );
        }
    }
    if res.is_ok() {
        // R_{1±1e-4}[Exp(1)] against S[Exp(1)] = 1, through `renyi eval`
        for order in [1.0 - 1e-4, 1.0 + 1e-4] {
            let o = Command::new(BIN)
                .args(["eval", "--functional", "renyi_entropy", "--density", "exponential:rate=1", "--alpha"])
                .arg(order.to_string())
                .output()
                .expect("run renyi eval");
            let text = String::from_utf8_lossy(&o.stdout);
            let rec = parse(&text).records.remove(0);
            let v = num(&rec, "value");
            if (v - 1.0).abs() > 1e-3 || (v - renyi_exponential(order, 1.0)).abs() > 1e-8 {
                res = Err(format!("R_{order}[Exp(1)] = {v}"));
            }
        }
    }
    push(2, "Shannon bridge within 1e-8 on 50 pairs; order-1 limits within 1e-3", res);

    // 3. random RRR instances
    let rrr = r.one("rrr_random");
    let (n, reversed) = (num(rrr, "evaluated"), num(rrr, "count_reversed"));
    push(
        3,
        "2000 random RRR instances, gap >= -1e-7 in both regimes",
        ensure(
            n == 2000.0
                && reversed > 0.0
                && reversed < n
                && num(rrr, "worst_gap_normal") >= -1e-7
                && num(rrr, "worst_gap_reversed") >= -1e-7,
            format!("{rrr}"),
        ),
    );

    // 4. equality adjudication
    let corrected = [r.one("rrr_witness_corrected_2_0"), r.one("rrr_witness_corrected_0.5_0.25")];
    let paper = num(r.one("rrr_witness_paper_2_0"), "gap");
    let mut res = corrected.iter().try_for_each(|c| ensure(num(c, "gap").abs() <= 1e-7, format!("corrected: {c}")));
    if res.is_ok() {
        // printed exponent: g ∝ f^{(β-1)/(β-α)} = f^{1/2}, i.e. Exp(1/2)
        let want = rrr_gap_exponential(0.5);
        res = ensure(
            (paper - 0.446287).abs() <= 1e-5 && (paper - want).abs() <= 1e-8 && rrr_gap_exponential(2.0).abs() <= 1e-15,
            format!("paper-mode gap {paper}, closed form {want}"),
        );
    }
    push(4, "corrected witnesses |gap| <= 1e-7; paper-mode gap 0.446287 +- 1e-5", res);

    // 5. transform preservation
    let pres = r.suite("preservation");
    let kinds: Vec<&str> = pres.iter().filter_map(|p| p["kind"].as_str()).collect();
    let mut res = ensure(
        kinds == ["escort", "relative_escort", "down", "up", "up_exp"],
        format!("transform kinds {kinds:?}"),
    );
    for p in &pres {
        if res.is_ok() {
            res = ensure(num(p, "evaluated") == 10.0 && num(p, "max_gap") <= 1e-4, format!("{p}"));
        }
    }
    push(5, "grid divergence preservation <= 1e-4, 5 kinds x 10", res);

    // 6. the seven checkers
    let checkers = ["escort", "rel_escort", "bip_down", "down_fisher", "up", "up_exp", "upper_mom"];
    let res = checkers.iter().try_for_each(|c| {
        let sweep = r.one(&format!("{c}_random"));
        ensure(
            num(sweep, "evaluated") == 500.0 && num(sweep, "worst_gap") >= -1e-7,
            format!("{c} sweep: {sweep}"),
        )?;
        let w = r.one(&format!("{c}_witness"));
        ensure(w["witness_mode"] == "corrected" && num(w, "gap").abs() <= 1e-6, format!("{c} witness: {w}"))
    });
    push(6, "7 checkers: 500-point sweeps gap >= -1e-7, witnesses |gap| <= 1e-6", res);

    // 7. identity battery
    let id = r.one("identities");
    let per = id["per_identity"].as_object().map_or(0, |m| m.len());
    push(
        7,
        "7 cross-divergence identities, max residual <= 1e-7 over 100 draws",
        ensure(
            per == 7 && num(id, "evaluated") == 100.0 && num(id, "max_residual") <= 1e-7,
            format!("{id}"),
        ),
    );

    // 8. discrete oracle
    let d = r.one("discrete");
    push(
        8,
        "discrete oracle: 1e6 instances min gap >= -1e-12; escort equality <= 1e-14",
        ensure(
            num(d, "n") == 1e6 && num(d, "min_gap") >= -1e-12 && num(d, "escort_grid_max") <= 1e-14,
            format!("min_gap {} escort_grid_max {}", d["min_gap"], d["escort_grid_max"]),
        ),
    );

    // 9. sharpness: witness g = f^{1+t} (or f e^{-tx}), t = (α-1)/(1-β)
    let tilt = |a: f64, b: f64| (a - 1.0) / (1.0 - b);
    let expected = [
        ("sharpness_rrr_exponential", vec![1.0 + tilt(2.0, 0.0)]),
        ("sharpness_rrr_gaussian", vec![1.0, 1.0 / (1.0 + tilt(2.0, 0.5)).sqrt()]),
        ("sharpness_up_exp", vec![1.0 + tilt(0.5, 0.25)]),
    ];
    let res = expected.iter().try_for_each(|(name, want)| {
        let s = r.one(name);
        let got: Vec<f64> = s["best_params"].as_array().expect("params").iter().filter_map(Value::as_f64).collect();
        let rel = got.iter().zip(want).map(|(g, w)| ((g - w) / w).abs()).fold(0.0, f64::max);
        ensure(
            got.len() == want.len() && rel <= 0.01 && num(s, "best_gap") <= 1e-6,
            format!("{name}: {got:?} vs {want:?}, best_gap {}", s["best_gap"]),
        )
    });
    push(9, "sharpness: parameters within 1%, best gap <= 1e-6", res);

    // 10. determinism
    push(
        10,
        "verify --seed 42 twice: identical reports",
        ensure(
            exit == 0 && first == second && !first.contains("\"timestamp\""),
            format!("exit {exit}, identical {}", first == second),
        ),
    );
    out
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (exit_a, first) = verify(&dir.path().join("first.jsonl"));
    let (exit_b, second) = verify(&dir.path().join("second.jsonl"));
    let report = parse(&first);
    let exit = if exit_a == exit_b { exit_a } else { -1 };
    let results = criteria(&report, &first, &second, exit);
    let mut failed = 0;
    for (n, what, res) in &results {
        match res {
            Ok(()) => println!("criterion {n:>2}: PASS  {what}"),
            Err(e) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {what}: {e}");
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
