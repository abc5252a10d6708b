//! The `renyi` command line: single evaluations, inequality checks, config
//! driven sweeps, sharpness probes, transformation tables and the built-in
//! verification suite.

pub mod config;
pub mod evaluate;
pub mod report;
pub mod suite;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use renyi_core::densities::parse as parse_density;
use renyi_core::functionals::Functionals;
use renyi_core::inequalities::Theorem;
use renyi_core::transforms::{reciprocal_transform, transform, verify_divergence_preservation, TransformSpec};
use renyi_core::verification::ParamFamily;

use report::{Format, Header, Record, Summary};
use suite::{CheckRequest, Context, Partner, SharpnessRequest, UsageError};

/// The configuration `verify` runs when no `--config` is given.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/acceptance.json");

/// Default seed when neither `--seed` nor the config sets one.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "renyi", version, about = "Rényi functionals, transformations and inequality checks")]
struct Cli {
    /// Suite configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Seed for random suites [default: the config's, else 42].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Inequality records pass iff gap >= -TOL.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Treat violated preconditions as failures instead of skipping.
    #[arg(long, global = true)]
    strict: bool,
    /// Equality witnesses use the printed exponents unless a suite says otherwise.
    #[arg(long, global = true)]
    paper_witness: bool,
    /// Leave the timestamp out of the header.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one functional.
    Eval(EvalArgs),
    /// Check one inequality instance.
    Check(CheckArgs),
    /// Run the suites of --config.
    Sweep,
    /// Minimize the gap over a parametric family of g.
    Sharpness(SharpnessArgs),
    /// Tabulate a transformed density.
    Transform(TransformArgs),
    /// Run --config, or the built-in acceptance suite.
    Verify,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    functional: String,
    #[arg(long = "density", visible_alias = "f")]
    density: String,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
}

impl EvalArgs {
    fn params(&self) -> BTreeMap<String, f64> {
        [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("xi", self.xi),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("p", self.p),
            ("q", self.q),
            ("lambda", self.lambda),
            ("s", self.s),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }

    fn densities(&self) -> Vec<String> {
        std::iter::once(self.density.clone()).chain(self.g.clone()).chain(self.h.clone()).collect()
    }
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    theorem: String,
    #[arg(long)]
    f: String,
    /// Density spec, or `witness`.
    #[arg(long)]
    g: String,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
}

#[derive(Debug, Args)]
struct SharpnessArgs {
    #[arg(long)]
    theorem: String,
    #[arg(long)]
    f: String,
    /// exponential, gaussian, gamma or weibull.
    #[arg(long)]
    family: String,
    /// Starting parameters, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    start: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = config::default_budget())]
    budget: usize,
    /// Expected minimizer, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    expect: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.01)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// e.g. `escort:xi=2`, `down:a=1,b=1`, `up:a=3`, `up_exp`.
    #[arg(long)]
    spec: String,
    #[arg(long = "density", visible_alias = "f")]
    density: String,
    /// Also tabulate the reciprocal transform of this density.
    #[arg(long)]
    g: Option<String>,
    /// With --g, append a divergence-preservation record of this order.
    #[arg(long, allow_negative_numbers = true, requires = "g")]
    gamma: Option<f64>,
    /// Number of table rows (evenly spaced over the grid).
    #[arg(long, default_value_t = 200)]
    rows: usize,
}

/// Parses `argv` (including the program name), runs and returns the exit
/// code: 0 all pass, 1 a violation, 2 usage or config error, 3 numerical
/// failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn load_config(cli: &Cli) -> Result<Option<config::Config>, UsageError> {
    let text = match (&cli.config, &cli.command) {
        (Some(path), _) => std::fs::read_to_string(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?,
        (None, Command::Verify) => DEFAULT_CONFIG.to_string(),
        (None, Command::Sweep) => return Err(UsageError("sweep needs --config".into())),
        (None, _) => return Ok(None),
    };
    config::parse(&text).map(Some).map_err(UsageError)
}

fn execute(cli: &Cli) -> Result<i32, UsageError> {
    if let Some(t) = cli.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(UsageError(format!("--tol must be finite and >= 0, got {t}")));
        }
    }
    let config = load_config(cli)?;
    let seed = cli.seed.or(config.as_ref().and_then(|c| c.seed)).unwrap_or(DEFAULT_SEED);
    let ctx = Context {
        fx: Functionals::default(),
        seed,
        tol: cli.tol,
        config_tol: config.as_ref().and_then(|c| c.tol),
        strict: cli.strict,
        paper_witness: cli.paper_witness,
    };
    let (command, records) = match &cli.command {
        Command::Eval(a) => ("eval", vec![suite::eval_record(&ctx, "eval", &a.functional, &a.densities(), &a.params())?]),
        Command::Check(a) => {
            let req = CheckRequest {
                suite: "check",
                theorem: Theorem::parse(&a.theorem)?,
                f: parse_density(&a.f)?,
                g: Partner::parse(&ctx, &a.g, None)?,
                alpha: a.alpha,
                beta: a.beta,
                expect_gap: None,
                tol: None,
            };
            ("check", vec![suite::check_record(&ctx, &req)])
        }
        Command::Sharpness(a) => {
            let family = ParamFamily::parse(&a.family)?;
            family.build(&a.start)?;
            let req = SharpnessRequest {
                suite: "sharpness",
                theorem: Theorem::parse(&a.theorem)?,
                f: parse_density(&a.f)?,
                family,
                start: a.start.clone(),
                alpha: a.alpha,
                beta: a.beta,
                budget: a.budget,
                expect: a.expect.clone(),
                rel_tol: a.rel_tol,
                gap_tol: a.gap_tol,
            };
            ("sharpness", vec![suite::sharpness_record(&ctx, &req)])
        }
        Command::Transform(a) => ("transform", transform_records(&ctx, a)?),
        Command::Sweep | Command::Verify => {
            let name = if matches!(cli.command, Command::Sweep) { "sweep" } else { "verify" };
            let config = config.expect("loaded above");
            let records = suite::run_config(&ctx, &config, |suite, rs| {
                let s = Summary::of(rs);
                eprintln!("{suite}: {} records, {} pass", s.n, s.passes);
            })?;
            (name, records)
        }
    };
    let summary = Summary::of(&records);
    let timestamp = (!cli.no_timestamp)
        .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let header = Header { tool: "renyi", version: env!("CARGO_PKG_VERSION"), command: command.into(), seed, timestamp };
    write_report(cli, &header, &records, &summary)?;
    eprintln!("{}", report::human_summary(&records, &summary));
    Ok(summary.exit_code())
}

fn write_report(cli: &Cli, header: &Header, records: &[Record], summary: &Summary) -> Result<(), UsageError> {
    let mut out: Box<dyn Write> = match &cli.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let io_err = |e: io::Error| UsageError(format!("writing report: {e}"));
    match cli.format {
        Format::Json => report::write_json(&mut out, header, records, summary).map_err(io_err)?,
        Format::Csv => report::write_csv(&mut out, records).map_err(|e| UsageError(format!("writing report: {e}")))?,
    }
    out.flush().map_err(io_err)
}

fn transform_records(ctx: &Context, a: &TransformArgs) -> Result<Vec<Record>, UsageError> {
    if a.rows < 2 {
        return Err(UsageError("--rows must be at least 2".into()));
    }
    let spec = TransformSpec::parse(&a.spec)?;
    let f = parse_density(&a.density)?;
    let g = a.g.as_deref().map(parse_density).transpose()?;
    spec.validate(&f)?;
    let table = match transform(&ctx.fx, &f, &spec) {
        Ok(t) => t,
        Err(e) => return Ok(vec![suite::fail_record(ctx, Record::new("transform", "table"), &e)]),
    };
    let reciprocal = match &g {
        Some(g) => match reciprocal_transform(&ctx.fx, g, &f, &spec) {
            Ok(t) => Some(t),
            Err(e) => return Ok(vec![suite::fail_record(ctx, Record::new("transform", "table"), &e)]),
        },
        None => None,
    };
    let all: Vec<(f64, f64)> = table.rows().collect();
    let n = all.len();
    let picks: Vec<usize> = if n <= a.rows {
        (0..n).collect()
    } else {
        let mut v: Vec<usize> = (0..a.rows).map(|i| i * (n - 1) / (a.rows - 1)).collect();
        v.dedup();
        v
    };
    let mut records: Vec<Record> = picks
        .iter()
        .map(|&i| {
            let mut r = Record::new("transform", "table");
            r.set("x", table.map.x_grid[i]).set("y", all[i].0).set("density", all[i].1);
            if let Some(t) = &reciprocal {
                r.set("reciprocal", t.values[i]);
            }
            r
        })
        .collect();
    if let (Some(g), Some(gamma)) = (&g, a.gamma) {
        let mut r = Record::new("transform", "preservation");
        r.set("transform", spec.to_string()).set("f", f.to_string()).set("g", g.to_string()).set("gamma", gamma);
        match verify_divergence_preservation(&ctx.fx, &f, g, &spec, gamma) {
            Ok(p) => {
                r.merge(p);
                r.judge(p.gap <= ctx.tol.unwrap_or(1e-4));
                records.push(r);
            }
            Err(e) => records.push(suite::fail_record(ctx, r, &e)),
        }
    }
    Ok(records)
}
