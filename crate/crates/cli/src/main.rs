#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;
mod parse;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use hesslab::garding::{self, DEFAULT_TOL};
use hesslab::integrate::{Ball, EstimatorConfig, DEFAULT_SAMPLES, DEFAULT_SEED};
use hesslab::lelong::{self, RadiusLadder};
use hesslab::slicing;
use hesslab::suite::{self, Suite, SuiteConfig};
use hesslab::{catalog, hessian, Error, Point, TestFunction, C64};

use output::{cell, opt_cell, pairs_cell, to_value, Report, Table};

#[derive(Parser)]
#[command(
    name = "hesslab",
    version,
    about = "Numerical checks for m-subharmonic functions, their slices and Lelong numbers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Directory for the JSON, CSV and manifest files.
    #[arg(long, default_value = "hesslab-out", global = true)]
    out: PathBuf,
    /// RNG seed; HESSLAB_SEED overrides it.
    #[arg(long, default_value_t = DEFAULT_SEED, global = true)]
    seed: u64,
}

#[derive(Args, Clone)]
struct FunctionArgs {
    /// Catalog family.
    #[arg(long)]
    function: String,
    #[arg(long)]
    n: usize,
    /// `k=v,...` or positional numbers.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
}

#[derive(Args, Clone)]
struct LadderArgs {
    #[arg(long, default_value_t = 0.5)]
    r0: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 8)]
    rungs: usize,
}

#[derive(Args, Clone)]
struct SampleArgs {
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Force Monte Carlo even where the radial quadrature applies.
    #[arg(long)]
    monte_carlo: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Sphere,
    Ball,
    Mass,
}

impl Estimator {
    fn name(self) -> &'static str {
        match self {
            Estimator::Sphere => "sphere",
            Estimator::Ball => "ball",
            Estimator::Mass => "mass",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Garding,
    Lelong,
    Slicing,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Region label of v_{a,b} = a|z1|^2 + b|z2|^2 + |z3|^2 + ... + |zn|^2.
    Classify {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// One representative per region of the (a,b)-plane.
    Table1 {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = suite::TABLE1_GRID)]
        grid: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Sampled region boundaries in the (a,b)-plane.
    Boundaries {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = garding::TABLE1_EXTENT)]
        extent: f64,
        #[arg(long, default_value_t = 241)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Scan of normalized S_k over a spherical shell.
    MshCheck {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = suite::MSH_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = suite::MSH_SHELL.0)]
        shell_inner: f64,
        #[arg(long, default_value_t = suite::MSH_SHELL.1)]
        shell_outer: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Point m-Lelong number by radius ladder.
    Lelong {
        #[command(flatten)]
        function: FunctionArgs,
        /// `0` or comma list of `re` / `re:im`.
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value = "sphere")]
        estimator: Estimator,
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Subharmonicity index of the slice at x' over probe points.
    SliceIndex {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long, allow_hyphen_values = true)]
        xprime: String,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 64)]
        probes: usize,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Slice integrability over a lattice of x'.
    ExceptionalScan {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = suite::SCAN_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 1.0)]
        extent: f64,
        #[command(flatten)]
        sampling: SampleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Directional (m-q)-Lelong function with its I/J decomposition.
    Directional {
        #[command(flatten)]
        function: FunctionArgs,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        q: usize,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        xsecond: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        bprime_center: String,
        #[arg(long, default_value_t = 0.5)]
        bprime_radius: f64,
        #[command(flatten)]
        ladder: LadderArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Runs an acceptance suite; exit code 1 if any check fails.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownFunction(_) | Error::Parameter(_) | Error::DimensionMismatch { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    let common = match &cli.command {
        Command::Classify { common, .. }
        | Command::Table1 { common, .. }
        | Command::Boundaries { common, .. }
        | Command::MshCheck { common, .. }
        | Command::Lelong { common, .. }
        | Command::SliceIndex { common, .. }
        | Command::ExceptionalScan { common, .. }
        | Command::Directional { common, .. }
        | Command::Verify { common, .. } => common.clone(),
    };
    let outcome = seed(common.seed)
        .and_then(|seed| run(&cli.command, seed))
        .and_then(|(report, ok)| {
            let text = report
                .write(&common.out, start.elapsed().as_secs_f64())
                .map_err(Failure::Runtime)?;
            print!("{text}");
            Ok(ok)
        });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("HESSLAB_SEED") {
        Ok(s) => s.trim().parse().map_err(|_| {
            Failure::Usage(format!(
                "HESSLAB_SEED must be an unsigned integer, got '{s}'"
            ))
        }),
        Err(_) => Ok(flag),
    }
}

fn function(
    args: &FunctionArgs,
    context: &[(&str, Option<usize>)],
) -> Result<(TestFunction, Vec<f64>), Failure> {
    let params = parse::params(&args.function, args.params.as_deref(), context)?;
    Ok((catalog::lookup(&args.function, args.n, &params)?, params))
}

fn function_json(f: &TestFunction, args: &FunctionArgs, params: &[f64]) -> serde_json::Value {
    json!({ "name": args.function, "n": args.n, "params": params, "label": f.to_string() })
}

fn ladder(args: &LadderArgs) -> Result<RadiusLadder, Failure> {
    Ok(RadiusLadder::new(args.r0, args.theta, args.rungs)?)
}

fn estimator(s: &SampleArgs, seed: u64) -> Result<EstimatorConfig, Failure> {
    let cfg = EstimatorConfig {
        samples: s.samples,
        seed,
        stratified: true,
        radial_fast_path: !s.monte_carlo,
        ..EstimatorConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|c| [c.re, c.im]).collect()
}

fn run(command: &Command, seed: u64) -> Result<(Report, bool), Failure> {
    match command {
        Command::Classify { n, a, b, tol, .. } => {
            let label = garding::classify_vab(*n, *a, *b, *tol)?;
            let margin = garding::certified_margin(*n, *a, *b);
            let mut csv = Table::new(&["n", "a", "b", "m", "k", "delta", "certified_margin"]);
            csv.push(vec![
                cell(n),
                cell(a),
                cell(b),
                cell(label.m_index),
                cell(label.slice_k_index),
                opt_cell(label.delta),
                cell(margin),
            ]);
            Ok((
                Report {
                    command: "classify",
                    statement: "Subharmonicity index m of v_{a,b} on C^n, index k of its slice u_b on C^{n-1}, and delta = k - (m-1)",
                    parameters: json!({ "n": n, "a": a, "b": b, "tol": tol }),
                    seed: None,
                    result: json!({
                        "m": label.m_index,
                        "k": label.slice_k_index,
                        "delta": label.delta,
                        "certified_margin": margin,
                    }),
                    csv,
                },
                true,
            ))
        }
        Command::Table1 { n, grid, .. } => {
            let rows = garding::table1(*n, *grid)?;
            let mut csv = Table::new(&["region_id", "a", "b", "m", "k", "delta", "margin"]);
            for r in &rows {
                csv.push(vec![
                    cell(r.region_id),
                    cell(r.a),
                    cell(r.b),
                    cell(r.m),
                    cell(r.k),
                    opt_cell(r.delta),
                    cell(r.margin),
                ]);
            }
            Ok((
                Report {
                    command: "table1",
                    statement: "Comparison between the indices of subharmonicity of v_{a,b} and of its slice u_b",
                    parameters: json!({ "n": n, "grid": grid, "extent": garding::TABLE1_EXTENT }),
                    seed: None,
                    result: json!({ "rows": to_value(&rows) }),
                    csv,
                },
                true,
            ))
        }
        Command::Boundaries {
            n, extent, points, ..
        } => {
            if !(*extent > 0.0) || *points < 2 {
                return Err(Failure::Usage("need extent > 0 and points >= 2".into()));
            }
            let curves = garding::region_boundaries(*n)?;
            let mut csv = Table::new(&["curve_id", "family", "k", "kind", "a", "b"]);
            let mut out = Vec::new();
            for (id, c) in curves.iter().enumerate() {
                let pts = c.sample(*extent, *points);
                let family = to_value(&c.family);
                let kind = to_value(&c.kind);
                for (a, b) in &pts {
                    csv.push(vec![
                        cell(id),
                        family.as_str().unwrap_or_default().to_string(),
                        cell(c.k),
                        kind.as_str().unwrap_or_default().to_string(),
                        cell(a),
                        cell(b),
                    ]);
                }
                out.push(json!({
                    "curve_id": id,
                    "family": family,
                    "k": c.k,
                    "kind": kind,
                    "coeffs": to_value(&c.coeffs),
                    "points": pts.iter().map(|(a, b)| [*a, *b]).collect::<Vec<_>>(),
                }));
            }
            Ok((
                Report {
                    command: "boundaries",
                    statement: "Curves S_k(a,b) = 0 of v_{a,b} and lines b = -(n-k-1)/k of its slice, sampled on [-extent, extent]^2",
                    parameters: json!({ "n": n, "extent": extent, "points": points }),
                    seed: None,
                    result: json!({ "curves": out }),
                    csv,
                },
                true,
            ))
        }
        Command::MshCheck {
            function: fa,
            m,
            samples,
            shell_inner,
            shell_outer,
            ..
        } => {
            let (f, params) = function(fa, &[("m", Some(*m))])?;
            let rep = garding::msh_check(&f, *m, *samples, seed, (*shell_inner, *shell_outer))?;
            let mut csv = Table::new(&["k", "min_normalized"]);
            for (k, v) in rep.min_normalized.iter().enumerate() {
                csv.push(vec![cell(k + 1), cell(v)]);
            }
            Ok((
                Report {
                    command: "msh-check",
                    statement: "Minimum over a spherical shell of S_k(lambda)/S_k(|lambda|) for the complex Hessian spectrum",
                    parameters: json!({
                        "function": function_json(&f, fa, &params),
                        "m": m,
                        "samples": samples,
                        "shell": [shell_inner, shell_outer],
                        "pass_threshold": garding::MSH_PASS,
                        "fail_threshold": garding::MSH_FAIL,
                    }),
                    seed: Some(seed),
                    result: to_value(&rep),
                    csv,
                },
                true,
            ))
        }
        Command::Lelong {
            function: fa,
            center,
            m,
            estimator: which,
            ladder: la,
            sampling,
            ..
        } => {
            let (f, params) = function(fa, &[("m", Some(*m))])?;
            let a = parse::complex_vector(center, f.dim(), "--center")?;
            let ladder = ladder(la)?;
            let cfg = estimator(sampling, seed)?;
            let e = match which {
                Estimator::Sphere => lelong::lelong_point_sphere(&f, &a, *m, &ladder, &cfg)?,
                Estimator::Ball => lelong::lelong_point_ball(&f, &a, *m, &ladder, &cfg)?,
                Estimator::Mass => lelong::lelong_point_mass(&f, &a, *m, &ladder, &cfg)?,
            };
            let mut csv = Table::new(&["r", "value", "stderr", "clipped_fraction"]);
            for r in &e.per_radius {
                csv.push(vec![
                    cell(r.r),
                    cell(r.value),
                    cell(r.stderr),
                    cell(r.clipped_fraction),
                ]);
            }
            Ok((
                Report {
                    command: "lelong",
                    statement:
                        "m-Lelong number at a point, extrapolated along a geometric radius ladder",
                    parameters: json!({
                        "function": function_json(&f, fa, &params),
                        "center": pairs(&a),
                        "m": m,
                        "estimator": which.name(),
                        "ladder": to_value(&ladder),
                        "estimator_config": to_value(&cfg),
                    }),
                    seed: Some(seed),
                    result: to_value(&e),
                    csv,
                },
                true,
            ))
        }
        Command::SliceIndex {
            function: fa,
            xprime,
            p,
            probes,
            radius,
            ..
        } => {
            let (f, params) = function(fa, &[("p", Some(*p))])?;
            let n = f.dim();
            if *p == 0 || *p >= n {
                return Err(Failure::Usage(format!("need 1 <= p < n, got p={p}")));
            }
            if *probes == 0 || !(*radius > 0.0) {
                return Err(Failure::Usage("need probes >= 1 and radius > 0".into()));
            }
            let x = parse::complex_vector(xprime, *p, "--xprime")?;
            let zs = slicing::sphere_probes(n - p, *probes, *radius, seed);
            let slice_index = slicing::slice_index(&f, &x, &zs, DEFAULT_TOL)?;
            let mut parent_index = usize::MAX;
            for z in &zs {
                let full: Vec<C64> = x.iter().chain(z).copied().collect();
                let h = f.hessian(&Point::new(full))?;
                let spec = hessian::spectrum(&h)?;
                parent_index =
                    parent_index.min(garding::subharmonic_index(spec.eigenvalues(), DEFAULT_TOL));
            }
            let mut csv = Table::new(&["xprime", "p", "parent_index", "slice_index"]);
            csv.push(vec![
                pairs_cell(&pairs(&x)),
                cell(p),
                cell(parent_index),
                cell(slice_index),
            ]);
            Ok((
                Report {
                    command: "slice-index",
                    statement: "Subharmonicity index of the slice v(x', .) on C^{n-p}, minimized over probe points",
                    parameters: json!({
                        "function": function_json(&f, fa, &params),
                        "xprime": pairs(&x),
                        "p": p,
                        "probes": probes,
                        "radius": radius,
                        "tol": DEFAULT_TOL,
                    }),
                    seed: Some(seed),
                    result: json!({
                        "parent_index": parent_index,
                        "slice_index": slice_index,
                        "slice_dim": n - p,
                    }),
                    csv,
                },
                true,
            ))
        }
        Command::ExceptionalScan {
            function: fa,
            p,
            grid,
            extent,
            sampling,
            ..
        } => {
            let (f, params) = function(fa, &[("p", Some(*p))])?;
            let cfg = estimator(sampling, seed)?;
            let scan = slicing::exceptional_scan(&f, *p, *grid, *extent, &cfg)?;
            let mut csv = Table::new(&["xprime", "status", "reason"]);
            for c in &scan.candidates {
                csv.push(vec![
                    pairs_cell(&c.xprime),
                    "divergent".into(),
                    c.evidence.reason.clone(),
                ]);
            }
            for x in &scan.inconclusive {
                csv.push(vec![pairs_cell(x), "inconclusive".into(), String::new()]);
            }
            Ok((
                Report {
                    command: "exceptional-scan",
                    statement:
                        "Points x' whose slice fails to be integrable on the unit ball of C^{n-p}",
                    parameters: json!({
                        "function": function_json(&f, fa, &params),
                        "p": p,
                        "grid": grid,
                        "extent": extent,
                        "estimator_config": to_value(&cfg),
                    }),
                    seed: Some(seed),
                    result: to_value(&scan),
                    csv,
                },
                true,
            ))
        }
        Command::Directional {
            function: fa,
            p,
            m,
            q,
            xsecond,
            bprime_center,
            bprime_radius,
            ladder: la,
            sampling,
            ..
        } => {
            let (f, params) = function(fa, &[("p", Some(*p)), ("m", Some(*m))])?;
            let n = f.dim();
            if *p == 0 || *p >= n {
                return Err(Failure::Usage(format!("need 1 <= p < n, got p={p}")));
            }
            let xs = parse::complex_vector(xsecond, n - p, "--xsecond")?;
            let bc = parse::complex_vector(bprime_center, *p, "--bprime-center")?;
            let b = Ball::new(bc, *bprime_radius)?;
            let ladder = ladder(la)?;
            let cfg = estimator(sampling, seed)?;
            let e = slicing::directional_lelong(&f, &b, &xs, *m, *q, &ladder, &cfg)?;
            let mut csv = Table::new(&[
                "r",
                "total",
                "i",
                "j",
                "total_stderr",
                "i_stderr",
                "j_stderr",
                "clipped_fraction",
            ]);
            for d in &e.per_radius {
                csv.push(vec![
                    cell(d.r),
                    cell(d.total),
                    cell(d.i),
                    cell(d.j),
                    cell(d.total_stderr),
                    cell(d.i_stderr),
                    cell(d.j_stderr),
                    cell(d.clipped_fraction),
                ]);
            }
            let residual = e.decomposition_residual();
            let j_rate = e.j_rate(4);
            let j_rate_bound = e.j_rate_bound();
            let mut result = to_value(&e);
            let obj = result
                .as_object_mut()
                .expect("struct serializes to an object");
            obj.insert("decomposition_residual".into(), json!(residual));
            obj.insert("j_rate".into(), json!(j_rate));
            obj.insert("j_rate_bound".into(), json!(j_rate_bound));
            Ok((
                Report {
                    command: "directional",
                    statement: "Directional (m-q)-Lelong function over B' x B''(x'', r) with total = C(n-1,p) I + C(n-1,p-1) J",
                    parameters: json!({
                        "function": function_json(&f, fa, &params),
                        "p": p,
                        "m": m,
                        "q": q,
                        "xsecond": pairs(&xs),
                        "bprime": to_value(&b),
                        "ladder": to_value(&ladder),
                        "estimator_config": to_value(&cfg),
                    }),
                    seed: Some(seed),
                    result,
                    csv,
                },
                true,
            ))
        }
        Command::Verify {
            suite: which,
            samples,
            ..
        } => {
            let which = match which {
                SuiteArg::Garding => Suite::Garding,
                SuiteArg::Lelong => Suite::Lelong,
                SuiteArg::Slicing => Suite::Slicing,
                SuiteArg::All => Suite::All,
            };
            let cfg = SuiteConfig {
                seed,
                samples: *samples,
            };
            if cfg.samples < hesslab::integrate::MIN_SAMPLES {
                return Err(Failure::Usage(format!(
                    "--samples must be at least {}",
                    hesslab::integrate::MIN_SAMPLES
                )));
            }
            let run = suite::run_suite(which, &cfg)?;
            let mut csv = Table::new(&["id", "title", "passed"]);
            for o in &run.outcomes {
                csv.push(vec![cell(o.id), o.title.clone(), cell(o.passed)]);
            }
            for (id, secs) in &run.seconds {
                eprintln!("criterion {id}: {secs:.1} s");
            }
            let passed = run.passed();
            Ok((
                Report {
                    command: "verify",
                    statement: "Acceptance checks for the classifier, the Lelong estimators and the slicing identities",
                    parameters: json!({ "suite": to_value(&which), "samples": samples }),
                    seed: Some(seed),
                    result: json!({ "passed": passed, "outcomes": to_value(&run.outcomes) }),
                    csv,
                },
                passed,
            ))
        }
    }
}
