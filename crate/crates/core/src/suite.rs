//! The acceptance suite: twelve numbered checks grouped as `garding` (1-3),
//! `lelong` (4-5) and `slicing` (6-11), plus a partition-independence
//! check (12) run with `all`.
//!
//! Outcomes hold no timings, so two runs with the same seed serialize to
//! identical bytes.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::catalog::{TestFunction, C64};
use crate::error::{Error, Result};
use crate::garding::{self, classify_vab, DEFAULT_TOL};
use crate::integrate::{self, Ball, EstimatorConfig};
use crate::lelong::{self, LelongEstimate, Quality, RadiusLadder};
use crate::slicing::{self, DirectionalEstimate, Thm44Mode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Garding,
    Lelong,
    Slicing,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Suite> {
        match s {
            "garding" => Some(Suite::Garding),
            "lelong" => Some(Suite::Lelong),
            "slicing" => Some(Suite::Slicing),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: integrate::DEFAULT_SEED,
            samples: integrate::DEFAULT_SAMPLES,
        }
    }
}

impl SuiteConfig {
    fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            samples: self.samples,
            seed: self.seed,
            stratified: true,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub details: Value,
}

/// Outcomes plus wall-clock seconds per criterion (kept out of payloads).
#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub outcomes: Vec<Outcome>,
    pub seconds: Vec<(u32, f64)>,
}

impl SuiteRun {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

pub const TITLES: [&str; 12] = [
    "Table 1 reproduction",
    "Brute-force classifier equivalence",
    "v_tau threshold",
    "Fundamental-solution Lelong number",
    "Vanishing point numbers",
    "Monotonicity of directional numbers",
    "Decomposition identity",
    "J-rate",
    "Slice integral identity",
    "Slice Lelong numbers at almost every x'",
    "Exceptional-set detection",
    "Determinism",
];

fn outcome(id: u32, passed: bool, details: Value) -> Outcome {
    Outcome {
        id,
        title: TITLES[id as usize - 1].to_string(),
        passed,
        details,
    }
}

fn timed<T>(seconds: &mut Vec<(u32, f64)>, id: u32, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f();
    seconds.push((id, start.elapsed().as_secs_f64()));
    out
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteRun> {
    let mut outcomes = Vec::new();
    let mut seconds = Vec::new();
    if matches!(suite, Suite::Garding | Suite::All) {
        outcomes.push(timed(&mut seconds, 1, table1_reproduction)?);
        outcomes.push(timed(&mut seconds, 2, classifier_equivalence)?);
        outcomes.push(timed(&mut seconds, 3, || power_threshold(cfg))?);
    }
    if matches!(suite, Suite::Lelong | Suite::All) {
        outcomes.push(timed(&mut seconds, 4, || fundamental_lelong(cfg))?);
        outcomes.push(timed(&mut seconds, 5, || vanishing_point_numbers(cfg))?);
    }
    if matches!(suite, Suite::Slicing | Suite::All) {
        let (six, runs6) = timed(&mut seconds, 6, || monotonicity(cfg))?;
        let (eight, runs8) = timed(&mut seconds, 8, || j_rate(cfg))?;
        let (nine, runs9) = timed(&mut seconds, 9, || slice_identity(cfg))?;
        let mut all_runs = runs6;
        all_runs.extend(runs8);
        all_runs.extend(runs9);
        let seven = timed(&mut seconds, 7, || Ok(decomposition(&all_runs)))?;
        outcomes.extend([six, seven, eight, nine]);
        outcomes.push(timed(&mut seconds, 10, || almost_every_slice(cfg))?);
        outcomes.push(timed(&mut seconds, 11, || exceptional_detection(cfg))?);
    }
    if suite == Suite::All {
        outcomes.push(timed(&mut seconds, 12, || partition_independence(cfg))?);
    }
    Ok(SuiteRun { outcomes, seconds })
}

/// Runs a single criterion. Criterion 7 re-runs the directional estimates of
/// criteria 6, 8 and 9.
pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> Result<Outcome> {
    match id {
        1 => table1_reproduction(),
        2 => classifier_equivalence(),
        3 => power_threshold(cfg),
        4 => fundamental_lelong(cfg),
        5 => vanishing_point_numbers(cfg),
        6 => Ok(monotonicity(cfg)?.0),
        7 => {
            let mut runs = monotonicity(cfg)?.1;
            runs.extend(j_rate(cfg)?.1);
            runs.extend(slice_identity(cfg)?.1);
            Ok(decomposition(&runs))
        }
        8 => Ok(j_rate(cfg)?.0),
        9 => Ok(slice_identity(cfg)?.0),
        10 => almost_every_slice(cfg),
        11 => exceptional_detection(cfg),
        12 => partition_independence(cfg),
        _ => Err(Error::Parameter(format!("no criterion {id}"))),
    }
}

fn zero(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

fn real_point(re: &[f64]) -> Vec<C64> {
    re.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// `(m, k, k - (m-1))` of the fifteen regions, `None` for the not-Sh slice.
pub const TABLE1: [(usize, usize, Option<i64>); 15] = [
    (1, 0, None),
    (1, 1, Some(1)),
    (2, 1, Some(0)),
    (1, 2, Some(2)),
    (2, 2, Some(1)),
    (3, 2, Some(0)),
    (1, 3, Some(3)),
    (2, 3, Some(2)),
    (3, 3, Some(1)),
    (4, 3, Some(0)),
    (1, 4, Some(4)),
    (2, 4, Some(3)),
    (3, 4, Some(2)),
    (4, 4, Some(1)),
    (5, 4, Some(0)),
];

pub const TABLE1_GRID: usize = 241;

fn table1_reproduction() -> Result<Outcome> {
    let rows = garding::table1(5, TABLE1_GRID)?;
    let mut got: Vec<(usize, usize, Option<i64>)> =
        rows.iter().map(|r| (r.m, r.k, r.delta)).collect();
    let mut want = TABLE1.to_vec();
    got.sort();
    want.sort();
    let passed = rows.len() == 15 && got == want;
    Ok(outcome(
        1,
        passed,
        json!({ "rows": rows, "row_count": rows.len() }),
    ))
}

/// `S_0..S_n` by summing products over all subsets.
fn subset_symmetric(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut s = vec![0.0; n + 1];
    for mask in 0u32..(1 << n) {
        let mut prod = 1.0;
        for (j, l) in lambda.iter().enumerate() {
            if mask & (1 << j) != 0 {
                prod *= l;
            }
        }
        s[mask.count_ones() as usize] += prod;
    }
    s
}

fn prefix_nonnegative(s: &[f64]) -> usize {
    s[1..].iter().take_while(|&&v| v >= 0.0).count()
}

/// Indices of `v_{a,b}` and of `u_b` straight from their spectra.
fn oracle_label(n: usize, a: f64, b: f64) -> (usize, usize) {
    let mut full = vec![1.0; n];
    full[0] = a;
    full[1] = b;
    let m = prefix_nonnegative(&subset_symmetric(&full));
    let k = prefix_nonnegative(&subset_symmetric(&full[1..]));
    (m, k)
}

pub const BRUTE_GRID: usize = 2001;
pub const BAND_HALF_WIDTH: f64 = 0.005;

fn classifier_equivalence() -> Result<Outcome> {
    let mut per_n = Vec::new();
    let mut passed = true;
    for n in [4usize, 5, 6] {
        let step = 12.0 / (BRUTE_GRID - 1) as f64;
        let counts: Vec<(usize, usize, usize)> = (0..BRUTE_GRID)
            .into_par_iter()
            .map(|i| {
                let a = -6.0 + step * i as f64;
                let (mut compared, mut excluded, mut bad) = (0, 0, 0);
                for j in 0..BRUTE_GRID {
                    let b = -6.0 + step * j as f64;
                    if garding::certified_margin(n, a, b) < BAND_HALF_WIDTH {
                        excluded += 1;
                        continue;
                    }
                    compared += 1;
                    let l = classify_vab(n, a, b, DEFAULT_TOL).expect("n >= 3");
                    if (l.m_index, l.slice_k_index) != oracle_label(n, a, b) {
                        bad += 1;
                    }
                }
                (compared, excluded, bad)
            })
            .collect();
        let (compared, excluded, bad) = counts
            .iter()
            .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
        passed &= bad == 0;
        per_n.push(json!({
            "n": n,
            "compared": compared,
            "excluded_band": excluded,
            "disagreements": bad,
        }));
    }
    Ok(outcome(
        2,
        passed,
        json!({ "grid": BRUTE_GRID, "band_half_width": BAND_HALF_WIDTH, "per_n": per_n }),
    ))
}

pub const MSH_SAMPLES: usize = 4096;
pub const MSH_SHELL: (f64, f64) = (0.25, 2.0);

fn power_threshold(cfg: &SuiteConfig) -> Result<Outcome> {
    let mut runs = Vec::new();
    let mut passed = true;
    for (n, m) in [(4usize, 2usize), (5, 3), (6, 3)] {
        let tau = n as f64 / m as f64;
        let at = garding::msh_check(
            &TestFunction::power_tau(n, tau)?,
            m,
            MSH_SAMPLES,
            cfg.seed,
            MSH_SHELL,
        )?;
        let past = garding::msh_check(
            &TestFunction::power_tau(n, tau + 0.05)?,
            m,
            MSH_SAMPLES,
            cfg.seed,
            MSH_SHELL,
        )?;
        let fd = at
            .fd_max_rel_error
            .unwrap_or(f64::INFINITY)
            .max(past.fd_max_rel_error.unwrap_or(f64::INFINITY));
        let ok = at.passed && past.violated && fd <= 1e-6;
        passed &= ok;
        runs.push(json!({
            "n": n, "m": m,
            "at_threshold": { "tau": tau, "min_normalized": at.min_normalized, "passed": at.passed },
            "past_threshold": { "tau": tau + 0.05, "min_normalized": past.min_normalized, "violated": past.violated },
            "fd_max_rel_error": fd,
            "passed": ok,
        }));
    }
    Ok(outcome(
        3,
        passed,
        json!({ "samples": MSH_SAMPLES, "shell": [MSH_SHELL.0, MSH_SHELL.1], "runs": runs }),
    ))
}

fn summary(e: &LelongEstimate) -> Value {
    json!({
        "limit": e.limit,
        "quality": e.quality,
        "fit_slope": e.fit_slope,
        "per_radius": e.per_radius,
    })
}

fn fundamental_lelong(cfg: &SuiteConfig) -> Result<Outcome> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let mut runs = Vec::new();
    let mut passed = true;
    for (n, m) in [(4usize, 2usize), (6, 3)] {
        let f = TestFunction::fundamental(n, m)?;
        let a = zero(n);
        let sphere = lelong::lelong_point_sphere(&f, &a, m, &ladder, &est)?;
        let ball = lelong::lelong_point_ball(&f, &a, m, &ladder, &est)?;
        let r = ladder.r_min();
        let ratio = integrate::sphere_mean(&f, &a, r, &est)?.value
            / integrate::ball_mean(&f, &a, r, &est)?.value;
        let target = lelong::ball_factor(n, m);
        let ok = sphere.quality == Quality::Converged
            && ball.quality == Quality::Converged
            && (sphere.limit - 2.0).abs() <= 0.02
            && (ball.limit - 2.0).abs() <= 0.04
            && (ratio - target).abs() <= 0.02 * target;
        passed &= ok;
        runs.push(json!({
            "n": n, "m": m,
            "sphere": summary(&sphere),
            "ball": summary(&ball),
            "mean_ratio": { "r": r, "value": ratio, "target": target },
            "passed": ok,
        }));
    }
    Ok(outcome(4, passed, json!({ "runs": runs })))
}

fn vanishing_point_numbers(cfg: &SuiteConfig) -> Result<Outcome> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let mut cases: Vec<(TestFunction, Vec<C64>, usize)> = vec![
        (TestFunction::quadratic_ab(5, 2.0, -1.0)?, zero(5), 3),
        (
            TestFunction::quadratic_ab(5, -3.0, 0.5)?,
            real_point(&[0.2, -0.1, 0.0, 0.3, 0.0]),
            2,
        ),
        (
            TestFunction::quadratic_ab(4, 1.0, 1.0)?,
            real_point(&[0.0, 0.5, 0.0, 0.0]),
            2,
        ),
    ];
    for (n, m) in [(4usize, 2usize), (6, 3)] {
        let tau = n as f64 / m as f64 - 0.2;
        cases.push((TestFunction::power_tau(n, tau)?, zero(n), m));
    }
    let mut runs = Vec::new();
    let mut passed = true;
    for (f, a, m) in &cases {
        for (kind, e) in [
            (
                "sphere",
                lelong::lelong_point_sphere(f, a, *m, &ladder, &est)?,
            ),
            ("ball", lelong::lelong_point_ball(f, a, *m, &ladder, &est)?),
        ] {
            let ok = e.quality == Quality::Converged && e.limit.abs() <= 1e-2;
            passed &= ok;
            runs.push(json!({
                "function": f.to_string(),
                "center": a.iter().map(|c| [c.re, c.im]).collect::<Vec<_>>(),
                "m": m,
                "estimator": kind,
                "limit": e.limit,
                "quality": e.quality,
                "passed": ok,
            }));
        }
    }
    Ok(outcome(5, passed, json!({ "runs": runs })))
}

/// `(n, m, p, q)` for the J-rate runs.
pub const TRIPLES: [(usize, usize, usize, usize); 3] = [(4, 3, 1, 1), (5, 3, 1, 1), (6, 3, 2, 1)];

/// `(n, m, p, q)` for the monotonicity runs. All have `p >= n/m`: below that
/// the z'-block trace of `Φ_{n,m}` is negative near the z' axis and J(r)
/// decreases (see [`MONOTONICITY_COUNTEREXAMPLE`]).
pub const MONOTONE_TRIPLES: [(usize, usize, usize, usize); 3] =
    [(6, 3, 2, 1), (6, 4, 2, 2), (5, 4, 2, 2)];

pub const MONOTONICITY_COUNTEREXAMPLE: (usize, usize, usize, usize) = (4, 3, 1, 1);

fn offset_ball(p: usize) -> Result<Ball> {
    let mut c = zero(p);
    c[0] = C64::new(0.5, 0.0);
    Ball::new(c, 0.25)
}

type Runs = Vec<(String, DirectionalEstimate)>;

fn monotonicity(cfg: &SuiteConfig) -> Result<(Outcome, Runs)> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let mut reports = Vec::new();
    let mut runs = Vec::new();
    let mut passed = true;
    for &(n, m, p, q) in &MONOTONE_TRIPLES {
        let entries: Vec<(TestFunction, Ball)> = vec![
            (TestFunction::log_abs_z2(n, p)?, Ball::origin(p, 0.5)?),
            (TestFunction::fundamental(n, m)?, offset_ball(p)?),
            (TestFunction::abs_sq(n)?, Ball::origin(p, 0.5)?),
        ];
        for (f, b) in entries {
            let rep = slicing::monotonicity_check(&f, &b, &zero(n - p), m, q, &ladder, &est)?;
            passed &= rep.passed;
            reports.push(json!({
                "function": rep.function,
                "n": n, "m": m, "p": p, "q": q,
                "bprime": b,
                "per_radius": rep.estimate.per_radius,
                "violations": rep.violations,
                "passed": rep.passed,
            }));
            runs.push((format!("monotonicity {}", rep.function), rep.estimate));
        }
    }
    // reported, not scored
    let (n, m, p, q) = MONOTONICITY_COUNTEREXAMPLE;
    let f = TestFunction::fundamental(n, m)?;
    let b = offset_ball(p)?;
    let rep = slicing::monotonicity_check(&f, &b, &zero(n - p), m, q, &ladder, &est)?;
    let counterexample = json!({
        "function": rep.function,
        "n": n, "m": m, "p": p, "q": q,
        "bprime": b,
        "per_radius": rep.estimate.per_radius,
        "violations": rep.violations,
    });
    runs.push((
        format!("monotonicity counterexample {}", rep.function),
        rep.estimate,
    ));
    Ok((
        outcome(
            6,
            passed,
            json!({ "runs": reports, "counterexample": counterexample }),
        ),
        runs,
    ))
}

pub const DECOMPOSITION_TOL: f64 = 1e-9;

fn decomposition(runs: &Runs) -> Outcome {
    let rows: Vec<Value> = runs
        .iter()
        .map(|(label, e)| {
            json!({ "run": label, "n": e.n, "p": e.p, "max_relative_residual": e.decomposition_residual() })
        })
        .collect();
    let passed = !runs.is_empty()
        && runs
            .iter()
            .all(|(_, e)| e.decomposition_residual() <= DECOMPOSITION_TOL);
    outcome(
        7,
        passed,
        json!({ "tolerance": DECOMPOSITION_TOL, "runs": rows }),
    )
}

fn j_rate(cfg: &SuiteConfig) -> Result<(Outcome, Runs)> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut passed = true;
    for &(n, m, p, q) in &TRIPLES {
        let f = TestFunction::log_abs(n)?;
        let b = if p >= 2 {
            Ball::origin(p, 0.5)?
        } else {
            offset_ball(p)?
        };
        let e = slicing::directional_lelong(&f, &b, &zero(n - p), m, q, &ladder, &est)?;
        let slope = e.j_rate(4);
        let bound = e.j_rate_bound() - 0.3;
        let ok = slope.is_some_and(|s| s >= bound);
        passed &= ok;
        rows.push(json!({
            "function": f.to_string(),
            "n": n, "m": m, "p": p, "q": q,
            "bprime": b,
            "slope": slope,
            "required": bound,
            "per_radius": e.per_radius,
            "passed": ok,
        }));
        runs.push((format!("j-rate {f}"), e));
    }
    Ok((outcome(8, passed, json!({ "runs": rows })), runs))
}

fn slice_identity(cfg: &SuiteConfig) -> Result<(Outcome, Runs)> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let cases: Vec<(TestFunction, usize, usize, usize, Ball)> = vec![
        (
            TestFunction::log_abs_z2(5, 1)?,
            3,
            1,
            1,
            Ball::origin(1, 0.5)?,
        ),
        (
            TestFunction::quadratic_ab(5, 2.0, 0.5)?,
            3,
            1,
            1,
            Ball::origin(1, 0.5)?,
        ),
        (TestFunction::fundamental(6, 3)?, 3, 2, 1, offset_ball(2)?),
    ];
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let mut passed = true;
    for (f, m, p, q, b) in cases {
        let n = f.dim();
        let rep = slicing::cor43_check(
            &f,
            &b,
            &zero(n - p),
            m,
            q,
            slicing::MIN_XPRIME_SAMPLES,
            &ladder,
            &est,
        )?;
        passed &= rep.passed;
        rows.push(json!({
            "function": rep.function,
            "n": n, "m": m, "p": p, "q": q,
            "bprime": b,
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "difference": rep.difference,
            "tainted": rep.tainted,
            "kappa_cal": rep.kappa_cal,
            "j_rate": rep.j_rate,
            "j_rate_bound": rep.j_rate_bound,
            "slices": rep.slices,
            "passed": rep.passed,
        }));
        runs.push((format!("slice identity {}", rep.function), rep.directional));
    }
    // the frozen calibration must still give 2 on the fundamental solution
    let fast = EstimatorConfig {
        radial_fast_path: true,
        ..est.clone()
    };
    let mut calibration = Vec::new();
    for (n, m) in [(4usize, 2usize), (6, 3)] {
        let f = TestFunction::fundamental(n, m)?;
        let e = lelong::lelong_point_mass(&f, &zero(n), m, &ladder, &fast)?;
        let ok = e.quality == Quality::Converged && (e.limit - 2.0).abs() <= 0.02;
        passed &= ok;
        calibration.push(json!({
            "n": n, "m": m,
            "kappa_cal": lelong::kappa_cal(n, m)?,
            "limit": e.limit,
            "quality": e.quality,
            "passed": ok,
        }));
    }
    Ok((
        outcome(
            9,
            passed,
            json!({ "tolerance": slicing::ZERO_FLOOR, "runs": rows, "calibration": calibration }),
        ),
        runs,
    ))
}

fn almost_every_slice(cfg: &SuiteConfig) -> Result<Outcome> {
    let est = cfg.estimator();
    let ladder = RadiusLadder::default();
    let cases: Vec<(TestFunction, usize, usize, Thm44Mode, Ball)> = vec![
        (
            TestFunction::fundamental(6, 3)?,
            3,
            2,
            Thm44Mode::IntegerCase,
            offset_ball(2)?,
        ),
        (
            TestFunction::log_abs_z2(5, 1)?,
            3,
            1,
            Thm44Mode::FractionalCase,
            Ball::origin(1, 0.5)?,
        ),
        (
            TestFunction::fundamental(5, 3)?,
            3,
            1,
            Thm44Mode::FractionalCase,
            offset_ball(1)?,
        ),
    ];
    let mut rows = Vec::new();
    let mut passed = true;
    for (f, m, p, mode, b) in cases {
        let n = f.dim();
        let rep = slicing::thm44_check(
            &f,
            p,
            m,
            mode,
            &b,
            &zero(n - p),
            slicing::MIN_XPRIME_SAMPLES,
            &ladder,
            &est,
        )?;
        let ok = rep.passed && rep.points.len() >= slicing::MIN_XPRIME_SAMPLES;
        passed &= ok;
        rows.push(json!({
            "function": rep.function,
            "mode": rep.mode,
            "n": n, "m": m, "p": p, "q": rep.q,
            "c": rep.c, "d": rep.d,
            "bprime": b,
            "points": rep.points,
            "passed": ok,
        }));
    }
    Ok(outcome(
        10,
        passed,
        json!({ "tolerance": slicing::ZERO_FLOOR, "runs": rows }),
    ))
}

pub const SCAN_GRID: usize = 11;

fn exceptional_detection(cfg: &SuiteConfig) -> Result<Outcome> {
    let est = cfg.estimator();
    let cases = [
        (TestFunction::log_abs_zprime(3, 1)?, true),
        (TestFunction::log_abs_z2(3, 1)?, false),
        (TestFunction::quadratic_ab(3, 1.0, -2.0)?, false),
    ];
    let mut rows = Vec::new();
    let mut passed = true;
    for (f, expect_origin) in cases {
        let scan = slicing::exceptional_scan(&f, 1, SCAN_GRID, 1.0, &est)?;
        let flagged: Vec<Vec<[f64; 2]>> =
            scan.candidates.iter().map(|c| c.xprime.clone()).collect();
        let want: Vec<Vec<[f64; 2]>> = if expect_origin {
            vec![vec![[0.0, 0.0]]]
        } else {
            vec![]
        };
        let ok = flagged == want && scan.inconclusive.is_empty();
        passed &= ok;
        rows.push(json!({
            "function": scan.function,
            "points_scanned": scan.points_scanned,
            "flagged": flagged,
            "inconclusive": scan.inconclusive,
            "passed": ok,
        }));
    }
    Ok(outcome(
        11,
        passed,
        json!({ "grid": SCAN_GRID, "runs": rows }),
    ))
}

/// Re-runs a sample of the estimators on pools of 1 and 3 worker threads
/// and compares the serialized results.
fn partition_independence(cfg: &SuiteConfig) -> Result<Outcome> {
    let run = |threads: usize| -> Result<String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Parameter(e.to_string()))?;
        pool.install(|| {
            let est = cfg.estimator();
            let ladder = RadiusLadder::default();
            let f = TestFunction::fundamental(4, 2)?;
            let ball = lelong::lelong_point_ball(&f, &zero(4), 2, &ladder, &est)?;
            let g = TestFunction::log_abs(5)?;
            let dir =
                slicing::directional_lelong(&g, &offset_ball(1)?, &zero(4), 3, 1, &ladder, &est)?;
            serde_json::to_string(&(ball, dir)).map_err(|e| Error::Parameter(e.to_string()))
        })
    };
    let one = run(1)?;
    let three = run(3)?;
    let passed = one == three;
    Ok(outcome(
        12,
        passed,
        json!({ "threads": [1, 3], "payload_bytes": one.len(), "identical": passed }),
    ))
}
