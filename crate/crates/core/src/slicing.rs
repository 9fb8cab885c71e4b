//! Slices `v(x', ·)` across `C^p x C^{n-p}`, their subharmonicity index,
//! exceptional fibers, and directional `(m-q)`-Lelong numbers
//!
//! ```text
//! ν_{m-q}(dd^c v, B', x'', r) = r^{-2(n-p)(1 - 1/(m-q))} ∫_{B' x B''(x'',r)} dd^c v ∧ β^{n-1}
//!                             = C(n-1,p) I(r) + C(n-1,p-1) J(r)
//! ```
//!
//! where `I` integrates `dd^c v ∧ β'^p ∧ β''^{n-p-1}` (the `z''` trace) and
//! `J` integrates `dd^c v ∧ β'^{p-1} ∧ β''^{n-p}` (the `z'` trace).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::factorial;
use statrs::function::gamma::gamma;

use crate::catalog::{Point, SingularSet, TestFunction, C64};
use crate::error::{Error, Result};
use crate::garding::{self, binomial};
use crate::hessian::{self, HermitianMatrix};
use crate::integrate::{self, ball_volume, kappa_form, Ball, EstimatorConfig, MassParts};
use crate::lelong::{self, kappa_cal, LelongEstimate, Quality, RadiusLadder, Rung};

/// Absolute tolerance under which both sides of a slicing identity count
/// as vanishing together.
pub const ZERO_FLOOR: f64 = 1e-2;
/// Minimum number of `x'` used to stand in for "almost every `x'`".
pub const MIN_XPRIME_SAMPLES: usize = 25;

fn check_triple(n: usize, m: usize, p: usize) -> Result<()> {
    if !(1 <= p && p < m && m < n) {
        return Err(Error::Parameter(format!(
            "need 1 <= p < m < n, got n={n}, m={m}, p={p}"
        )));
    }
    Ok(())
}

/// Smallest integer `q >= mp/n`.
pub fn q_min(n: usize, m: usize, p: usize) -> Result<usize> {
    check_triple(n, m, p)?;
    Ok((m * p).div_ceil(n))
}

/// `mp/n` is an integer.
pub fn integer_case(n: usize, m: usize, p: usize) -> bool {
    (m * p).is_multiple_of(n)
}

/// `v(x', ·)` as a function on `C^{n-p}`.
#[derive(Clone, Debug)]
pub struct SliceFunction {
    parent: TestFunction,
    xprime: Vec<C64>,
    inner: TestFunction,
}

impl SliceFunction {
    pub fn parent(&self) -> &TestFunction {
        &self.parent
    }

    pub fn xprime(&self) -> &[C64] {
        &self.xprime
    }

    pub fn function(&self) -> &TestFunction {
        &self.inner
    }

    pub fn eval(&self, zsecond: &Point) -> Result<f64> {
        self.inner.eval(zsecond)
    }

    pub fn hessian(&self, zsecond: &Point) -> Result<HermitianMatrix> {
        self.inner.hessian(zsecond)
    }
}

pub fn slice(f: &TestFunction, xprime: &[C64]) -> Result<SliceFunction> {
    if xprime.is_empty() || xprime.len() >= f.dim() {
        return Err(Error::Parameter(format!(
            "x' must have between 1 and {} coordinates, got {}",
            f.dim() - 1,
            xprime.len()
        )));
    }
    Ok(SliceFunction {
        parent: f.clone(),
        xprime: xprime.to_vec(),
        inner: TestFunction::sliced(f, xprime),
    })
}

fn pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    Integrable,
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DoublingLevel {
    pub samples: usize,
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub xprime: Vec<[f64; 2]>,
    pub verdict: Integrability,
    pub reason: String,
    pub levels: Vec<DoublingLevel>,
}

const PROBES: usize = 16;
const MAX_DOUBLINGS: usize = 8;
/// Relative change between doublings still counted as settled.
const SETTLED: f64 = 0.05;
/// Growth over four doublings counted as unbounded.
const GROWTH: f64 = 1.5;

/// Whether `∫_{ω''} max(-v(x', z''), 0)` is finite.
///
/// Samples are never clamped here: a clamp would bound the integrand.
pub fn slice_integrability(
    f: &TestFunction,
    xprime: &[C64],
    omega: &Ball,
    cfg: &EstimatorConfig,
) -> Result<IntegrabilityReport> {
    let s = slice(f, xprime)?;
    let g = s.function();
    if omega.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: omega.dim(),
        });
    }
    let report = |verdict, reason: &str, levels| IntegrabilityReport {
        xprime: pairs(xprime),
        verdict,
        reason: reason.to_string(),
        levels,
    };
    if *g.singular_set() == SingularSet::Everywhere {
        return Ok(report(
            Integrability::Divergent,
            "slice is -inf on all of C^{n-p}",
            vec![],
        ));
    }
    let mut all_minus_inf = true;
    for i in 0..PROBES {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(i as u64);
        let mut z = vec![C64::new(0.0, 0.0); g.dim()];
        let u: f64 = rand::Rng::random(&mut rng);
        integrate::ball_point(&mut rng, &omega.center, omega.radius, u, &mut z);
        if g.eval(&Point::new(z))? != f64::NEG_INFINITY {
            all_minus_inf = false;
            break;
        }
    }
    if all_minus_inf {
        return Ok(report(
            Integrability::Divergent,
            "slice is -inf at every probe",
            vec![],
        ));
    }

    let base = (cfg.samples / 64).max(4 * integrate::MIN_SAMPLES);
    let volume = omega.volume();
    let mut levels: Vec<DoublingLevel> = Vec::new();
    for j in 0..=MAX_DOUBLINGS {
        let level_cfg = EstimatorConfig {
            samples: base << j,
            clamp_radius: 0.0,
            stratified: false,
            ..cfg.clone()
        };
        let [est] = integrate::monte_carlo(
            &level_cfg,
            g.dim(),
            g.singular_set(),
            |rng, u, out| integrate::ball_point(rng, &omega.center, omega.radius, u, out),
            |z| {
                let v = g.eval_coords(z);
                Ok([if v == f64::NEG_INFINITY {
                    f64::MAX.sqrt()
                } else {
                    (-v).max(0.0)
                }])
            },
        )?;
        levels.push(DoublingLevel {
            samples: level_cfg.samples,
            estimate: est.value * volume,
            stderr: est.stderr * volume,
        });
        let k = levels.len();
        if k >= 5 {
            let w = &levels[k - 5..];
            let at_peak = w.iter().all(|l| l.estimate <= w[4].estimate);
            if at_peak && w[4].estimate >= GROWTH * w[0].estimate {
                return Ok(report(
                    Integrability::Divergent,
                    "estimate grew by half or more across four doublings",
                    levels,
                ));
            }
        }
        if k >= 4 {
            // the sample stderr means nothing for an infinite-mean integrand
            let settled = levels[k - 4..]
                .windows(2)
                .all(|p| (p[1].estimate - p[0].estimate).abs() <= SETTLED * p[1].estimate.abs());
            if settled {
                return Ok(report(
                    Integrability::Integrable,
                    "estimate settled",
                    levels,
                ));
            }
        }
    }
    Err(Error::Inconclusive(format!(
        "slice integrability at x' = {:?} undecided after {MAX_DOUBLINGS} doublings",
        pairs(xprime)
    )))
}

/// Minimum over `probes` of the subharmonicity index of the slice Hessian.
pub fn slice_index(
    f: &TestFunction,
    xprime: &[C64],
    probes: &[Vec<C64>],
    tol: f64,
) -> Result<usize> {
    let s = slice(f, xprime)?;
    if probes.is_empty() {
        return Err(Error::Parameter("need at least one probe".into()));
    }
    let mut index = usize::MAX;
    for z in probes {
        let h = s.hessian(&Point::new(z.clone()))?;
        let spec = hessian::spectrum(&h)?;
        index = index.min(garding::subharmonic_index(spec.eigenvalues(), tol));
    }
    Ok(index)
}

/// `count` deterministic points on the sphere of radius `radius` in C^d.
pub fn sphere_probes(d: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<C64>> {
    let center = vec![C64::new(0.0, 0.0); d];
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut z = vec![C64::new(0.0, 0.0); d];
            integrate::ball_point(&mut rng, &center, radius, 1.0, &mut z);
            z
        })
        .collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131,
];

/// First `count` Halton points inside `ball` (rejection from the bounding
/// cube), skipping those accepted by `exclude`.
pub fn halton_points(ball: &Ball, count: usize, exclude: impl Fn(&[C64]) -> bool) -> Vec<Vec<C64>> {
    let d = ball.dim();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    while out.len() < count && i < 1_000_000 {
        let z: Vec<C64> = (0..d)
            .map(|j| {
                let re = 2.0 * radical_inverse(i, PRIMES[2 * j]) - 1.0;
                let im = 2.0 * radical_inverse(i, PRIMES[2 * j + 1]) - 1.0;
                ball.center[j] + C64::new(re, im) * ball.radius
            })
            .collect();
        i += 1;
        if ball.contains(&z) && !exclude(&z) {
            out.push(z);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanCandidate {
    pub xprime: Vec<[f64; 2]>,
    pub evidence: IntegrabilityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExceptionalScan {
    pub function: String,
    pub n: usize,
    pub p: usize,
    pub grid: usize,
    pub extent: f64,
    pub omega_radius: f64,
    pub points_scanned: usize,
    pub candidates: Vec<ScanCandidate>,
    pub inconclusive: Vec<Vec<[f64; 2]>>,
}

/// Checks slice integrability on a `grid x grid` lattice over the real and
/// imaginary parts of `x'_1` in `[-extent, extent]^2` (other coordinates of
/// `x'` are 0), with `ω''` the unit ball of `C^{n-p}`.
pub fn exceptional_scan(
    f: &TestFunction,
    p: usize,
    grid: usize,
    extent: f64,
    cfg: &EstimatorConfig,
) -> Result<ExceptionalScan> {
    let n = f.dim();
    if p == 0 || p >= n {
        return Err(Error::Parameter(format!("need 1 <= p < n, got p={p}")));
    }
    if grid < 2 {
        return Err(Error::Parameter(format!("grid must be >= 2, got {grid}")));
    }
    let omega = Ball::origin(n - p, 1.0)?;
    let half = (grid - 1) as f64 / 2.0;
    let lattice: Vec<Vec<C64>> = (0..grid * grid)
        .map(|idx| {
            let (i, j) = (idx / grid, idx % grid);
            let mut x = vec![C64::new(0.0, 0.0); p];
            x[0] = C64::new(
                extent * (i as f64 - half) / half,
                extent * (j as f64 - half) / half,
            );
            x
        })
        .collect();
    let results: Vec<Result<IntegrabilityReport>> = lattice
        .par_iter()
        .map(|x| slice_integrability(f, x, &omega, cfg))
        .collect();
    let mut candidates = Vec::new();
    let mut inconclusive = Vec::new();
    for (x, r) in lattice.iter().zip(results) {
        match r {
            Ok(rep) if rep.verdict == Integrability::Divergent => candidates.push(ScanCandidate {
                xprime: pairs(x),
                evidence: rep,
            }),
            Ok(_) => {}
            Err(Error::Inconclusive(_)) => inconclusive.push(pairs(x)),
            Err(e) => return Err(e),
        }
    }
    Ok(ExceptionalScan {
        function: f.to_string(),
        n,
        p,
        grid,
        extent,
        omega_radius: omega.radius,
        points_scanned: lattice.len(),
        candidates,
        inconclusive,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionalRung {
    pub r: f64,
    pub total: f64,
    pub i: f64,
    pub j: f64,
    pub total_stderr: f64,
    pub i_stderr: f64,
    pub j_stderr: f64,
    pub clipped_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionalEstimate {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub q: usize,
    /// Exponent `-2(n-p)(1 - 1/(m-q))` applied to the raw mass.
    pub scaling_exponent: f64,
    pub per_radius: Vec<DirectionalRung>,
    pub limit: f64,
    pub quality: Quality,
    pub fit_slope: f64,
}

/// Weights `(w_I, w_J)` taking the `z''` and `z'` trace masses to `I` and `J`:
/// `p!(n-p-1)!/n!` and `(p-1)!(n-p)!/n!`.
pub fn trace_weights(n: usize, p: usize) -> (f64, f64) {
    let nf = factorial(n as u64);
    (
        factorial(p as u64) * factorial((n - p - 1) as u64) / nf,
        factorial((p - 1) as u64) * factorial((n - p) as u64) / nf,
    )
}

fn check_directional(n: usize, p: usize, m: usize, q: usize) -> Result<()> {
    let qm = q_min(n, m, p)?;
    if q < qm {
        return Err(Error::Parameter(format!(
            "q = {q} is below q_min(n={n}, m={m}, p={p}) = {qm}"
        )));
    }
    if q >= m {
        return Err(Error::Parameter(format!(
            "need m - q >= 1, got m={m}, q={q}"
        )));
    }
    Ok(())
}

pub fn directional_lelong(
    f: &TestFunction,
    bprime: &Ball,
    xsecond: &[C64],
    m: usize,
    q: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<DirectionalEstimate> {
    let n = f.dim();
    let p = bprime.dim();
    check_directional(n, p, m, q)?;
    if p + xsecond.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p + xsecond.len(),
        });
    }
    ladder.check(cfg)?;
    let exponent = -2.0 * (n - p) as f64 * (1.0 - 1.0 / (m - q) as f64);
    let (wi, wj) = trace_weights(n, p);
    let parts: Vec<Result<MassParts>> = ladder
        .radii()
        .into_par_iter()
        .map(|r| integrate::hessian_mass_parts(f, bprime, xsecond, r, cfg))
        .collect();
    let mut per_radius = Vec::with_capacity(parts.len());
    for (r, mp) in ladder.radii().into_iter().zip(parts) {
        let mp = mp?;
        let s = r.powf(exponent);
        per_radius.push(DirectionalRung {
            r,
            total: s * mp.total.value / n as f64,
            i: s * wi * mp.zsecond_trace.value,
            j: s * wj * mp.zprime_trace.value,
            total_stderr: s * mp.total.stderr / n as f64,
            i_stderr: s * wi * mp.zsecond_trace.stderr,
            j_stderr: s * wj * mp.zprime_trace.stderr,
            clipped_fraction: mp.total.clipped_fraction,
        });
    }
    let rungs: Vec<Rung> = per_radius
        .iter()
        .map(|d| Rung {
            r: d.r,
            value: d.total,
            stderr: d.total_stderr,
            clipped_fraction: d.clipped_fraction,
        })
        .collect();
    let est = lelong::finish(rungs, false)?;
    Ok(DirectionalEstimate {
        n,
        p,
        m,
        q,
        scaling_exponent: exponent,
        per_radius,
        limit: est.limit,
        quality: est.quality,
        fit_slope: est.fit_slope,
    })
}

impl DirectionalEstimate {
    /// Largest `|total - C(n-1,p) I - C(n-1,p-1) J| / |total|` over the rungs.
    pub fn decomposition_residual(&self) -> f64 {
        let (n, p) = (self.n as i64, self.p as i64);
        let (bi, bj) = (binomial(n - 1, p), binomial(n - 1, p - 1));
        self.per_radius
            .iter()
            .map(|d| {
                let diff = (d.total - bi * d.i - bj * d.j).abs();
                if d.total == 0.0 {
                    diff
                } else {
                    diff / d.total.abs()
                }
            })
            .fold(0.0, f64::max)
    }

    /// Least-squares slope of `log J` against `log r` over the smallest
    /// `last` rungs; `None` if some `J <= 0` there.
    pub fn j_rate(&self, last: usize) -> Option<f64> {
        let k = last.min(self.per_radius.len());
        let tail = &self.per_radius[self.per_radius.len() - k..];
        if tail.iter().any(|d| !(d.j > 0.0)) {
            return None;
        }
        let x: Vec<f64> = tail.iter().map(|d| d.r.ln()).collect();
        let y: Vec<f64> = tail.iter().map(|d| d.j.ln()).collect();
        let mx = x.iter().sum::<f64>() / k as f64;
        let my = y.iter().sum::<f64>() / k as f64;
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// `2(n-p)/(m-q)`, the decay rate of `J` from the Corollary 4.3 bound.
    pub fn j_rate_bound(&self) -> f64 {
        2.0 * (self.n - self.p) as f64 / (self.m - self.q) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub series: String,
    pub r_small: f64,
    pub r_large: f64,
    pub drop: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub function: String,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub q: usize,
    pub passed: bool,
    pub violations: Vec<Violation>,
    pub estimate: DirectionalEstimate,
}

/// Checks that total, I and J do not decrease with `r`, allowing
/// `3 sqrt(se_1^2 + se_2^2)` between neighboring rungs.
pub fn monotonicity_report(function: &str, est: DirectionalEstimate) -> MonotonicityReport {
    let mut violations = Vec::new();
    let series: [(&str, fn(&DirectionalRung) -> (f64, f64)); 3] = [
        ("total", |d| (d.total, d.total_stderr)),
        ("i", |d| (d.i, d.i_stderr)),
        ("j", |d| (d.j, d.j_stderr)),
    ];
    for (name, get) in series {
        for w in est.per_radius.windows(2) {
            let (big, small) = (get(&w[0]), get(&w[1]));
            let slack = 3.0 * (big.1 * big.1 + small.1 * small.1).sqrt()
                + 1e-12 * big.0.abs().max(small.0.abs());
            let drop = small.0 - big.0;
            if drop > slack {
                violations.push(Violation {
                    series: name.to_string(),
                    r_small: w[1].r,
                    r_large: w[0].r,
                    drop,
                    slack,
                });
            }
        }
    }
    MonotonicityReport {
        function: function.to_string(),
        n: est.n,
        p: est.p,
        m: est.m,
        q: est.q,
        passed: violations.is_empty(),
        violations,
        estimate: est,
    }
}

pub fn monotonicity_check(
    f: &TestFunction,
    bprime: &Ball,
    xsecond: &[C64],
    m: usize,
    q: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<MonotonicityReport> {
    let est = directional_lelong(f, bprime, xsecond, m, q, ladder, cfg)?;
    Ok(monotonicity_report(&f.to_string(), est))
}

/// `x'` in `B'` standing in for "almost every `x'`": Halton points, minus
/// those within `δ` of fibers where the singular set concentrates.
pub fn generic_xprime(f: &TestFunction, bprime: &Ball, count: usize, delta: f64) -> Vec<Vec<C64>> {
    let singular = f.singular_set().clone();
    halton_points(bprime, count, |x| singular.fiber_distance(x) < delta)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceLelong {
    pub xprime: Vec<[f64; 2]>,
    pub limit: f64,
    pub quality: Quality,
}

fn slice_lelong(
    f: &TestFunction,
    x: &[C64],
    xsecond: &[C64],
    index: usize,
    by_mass: bool,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<(SliceLelong, LelongEstimate)> {
    let s = slice(f, x)?;
    let est = if by_mass {
        lelong::lelong_point_mass(s.function(), xsecond, index, ladder, cfg)?
    } else {
        lelong::lelong_point_sphere(s.function(), xsecond, index, ladder, cfg)?
    };
    Ok((
        SliceLelong {
            xprime: pairs(x),
            limit: est.limit,
            quality: est.quality,
        },
        est,
    ))
}

fn slices_over(
    f: &TestFunction,
    xs: &[Vec<C64>],
    xsecond: &[C64],
    index: usize,
    by_mass: bool,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<Vec<SliceLelong>> {
    xs.par_iter()
        .map(|x| slice_lelong(f, x, xsecond, index, by_mass, ladder, cfg).map(|r| r.0))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cor43Report {
    pub function: String,
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub q: usize,
    pub bprime: Ball,
    pub xsecond: Vec<[f64; 2]>,
    /// Directional number `ν_{m-q}(dd^c v, B', x'')`.
    pub lhs: f64,
    /// `C(n-1,p) Vol_β'(B') mean_x' ν_{m-q}(slice) / κ_cal(n-p, m-q)`.
    pub rhs: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub kappa_cal: f64,
    pub j_rate: Option<f64>,
    pub j_rate_bound: f64,
    pub slices: Vec<SliceLelong>,
    pub tainted: bool,
    pub passed: bool,
    pub directional: DirectionalEstimate,
}

#[allow(clippy::too_many_arguments)]
pub fn cor43_check(
    f: &TestFunction,
    bprime: &Ball,
    xsecond: &[C64],
    m: usize,
    q: usize,
    xcount: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<Cor43Report> {
    let n = f.dim();
    let p = bprime.dim();
    let directional = directional_lelong(f, bprime, xsecond, m, q, ladder, cfg)?;
    let xs = generic_xprime(f, bprime, xcount.max(MIN_XPRIME_SAMPLES), cfg.clamp_radius);
    let slices = slices_over(f, &xs, xsecond, m - q, true, ladder, cfg)?;
    let cal = kappa_cal(n - p, m - q)?;
    let mean = slices.iter().map(|s| s.limit).sum::<f64>() / slices.len() as f64;
    let volume_beta = kappa_form(p) * ball_volume(p, bprime.radius);
    let rhs = binomial(n as i64 - 1, p as i64) * volume_beta * mean / cal;
    let lhs = directional.limit;
    let difference = (lhs - rhs).abs();
    let tainted = directional.quality != Quality::Converged
        || slices.iter().any(|s| s.quality != Quality::Converged);
    Ok(Cor43Report {
        function: f.to_string(),
        n,
        p,
        m,
        q,
        bprime: bprime.clone(),
        xsecond: pairs(xsecond),
        lhs,
        rhs,
        difference,
        tolerance: ZERO_FLOOR,
        kappa_cal: cal,
        j_rate: directional.j_rate(4),
        j_rate_bound: directional.j_rate_bound(),
        slices,
        tainted,
        passed: !tainted && difference <= ZERO_FLOOR,
        directional,
    })
}

/// `c(n,m,p) = π^p Γ(n - n/m + 1) / Γ(n - n/m + p + 1)`, accepting `p = 0`.
pub fn thm44_c(n: usize, m: usize, p: usize) -> Result<f64> {
    if m == 0 || m > n || p >= n {
        return Err(Error::Parameter(format!(
            "invalid (n, m, p) = ({n}, {m}, {p})"
        )));
    }
    let x = n as f64 - n as f64 / m as f64;
    gamma_ratio(x + 1.0, x + p as f64 + 1.0).map(|g| std::f64::consts::PI.powi(p as i32) * g)
}

fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    for x in [a, b] {
        if x <= 0.0 && x.fract() == 0.0 {
            return Err(Error::Parameter(format!("Gamma pole at {x}")));
        }
    }
    let v = gamma(a) / gamma(b);
    if v.is_finite() && v != 0.0 {
        Ok(v)
    } else {
        Err(Error::NonFinite(format!("Gamma({a}) / Gamma({b})")))
    }
}

/// `(c, d)` with `d = Γ(n - (n-p)/(m-q) + p + 1) / (π^p Γ(n - (n-p)/(m-q) + 1))`,
/// `q = q_min(n, m, p)`.
pub fn thm44_constant(n: usize, m: usize, p: usize) -> Result<(f64, f64)> {
    let q = q_min(n, m, p)?;
    let c = thm44_c(n, m, p)?;
    let y = n as f64 - (n - p) as f64 / (m - q) as f64;
    let d = gamma_ratio(y + p as f64 + 1.0, y + 1.0)? / std::f64::consts::PI.powi(p as i32);
    Ok((c, d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Thm44Mode {
    IntegerCase,
    FractionalCase,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thm44Point {
    pub xprime: Vec<[f64; 2]>,
    /// `ν_m(dd^c v, (x', x''))`; integer case only.
    pub lhs: Option<f64>,
    /// `c C(n-1,p) ν_{m-q}(slice, x'')` in the integer case, the bare slice
    /// number in the fractional case.
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thm44Report {
    pub function: String,
    pub mode: Thm44Mode,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub c: f64,
    pub d: f64,
    pub bprime: Ball,
    pub xsecond: Vec<[f64; 2]>,
    pub tolerance: f64,
    pub points: Vec<Thm44Point>,
    pub passed: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn thm44_check(
    f: &TestFunction,
    p: usize,
    m: usize,
    mode: Thm44Mode,
    bprime: &Ball,
    xsecond: &[C64],
    xcount: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<Thm44Report> {
    let n = f.dim();
    let q = q_min(n, m, p)?;
    let want = if integer_case(n, m, p) {
        Thm44Mode::IntegerCase
    } else {
        Thm44Mode::FractionalCase
    };
    if mode != want {
        return Err(Error::Parameter(format!(
            "mp/n = {}/{} calls for {want:?}, not {mode:?}",
            m * p,
            n
        )));
    }
    if bprime.dim() != p || p + xsecond.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bprime.dim() + xsecond.len(),
        });
    }
    let (c, d) = thm44_constant(n, m, p)?;
    let weight = c * binomial(n as i64 - 1, p as i64);
    let xs = generic_xprime(f, bprime, xcount.max(MIN_XPRIME_SAMPLES), cfg.clamp_radius);
    let points: Vec<Result<Thm44Point>> = xs
        .par_iter()
        .map(|x| {
            let (s, _) = slice_lelong(f, x, xsecond, m - q, false, ladder, cfg)?;
            let ok = |e: Quality, v: f64| e == Quality::Converged && v.abs() <= ZERO_FLOOR;
            match mode {
                Thm44Mode::IntegerCase => {
                    let mut a = x.clone();
                    a.extend_from_slice(xsecond);
                    let full = lelong::lelong_point_sphere(f, &a, m, ladder, cfg)?;
                    let rhs = weight * s.limit;
                    let agree = full.quality == Quality::Converged
                        && s.quality == Quality::Converged
                        && (full.limit - rhs).abs() <= ZERO_FLOOR;
                    Ok(Thm44Point {
                        xprime: pairs(x),
                        lhs: Some(full.limit),
                        rhs,
                        passed: agree,
                    })
                }
                Thm44Mode::FractionalCase => Ok(Thm44Point {
                    xprime: pairs(x),
                    lhs: None,
                    rhs: s.limit,
                    passed: ok(s.quality, s.limit),
                }),
            }
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Thm44Report {
        function: f.to_string(),
        mode,
        n,
        m,
        p,
        q,
        c,
        d,
        bprime: bprime.clone(),
        xsecond: pairs(xsecond),
        tolerance: ZERO_FLOOR,
        passed: points.iter().all(|p| p.passed),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{lookup, Profile};
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn zero(n: usize) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); n]
    }

    fn cfg(samples: usize) -> EstimatorConfig {
        EstimatorConfig {
            samples,
            stratified: true,
            ..EstimatorConfig::default()
        }
    }

    #[test]
    fn q_min_examples() {
        assert_eq!(q_min(6, 3, 2).unwrap(), 1);
        assert_eq!(q_min(5, 3, 1).unwrap(), 1);
        assert_eq!(q_min(6, 4, 3).unwrap(), 2);
        assert!(q_min(4, 2, 2).is_err());
        assert!(q_min(4, 4, 1).is_err());
        for n in 3..=12usize {
            for m in 2..n {
                for p in 1..m {
                    let q = q_min(n, m, p).unwrap() as f64;
                    let x = (m * p) as f64 / n as f64;
                    assert!(q >= x && q - x < 1.0);
                }
            }
        }
    }

    #[test]
    fn slice_examples() {
        let f = lookup("quadratic_ab", 4, &[3.0, -0.5]).unwrap();
        let s = slice(&f, &[c(0.0)]).unwrap();
        let z = Point::new(vec![c(2.0), C64::new(0.0, 1.0), c(0.5)]);
        assert_eq!(s.eval(&z).unwrap(), -0.5 * 4.0 + 1.0 + 0.25);
        let f = lookup("log_abs_zprime", 3, &[1.0]).unwrap();
        let s = slice(&f, &[C64::new(0.0, 2.0)]).unwrap();
        for z in [zero(2), vec![c(5.0), c(-1.0)]] {
            assert!((s.eval(&Point::new(z)).unwrap() - 2f64.ln()).abs() < 1e-15);
        }
        let f = lookup("fundamental", 5, &[3.0]).unwrap();
        let s = slice(&f, &zero(2)).unwrap();
        let z = Point::new(vec![c(0.3), c(0.0), C64::new(0.0, 0.4)]);
        let want = -(0.25f64).powf(1.0 - 5.0 / 3.0) / (5.0 / 3.0 - 1.0);
        assert!((s.eval(&z).unwrap() - want).abs() < 1e-14);
        assert!(slice(&f, &[]).is_err());
    }

    #[test]
    fn slice_hessian_is_the_lower_right_block() {
        for f in [
            lookup("fundamental", 5, &[3.0]).unwrap(),
            lookup("log_abs", 4, &[]).unwrap(),
            lookup("quadratic_ab", 4, &[2.0, -3.0]).unwrap(),
        ] {
            let x = [C64::new(0.3, -0.2)];
            let zs = vec![C64::new(0.1, 0.5); f.dim() - 1];
            let s = slice(&f, &x).unwrap();
            let h = s.hessian(&Point::new(zs.clone())).unwrap();
            let mut full = x.to_vec();
            full.extend_from_slice(&zs);
            let big = f.hessian(&Point::new(full)).unwrap().trailing_block(1);
            assert!(h.max_abs_diff(&big) <= 1e-12 * big.norm());
        }
    }

    #[test]
    fn slice_index_examples() {
        let probes = sphere_probes(4, 8, 1.0, 7);
        let f = lookup("quadratic_ab", 5, &[1.0, 1.0]).unwrap();
        assert_eq!(
            slice_index(&f, &[c(0.0)], &probes, garding::DEFAULT_TOL).unwrap(),
            4
        );
        let f = lookup("quadratic_ab", 5, &[1.0, -1.0]).unwrap();
        assert_eq!(
            slice_index(&f, &[c(0.0)], &probes, garding::DEFAULT_TOL).unwrap(),
            2
        );
        for (n, m, p) in [(5usize, 3usize, 1usize), (6, 3, 2), (6, 4, 3), (7, 5, 2)] {
            let f = TestFunction::fundamental(n, m).unwrap();
            let probes = sphere_probes(n - p, 8, 1.0, 3);
            let k = slice_index(&f, &zero(p), &probes, garding::DEFAULT_TOL).unwrap();
            assert_eq!(k, m - q_min(n, m, p).unwrap(), "n={n} m={m} p={p}");
        }
    }

    #[test]
    fn integrability_examples() {
        let omega = Ball::origin(2, 1.0).unwrap();
        let f = lookup("log_abs_zprime", 3, &[1.0]).unwrap();
        let r = slice_integrability(&f, &[c(0.0)], &omega, &cfg(4096)).unwrap();
        assert_eq!(r.verdict, Integrability::Divergent);
        let r = slice_integrability(&f, &[c(0.5)], &omega, &cfg(4096)).unwrap();
        assert_eq!(r.verdict, Integrability::Integrable);
        let f = lookup("log_abs_z2", 3, &[1.0]).unwrap();
        for x in [0.0, 0.7] {
            let r = slice_integrability(&f, &[c(x)], &omega, &cfg(4096)).unwrap();
            assert_eq!(r.verdict, Integrability::Integrable);
            // ∫_{B(0,1) ⊂ C^2} -log|z| = 2π^2 ∫_0^1 -log t t^3 dt = π^2/8
            let last = r.levels.last().unwrap();
            assert!((last.estimate - PI * PI / 8.0).abs() <= 4.0 * last.stderr + 0.02);
        }
        let f = lookup("quadratic_ab", 3, &[1.0, -2.0]).unwrap();
        let r = slice_integrability(&f, &[c(0.3)], &omega, &cfg(4096)).unwrap();
        assert_eq!(r.verdict, Integrability::Integrable);
    }

    #[test]
    fn non_integrable_power_is_divergent() {
        // |z|^{-6} on C^2 = R^4 is not integrable near 0
        let f = TestFunction::custom_radial_z2(3, 1, Profile::power(-1.0, -3.0)).unwrap();
        let omega = Ball::origin(2, 1.0).unwrap();
        let r = slice_integrability(&f, &[c(0.2)], &omega, &cfg(4096)).unwrap();
        assert_eq!(r.verdict, Integrability::Divergent, "{r:?}");
    }

    #[test]
    fn halton_points_stay_inside_and_avoid_exclusions() {
        let b = Ball::new(vec![c(0.5), c(0.0)], 0.25).unwrap();
        let pts = halton_points(&b, 30, |x| x[0].re > 0.6);
        assert_eq!(pts.len(), 30);
        for p in &pts {
            assert!(b.contains(p));
            assert!(p[0].re <= 0.6);
        }
        assert_eq!(pts, halton_points(&b, 30, |x| x[0].re > 0.6));
    }

    #[test]
    fn thm44_constants() {
        let (c1, _) = thm44_constant(4, 2, 1).unwrap();
        assert!((c1 - PI / 3.0).abs() < 1e-13);
        let (c2, _) = thm44_constant(6, 3, 2).unwrap();
        assert!((c2 - PI * PI / 30.0).abs() < 1e-13);
        assert!((thm44_c(6, 3, 0).unwrap() - 1.0).abs() < 1e-15);
        // integer case: m - q = m(n-p)/n so (n-p)/(m-q) = n/m and d = 1/c
        for (n, m, p) in [
            (6usize, 3usize, 2usize),
            (4, 2, 2 - 1),
            (8, 4, 2),
            (6, 4, 3),
        ] {
            if integer_case(n, m, p) {
                let (c, d) = thm44_constant(n, m, p).unwrap();
                assert!((c * d - 1.0).abs() < 1e-12, "n={n} m={m} p={p}");
            }
        }
        assert!(thm44_constant(4, 4, 1).is_err());
    }

    #[test]
    fn trace_weights_recombine_to_the_total() {
        for n in 2..10usize {
            for p in 1..n {
                let (wi, wj) = trace_weights(n, p);
                let bi = binomial(n as i64 - 1, p as i64);
                let bj = binomial(n as i64 - 1, p as i64 - 1);
                assert!((bi * wi - 1.0 / n as f64).abs() < 1e-14);
                assert!((bj * wj - 1.0 / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn directional_guards() {
        let f = lookup("abs_sq", 5, &[]).unwrap();
        let b = Ball::origin(1, 0.5).unwrap();
        let l = RadiusLadder::default();
        assert!(directional_lelong(&f, &b, &zero(4), 3, 0, &l, &cfg(256)).is_err());
        assert!(directional_lelong(&f, &b, &zero(4), 3, 3, &l, &cfg(256)).is_err());
        assert!(directional_lelong(&f, &b, &zero(3), 3, 1, &l, &cfg(256)).is_err());
    }

    #[test]
    fn directional_abs_sq_and_log_abs_z2() {
        let (n, m, p, q) = (5usize, 3usize, 1usize, 1usize);
        let l = RadiusLadder::default();
        let b = Ball::origin(p, 0.5).unwrap();
        let f = lookup("abs_sq", n, &[]).unwrap();
        let e = directional_lelong(&f, &b, &zero(n - p), m, q, &l, &cfg(1024)).unwrap();
        assert_eq!(e.quality, Quality::Converged);
        assert!(e.limit.abs() < 1e-6);
        assert!(e.decomposition_residual() < 1e-12);

        let f = lookup("log_abs_z2", n, &[p as f64]).unwrap();
        let e = directional_lelong(&f, &b, &zero(n - p), m, q, &l, &cfg(8192)).unwrap();
        assert!(e.per_radius.iter().all(|d| d.j == 0.0));
        assert!(e.limit.abs() < 1e-2);
        // per-rung values go like r^{2(n-p)/(m-q) - 2}
        let x: Vec<f64> = e.per_radius.iter().map(|d| d.r.ln()).collect();
        let y: Vec<f64> = e.per_radius.iter().map(|d| d.total.ln()).collect();
        let k = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
        let slope = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - mx) * (b - my))
            .sum::<f64>()
            / x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let want = 2.0 * (n - p) as f64 / (m - q) as f64 - 2.0;
        assert!((slope - want).abs() <= 0.2 * want, "slope {slope}");
        assert!(monotonicity_report("log_abs_z2", e).passed);
    }

    #[test]
    fn cor43_matches_a_constant_slice_singularity() {
        // v = Φ_{n-p, m-q}(z'') has slice number 2 at every x', so both sides
        // equal C(n-1,p) Vol_β'(B') (2π)^{n-p}
        let (n, p, m, q) = (4usize, 1usize, 3usize, 1usize);
        let tau = (n - p) as f64 / (m - q) as f64;
        let f = TestFunction::custom_radial_z2(n, p, Profile::power(-1.0 / (tau - 1.0), 1.0 - tau))
            .unwrap();
        let b = Ball::new(vec![c(0.5)], 0.25).unwrap();
        let r = cor43_check(
            &f,
            &b,
            &zero(n - p),
            m,
            q,
            25,
            &RadiusLadder::default(),
            &cfg(4096),
        )
        .unwrap();
        let want = binomial(3, 1) * kappa_form(1) * ball_volume(1, 0.25) * (2.0 * PI).powi(3);
        assert!((r.rhs - want).abs() < 0.01 * want, "{} vs {want}", r.rhs);
        assert!((r.lhs - want).abs() < 0.03 * want, "{} vs {want}", r.lhs);
    }
}
