//! Seeded Monte Carlo means over spheres and balls of C^n, Hessian-trace
//! masses over product regions `B' x B''(x'', r)`, and a radial quadrature
//! path for functions radial about the origin.
//!
//! Sample `i` draws from its own ChaCha8 stream (`seed`, stream `i`), and
//! per-sample results are reduced in index order, so an estimate does not
//! depend on the number of worker threads. Runs at different radii reuse the
//! same unit draws.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::factorial;

use crate::catalog::{norm_sqr, Profile, SingularSet, TestFunction, C64, MAX_DIM};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLES: usize = 65536;
pub const DEFAULT_SEED: u64 = 42;
pub const MIN_SAMPLES: usize = 64;
/// Gauss–Legendre nodes per panel on the radial path.
pub const RADIAL_NODES: usize = 64;
/// Draws allowed per sample before it is given up as clipped.
const MAX_REDRAWS: usize = 64;
/// Radial strata used when `stratified` is set.
const STRATA: usize = 32;
/// Geometric panels `[r 2^{-k-1}, r 2^{-k}]` on the radial path.
const RADIAL_PANELS: i32 = 48;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub samples: usize,
    pub seed: u64,
    /// Stratify the radial coordinate of ball samples.
    pub stratified: bool,
    /// Samples closer than this to the singular set are redrawn.
    pub clamp_radius: f64,
    /// Use 1-D quadrature instead of sampling for functions radial about
    /// the center.
    pub radial_fast_path: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        // δ = r_min / 8 for the default ladder 0.5 * 0.5^j, j < 8
        EstimatorConfig {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            stratified: false,
            clamp_radius: 0.5 * 0.5f64.powi(7) / 8.0,
            radial_fast_path: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::Parameter(format!(
                "samples must be >= {MIN_SAMPLES}, got {}",
                self.samples
            )));
        }
        if !(self.clamp_radius >= 0.0) || !self.clamp_radius.is_finite() {
            return Err(Error::Parameter(format!(
                "clamp radius must be finite and >= 0, got {}",
                self.clamp_radius
            )));
        }
        Ok(())
    }

    /// Checks `δ < r_min / 4`.
    pub fn validate_for_radius(&self, r_min: f64) -> Result<()> {
        self.validate()?;
        if self.clamp_radius >= r_min / 4.0 {
            return Err(Error::Parameter(format!(
                "clamp radius {} must be below r_min/4 = {}",
                self.clamp_radius,
                r_min / 4.0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MonteCarlo,
    RadialQuadrature,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
    pub clipped_fraction: f64,
    /// Set when half or more of the draws fell inside the clamp shell.
    pub unreliable: bool,
    pub method: Method,
}

impl MassEstimate {
    fn exact(value: f64) -> Self {
        MassEstimate {
            value,
            stderr: 0.0,
            samples_used: 0,
            clipped_fraction: 0.0,
            unreliable: false,
            method: Method::RadialQuadrature,
        }
    }

    fn scaled(&self, c: f64) -> Self {
        MassEstimate {
            value: self.value * c,
            stderr: self.stderr * c.abs(),
            ..self.clone()
        }
    }
}

/// Ball in C^d (d may be 0, the one-point ball of volume 1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ball {
    pub center: Vec<C64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<C64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Parameter(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if center
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::Parameter("ball center must be finite".into()));
        }
        Ok(Ball { center, radius })
    }

    pub fn origin(d: usize, radius: f64) -> Result<Self> {
        Ball::new(vec![C64::new(0.0, 0.0); d], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim(), self.radius)
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        z.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            <= self.radius * self.radius
    }
}

/// `2^n n!`: `β^n = κ_form(n) dV` for `β = dd^c |z|^2`.
pub fn kappa_form(n: usize) -> f64 {
    2f64.powi(n as i32) * factorial(n as u64)
}

/// Lebesgue volume of a ball of radius `r` in C^d.
pub fn ball_volume(d: usize, r: f64) -> f64 {
    std::f64::consts::PI.powi(d as i32) * r.powi(2 * d as i32) / factorial(d as u64)
}

/// Surface area of the sphere of radius `r` in C^d = R^{2d}.
pub fn sphere_area(d: usize, r: f64) -> f64 {
    2.0 * ball_volume(d, r) * d as f64 / r
}

/// `∫_0^r g(t) dt` by Gauss–Legendre on geometric panels, which resolves
/// integrable power and log singularities at `t = 0`.
pub fn radial_integral(r: f64, g: impl Fn(f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(RADIAL_NODES).unwrap());
    let mut total = 0.0;
    let mut hi = r;
    for _ in 0..RADIAL_PANELS {
        let lo = hi * 0.5;
        total += rule.integrate(lo, hi, &g);
        hi = lo;
    }
    total + rule.integrate(0.0, hi, &g)
}

/// Mean of `profile(|z|^2)` over the ball of radius `r` in C^n.
pub fn radial_ball_mean(profile: &Profile, n: usize, r: f64) -> f64 {
    let k = 2 * n as i32;
    radial_integral(r, |t| profile.value(t * t) * t.powi(k - 1)) * k as f64 / r.powi(k)
}

/// `∫_{B(0,r)} tr H dV` for `profile(|z|^2)` on C^n, with
/// `tr H = n f'(s) + s f''(s)`.
pub fn radial_trace_integral(profile: &Profile, n: usize, r: f64) -> f64 {
    let area = sphere_area(n, 1.0);
    let k = 2 * n as i32;
    radial_integral(r, |t| {
        let s = t * t;
        (n as f64 * profile.d1(s) + s * profile.d2(s)) * t.powi(k - 1)
    }) * area
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Uniform direction on the unit sphere of C^d.
fn unit_direction(rng: &mut ChaCha8Rng, out: &mut [C64]) {
    loop {
        for c in out.iter_mut() {
            *c = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let norm = norm_sqr(out).sqrt();
        if norm > 1e-300 {
            out.iter_mut().for_each(|c| *c /= norm);
            return;
        }
    }
}

/// `center + radius * u^{1/2d} * direction`, uniform in the ball when `u`
/// is uniform on `[0, 1]`.
pub(crate) fn ball_point(
    rng: &mut ChaCha8Rng,
    center: &[C64],
    radius: f64,
    u: f64,
    out: &mut [C64],
) {
    let d = center.len();
    if d == 0 {
        return;
    }
    unit_direction(rng, out);
    let rho = radius * u.powf(1.0 / (2 * d) as f64);
    for (o, c) in out.iter_mut().zip(center) {
        *o = c + *o * rho;
    }
}

struct Outcome<const K: usize> {
    values: Option<[f64; K]>,
    stratum: usize,
    draws: usize,
}

/// Draws one point per sample index (redrawing inside the clamp shell),
/// evaluates it, and reduces in index order.
///
/// `draw(rng, u, out)` writes a point given a radial uniform `u`.
pub(crate) fn monte_carlo<const K: usize>(
    cfg: &EstimatorConfig,
    dim: usize,
    singular: &SingularSet,
    draw: impl Fn(&mut ChaCha8Rng, f64, &mut [C64]) + Sync,
    eval: impl Fn(&[C64]) -> Result<[f64; K]> + Sync,
) -> Result<[MassEstimate; K]> {
    cfg.validate()?;
    let strata = if cfg.stratified {
        STRATA.min(cfg.samples)
    } else {
        1
    };
    let outcomes: Vec<Result<Outcome<K>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(cfg.seed, i);
            let stratum = i % strata;
            let mut z = [C64::new(0.0, 0.0); MAX_DIM];
            let z = &mut z[..dim];
            for draw_count in 1..=MAX_REDRAWS {
                let u = (stratum as f64 + rng.random::<f64>()) / strata as f64;
                draw(&mut rng, u, z);
                if singular.distance(z) < cfg.clamp_radius.max(f64::MIN_POSITIVE) {
                    continue;
                }
                let values = eval(z)?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite(format!("integrand at sample {i}")));
                }
                return Ok(Outcome {
                    values: Some(values),
                    stratum,
                    draws: draw_count,
                });
            }
            Ok(Outcome {
                values: None,
                stratum,
                draws: MAX_REDRAWS,
            })
        })
        .collect();

    let mut sum = vec![[0.0; K]; strata];
    let mut sum_sq = vec![[0.0; K]; strata];
    let mut count = vec![0usize; strata];
    let mut draws = 0usize;
    let mut used = 0usize;
    for o in outcomes {
        let o = o?;
        draws += o.draws;
        if let Some(v) = o.values {
            used += 1;
            count[o.stratum] += 1;
            for k in 0..K {
                sum[o.stratum][k] += v[k];
                sum_sq[o.stratum][k] += v[k] * v[k];
            }
        }
    }
    if used == 0 {
        return Err(Error::AllSamplesClipped);
    }
    let clipped_fraction = (draws - used) as f64 / draws as f64;
    // a stratum lost entirely to the shell drops out
    let weight = 1.0 / count.iter().filter(|&&c| c > 0).count() as f64;
    Ok(std::array::from_fn(|k| {
        let mut mean = 0.0;
        let mut var = 0.0;
        for h in (0..strata).filter(|&h| count[h] > 0) {
            let c = count[h] as f64;
            let m = sum[h][k] / c;
            let s2 = if c > 1.0 {
                ((sum_sq[h][k] - c * m * m) / (c - 1.0)).max(0.0)
            } else {
                0.0
            };
            mean += weight * m;
            var += weight * weight * s2 / c;
        }
        MassEstimate {
            value: mean,
            stderr: var.sqrt(),
            samples_used: used,
            clipped_fraction,
            unreliable: clipped_fraction >= 0.5,
            method: Method::MonteCarlo,
        }
    }))
}

fn check_center(f: &TestFunction, a: &[C64], r: f64, cfg: &EstimatorConfig) -> Result<()> {
    if a.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: a.len(),
        });
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if r <= cfg.clamp_radius {
        return Err(Error::Parameter(format!(
            "radius {r} must exceed the clamp radius {}",
            cfg.clamp_radius
        )));
    }
    Ok(())
}

fn radial_about(f: &TestFunction, a: &[C64], cfg: &EstimatorConfig) -> Option<Profile> {
    if !cfg.radial_fast_path || norm_sqr(a) != 0.0 {
        return None;
    }
    f.radial_profile().cloned()
}

/// Average of `f` over the sphere `S(a, r)`.
pub fn sphere_mean(
    f: &TestFunction,
    a: &[C64],
    r: f64,
    cfg: &EstimatorConfig,
) -> Result<MassEstimate> {
    check_center(f, a, r, cfg)?;
    cfg.validate()?;
    if let Some(profile) = radial_about(f, a, cfg) {
        return finite(MassEstimate::exact(profile.value(r * r)));
    }
    let [est] = monte_carlo(
        cfg,
        f.dim(),
        f.singular_set(),
        |rng, _u, out| {
            unit_direction(rng, out);
            for (o, c) in out.iter_mut().zip(a) {
                *o = c + *o * r;
            }
        },
        |z| Ok([f.eval_coords(z)]),
    )?;
    Ok(est)
}

/// Average of `f` over the ball `B(a, r)`.
pub fn ball_mean(
    f: &TestFunction,
    a: &[C64],
    r: f64,
    cfg: &EstimatorConfig,
) -> Result<MassEstimate> {
    check_center(f, a, r, cfg)?;
    cfg.validate()?;
    if let Some(profile) = radial_about(f, a, cfg) {
        return finite(MassEstimate::exact(radial_ball_mean(&profile, f.dim(), r)));
    }
    let [est] = monte_carlo(
        cfg,
        f.dim(),
        f.singular_set(),
        |rng, u, out| ball_point(rng, a, r, u, out),
        |z| Ok([f.eval_coords(z)]),
    )?;
    Ok(est)
}

fn finite(e: MassEstimate) -> Result<MassEstimate> {
    if e.value.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite("radial quadrature".into()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MassPart {
    Total,
    ZprimeTrace,
    ZsecondTrace,
}

/// The three trace masses, computed from one shared set of samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassParts {
    pub total: MassEstimate,
    pub zprime_trace: MassEstimate,
    pub zsecond_trace: MassEstimate,
}

impl MassParts {
    pub fn part(&self, part: MassPart) -> &MassEstimate {
        match part {
            MassPart::Total => &self.total,
            MassPart::ZprimeTrace => &self.zprime_trace,
            MassPart::ZsecondTrace => &self.zsecond_trace,
        }
    }
}

/// `κ_form(n) ∫_{B' x B''(x'', r)} (tr' H, tr'' H, tr H) dV`.
///
/// `bprime` may be zero-dimensional, in which case the region is the ball
/// `B(x'', r)` of C^n.
pub fn hessian_mass_parts(
    f: &TestFunction,
    bprime: &Ball,
    xsecond: &[C64],
    r: f64,
    cfg: &EstimatorConfig,
) -> Result<MassParts> {
    let n = f.dim();
    let p = bprime.dim();
    if p + xsecond.len() != n || xsecond.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p + xsecond.len(),
        });
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    cfg.validate()?;
    let scale = kappa_form(n) * bprime.volume() * ball_volume(n - p, r);

    if p == 0 && cfg.radial_fast_path && norm_sqr(xsecond) == 0.0 {
        if let Some(profile) = f.radial_profile() {
            let total = finite(MassEstimate::exact(
                kappa_form(n) * radial_trace_integral(profile, n, r),
            ))?;
            return Ok(MassParts {
                zprime_trace: MassEstimate::exact(0.0),
                zsecond_trace: total.clone(),
                total,
            });
        }
    }

    let [tp, ts, tt] = monte_carlo(
        cfg,
        n,
        f.singular_set(),
        |rng, u, out| {
            let (zp, zs) = out.split_at_mut(p);
            let u_prime = rng.random::<f64>();
            ball_point(rng, &bprime.center, bprime.radius, u_prime, zp);
            ball_point(rng, xsecond, r, u, zs);
        },
        |z| {
            let (a, b) = f.hessian_traces(z, p)?;
            Ok([a, b, a + b])
        },
    )?;
    let parts = MassParts {
        total: tt.scaled(scale),
        zprime_trace: tp.scaled(scale),
        zsecond_trace: ts.scaled(scale),
    };
    if parts.total.unreliable {
        return Err(Error::Unreliable {
            clipped_fraction: parts.total.clipped_fraction,
        });
    }
    Ok(parts)
}

pub fn hessian_mass(
    f: &TestFunction,
    bprime: &Ball,
    xsecond: &[C64],
    r: f64,
    part: MassPart,
    cfg: &EstimatorConfig,
) -> Result<MassEstimate> {
    Ok(hessian_mass_parts(f, bprime, xsecond, r, cfg)?
        .part(part)
        .clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::lookup;

    fn cfg(samples: usize) -> EstimatorConfig {
        EstimatorConfig {
            samples,
            ..EstimatorConfig::default()
        }
    }

    fn zero(n: usize) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); n]
    }

    fn within(e: &MassEstimate, want: f64, k: f64) -> bool {
        (e.value - want).abs() <= k * e.stderr + 1e-12 * want.abs().max(1.0)
    }

    #[test]
    fn abs_sq_sphere_mean_is_exact() {
        let f = lookup("abs_sq", 4, &[]).unwrap();
        let e = sphere_mean(&f, &zero(4), 0.7, &cfg(4096)).unwrap();
        assert!((e.value - 0.49).abs() < 1e-12);
        assert!(e.stderr < 1e-12);
        assert_eq!(e.clipped_fraction, 0.0);
    }

    #[test]
    fn power_tau_sphere_mean_is_the_profile_value() {
        let f = lookup("power_tau", 4, &[1.5]).unwrap();
        let r: f64 = 0.3;
        let want = -r.powf(2.0 * (1.0 - 1.5)) / 0.5;
        let e = sphere_mean(&f, &zero(4), r, &cfg(2048)).unwrap();
        assert!((e.value - want).abs() < 1e-10 * want.abs());
    }

    #[test]
    fn re_z1_averages_to_zero() {
        let f = lookup("re_z1", 3, &[]).unwrap();
        let e = sphere_mean(&f, &zero(3), 1.0, &cfg(8192)).unwrap();
        assert!(within(&e, 0.0, 3.0), "{e:?}");
        let e = ball_mean(&f, &zero(3), 1.0, &cfg(8192)).unwrap();
        assert!(within(&e, 0.0, 3.0), "{e:?}");
    }

    #[test]
    fn abs_sq_ball_mean() {
        for n in [2usize, 4, 6] {
            let f = lookup("abs_sq", n, &[]).unwrap();
            let r = 0.8;
            let want = n as f64 * r * r / (n as f64 + 1.0);
            let e = ball_mean(&f, &zero(n), r, &cfg(16384)).unwrap();
            assert!(within(&e, want, 3.0), "n={n} {e:?} want {want}");
            let q = radial_ball_mean(f.radial_profile().unwrap(), n, r);
            assert!((q - want).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_ball_mean() {
        let f = TestFunction::custom_radial(3, Profile::power(2.5, 0.0)).unwrap();
        let e = ball_mean(
            &f,
            &[C64::new(1.0, 2.0), C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
            0.5,
            &cfg(1024),
        )
        .unwrap();
        assert!((e.value - 2.5).abs() < 1e-14);
    }

    #[test]
    fn power_tau_ball_mean_matches_radial_quadrature() {
        let f = lookup("power_tau", 4, &[2.0]).unwrap();
        // ∫_0^1 (-1/t^2) 8 t^7 dt = -4/3
        let oracle = radial_ball_mean(f.radial_profile().unwrap(), 4, 1.0);
        assert!((oracle + 4.0 / 3.0).abs() < 1e-13);
        let e = ball_mean(&f, &zero(4), 1.0, &cfg(65536)).unwrap();
        assert!(within(&e, oracle, 3.0), "{e:?}");
    }

    #[test]
    fn radial_quadrature_handles_log_endpoints() {
        // ∫_0^1 t^3 log t dt = -1/16
        let v = radial_integral(1.0, |t| t.powi(3) * t.ln());
        assert!((v + 1.0 / 16.0).abs() < 1e-14);
        // ∫_0^1 t^{-1/2} dt = 2
        let v = radial_integral(1.0, |t| 1.0 / t.sqrt());
        assert!((v - 2.0).abs() < 1e-6);
    }

    #[test]
    fn estimates_do_not_depend_on_thread_count() {
        let f = lookup("log_abs", 3, &[]).unwrap();
        let a = [C64::new(0.1, 0.0), C64::new(0.0, -0.2), C64::new(0.3, 0.1)];
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    let c = EstimatorConfig {
                        stratified: true,
                        ..cfg(5000)
                    };
                    let s = sphere_mean(&f, &a, 0.4, &c).unwrap();
                    let b = ball_mean(&f, &a, 0.4, &c).unwrap();
                    let m = hessian_mass_parts(
                        &f,
                        &Ball::new(a[..1].to_vec(), 0.3).unwrap(),
                        &a[1..],
                        0.2,
                        &c,
                    )
                    .unwrap();
                    (
                        s.value.to_bits(),
                        b.value.to_bits(),
                        m.total.value.to_bits(),
                        m.zprime_trace.stderr.to_bits(),
                    )
                })
        };
        let one = run(1);
        assert_eq!(one, run(3));
        assert_eq!(one, run(8));
    }

    #[test]
    fn stderr_shrinks_like_inverse_square_root() {
        let f = lookup("quadratic_ab", 4, &[2.0, -0.5]).unwrap();
        let a = [
            C64::new(0.2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.1),
            C64::new(0.0, 0.0),
        ];
        let small = ball_mean(&f, &a, 0.5, &cfg(4096)).unwrap();
        let big = ball_mean(&f, &a, 0.5, &cfg(16384)).unwrap();
        let ratio = small.stderr / big.stderr;
        assert!(ratio > 2.0 / 1.5 && ratio < 2.0 * 1.5, "ratio {ratio}");
    }

    #[test]
    fn samples_inside_the_clamp_shell_are_redrawn() {
        let f = lookup("log_abs", 2, &[]).unwrap();
        let c = EstimatorConfig {
            clamp_radius: 0.5,
            ..cfg(4096)
        };
        // (δ/r)^4 = 1/4 of the ball lies in the shell
        let r = 0.5 / 0.25f64.powf(0.25);
        let e = ball_mean(&f, &zero(2), r, &c).unwrap();
        assert!((e.clipped_fraction - 0.25).abs() < 0.03, "{e:?}");
        assert!(!e.unreliable);
        let c = EstimatorConfig {
            clamp_radius: 0.99,
            ..cfg(256)
        };
        let e = ball_mean(&f, &zero(2), 1.0, &c).unwrap();
        assert!(e.unreliable);
        let bad = hessian_mass_parts(&f, &Ball::origin(0, 1.0).unwrap(), &zero(2), 1.0, &c);
        assert!(matches!(bad, Err(Error::Unreliable { .. })));
    }

    #[test]
    fn fully_singular_slices_clip_every_sample() {
        let f = lookup("log_abs_zprime", 3, &[1.0]).unwrap();
        let slice = TestFunction::sliced(&f, &[C64::new(0.0, 0.0)]);
        let e = sphere_mean(&slice, &zero(2), 0.5, &cfg(128));
        assert!(matches!(e, Err(Error::AllSamplesClipped)));
    }

    #[test]
    fn config_validation() {
        assert!(cfg(10).validate().is_err());
        assert!(EstimatorConfig {
            clamp_radius: -1.0,
            ..cfg(100)
        }
        .validate()
        .is_err());
        assert!(EstimatorConfig::default()
            .validate_for_radius(0.5 * 0.5f64.powi(7))
            .is_ok());
        assert!(EstimatorConfig::default()
            .validate_for_radius(0.001)
            .is_err());
        let f = lookup("abs_sq", 2, &[]).unwrap();
        assert!(sphere_mean(&f, &zero(3), 1.0, &cfg(100)).is_err());
        assert!(sphere_mean(&f, &zero(2), 1e-4, &cfg(100)).is_err());
    }

    #[test]
    fn abs_sq_total_mass_is_kappa_n_volume() {
        let n = 4;
        let p = 1;
        let f = lookup("abs_sq", n, &[]).unwrap();
        let bp = Ball::new(vec![C64::new(0.3, 0.0)], 0.5).unwrap();
        let r = 0.25;
        let e = hessian_mass(&f, &bp, &zero(n - p), r, MassPart::Total, &cfg(1024)).unwrap();
        let want = kappa_form(n) * n as f64 * bp.volume() * ball_volume(n - p, r);
        assert!((e.value - want).abs() < 1e-12 * want);
    }

    #[test]
    fn log_abs_z2_has_no_zprime_trace() {
        let f = lookup("log_abs_z2", 4, &[2.0]).unwrap();
        let bp = Ball::origin(2, 0.5).unwrap();
        let e = hessian_mass(&f, &bp, &zero(2), 0.3, MassPart::ZprimeTrace, &cfg(1024)).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn log_abs_z2_mass_scales_like_r_to_the_2_n_minus_p_minus_1() {
        let (n, p) = (5, 1);
        let f = lookup("log_abs_z2", n, &[p as f64]).unwrap();
        let bp = Ball::origin(p, 0.5).unwrap();
        let radii = [0.4, 0.2, 0.1];
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| {
                let e = hessian_mass(
                    &f,
                    &bp,
                    &zero(n - p),
                    r,
                    MassPart::ZsecondTrace,
                    &cfg(16384),
                )
                .unwrap();
                (r.ln(), e.value.ln())
            })
            .collect();
        let slope = least_squares_slope(&pts);
        let want = 2.0 * (n - p - 1) as f64;
        assert!((slope - want).abs() <= 0.05 * want, "slope {slope}");
    }

    fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn radial_trace_integral_matches_monte_carlo() {
        let f = lookup("power_tau", 3, &[1.3]).unwrap();
        let fast = EstimatorConfig {
            radial_fast_path: true,
            ..cfg(65536)
        };
        let q = hessian_mass(
            &f,
            &Ball::origin(0, 1.0).unwrap(),
            &zero(3),
            0.5,
            MassPart::Total,
            &fast,
        )
        .unwrap();
        assert_eq!(q.method, Method::RadialQuadrature);
        let mc = hessian_mass(
            &f,
            &Ball::origin(0, 1.0).unwrap(),
            &zero(3),
            0.5,
            MassPart::Total,
            &EstimatorConfig {
                stratified: true,
                ..cfg(65536)
            },
        )
        .unwrap();
        assert!(within(&mc, q.value, 4.0), "{mc:?} vs {}", q.value);
    }

    #[test]
    fn volumes() {
        assert!((ball_volume(1, 2.0) - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((sphere_area(1, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(ball_volume(0, 3.0), 1.0);
        assert_eq!(kappa_form(3), 48.0);
    }
}
