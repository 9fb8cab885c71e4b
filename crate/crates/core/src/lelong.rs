//! Point m-Lelong numbers from sphere means, ball means, or the Hessian
//! mass, evaluated on a geometric ladder of radii and extrapolated to
//! `r -> 0`.
//!
//! With `φ_{n,m}(s) = -s^{1-n/m} / (n/m - 1)`:
//!
//! ```text
//! sphere:  2 M(v, S(a,r)) / φ_{n,m}(r^2)
//! ball:    2 (1 + 1/n - 1/m) M(v, B(a,r)) / φ_{n,m}(r^2)
//! mass:    κ_cal(n,m) r^{-2n(1-1/m)} κ_form(n) ∫_{B(a,r)} tr H dV / n
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{TestFunction, C64};
use crate::error::{Error, Result};
use crate::integrate::{
    self, kappa_form, radial_trace_integral, Ball, EstimatorConfig, MassEstimate, MassPart,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadiusLadder {
    pub r0: f64,
    pub theta: f64,
    pub rungs: usize,
}

impl Default for RadiusLadder {
    fn default() -> Self {
        RadiusLadder {
            r0: 0.5,
            theta: 0.5,
            rungs: 8,
        }
    }
}

impl RadiusLadder {
    pub fn new(r0: f64, theta: f64, rungs: usize) -> Result<Self> {
        let l = RadiusLadder { r0, theta, rungs };
        l.validate()?;
        Ok(l)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) || !self.r0.is_finite() {
            return Err(Error::Parameter(format!(
                "r0 must be positive, got {}",
                self.r0
            )));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Parameter(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if self.rungs < 3 {
            return Err(Error::Parameter(format!(
                "need at least 3 rungs, got {}",
                self.rungs
            )));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.rungs)
            .map(|j| self.r0 * self.theta.powi(j as i32))
            .collect()
    }

    pub fn r_min(&self) -> f64 {
        self.r0 * self.theta.powi(self.rungs as i32 - 1)
    }

    /// Checks the ladder and that `r_min > 4 δ`.
    pub fn check(&self, cfg: &EstimatorConfig) -> Result<()> {
        self.validate()?;
        cfg.validate_for_radius(self.r_min())
    }
}

fn check_index(n: usize, m: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::Parameter(format!(
            "need 1 <= m < n, got n={n}, m={m}"
        )));
    }
    Ok(())
}

fn check_mass_index(n: usize, m: usize) -> Result<()> {
    check_index(n, m)?;
    if m < 2 {
        return Err(Error::Parameter(
            "mass-based estimators need m >= 2 (the m = 1 mass is a point mass)".into(),
        ));
    }
    Ok(())
}

/// `φ_{n,m}(s) = -1 / ((n/m - 1) s^{n/m - 1})`.
pub fn phi_fundamental(n: usize, m: usize, s: f64) -> Result<f64> {
    check_index(n, m)?;
    if !(s > 0.0) {
        return Err(Error::Parameter(format!("s must be positive, got {s}")));
    }
    let e = n as f64 / m as f64 - 1.0;
    Ok(-1.0 / (e * s.powf(e)))
}

/// Ratio of the ball and sphere normalizations, `1 + 1/n - 1/m`.
pub fn ball_factor(n: usize, m: usize) -> f64 {
    1.0 + 1.0 / n as f64 - 1.0 / m as f64
}

/// `r^{-2n(1-1/m)} κ_form(n) ∫_{B(0,r)} tr H dV / n` for the fundamental
/// solution, by radial quadrature. Independent of `r`; equals `(2π)^n`.
///
/// Needs `m >= 2`: `φ_{n,1}` is harmonic off the origin and its whole mass
/// sits at the origin, which a trace density cannot see.
pub fn fundamental_mass_quotient(n: usize, m: usize) -> Result<f64> {
    check_mass_index(n, m)?;
    let f = TestFunction::fundamental(n, m)?;
    let profile = f.radial_profile().expect("fundamental is radial");
    let r = 1.0;
    Ok(kappa_form(n) * radial_trace_integral(profile, n, r) / n as f64)
}

/// Constant that makes the mass-based point estimator return 2 on the
/// fundamental solution, matching the mean-value estimators.
pub fn kappa_cal(n: usize, m: usize) -> Result<f64> {
    Ok(2.0 / fundamental_mass_quotient(n, m)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Quality {
    Converged,
    Drifting,
    Unreliable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rung {
    pub r: f64,
    pub value: f64,
    pub stderr: f64,
    pub clipped_fraction: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrapolation {
    pub limit: f64,
    pub quality: Quality,
    /// Exponent `α` of the fitted `L + C r^α` (0 for a flat tail).
    pub fit_slope: f64,
}

/// Below this decay exponent a monotone tail is treated as not converging.
const MIN_DECAY: f64 = 0.05;
/// Share of the tail's range a converged power-law fit may miss by.
const FIT_RANGE_SLACK: f64 = 0.02;

fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Limit of `value(r)` as `r -> 0` from the smallest `max(3, ⌈N/2⌉)` rungs.
///
/// A tail flat to within `max(3 noise, 1e-3 |mean|)` converges to its mean.
/// Otherwise consecutive differences must keep one sign; their log-log slope
/// gives `α`, and `L, C` in `L + C r^α` come from linear least squares.
pub fn extrapolate(points: &[(f64, f64)], noise: f64) -> Result<Extrapolation> {
    if points.len() < 3 {
        return Err(Error::Parameter(format!(
            "extrapolation needs at least 3 rungs, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(r, v)| !r.is_finite() || *r <= 0.0 || !v.is_finite())
    {
        return Err(Error::NonFinite("ladder values".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let k = 3.max(pts.len().div_ceil(2)).min(pts.len());
    let tail = &pts[pts.len() - k..];
    let values: Vec<f64> = tail.iter().map(|p| p.1).collect();
    let mean = values.iter().sum::<f64>() / k as f64;
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let spread = values.iter().fold(0.0f64, |a, v| a.max((v - mean).abs()));
    let floor = 1e-12 * scale.max(1e-300);
    if spread <= (3.0 * noise).max(1e-3 * mean.abs()).max(floor) {
        return Ok(Extrapolation {
            limit: mean,
            quality: Quality::Converged,
            fit_slope: 0.0,
        });
    }

    let diffs: Vec<f64> = tail.windows(2).map(|w| w[0].1 - w[1].1).collect();
    let monotone = diffs.iter().all(|d| *d > 0.0) || diffs.iter().all(|d| *d < 0.0);
    if !monotone {
        return Ok(Extrapolation {
            limit: mean,
            quality: Quality::Unreliable,
            fit_slope: 0.0,
        });
    }
    let log_r: Vec<f64> = tail[..k - 1].iter().map(|p| p.0.ln()).collect();
    let log_d: Vec<f64> = diffs.iter().map(|d| d.abs().ln()).collect();
    let (_, alpha) = least_squares_line(&log_r, &log_d);
    let last = tail[k - 1].1;
    if !(alpha > MIN_DECAY) {
        return Ok(Extrapolation {
            limit: last,
            quality: Quality::Drifting,
            fit_slope: alpha,
        });
    }
    let basis: Vec<f64> = tail.iter().map(|p| p.0.powf(alpha)).collect();
    let (limit, c) = least_squares_line(&basis, &values);
    let residual = tail
        .iter()
        .zip(&basis)
        .fold(0.0f64, |a, (p, b)| a.max((p.1 - limit - c * b).abs()));
    let range = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = (1e-3 * limit.abs())
        .max(3.0 * noise)
        .max(FIT_RANGE_SLACK * range)
        .max(floor);
    Ok(Extrapolation {
        limit,
        quality: if residual <= tol {
            Quality::Converged
        } else {
            Quality::Drifting
        },
        fit_slope: alpha,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LelongEstimate {
    pub per_radius: Vec<Rung>,
    pub limit: f64,
    pub quality: Quality,
    pub fit_slope: f64,
}

/// Maximum stderr over the rungs used by [`extrapolate`].
pub(crate) fn tail_noise(rungs: &[Rung]) -> f64 {
    let k = 3.max(rungs.len().div_ceil(2)).min(rungs.len());
    rungs[rungs.len() - k..]
        .iter()
        .fold(0.0f64, |a, r| a.max(r.stderr))
}

pub(crate) fn finish(per_radius: Vec<Rung>, unreliable: bool) -> Result<LelongEstimate> {
    let points: Vec<(f64, f64)> = per_radius.iter().map(|r| (r.r, r.value)).collect();
    let ex = extrapolate(&points, tail_noise(&per_radius))?;
    Ok(LelongEstimate {
        per_radius,
        limit: ex.limit,
        quality: if unreliable {
            Quality::Unreliable
        } else {
            ex.quality
        },
        fit_slope: ex.fit_slope,
    })
}

fn ladder_estimate(
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
    rung: impl Fn(f64) -> Result<(MassEstimate, f64)> + Sync,
) -> Result<LelongEstimate> {
    ladder.check(cfg)?;
    let rungs: Vec<Result<(Rung, bool)>> = ladder
        .radii()
        .into_par_iter()
        .map(|r| {
            let (est, factor) = rung(r)?;
            Ok((
                Rung {
                    r,
                    value: est.value * factor,
                    stderr: est.stderr * factor.abs(),
                    clipped_fraction: est.clipped_fraction,
                },
                est.unreliable,
            ))
        })
        .collect();
    let mut per_radius = Vec::with_capacity(rungs.len());
    let mut unreliable = false;
    for r in rungs {
        let (rung, bad) = r?;
        unreliable |= bad;
        per_radius.push(rung);
    }
    finish(per_radius, unreliable)
}

pub fn lelong_point_sphere(
    f: &TestFunction,
    a: &[C64],
    m: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<LelongEstimate> {
    let n = f.dim();
    check_index(n, m)?;
    ladder_estimate(ladder, cfg, |r| {
        let est = integrate::sphere_mean(f, a, r, cfg)?;
        Ok((est, 2.0 / phi_fundamental(n, m, r * r)?))
    })
}

pub fn lelong_point_ball(
    f: &TestFunction,
    a: &[C64],
    m: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<LelongEstimate> {
    let n = f.dim();
    check_index(n, m)?;
    ladder_estimate(ladder, cfg, |r| {
        let est = integrate::ball_mean(f, a, r, cfg)?;
        Ok((est, 2.0 * ball_factor(n, m) / phi_fundamental(n, m, r * r)?))
    })
}

/// Mass-based point estimator, calibrated by [`kappa_cal`].
pub fn lelong_point_mass(
    f: &TestFunction,
    a: &[C64],
    m: usize,
    ladder: &RadiusLadder,
    cfg: &EstimatorConfig,
) -> Result<LelongEstimate> {
    let n = f.dim();
    let cal = kappa_cal(n, m)?;
    let point = Ball::origin(0, 1.0)?;
    let exponent = -2.0 * n as f64 * (1.0 - 1.0 / m as f64);
    ladder_estimate(ladder, cfg, |r| {
        let est = integrate::hessian_mass(f, &point, a, r, MassPart::Total, cfg)?;
        Ok((est, cal * r.powf(exponent) / n as f64))
    })
}
