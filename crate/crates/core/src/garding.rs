//! Elementary symmetric polynomials, Garding cones, and the classification of
//! the two-parameter family
//!
//! ```text
//! v_{a,b}(z) = a|z_1|^2 + b|z_2|^2 + Σ_{j>=3} |z_j|^2
//! ```
//!
//! against the subharmonicity index of its slice `u_b = v_{a,b}(0, ·)`.
//!
//! The Hessian spectrum of `v_{a,b}` is `(a, b, 1, ..., 1)`, so
//! `S_k = C(n-2,k) + C(n-2,k-1)(a+b) + C(n-2,k-2)ab`, and `u_b` is
//! `k`-subharmonic on `C^{n-1}` iff `b >= -(n-k-1)/k`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{Point, TestFunction, C64};
use crate::error::{Error, Result};
use crate::hessian;

/// Default relative slack for cone membership; boundary points are members.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Minimum certified distance between a Table 1 representative and any
/// boundary curve.
pub const REPRESENTATIVE_MARGIN: f64 = 0.1;

/// `S_0, ..., S_n` as the coefficients of `Π (1 + λ_j t)`.
pub fn elementary_symmetric_all(lambda: &[f64]) -> Vec<f64> {
    let n = lambda.len();
    let mut e = vec![0.0; n + 1];
    e[0] = 1.0;
    for (j, &l) in lambda.iter().enumerate() {
        for k in (1..=j + 1).rev() {
            e[k] += l * e[k - 1];
        }
    }
    e
}

pub fn elementary_symmetric(lambda: &[f64], k: usize) -> Result<f64> {
    if k > lambda.len() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the length {}",
            lambda.len()
        )));
    }
    Ok(elementary_symmetric_all(lambda)[k])
}

fn absolute_scales(lambda: &[f64]) -> Vec<f64> {
    let abs: Vec<f64> = lambda.iter().map(|x| x.abs()).collect();
    elementary_symmetric_all(&abs)
}

/// Number of leading `k >= 1` with `S_k(λ) >= -tol (S_k(|λ|) + 1)`.
fn membership_prefix(lambda: &[f64], tol: f64) -> usize {
    let s = elementary_symmetric_all(lambda);
    let scale = absolute_scales(lambda);
    (1..=lambda.len())
        .take_while(|&k| s[k] >= -tol * (scale[k] + 1.0))
        .count()
}

/// `λ ∈ Γ_m` up to the relative slack `tol`.
pub fn cone_membership(lambda: &[f64], m: usize, tol: f64) -> Result<bool> {
    if m == 0 || m > lambda.len() {
        return Err(Error::Parameter(format!(
            "m = {m} outside 1..={}",
            lambda.len()
        )));
    }
    if !(tol >= 0.0) {
        return Err(Error::Parameter(format!(
            "tolerance must be >= 0, got {tol}"
        )));
    }
    Ok(membership_prefix(lambda, tol) >= m)
}

/// Largest `m` with `λ ∈ Γ_m`, or 0 when `S_1 < 0`.
pub fn subharmonic_index(lambda: &[f64], tol: f64) -> usize {
    membership_prefix(lambda, tol)
}

/// Normalized `S_k(λ) / S_k(|λ|)` for `k = 1..=n` (0 where the denominator
/// vanishes). Values lie in `[-1, 1]`.
pub fn normalized_symmetric(lambda: &[f64]) -> Vec<f64> {
    let s = elementary_symmetric_all(lambda);
    let scale = absolute_scales(lambda);
    (1..=lambda.len())
        .map(|k| if scale[k] > 0.0 { s[k] / scale[k] } else { 0.0 })
        .collect()
}

pub(crate) fn binomial(n: i64, k: i64) -> f64 {
    if k < 0 || n < 0 || k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Coefficients `(α, β, γ)` of `S_k(v_{a,b}) = α + β(a+b) + γab`.
pub fn vab_coefficients(n: usize, k: usize) -> (f64, f64, f64) {
    let (n, k) = (n as i64, k as i64);
    (
        binomial(n - 2, k),
        binomial(n - 2, k - 1),
        binomial(n - 2, k - 2),
    )
}

/// Closed-form `S_k` of the spectrum `(a, b, 1, ..., 1)`.
pub fn vab_sk(n: usize, k: usize, a: f64, b: f64) -> f64 {
    let (alpha, beta, gamma) = vab_coefficients(n, k);
    alpha + beta * (a + b) + gamma * a * b
}

/// Slice threshold: `u_b` is `k`-subharmonic iff `b >= -(n-k-1)/k`.
pub fn slice_threshold(n: usize, k: usize) -> f64 {
    -((n - k - 1) as f64) / k as f64
}

/// Indices of `v_{a,b}` and of its slice `u_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RegionLabel {
    /// Subharmonicity index of `v_{a,b}` on `C^n` (0: not subharmonic).
    pub m_index: usize,
    /// Subharmonicity index of `u_b` on `C^{n-1}` (0: not subharmonic).
    pub slice_k_index: usize,
    /// `k - (m - 1)`; absent when either index is 0.
    pub delta: Option<i64>,
}

impl RegionLabel {
    pub fn new(m_index: usize, slice_k_index: usize) -> Self {
        let delta = (m_index >= 1 && slice_k_index >= 1)
            .then(|| slice_k_index as i64 - (m_index as i64 - 1));
        RegionLabel {
            m_index,
            slice_k_index,
            delta,
        }
    }
}

fn check_family_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Parameter(format!(
            "the v_ab family needs n >= 3, got {n}"
        )));
    }
    Ok(())
}

pub fn classify_vab(n: usize, a: f64, b: f64, tol: f64) -> Result<RegionLabel> {
    check_family_dim(n)?;
    let m_index = (1..=n)
        .take_while(|&k| {
            let (alpha, beta, gamma) = vab_coefficients(n, k);
            let scale = alpha + beta * (a.abs() + b.abs()) + gamma * (a * b).abs() + 1.0;
            vab_sk(n, k, a, b) >= -tol * scale
        })
        .count();
    let slice_k_index = (1..n)
        .take_while(|&k| b >= slice_threshold(n, k) - tol)
        .count();
    Ok(RegionLabel::new(m_index, slice_k_index))
}

/// Radius of a disc around `(a, b)` on which every sign that decides the
/// label is provably constant.
///
/// For `S = α + β(a+b) + γab`, on the disc of radius `ρ` the value differs
/// from the center value by at most `|∇S| ρ + |γ| ρ^2 / 2`.
pub fn certified_margin(n: usize, a: f64, b: f64) -> f64 {
    let label = classify_vab(n, a, b, 0.0).unwrap_or(RegionLabel::new(0, 0));
    let last = (label.m_index + 1).min(n);
    let mut margin = f64::INFINITY;
    for k in 1..=last {
        let (_, beta, gamma) = vab_coefficients(n, k);
        let s0 = vab_sk(n, k, a, b).abs();
        let grad = ((beta + gamma * b).powi(2) + (beta + gamma * a).powi(2)).sqrt();
        let rho = if gamma == 0.0 {
            if grad == 0.0 {
                f64::INFINITY
            } else {
                s0 / grad
            }
        } else {
            (-grad + (grad * grad + 2.0 * gamma.abs() * s0).sqrt()) / gamma.abs()
        };
        margin = margin.min(rho);
    }
    for k in 1..n {
        margin = margin.min((b - slice_threshold(n, k)).abs());
    }
    margin
}

/// One realized region of the `(a, b)` plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub region_id: usize,
    pub a: f64,
    pub b: f64,
    pub m: usize,
    pub k: usize,
    pub delta: Option<i64>,
    /// Certified distance from `(a, b)` to the region boundary.
    pub margin: f64,
}

/// Half-width of the square `[-L, L]^2` scanned by [`table1`].
pub const TABLE1_EXTENT: f64 = 6.0;

/// Every realized `(m, k)` pair with `m >= 1`, ordered by `(k, m)`, each with
/// the scanned grid point that has the largest certified margin.
pub fn table1(n: usize, grid: usize) -> Result<Vec<Table1Row>> {
    check_family_dim(n)?;
    if grid < 2 {
        return Err(Error::Parameter(format!(
            "grid resolution must be >= 2, got {grid}"
        )));
    }
    let step = 2.0 * TABLE1_EXTENT / (grid - 1) as f64;
    let mut best: BTreeMap<(usize, usize), (f64, f64, f64)> = BTreeMap::new();
    for i in 0..grid {
        let a = -TABLE1_EXTENT + step * i as f64;
        for j in 0..grid {
            let b = -TABLE1_EXTENT + step * j as f64;
            let label = classify_vab(n, a, b, DEFAULT_TOL)?;
            if label.m_index == 0 {
                continue;
            }
            let margin = certified_margin(n, a, b);
            let key = (label.slice_k_index, label.m_index);
            match best.get(&key) {
                Some(&(_, _, m)) if m >= margin => {}
                _ => {
                    best.insert(key, (a, b, margin));
                }
            }
        }
    }
    Ok(best
        .into_iter()
        .filter(|(_, (_, _, margin))| *margin >= REPRESENTATIVE_MARGIN)
        .enumerate()
        .map(|(i, ((k, m), (a, b, margin)))| Table1Row {
            region_id: i + 1,
            a,
            b,
            m,
            k,
            delta: RegionLabel::new(m, k).delta,
            margin,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Line,
    Hyperbola,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveFamily {
    /// `S_k(v_{a,b}) = 0`
    Cone,
    /// `b = -(n-k-1)/k`
    Slice,
}

/// Curve `c0 + ca·a + cb·b + cab·ab = 0` in the `(a, b)` plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coefficients {
    pub c0: f64,
    pub ca: f64,
    pub cb: f64,
    pub cab: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryCurve {
    pub family: CurveFamily,
    pub k: usize,
    pub kind: CurveKind,
    pub coeffs: Coefficients,
}

impl BoundaryCurve {
    pub fn value(&self, a: f64, b: f64) -> f64 {
        let c = &self.coeffs;
        c.c0 + c.ca * a + c.cb * b + c.cab * a * b
    }

    /// Points `(a, b)` of the curve for `count` values of `a` in
    /// `[-extent, extent]`, dropping those whose `b` leaves the square.
    pub fn sample(&self, extent: f64, count: usize) -> Vec<(f64, f64)> {
        let c = &self.coeffs;
        (0..count)
            .filter_map(|i| {
                let a = -extent + 2.0 * extent * i as f64 / (count.max(2) - 1) as f64;
                let denom = c.cb + c.cab * a;
                if denom == 0.0 {
                    return None;
                }
                let b = -(c.c0 + c.ca * a) / denom;
                (b.abs() <= extent).then_some((a, b))
            })
            .collect()
    }
}

pub fn region_boundaries(n: usize) -> Result<Vec<BoundaryCurve>> {
    check_family_dim(n)?;
    let mut out = Vec::with_capacity(2 * n - 1);
    for k in 1..=n {
        let (alpha, beta, gamma) = vab_coefficients(n, k);
        out.push(BoundaryCurve {
            family: CurveFamily::Cone,
            k,
            kind: if gamma == 0.0 {
                CurveKind::Line
            } else {
                CurveKind::Hyperbola
            },
            coeffs: Coefficients {
                c0: alpha,
                ca: beta,
                cb: beta,
                cab: gamma,
            },
        });
    }
    for k in 1..n {
        out.push(BoundaryCurve {
            family: CurveFamily::Slice,
            k,
            kind: CurveKind::Line,
            coeffs: Coefficients {
                c0: -slice_threshold(n, k),
                ca: 0.0,
                cb: 1.0,
                cab: 0.0,
            },
        });
    }
    Ok(out)
}

/// Normalized `S_k` at or above this counts as non-negative.
pub const MSH_PASS: f64 = -1e-9;
/// Normalized `S_k` below this counts as a clear violation.
pub const MSH_FAIL: f64 = -1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MshReport {
    pub function: String,
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub shell: [f64; 2],
    /// Minimum over the samples of `S_k(λ) / S_k(|λ|)`, `k = 1..=n`.
    pub min_normalized: Vec<f64>,
    /// Minimum subharmonicity index seen.
    pub min_index: usize,
    /// Every `k <= m` stays at or above [`MSH_PASS`].
    pub passed: bool,
    /// Some `k <= m` drops below [`MSH_FAIL`].
    pub violated: bool,
    /// Largest `|H_fd - H| / |H|` (Frobenius), when `f` has a closed-form Hessian.
    pub fd_max_rel_error: Option<f64>,
}

/// Scans the Hessian spectrum of `f` at `samples` points drawn uniformly
/// from the shell `lo <= |z| <= hi`.
pub fn msh_check(
    f: &TestFunction,
    m: usize,
    samples: usize,
    seed: u64,
    shell: (f64, f64),
) -> Result<MshReport> {
    let n = f.dim();
    if m == 0 || m > n {
        return Err(Error::Parameter(format!("m = {m} outside 1..={n}")));
    }
    let (lo, hi) = shell;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Parameter(format!("invalid shell [{lo}, {hi}]")));
    }
    if samples == 0 {
        return Err(Error::Parameter("need at least one sample".into()));
    }
    let d = 2 * n as i32;
    let (a, b) = (lo.powi(d), hi.powi(d));
    let rows: Vec<Result<(Vec<f64>, usize, Option<f64>)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut z: Vec<C64> = (0..n)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let rho = (a + rng.random::<f64>() * (b - a)).powf(1.0 / d as f64);
            z.iter_mut().for_each(|c| *c *= rho / norm);
            let point = Point::new(z);
            let h = f.hessian(&point)?;
            let fd = if f.has_analytic_hessian() {
                let approx = hessian::wirtinger_hessian_auto(f, &point)?;
                Some(frobenius_gap(&approx, &h) / h.norm().max(1e-300))
            } else {
                None
            };
            let spec = hessian::spectrum(&h)?;
            let lambda = spec.eigenvalues();
            Ok((
                normalized_symmetric(lambda),
                subharmonic_index(lambda, DEFAULT_TOL),
                fd,
            ))
        })
        .collect();
    let mut min_normalized = vec![f64::INFINITY; n];
    let mut min_index = n;
    let mut fd_max: Option<f64> = None;
    for r in rows {
        let (norm, idx, fd) = r?;
        for (acc, v) in min_normalized.iter_mut().zip(norm) {
            *acc = acc.min(v);
        }
        min_index = min_index.min(idx);
        if let Some(e) = fd {
            fd_max = Some(fd_max.map_or(e, |x: f64| x.max(e)));
        }
    }
    let head = &min_normalized[..m];
    Ok(MshReport {
        function: f.to_string(),
        n,
        m,
        samples,
        seed,
        shell: [lo, hi],
        passed: head.iter().all(|&v| v >= MSH_PASS),
        violated: head.iter().any(|&v| v < MSH_FAIL),
        min_normalized,
        min_index,
        fd_max_rel_error: fd_max,
    })
}

fn frobenius_gap(a: &hessian::HermitianMatrix, b: &hessian::HermitianMatrix) -> f64 {
    let n = a.dim();
    let mut acc = 0.0;
    for j in 0..n {
        for k in 0..n {
            acc += (a.get(j, k) - b.get(j, k)).norm_sqr();
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `S_k` by enumerating all k-subsets.
    fn subset_sk(lambda: &[f64], k: usize) -> f64 {
        let n = lambda.len();
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize == k)
            .map(|mask| {
                (0..n)
                    .filter(|j| mask & (1 << j) != 0)
                    .map(|j| lambda[j])
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn elementary_symmetric_examples() {
        assert_eq!(elementary_symmetric(&[1.0; 4], 2).unwrap(), 6.0);
        assert_eq!(elementary_symmetric(&[2.0, -1.0, 3.0], 2).unwrap(), 1.0);
        assert_eq!(elementary_symmetric(&[2.0, -1.0, 3.0], 0).unwrap(), 1.0);
        assert!(elementary_symmetric(&[2.0, -1.0, 3.0], 4).is_err());
    }

    #[test]
    fn cone_examples() {
        assert!(cone_membership(&[1.0; 5], 5, DEFAULT_TOL).unwrap());
        assert!(!cone_membership(&[-1.0, 0.0, 0.0, 0.0], 1, DEFAULT_TOL).unwrap());
        assert!(cone_membership(&[1.0; 3], 4, DEFAULT_TOL).is_err());
        assert!(cone_membership(&[1.0; 3], 0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn power_tau_spectrum_sits_on_the_cone_boundary() {
        // eigenvalues s^{-τ}(1, ..., 1, 1-τ) at τ = n/m give S_m = 0 exactly
        for (n, m) in [(4usize, 2usize), (6, 3), (6, 2), (5, 1)] {
            let tau = n as f64 / m as f64;
            let s: f64 = 0.37;
            let mut lambda = vec![s.powf(-tau); n];
            lambda[n - 1] *= 1.0 - tau;
            assert!(
                cone_membership(&lambda, m, DEFAULT_TOL).unwrap(),
                "n={n} m={m}"
            );
            let sm = elementary_symmetric(&lambda, m).unwrap();
            let scale =
                elementary_symmetric(&lambda.iter().map(|x| x.abs()).collect::<Vec<_>>(), m)
                    .unwrap();
            assert!(sm.abs() <= 1e-12 * scale);
            if m < n {
                assert_eq!(subharmonic_index(&lambda, DEFAULT_TOL), m);
            }
        }
    }

    #[test]
    fn subharmonic_index_examples() {
        assert_eq!(subharmonic_index(&[1.0; 5], DEFAULT_TOL), 5);
        assert_eq!(
            subharmonic_index(&[5.0, -4.0, 1.0, 1.0, 1.0], DEFAULT_TOL),
            1
        );
        assert_eq!(subharmonic_index(&[0.0; 4], DEFAULT_TOL), 4);
        assert_eq!(subharmonic_index(&[-1.0, 0.5], DEFAULT_TOL), 0);
    }

    #[test]
    fn classify_examples() {
        let l = classify_vab(5, 1.0, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!((l.m_index, l.slice_k_index, l.delta), (5, 4, Some(0)));
        let l = classify_vab(5, 5.0, -4.0, DEFAULT_TOL).unwrap();
        assert_eq!((l.m_index, l.slice_k_index, l.delta), (1, 0, None));
        // S = (1, 3, 3, 1, 0, 0) at the origin: every cone boundary is
        // inclusive and b = 0 meets the k = 4 slice bound with equality.
        assert_eq!(subharmonic_index(&[0.0, 0.0, 1.0, 1.0, 1.0], 0.0), 5);
        let l = classify_vab(5, 0.0, 0.0, DEFAULT_TOL).unwrap();
        assert_eq!((l.m_index, l.slice_k_index, l.delta), (5, 4, Some(0)));
        assert!(classify_vab(2, 0.0, 0.0, DEFAULT_TOL).is_err());
    }

    #[test]
    fn boundary_examples() {
        let curves = region_boundaries(5).unwrap();
        let s1 = curves
            .iter()
            .find(|c| c.family == CurveFamily::Cone && c.k == 1)
            .unwrap();
        assert_eq!(s1.kind, CurveKind::Line);
        assert_eq!(
            s1.coeffs,
            Coefficients {
                c0: 3.0,
                ca: 1.0,
                cb: 1.0,
                cab: 0.0
            }
        );
        let slice4 = curves
            .iter()
            .find(|c| c.family == CurveFamily::Slice && c.k == 4)
            .unwrap();
        assert_eq!(slice4.value(7.0, 0.0), 0.0);
        assert_eq!(slice4.value(-3.0, 0.5), 0.5);
        for n in 3..9 {
            let top = region_boundaries(n)
                .unwrap()
                .into_iter()
                .find(|c| c.family == CurveFamily::Cone && c.k == n)
                .unwrap();
            assert_eq!(top.kind, CurveKind::Hyperbola);
            assert_eq!(top.coeffs.cab, 1.0);
        }
    }

    #[test]
    fn table1_for_five_variables() {
        let rows = table1(5, 241).unwrap();
        let m: Vec<usize> = rows.iter().map(|r| r.m).collect();
        let k: Vec<usize> = rows.iter().map(|r| r.k).collect();
        let d: Vec<Option<i64>> = rows.iter().map(|r| r.delta).collect();
        assert_eq!(m, [1, 1, 2, 1, 2, 3, 1, 2, 3, 4, 1, 2, 3, 4, 5]);
        assert_eq!(k, [0, 1, 1, 2, 2, 2, 3, 3, 3, 3, 4, 4, 4, 4, 4]);
        let want: Vec<Option<i64>> = [
            None,
            Some(1),
            Some(0),
            Some(2),
            Some(1),
            Some(0),
            Some(3),
            Some(2),
            Some(1),
            Some(0),
            Some(4),
            Some(3),
            Some(2),
            Some(1),
            Some(0),
        ]
        .to_vec();
        assert_eq!(d, want);
        for r in &rows {
            assert!(r.margin >= REPRESENTATIVE_MARGIN);
            let l = classify_vab(5, r.a, r.b, DEFAULT_TOL).unwrap();
            assert_eq!((l.m_index, l.slice_k_index), (r.m, r.k));
        }
    }

    proptest! {
        #[test]
        fn recursion_matches_subset_enumeration(lambda in proptest::collection::vec(-4.0f64..4.0, 1..9)) {
            for k in 0..=lambda.len() {
                let fast = elementary_symmetric(&lambda, k).unwrap();
                let slow = subset_sk(&lambda, k);
                let scale = subset_sk(&lambda.iter().map(|x| x.abs()).collect::<Vec<_>>(), k).max(1.0);
                prop_assert!((fast - slow).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn closed_form_vab_sk_is_an_identity(n in 3usize..10, a in -8.0f64..8.0, b in -8.0f64..8.0) {
            let mut lambda = vec![1.0; n];
            lambda[0] = a;
            lambda[1] = b;
            for k in 1..=n {
                let closed = vab_sk(n, k, a, b);
                let direct = elementary_symmetric(&lambda, k).unwrap();
                let scale = closed.abs().max(direct.abs()).max(1.0);
                prop_assert!((closed - direct).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn cones_are_nested(lambda in proptest::collection::vec(-3.0f64..3.0, 1..8)) {
            let n = lambda.len();
            for m in 1..=n {
                if cone_membership(&lambda, m, DEFAULT_TOL).unwrap() {
                    for smaller in 1..m {
                        prop_assert!(cone_membership(&lambda, smaller, DEFAULT_TOL).unwrap());
                    }
                }
            }
        }

        #[test]
        fn delta_is_never_negative(n in 3usize..9, a in -6.0f64..6.0, b in -6.0f64..6.0) {
            let l = classify_vab(n, a, b, DEFAULT_TOL).unwrap();
            if let Some(d) = l.delta {
                prop_assert!(d >= 0);
            }
        }
    }

    #[test]
    fn msh_check_separates_the_power_threshold() {
        for (n, m) in [(4usize, 2usize), (5, 3), (6, 3)] {
            let tau = n as f64 / m as f64;
            let at = TestFunction::power_tau(n, tau).unwrap();
            let r = msh_check(&at, m, 512, 1, (0.25, 2.0)).unwrap();
            assert!(r.passed && !r.violated, "{r:?}");
            assert_eq!(r.min_index, m);
            assert!(r.fd_max_rel_error.unwrap() <= 1e-6, "{r:?}");
            let past = TestFunction::power_tau(n, tau + 0.05).unwrap();
            let r = msh_check(&past, m, 512, 1, (0.25, 2.0)).unwrap();
            assert!(!r.passed && r.violated, "{r:?}");
        }
        let f = TestFunction::abs_sq(3).unwrap();
        assert!(msh_check(&f, 4, 10, 1, (0.5, 1.0)).is_err());
        assert!(msh_check(&f, 3, 10, 1, (1.0, 0.5)).is_err());
    }

    #[test]
    fn m_index_is_symmetric_but_slice_index_is_not() {
        let mut asymmetric = 0;
        for i in 0..100 {
            // deterministic spread over [-6, 6]^2
            let a = -6.0 + 12.0 * ((i as f64 * 0.618_033_988_75).fract());
            let b = -6.0 + 12.0 * ((i as f64 * 0.414_213_562_37 + 0.1).fract());
            let l1 = classify_vab(5, a, b, DEFAULT_TOL).unwrap();
            let l2 = classify_vab(5, b, a, DEFAULT_TOL).unwrap();
            assert_eq!(l1.m_index, l2.m_index);
            if l1.slice_k_index != l2.slice_k_index {
                asymmetric += 1;
            }
        }
        assert!(asymmetric > 0);
    }
}
