//! Closed-form test functions on C^n.
//!
//! Every entry evaluates exactly, carries an exact complex Hessian
//! `H_jk = d^2 v / dz_j dz̄_k`, and declares where it is singular. Radial
//! families are stored as a profile `f(s)` with `s = |z|^2` (or the squared
//! norm of a coordinate block), and the Hessian is assembled on demand from
//! `f'` and `f''`:
//!
//! ```text
//! H_jk = f'(s) δ_jk + f''(s) z̄_j z_k
//! ```
//!
//! whose spectrum is `f'` with multiplicity `n - 1` plus `f' + s f''`.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hessian::{self, HermitianMatrix};

pub type C64 = Complex64;

/// Largest ambient dimension the toolkit supports.
pub const MAX_DIM: usize = 16;

/// A point of C^n with a split `z = (z', z'')`, `z'` being the first `split`
/// coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Point {
    coords: Vec<C64>,
    split: usize,
}

impl Point {
    pub fn new(coords: Vec<C64>) -> Self {
        Point { coords, split: 0 }
    }

    pub fn origin(n: usize) -> Self {
        Point::new(vec![C64::new(0.0, 0.0); n])
    }

    /// Point with the given real parts and zero imaginary parts.
    pub fn from_real(re: &[f64]) -> Self {
        Point::new(re.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// `(z', z'')` with the split placed between the two blocks.
    pub fn join(zprime: &[C64], zsecond: &[C64]) -> Self {
        let mut coords = Vec::with_capacity(zprime.len() + zsecond.len());
        coords.extend_from_slice(zprime);
        coords.extend_from_slice(zsecond);
        Point {
            coords,
            split: zprime.len(),
        }
    }

    pub fn with_split(mut self, p: usize) -> Result<Self> {
        if p >= self.coords.len() {
            return Err(Error::Parameter(format!(
                "split {p} must be below the dimension {}",
                self.coords.len()
            )));
        }
        self.split = p;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn split(&self) -> usize {
        self.split
    }

    pub fn zprime(&self) -> &[C64] {
        &self.coords[..self.split]
    }

    pub fn zsecond(&self) -> &[C64] {
        &self.coords[self.split..]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coords)
    }
}

pub(crate) fn norm_sqr(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Where a test function fails to be smooth (and may be `-inf`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SingularSet {
    None,
    Point {
        at: Vec<[f64; 2]>,
    },
    /// `{z' = at}` with `z'` the first `p` coordinates.
    LeadingPlane {
        p: usize,
        at: Vec<[f64; 2]>,
    },
    /// `{z'' = at}` with `z''` the coordinates from index `p` on.
    TrailingPlane {
        p: usize,
        at: Vec<[f64; 2]>,
    },
    Everywhere,
}

fn to_pairs(z: &[C64]) -> Vec<[f64; 2]> {
    z.iter().map(|c| [c.re, c.im]).collect()
}

fn from_pairs(z: &[[f64; 2]]) -> Vec<C64> {
    z.iter().map(|c| C64::new(c[0], c[1])).collect()
}

impl SingularSet {
    fn point(at: &[C64]) -> Self {
        SingularSet::Point { at: to_pairs(at) }
    }

    /// Euclidean distance from `z` to the set (`inf` for the empty set).
    pub fn distance(&self, z: &[C64]) -> f64 {
        match self {
            SingularSet::None => f64::INFINITY,
            SingularSet::Everywhere => 0.0,
            SingularSet::Point { at } => dist(z, &from_pairs(at)),
            SingularSet::LeadingPlane { p, at } => dist(&z[..*p], &from_pairs(at)),
            SingularSet::TrailingPlane { p, at } => dist(&z[*p..], &from_pairs(at)),
        }
    }

    /// Distance from `x'` (the first `xprime.len()` coordinates) to the set
    /// of `x'` whose fibers meet the singular set differently from the
    /// generic fiber. `inf` when every fiber looks alike.
    pub fn fiber_distance(&self, xprime: &[C64]) -> f64 {
        let s = xprime.len();
        match self {
            SingularSet::None => f64::INFINITY,
            SingularSet::Everywhere => 0.0,
            SingularSet::Point { at } => dist(xprime, &from_pairs(&at[..s])),
            SingularSet::LeadingPlane { p, at } => {
                let k = s.min(*p);
                dist(&xprime[..k], &from_pairs(&at[..k]))
            }
            SingularSet::TrailingPlane { p, at } => {
                if *p >= s {
                    f64::INFINITY
                } else {
                    dist(&xprime[*p..], &from_pairs(&at[..s - p]))
                }
            }
        }
    }

    /// Singular set of the restriction to `{x'} x C^{n-s}`, `s = xprime.len()`,
    /// in the coordinates of the slice.
    pub fn sliced(&self, xprime: &[C64]) -> SingularSet {
        let s = xprime.len();
        match self {
            SingularSet::None => SingularSet::None,
            SingularSet::Everywhere => SingularSet::Everywhere,
            SingularSet::Point { at } => {
                let at = from_pairs(at);
                if at[..s] == *xprime {
                    SingularSet::point(&at[s..])
                } else {
                    SingularSet::None
                }
            }
            SingularSet::LeadingPlane { p, at } => {
                let at = from_pairs(at);
                if s >= *p {
                    if xprime[..*p] == at[..] {
                        SingularSet::Everywhere
                    } else {
                        SingularSet::None
                    }
                } else if xprime == &at[..s] {
                    SingularSet::LeadingPlane {
                        p: p - s,
                        at: to_pairs(&at[s..]),
                    }
                } else {
                    SingularSet::None
                }
            }
            SingularSet::TrailingPlane { p, at } => {
                let at = from_pairs(at);
                if s <= *p {
                    if *p == s {
                        SingularSet::point(&at)
                    } else {
                        SingularSet::TrailingPlane {
                            p: p - s,
                            at: to_pairs(&at),
                        }
                    }
                } else if xprime[*p..] == at[..s - p] {
                    SingularSet::point(&at[s - p..])
                } else {
                    SingularSet::None
                }
            }
        }
    }
}

/// One `coef * s^exponent` term of a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
}

/// Radial profile `f(s) = Σ c_i s^{γ_i} + d log s` with closed-form
/// derivatives.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Profile {
    pub terms: Vec<PowerTerm>,
    pub log_coef: f64,
}

impl Profile {
    pub fn power(coef: f64, exponent: f64) -> Self {
        Profile {
            terms: vec![PowerTerm { coef, exponent }],
            log_coef: 0.0,
        }
    }

    pub fn log(coef: f64) -> Self {
        Profile {
            terms: Vec::new(),
            log_coef: coef,
        }
    }

    pub fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.value_at_zero();
        }
        let mut v = if self.log_coef != 0.0 {
            self.log_coef * s.ln()
        } else {
            0.0
        };
        for t in &self.terms {
            v += t.coef * s.powf(t.exponent);
        }
        v
    }

    pub fn d1(&self, s: f64) -> f64 {
        let mut v = if self.log_coef != 0.0 {
            self.log_coef / s
        } else {
            0.0
        };
        for t in &self.terms {
            if t.exponent != 0.0 {
                v += t.coef * t.exponent * s.powf(t.exponent - 1.0);
            }
        }
        v
    }

    pub fn d2(&self, s: f64) -> f64 {
        let mut v = if self.log_coef != 0.0 {
            -self.log_coef / (s * s)
        } else {
            0.0
        };
        for t in &self.terms {
            let g = t.exponent;
            if g != 0.0 && g != 1.0 {
                v += t.coef * g * (g - 1.0) * s.powf(g - 2.0);
            }
        }
        v
    }

    /// True when the profile is not a polynomial in `s`, so the function it
    /// defines is not smooth at the block origin.
    pub fn singular_at_zero(&self) -> bool {
        self.log_coef != 0.0
            || self
                .terms
                .iter()
                .any(|t| t.coef != 0.0 && (t.exponent < 0.0 || t.exponent.fract() != 0.0))
    }

    fn value_at_zero(&self) -> f64 {
        let dominant = self
            .terms
            .iter()
            .filter(|t| t.coef != 0.0 && t.exponent < 0.0)
            .min_by(|a, b| a.exponent.total_cmp(&b.exponent));
        if let Some(t) = dominant {
            return t.coef.signum() * f64::INFINITY;
        }
        if self.log_coef != 0.0 {
            return -self.log_coef.signum() * f64::INFINITY;
        }
        self.terms
            .iter()
            .filter(|t| t.exponent == 0.0)
            .map(|t| t.coef)
            .sum()
    }
}

/// Which coordinates a radial profile reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Full,
    /// `z'`, the first `p` coordinates.
    Leading(usize),
    /// `z''`, the coordinates from index `p` on.
    Trailing(usize),
}

impl Block {
    fn range(self, n: usize) -> Range<usize> {
        match self {
            Block::Full => 0..n,
            Block::Leading(p) => 0..p,
            Block::Trailing(p) => p..n,
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    /// `a|z1|^2 + b|z2|^2 + Σ_{j>=3} |z_j|^2`
    Quadratic {
        a: f64,
        b: f64,
    },
    Radial {
        profile: Profile,
        block: Block,
    },
    /// `Re z_1`
    RealPartZ1,
    Slice {
        parent: Arc<TestFunction>,
        xprime: Vec<C64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Param {
    pub key: String,
    pub value: f64,
}

fn param(key: &str, value: f64) -> Param {
    Param {
        key: key.to_string(),
        value,
    }
}

/// An evaluable function on C^n. Immutable once built, so it can be shared
/// freely between worker threads.
#[derive(Clone, Debug)]
pub struct TestFunction {
    n: usize,
    kind: Kind,
    name: String,
    params: Vec<Param>,
    singular: SingularSet,
    analytic_hessian: bool,
}

/// Catalog names accepted by [`lookup`].
pub const FAMILIES: &[&str] = &[
    "quadratic_ab",
    "power_tau",
    "fundamental",
    "log_abs",
    "log_abs_zprime",
    "log_abs_z2",
    "abs_sq",
    "custom_radial",
    "re_z1",
];

/// Positional parameter names of a catalog family.
pub fn family_params(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "quadratic_ab" => &["a", "b"],
        "power_tau" => &["tau"],
        "fundamental" => &["m"],
        "log_abs_zprime" | "log_abs_z2" => &["p"],
        "log_abs" | "abs_sq" | "re_z1" => &[],
        // log coefficient followed by (coef, exponent) pairs
        "custom_radial" => &["log"],
        _ => return None,
    })
}

fn check_dim(n: usize, min: usize) -> Result<()> {
    if n < min || n > MAX_DIM {
        return Err(Error::Parameter(format!(
            "dimension {n} outside {min}..={MAX_DIM}"
        )));
    }
    Ok(())
}

fn as_index(x: f64, what: &str) -> Result<usize> {
    if x.fract() != 0.0 || x < 0.0 || !x.is_finite() {
        return Err(Error::Parameter(format!(
            "{what} must be a non-negative integer, got {x}"
        )));
    }
    Ok(x as usize)
}

/// Builds a catalog function from its name and positional parameters.
pub fn lookup(name: &str, n: usize, params: &[f64]) -> Result<TestFunction> {
    let want = |k: usize| -> Result<()> {
        if params.len() != k {
            return Err(Error::Parameter(format!(
                "{name} takes {k} parameter(s), got {}",
                params.len()
            )));
        }
        Ok(())
    };
    match name {
        "quadratic_ab" => {
            want(2)?;
            TestFunction::quadratic_ab(n, params[0], params[1])
        }
        "power_tau" => {
            want(1)?;
            TestFunction::power_tau(n, params[0])
        }
        "fundamental" => {
            want(1)?;
            TestFunction::fundamental(n, as_index(params[0], "m")?)
        }
        "log_abs" => {
            want(0)?;
            TestFunction::log_abs(n)
        }
        "log_abs_zprime" | "log_abs_z2" => {
            let p = match params {
                [] => 1,
                [p] => as_index(*p, "p")?,
                _ => {
                    return Err(Error::Parameter(format!(
                        "{name} takes at most one parameter"
                    )))
                }
            };
            if name == "log_abs_zprime" {
                TestFunction::log_abs_zprime(n, p)
            } else {
                TestFunction::log_abs_z2(n, p)
            }
        }
        "abs_sq" => {
            want(0)?;
            TestFunction::abs_sq(n)
        }
        "custom_radial" => {
            if params.is_empty() || params.len().is_multiple_of(2) {
                return Err(Error::Parameter(
                    "custom_radial takes a log coefficient followed by (coef, exponent) pairs"
                        .into(),
                ));
            }
            let terms = params[1..]
                .chunks(2)
                .map(|c| PowerTerm {
                    coef: c[0],
                    exponent: c[1],
                })
                .collect();
            TestFunction::custom_radial(
                n,
                Profile {
                    terms,
                    log_coef: params[0],
                },
            )
        }
        "re_z1" => {
            want(0)?;
            check_dim(n, 1)?;
            Ok(TestFunction::new(
                n,
                Kind::RealPartZ1,
                "re_z1",
                vec![],
                SingularSet::None,
            ))
        }
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

impl TestFunction {
    fn new(n: usize, kind: Kind, name: &str, params: Vec<Param>, singular: SingularSet) -> Self {
        TestFunction {
            n,
            kind,
            name: name.to_string(),
            params,
            singular,
            analytic_hessian: true,
        }
    }

    fn radial(n: usize, profile: Profile, block: Block, name: &str, params: Vec<Param>) -> Self {
        let zero = vec![C64::new(0.0, 0.0); n];
        let singular = if !profile.singular_at_zero() {
            SingularSet::None
        } else {
            match block {
                Block::Full => SingularSet::point(&zero),
                Block::Leading(p) => SingularSet::LeadingPlane {
                    p,
                    at: to_pairs(&zero[..p]),
                },
                Block::Trailing(p) => SingularSet::TrailingPlane {
                    p,
                    at: to_pairs(&zero[p..]),
                },
            }
        };
        TestFunction::new(n, Kind::Radial { profile, block }, name, params, singular)
    }

    pub fn quadratic_ab(n: usize, a: f64, b: f64) -> Result<Self> {
        check_dim(n, 2)?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Parameter("a and b must be finite".into()));
        }
        Ok(TestFunction::new(
            n,
            Kind::Quadratic { a, b },
            "quadratic_ab",
            vec![param("a", a), param("b", b)],
            SingularSet::None,
        ))
    }

    /// `v_τ(z) = -1 / ((τ-1) |z|^{2(τ-1)})`, `τ > 1`.
    pub fn power_tau(n: usize, tau: f64) -> Result<Self> {
        check_dim(n, 1)?;
        if !(tau > 1.0) || !tau.is_finite() {
            return Err(Error::Parameter(format!(
                "power_tau needs tau > 1, got {tau}"
            )));
        }
        Ok(TestFunction::radial(
            n,
            Profile::power(-1.0 / (tau - 1.0), 1.0 - tau),
            Block::Full,
            "power_tau",
            vec![param("tau", tau)],
        ))
    }

    /// `Φ_{n,m}(z) = φ_{n,m}(|z|^2)`, the fundamental solution of the complex
    /// Hessian equation; requires `1 <= m < n`.
    pub fn fundamental(n: usize, m: usize) -> Result<Self> {
        check_dim(n, 2)?;
        if m == 0 || m >= n {
            return Err(Error::Parameter(format!(
                "fundamental needs 1 <= m < n, got n={n}, m={m}"
            )));
        }
        let tau = n as f64 / m as f64;
        Ok(TestFunction::radial(
            n,
            Profile::power(-1.0 / (tau - 1.0), 1.0 - tau),
            Block::Full,
            "fundamental",
            vec![param("m", m as f64)],
        ))
    }

    /// `log |z|`
    pub fn log_abs(n: usize) -> Result<Self> {
        check_dim(n, 1)?;
        Ok(TestFunction::radial(
            n,
            Profile::log(0.5),
            Block::Full,
            "log_abs",
            vec![],
        ))
    }

    /// `log |z'|` with `z'` the first `p` coordinates.
    pub fn log_abs_zprime(n: usize, p: usize) -> Result<Self> {
        check_dim(n, 2)?;
        if p == 0 || p >= n {
            return Err(Error::Parameter(format!("need 1 <= p < n, got p={p}")));
        }
        Ok(TestFunction::radial(
            n,
            Profile::log(0.5),
            Block::Leading(p),
            "log_abs_zprime",
            vec![param("p", p as f64)],
        ))
    }

    /// `log |z''|` with `z''` the coordinates from index `p` on.
    pub fn log_abs_z2(n: usize, p: usize) -> Result<Self> {
        check_dim(n, 2)?;
        if p == 0 || p >= n {
            return Err(Error::Parameter(format!("need 1 <= p < n, got p={p}")));
        }
        Ok(TestFunction::radial(
            n,
            Profile::log(0.5),
            Block::Trailing(p),
            "log_abs_z2",
            vec![param("p", p as f64)],
        ))
    }

    /// `|z|^2`
    pub fn abs_sq(n: usize) -> Result<Self> {
        check_dim(n, 1)?;
        Ok(TestFunction::radial(
            n,
            Profile::power(1.0, 1.0),
            Block::Full,
            "abs_sq",
            vec![],
        ))
    }

    pub fn custom_radial(n: usize, profile: Profile) -> Result<Self> {
        check_dim(n, 1)?;
        let finite = profile.log_coef.is_finite()
            && profile
                .terms
                .iter()
                .all(|t| t.coef.is_finite() && t.exponent.is_finite());
        if !finite {
            return Err(Error::Parameter(
                "custom_radial coefficients must be finite".into(),
            ));
        }
        let mut params = vec![param("log", profile.log_coef)];
        for (i, t) in profile.terms.iter().enumerate() {
            params.push(param(&format!("c{}", i + 1), t.coef));
            params.push(param(&format!("g{}", i + 1), t.exponent));
        }
        Ok(TestFunction::radial(
            n,
            profile,
            Block::Full,
            "custom_radial",
            params,
        ))
    }

    /// `z -> profile(|z''|^2)` with `z''` the coordinates from index `p` on.
    pub fn custom_radial_z2(n: usize, p: usize, profile: Profile) -> Result<Self> {
        check_dim(n, 2)?;
        if p == 0 || p >= n {
            return Err(Error::Parameter(format!("need 1 <= p < n, got p={p}")));
        }
        let mut params = vec![param("p", p as f64), param("log", profile.log_coef)];
        for (i, t) in profile.terms.iter().enumerate() {
            params.push(param(&format!("c{}", i + 1), t.coef));
            params.push(param(&format!("g{}", i + 1), t.exponent));
        }
        Ok(TestFunction::radial(
            n,
            profile,
            Block::Trailing(p),
            "custom_radial_z2",
            params,
        ))
    }

    /// Same function with the closed-form Hessian withheld, so every Hessian
    /// request goes through finite differences.
    pub fn without_analytic_hessian(mut self) -> Self {
        self.analytic_hessian = false;
        self
    }

    pub(crate) fn sliced(parent: &TestFunction, xprime: &[C64]) -> TestFunction {
        let s = xprime.len();
        let mut params = parent.params.clone();
        params.push(param("slice_p", s as f64));
        TestFunction {
            n: parent.n - s,
            singular: parent.singular.sliced(xprime),
            kind: Kind::Slice {
                parent: Arc::new(parent.clone()),
                xprime: xprime.to_vec(),
            },
            name: format!("slice({})", parent.name),
            params,
            analytic_hessian: parent.analytic_hessian,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular
    }

    pub fn has_analytic_hessian(&self) -> bool {
        self.analytic_hessian
    }

    /// Profile of a function radial about the origin in every coordinate.
    pub fn radial_profile(&self) -> Option<&Profile> {
        match &self.kind {
            Kind::Radial {
                profile,
                block: Block::Full,
            } => Some(profile),
            _ => None,
        }
    }

    fn check(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, z: &Point) -> Result<f64> {
        self.check(z.coords())?;
        Ok(self.eval_coords(z.coords()))
    }

    /// Evaluation on raw coordinates; the caller guarantees the length.
    pub(crate) fn eval_coords(&self, z: &[C64]) -> f64 {
        match &self.kind {
            Kind::Quadratic { a, b } => {
                let rest: f64 = z[2..].iter().map(|c| c.norm_sqr()).sum();
                a * z[0].norm_sqr() + b * z[1].norm_sqr() + rest
            }
            Kind::Radial { profile, block } => profile.value(norm_sqr(&z[block.range(self.n)])),
            Kind::RealPartZ1 => z[0].re,
            Kind::Slice { parent, xprime } => {
                let mut full = [C64::new(0.0, 0.0); MAX_DIM];
                let s = xprime.len();
                full[..s].copy_from_slice(xprime);
                full[s..parent.n].copy_from_slice(z);
                parent.eval_coords(&full[..parent.n])
            }
        }
    }

    fn singular_guard(&self, z: &[C64]) -> Result<()> {
        if self.singular.distance(z) == 0.0 {
            return Err(Error::NearSingular {
                distance: 0.0,
                required: 0.0,
            });
        }
        Ok(())
    }

    /// Closed-form Hessian, or `None` when it has been withheld.
    pub fn analytic_hessian(&self, z: &Point) -> Option<Result<HermitianMatrix>> {
        if !self.analytic_hessian {
            return None;
        }
        Some(
            self.check(z.coords())
                .and_then(|_| self.singular_guard(z.coords()))
                .map(|_| self.closed_form_hessian(z.coords())),
        )
    }

    /// Analytic Hessian when available, finite differences otherwise.
    pub fn hessian(&self, z: &Point) -> Result<HermitianMatrix> {
        match self.analytic_hessian(z) {
            Some(h) => h,
            None => hessian::wirtinger_hessian_auto(self, z),
        }
    }

    fn closed_form_hessian(&self, z: &[C64]) -> HermitianMatrix {
        let n = self.n;
        let mut h = HermitianMatrix::zeros(n);
        match &self.kind {
            Kind::Quadratic { a, b } => {
                h.set(0, 0, C64::new(*a, 0.0));
                h.set(1, 1, C64::new(*b, 0.0));
                for j in 2..n {
                    h.set(j, j, C64::new(1.0, 0.0));
                }
            }
            Kind::Radial { profile, block } => {
                let r = block.range(n);
                let s = norm_sqr(&z[r.clone()]);
                let (d1, d2) = (profile.d1(s), profile.d2(s));
                for j in r.clone() {
                    for k in r.clone() {
                        let mut v = z[j].conj() * z[k] * d2;
                        if j == k {
                            v += d1;
                        }
                        h.set(j, k, v);
                    }
                }
            }
            Kind::RealPartZ1 => {}
            Kind::Slice { parent, xprime } => {
                let s = xprime.len();
                let mut full = Vec::with_capacity(parent.n);
                full.extend_from_slice(xprime);
                full.extend_from_slice(z);
                let big = parent.closed_form_hessian(&full);
                for j in 0..n {
                    for k in 0..n {
                        h.set(j, k, big.get(j + s, k + s));
                    }
                }
            }
        }
        h
    }

    /// Diagonal `H_jj` of the closed-form Hessian written into `out`.
    fn closed_form_diagonal(&self, z: &[C64], out: &mut [f64]) {
        match &self.kind {
            Kind::Quadratic { a, b } => {
                out[0] = *a;
                out[1] = *b;
                out[2..self.n].iter_mut().for_each(|v| *v = 1.0);
            }
            Kind::Radial { profile, block } => {
                out[..self.n].iter_mut().for_each(|v| *v = 0.0);
                let r = block.range(self.n);
                let s = norm_sqr(&z[r.clone()]);
                let (d1, d2) = (profile.d1(s), profile.d2(s));
                for j in r {
                    out[j] = d1 + d2 * z[j].norm_sqr();
                }
            }
            Kind::RealPartZ1 => out[..self.n].iter_mut().for_each(|v| *v = 0.0),
            Kind::Slice { parent, xprime } => {
                let s = xprime.len();
                let mut full = [C64::new(0.0, 0.0); MAX_DIM];
                full[..s].copy_from_slice(xprime);
                full[s..parent.n].copy_from_slice(z);
                let mut diag = [0.0; MAX_DIM];
                parent.closed_form_diagonal(&full[..parent.n], &mut diag);
                out[..self.n].copy_from_slice(&diag[s..parent.n]);
            }
        }
    }

    /// Partial traces `(Σ_{j<p} H_jj, Σ_{j>=p} H_jj)` of the complex Hessian.
    pub fn hessian_traces(&self, z: &[C64], p: usize) -> Result<(f64, f64)> {
        self.check(z)?;
        self.singular_guard(z)?;
        let mut diag = [0.0; MAX_DIM];
        if self.analytic_hessian {
            self.closed_form_diagonal(z, &mut diag);
        } else {
            let h = hessian::wirtinger_hessian_auto(self, &Point::new(z.to_vec()))?;
            for (j, d) in diag.iter_mut().enumerate().take(self.n) {
                *d = h.get(j, j).re;
            }
        }
        let first: f64 = diag[..p].iter().sum();
        let second: f64 = diag[p..self.n].iter().sum();
        if !first.is_finite() || !second.is_finite() {
            return Err(Error::NonFinite("Hessian trace".into()));
        }
        Ok((first, second))
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}", self.name, self.n)?;
        for p in &self.params {
            write!(f, ", {}={}", p.key, p.value)?;
        }
        write!(f, ")")
    }
}
