//! Complex Hessians by finite differences and Hermitian eigenvalues.

use serde::Serialize;

use crate::catalog::{Point, TestFunction, C64};
use crate::error::{Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-6;

/// Relative disagreement between the `h` and `h/2` stencils above which the
/// automatic Hessian switches to the Richardson combination.
pub const RICHARDSON_TRIGGER: f64 = 1e-5;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense `n x n` complex matrix that is Hermitian up to rounding, stored row
/// major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        HermitianMatrix {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = HermitianMatrix::zeros(n);
        for j in 0..n {
            m.set(j, j, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = HermitianMatrix::zeros(d.len());
        for (j, &v) in d.iter().enumerate() {
            m.set(j, j, C64::new(v, 0.0));
        }
        m
    }

    /// Builds a matrix from rows; the entries are taken as given and only
    /// checked for symmetry by [`spectrum`].
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = HermitianMatrix::zeros(n);
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                m.set(j, k, v);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.data[j * self.n + k]
    }

    pub fn set(&mut self, j: usize, k: usize, v: C64) {
        self.data[j * self.n + k] = v;
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.get(j, j).re).sum()
    }

    /// Largest `|H_jk - conj(H_kj)|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..self.n {
            for k in j..self.n {
                worst = worst.max((self.get(j, k) - self.get(k, j).conj()).norm());
            }
        }
        worst
    }

    /// `(H + H*) / 2`, exactly Hermitian.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for j in 0..self.n {
            out.set(j, j, C64::new(self.get(j, j).re, 0.0));
            for k in j + 1..self.n {
                let v = (self.get(j, k) + self.get(k, j).conj()) * 0.5;
                out.set(j, k, v);
                out.set(k, j, v.conj());
            }
        }
        out
    }

    /// Lower-right `(n-p) x (n-p)` block.
    pub fn trailing_block(&self, p: usize) -> Self {
        let m = self.n - p;
        let mut out = HermitianMatrix::zeros(m);
        for j in 0..m {
            for k in 0..m {
                out.set(j, k, self.get(j + p, k + p));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &HermitianMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn combine(&self, other: &HermitianMatrix, a: f64, b: f64) -> Self {
        HermitianMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        }
    }
}

/// Real eigenvalues of a Hermitian matrix, ascending.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.eigenvalues
    }
}

/// Central-difference complex Hessian with step `h` on the `2n` real
/// coordinates `(x_1, y_1, ..., x_n, y_n)`:
///
/// `H_jk = ¼[(D_{x_j x_k} + D_{y_j y_k}) + i(D_{x_j y_k} - D_{y_j x_k})]`,
/// averaged with its conjugate transpose.
pub fn wirtinger_hessian_fd(f: &TestFunction, z: &Point, h: f64) -> Result<HermitianMatrix> {
    let n = f.dim();
    if z.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.dim(),
        });
    }
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("step must be positive, got {h}")));
    }
    let distance = f.singular_set().distance(z.coords());
    if distance <= 10.0 * h {
        return Err(Error::NearSingular {
            distance,
            required: 10.0 * h,
        });
    }

    let base = z.coords().to_vec();
    let mut work = base.clone();
    let mut eval = |shifts: &[(usize, f64)]| -> Result<f64> {
        work.copy_from_slice(&base);
        for &(u, d) in shifts {
            let c = &mut work[u / 2];
            if u % 2 == 0 {
                c.re += d;
            } else {
                c.im += d;
            }
        }
        let v = f.eval_coords(&work);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!(
                "sample {v} in finite-difference stencil"
            )))
        }
    };

    let dim = 2 * n;
    let center = eval(&[])?;
    let mut d = vec![0.0; dim * dim];
    for u in 0..dim {
        let plus = eval(&[(u, h)])?;
        let minus = eval(&[(u, -h)])?;
        d[u * dim + u] = (plus - 2.0 * center + minus) / (h * h);
        for w in u + 1..dim {
            let pp = eval(&[(u, h), (w, h)])?;
            let pm = eval(&[(u, h), (w, -h)])?;
            let mp = eval(&[(u, -h), (w, h)])?;
            let mm = eval(&[(u, -h), (w, -h)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            d[u * dim + w] = v;
            d[w * dim + u] = v;
        }
    }

    let at = |a: usize, b: usize| d[a * dim + b];
    let mut out = HermitianMatrix::zeros(n);
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        for k in 0..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            let re = at(xj, xk) + at(yj, yk);
            let im = at(xj, yk) - at(yj, xk);
            out.set(j, k, C64::new(0.25 * re, 0.25 * im));
        }
    }
    Ok(out.symmetrized())
}

/// Default finite-difference step at `z`.
pub fn default_step(z: &Point) -> f64 {
    1e-4 * z.norm_sqr().sqrt().max(1.0)
}

/// Finite-difference Hessian with the default step, refined by Richardson
/// extrapolation over `(h, h/2)` when the two stencils disagree. The step is
/// shrunk to stay 20 steps away from the singular set.
pub fn wirtinger_hessian_auto(f: &TestFunction, z: &Point) -> Result<HermitianMatrix> {
    let distance = f.singular_set().distance(z.coords());
    let h = default_step(z).min(distance / 20.0);
    let coarse = wirtinger_hessian_fd(f, z, h)?;
    let fine = wirtinger_hessian_fd(f, z, h / 2.0)?;
    let scale = fine.norm().max(f64::MIN_POSITIVE);
    if coarse.max_abs_diff(&fine) > RICHARDSON_TRIGGER * scale {
        Ok(fine.combine(&coarse, 4.0 / 3.0, -1.0 / 3.0))
    } else {
        Ok(fine)
    }
}

/// Eigenvalues of `h`, ascending.
pub fn spectrum(h: &HermitianMatrix) -> Result<Spectrum> {
    let (mut eigenvalues, _) = eigen_decomposition(h)?;
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Spectrum { eigenvalues })
}

/// Cyclic Jacobi diagonalization. Returns the (unsorted) eigenvalues and the
/// unitary basis, column `k` holding the eigenvector of eigenvalue `k`.
pub(crate) fn eigen_decomposition(h: &HermitianMatrix) -> Result<(Vec<f64>, HermitianMatrix)> {
    let norm = h.norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite("matrix entries".into()));
    }
    let asymmetry = h.asymmetry();
    if asymmetry > HERMITIAN_TOL * norm {
        return Err(Error::NonHermitian {
            asymmetry,
            tolerance: HERMITIAN_TOL * norm,
        });
    }

    let n = h.dim();
    let mut a = h.symmetrized();
    let mut v = HermitianMatrix::identity(n);
    let off = |a: &HermitianMatrix| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    s += a.get(j, k).norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= JACOBI_TOL * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a.get(p, q);
                let gm = g.norm();
                if gm == 0.0 {
                    continue;
                }
                let e = g / gm;
                let theta = (a.get(q, q).re - a.get(p, p).re) / (2.0 * gm);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // U = diag(1, conj(e)) * [[c, s], [-s, c]] on (p, q)
                let rotate_cols = |m: &mut HermitianMatrix| {
                    for k in 0..n {
                        let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                        m.set(k, p, mkp * c - mkq * e.conj() * s);
                        m.set(k, q, mkp * s + mkq * e.conj() * c);
                    }
                };
                rotate_cols(&mut a);
                rotate_cols(&mut v);
                for k in 0..n {
                    let (apk, aqk) = (a.get(p, k), a.get(q, k));
                    a.set(p, k, apk * c - aqk * e * s);
                    a.set(q, k, apk * s + aqk * e * c);
                }
                a.set(p, q, C64::new(0.0, 0.0));
                a.set(q, p, C64::new(0.0, 0.0));
                a.set(p, p, C64::new(a.get(p, p).re, 0.0));
                a.set(q, q, C64::new(a.get(q, q).re, 0.0));
            }
        }
    }
    Ok(((0..n).map(|j| a.get(j, j).re).collect(), v))
}
