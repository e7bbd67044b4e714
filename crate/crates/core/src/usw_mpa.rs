//! Tridiagonal matrix representation of the stationary measure.
//!
//! Two tridiagonal operators `x` and `y` give `D = I/(1-q) + x/sqrt(1-q)` and
//! `E = I/(1-q) + y/sqrt(1-q)`, with boundary vectors `<W| = |V> = e_0`. The
//! joint generating function is
//! `Pi_n(t) = (1-q)^n <W| (E + t_1 D) ... (E + t_n D) |V>`, and each factor
//! `(1-q)(E + t D) = (1+t) I + sqrt(1-q) (t x + y)` is evaluated as a
//! tridiagonal sweep on a vector that is renormalized after every step.
//!
//! The coefficients are written so that no division by `A` or `q` occurs,
//! which keeps `A = 0` and `q = 0` on the same code path as everything else.

use crate::asepmap::BoundaryParams;
use crate::error::{Error, Result};
use crate::qcore::{neg_power_index, LogScaled};

/// Entries of `x` and `y` in row/column `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UswCoeffs {
    /// `x[m+1][m]`.
    pub x_sub: f64,
    /// `x[m][m]`.
    pub x_diag: f64,
    /// `x[m-1][m]`.
    pub x_sup: f64,
    /// `y[m+1][m]`.
    pub y_sub: f64,
    /// `y[m][m]`.
    pub y_diag: f64,
    /// `y[m-1][m]`.
    pub y_sup: f64,
}

fn check_singular(bp: &BoundaryParams) -> Result<()> {
    let e4 = bp.abcd();
    if neg_power_index(num_complex::Complex64::new(e4, 0.0), bp.q, 1e-12).is_some() {
        return Err(Error::SingularAbcd { abcd: e4 });
    }
    Ok(())
}

pub fn usw_coeffs(bp: &BoundaryParams, m: usize) -> Result<UswCoeffs> {
    check_singular(bp)?;
    let (a, b, c, d) = (bp.a, bp.b, bp.c, bp.d);
    let q = bp.q;
    let s = (1.0 - q.get()).sqrt();
    let e4 = bp.abcd();
    if m == 0 {
        let bhat = 1.0 / (1.0 - e4);
        let beta = bhat / s;
        return Ok(UswCoeffs {
            x_sub: -a * b * beta,
            x_diag: a / s + b * beta * (1.0 - a * c) * (1.0 - a * d),
            x_sup: 0.0,
            y_sub: beta,
            y_diag: (c + d - a * c * d - b * c * d) / ((1.0 - e4) * s),
            y_sup: 0.0,
        });
    }
    let mi = m as i32;
    let qm = q.pow(mi);
    let qm1 = q.pow(mi - 1);
    let q2m = q.pow(2 * mi);
    let q2m1 = q.pow(2 * mi - 1);
    let q2m2 = q.pow(2 * mi - 2);
    let den = (1.0 - e4 * q2m) * (1.0 - e4 * q2m1);
    let bhat = (1.0 - e4 * qm1) / den;
    let beta = bhat / s;
    let eps_hat = (1.0 - qm) * (1.0 - b * c * qm1) * (1.0 - b * d * qm1)
        / (s * (1.0 - e4 * q2m2) * (1.0 - e4 * q2m1));
    let eps = (1.0 - a * c * qm1) * (1.0 - a * d * qm1) * eps_hat;
    let phi = -c * d * qm1 * eps;
    // (1 - bhat)/A written out, so that A = 0 is harmless
    let one_minus_bhat_over_a = b * c * d * (qm1 - q2m1 - q2m + e4 * q.pow(4 * mi - 1)) / den;
    Ok(UswCoeffs {
        x_sub: -a * b * qm * beta,
        x_diag: a / s + b * qm * beta * (1.0 - a * c * qm) * (1.0 - a * d * qm) - a * eps_hat,
        x_sup: eps,
        y_sub: beta,
        y_diag: one_minus_bhat_over_a / s + bhat * ((c + d) * qm - a * c * d * q2m) / s
            + a * c * d * qm1 * eps_hat,
        y_sup: phi,
    })
}

/// Diagonal entries from the printed form that divides by `A`; kept as a
/// cross-check of [`usw_coeffs`] where `A` is not small.
pub fn usw_diagonals_direct(bp: &BoundaryParams, m: usize) -> Result<(f64, f64)> {
    let a = bp.a;
    if a < 1e-6 {
        return Err(Error::SmallAUnstable { a });
    }
    let (c, d) = (bp.c, bp.d);
    let q = bp.q;
    let s = (1.0 - q.get()).sqrt();
    let k = usw_coeffs(bp, m)?;
    let qm = q.pow(m as i32);
    let alpha = k.x_sub;
    let beta = k.y_sub;
    let outer = (1.0 - a * c * qm) * (1.0 - a * d * qm);
    let mut gamma = a / s - alpha / a * outer;
    let mut delta = 1.0 / (a * s) - beta / a * outer;
    if m > 0 {
        let qm1 = q.pow(m as i32 - 1);
        let inner = (1.0 - a * c * qm1) * (1.0 - a * d * qm1);
        gamma -= a * k.x_sup / inner;
        delta -= a * k.y_sup / inner;
    }
    Ok((gamma, delta))
}

/// Tridiagonal matrix stored by diagonals; `sup[k] = M[k][k+1]`, `sub[k] = M[k+1][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub sub: Vec<f64>,
}

impl Tridiag {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Row vector times matrix.
    pub fn row_mul(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for j in 0..n {
            let mut acc = v[j] * self.diag[j];
            if j > 0 {
                acc += v[j - 1] * self.sup[j - 1];
            }
            if j + 1 < n {
                acc += v[j + 1] * self.sub[j];
            }
            out[j] = acc;
        }
    }

    /// Matrix times column vector.
    pub fn col_mul(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for j in 0..n {
            let mut acc = self.diag[j] * v[j];
            if j > 0 {
                acc += self.sub[j - 1] * v[j - 1];
            }
            if j + 1 < n {
                acc += self.sup[j] * v[j + 1];
            }
            out[j] = acc;
        }
    }

    /// `lhs * self + rhs * other`, same dimension.
    pub fn combine(&self, lhs: f64, other: &Tridiag, rhs: f64) -> Tridiag {
        let mix = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| lhs * x + rhs * y).collect();
        Tridiag { diag: mix(&self.diag, &other.diag), sup: mix(&self.sup, &other.sup), sub: mix(&self.sub, &other.sub) }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for k in 0..n {
            m[k][k] = self.diag[k];
            if k + 1 < n {
                m[k][k + 1] = self.sup[k];
                m[k + 1][k] = self.sub[k];
            }
        }
        m
    }
}

/// Truncations of `x` and `y` to `dim x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct UswMatrices {
    pub x: Tridiag,
    pub y: Tridiag,
    /// `sqrt(1 - q)`.
    pub s: f64,
}

impl UswMatrices {
    pub fn new(bp: &BoundaryParams, dim: usize) -> Result<Self> {
        let coeffs = (0..dim).map(|m| usw_coeffs(bp, m)).collect::<Result<Vec<_>>>()?;
        let x = Tridiag {
            diag: coeffs.iter().map(|k| k.x_diag).collect(),
            sup: coeffs.iter().skip(1).map(|k| k.x_sup).collect(),
            sub: coeffs.iter().take(dim.saturating_sub(1)).map(|k| k.x_sub).collect(),
        };
        let y = Tridiag {
            diag: coeffs.iter().map(|k| k.y_diag).collect(),
            sup: coeffs.iter().skip(1).map(|k| k.y_sup).collect(),
            sub: coeffs.iter().take(dim.saturating_sub(1)).map(|k| k.y_sub).collect(),
        };
        Ok(Self { x, y, s: (1.0 - bp.q.get()).sqrt() })
    }

    /// `(1-q)(E + t D) = (1+t) I + sqrt(1-q)(t x + y)`.
    pub fn step(&self, t: f64) -> Tridiag {
        let mut m = self.x.combine(self.s * t, &self.y, self.s);
        m.diag.iter_mut().for_each(|v| *v += 1.0 + t);
        m
    }

    /// `(1-q) D = I + sqrt(1-q) x`.
    pub fn d_scaled(&self) -> Tridiag {
        let mut m = self.x.combine(self.s, &self.x, 0.0);
        m.diag.iter_mut().for_each(|v| *v += 1.0);
        m
    }

    /// `(1-q) E = I + sqrt(1-q) y`.
    pub fn e_scaled(&self) -> Tridiag {
        let mut m = self.y.combine(self.s, &self.y, 0.0);
        m.diag.iter_mut().for_each(|v| *v += 1.0);
        m
    }
}

/// Vector with a separately tracked log scale.
#[derive(Debug, Clone)]
struct Scaled {
    v: Vec<f64>,
    ln_scale: f64,
}

impl Scaled {
    fn unit(dim: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        Self { v, ln_scale: 0.0 }
    }

    fn renormalize(&mut self) {
        let m = self.v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if m > 0.0 && m.is_finite() {
            self.v.iter_mut().for_each(|x| *x /= m);
            self.ln_scale += m.ln();
        }
    }

    fn row_step(&mut self, m: &Tridiag, buf: &mut Vec<f64>) {
        buf.resize(self.v.len(), 0.0);
        m.row_mul(&self.v, buf);
        std::mem::swap(&mut self.v, buf);
        self.renormalize();
    }

    fn col_step(&mut self, m: &Tridiag, buf: &mut Vec<f64>) {
        buf.resize(self.v.len(), 0.0);
        m.col_mul(&self.v, buf);
        std::mem::swap(&mut self.v, buf);
        self.renormalize();
    }

    fn dot(&self, other: &Scaled) -> LogScaled {
        let d: f64 = self.v.iter().zip(&other.v).map(|(x, y)| x * y).sum();
        LogScaled::scaled(d, self.ln_scale + other.ln_scale)
    }
}

/// `Pi_n(t_1, ..., t_n)` in log-scaled form.
pub fn pi_n(bp: &BoundaryParams, ts: &[f64]) -> Result<LogScaled> {
    pi_n_dim(bp, ts, ts.len() + 2)
}

/// [`pi_n`] with an explicit truncation dimension.
pub fn pi_n_dim(bp: &BoundaryParams, ts: &[f64], dim: usize) -> Result<LogScaled> {
    let mats = UswMatrices::new(bp, dim.max(1))?;
    let mut v = Scaled::unit(dim.max(1));
    let mut buf = Vec::new();
    for &t in ts {
        v.row_step(&mats.step(t), &mut buf);
    }
    Ok(LogScaled::scaled(v.v[0], v.ln_scale))
}

/// Normalizing constant `Z_n = Pi_n(1, ..., 1)`.
pub fn partition(bp: &BoundaryParams, n: usize) -> Result<LogScaled> {
    pi_n(bp, &vec![1.0; n])
}

/// `E[prod_i t_i^{tau_i}] = Pi_n(t) / Z_n`.
pub fn gen_fn(bp: &BoundaryParams, ts: &[f64]) -> Result<f64> {
    Ok(pi_n(bp, ts)?.ratio(partition(bp, ts.len())?))
}

/// Row prefixes `e_0 M^k` and column suffixes `M^k e_0`, `k = 0..n`.
struct Sweeps {
    prefix: Vec<Scaled>,
    suffix: Vec<Scaled>,
    d: Tridiag,
    step: Tridiag,
    z: LogScaled,
}

fn sweeps(bp: &BoundaryParams, n: usize) -> Result<Sweeps> {
    let dim = n + 2;
    let mats = UswMatrices::new(bp, dim)?;
    let step = mats.step(1.0);
    let mut buf = Vec::new();
    let mut prefix = vec![Scaled::unit(dim)];
    let mut suffix = vec![Scaled::unit(dim)];
    for k in 0..n {
        let mut p = prefix[k].clone();
        p.row_step(&step, &mut buf);
        prefix.push(p);
        let mut s = suffix[k].clone();
        s.col_step(&step, &mut buf);
        suffix.push(s);
    }
    let z = LogScaled::scaled(prefix[n].v[0], prefix[n].ln_scale);
    Ok(Sweeps { prefix, suffix, d: mats.d_scaled(), step, z })
}

/// Occupation probabilities `E[tau_i]`, `i = 1..=n`.
pub fn one_point(bp: &BoundaryParams, n: usize) -> Result<Vec<f64>> {
    let sw = sweeps(bp, n)?;
    let mut buf = Vec::new();
    Ok((1..=n)
        .map(|i| {
            let mut w = sw.prefix[i - 1].clone();
            buf.resize(w.v.len(), 0.0);
            sw.d.row_mul(&w.v, &mut buf);
            std::mem::swap(&mut w.v, &mut buf);
            w.dot(&sw.suffix[n - i]).ratio(sw.z)
        })
        .collect())
}

/// Matrix of `E[tau_i tau_j]` (0-based), with `E[tau_i]` on the diagonal.
pub fn two_point(bp: &BoundaryParams, n: usize) -> Result<Vec<Vec<f64>>> {
    let sw = sweeps(bp, n)?;
    let mut out = vec![vec![0.0; n]; n];
    let mut buf = Vec::new();
    for i in 1..=n {
        let mut w = sw.prefix[i - 1].clone();
        buf.resize(w.v.len(), 0.0);
        sw.d.row_mul(&w.v, &mut buf);
        std::mem::swap(&mut w.v, &mut buf);
        out[i - 1][i - 1] = w.dot(&sw.suffix[n - i]).ratio(sw.z);
        for j in i + 1..=n {
            let mut u = w.clone();
            u.row_step(&sw.d, &mut buf);
            let v = u.dot(&sw.suffix[n - j]).ratio(sw.z);
            out[i - 1][j - 1] = v;
            out[j - 1][i - 1] = v;
            w.row_step(&sw.step, &mut buf);
        }
    }
    Ok(out)
}

/// Mean and variance of the height `h_n(k) = tau_1 + ... + tau_k`,
/// from first and second derivatives of the generating function.
pub fn height_moments(bp: &BoundaryParams, n: usize, k: usize) -> Result<(f64, f64)> {
    let dim = n + 2;
    let mats = UswMatrices::new(bp, dim)?;
    let step = mats.step(1.0);
    let d = mats.d_scaled();
    let mut v0 = unit(dim);
    let mut v1 = vec![0.0; dim];
    let mut v2 = vec![0.0; dim];
    let (mut a, mut b, mut c, mut t) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
    for site in 0..n {
        step.row_mul(&v0, &mut a);
        step.row_mul(&v1, &mut b);
        step.row_mul(&v2, &mut c);
        if site < k {
            d.row_mul(&v1, &mut t);
            c.iter_mut().zip(&t).for_each(|(x, y)| *x += 2.0 * y);
            d.row_mul(&v0, &mut t);
            b.iter_mut().zip(&t).for_each(|(x, y)| *x += y);
        }
        let m = a.iter().chain(&b).chain(&c).fold(0.0f64, |acc, x| acc.max(x.abs()));
        for (dst, src) in [(&mut v0, &a), (&mut v1, &b), (&mut v2, &c)] {
            dst.iter_mut().zip(src.iter()).for_each(|(x, y)| *x = y / m);
        }
    }
    let mean = v1[0] / v0[0];
    let factorial2 = v2[0] / v0[0];
    Ok((mean, factorial2 + mean - mean * mean))
}

fn unit(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[0] = 1.0;
    v
}

/// Covariance matrix of heights at the given site counts, from [`two_point`].
pub fn height_covariance(bp: &BoundaryParams, n: usize, ks: &[usize]) -> Result<Vec<Vec<f64>>> {
    let tp = two_point(bp, n)?;
    let cov_site = |i: usize, j: usize| {
        if i == j {
            tp[i][i] - tp[i][i] * tp[i][i]
        } else {
            tp[i][j] - tp[i][i] * tp[j][j]
        }
    };
    Ok(ks
        .iter()
        .map(|&ka| {
            ks.iter()
                .map(|&kb| {
                    let mut acc = 0.0;
                    for i in 0..ka {
                        for j in 0..kb {
                            acc += cov_site(i, j);
                        }
                    }
                    acc
                })
                .collect()
        })
        .collect())
}
