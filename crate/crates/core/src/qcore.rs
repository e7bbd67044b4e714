//! q-series primitives shared by every other module.
//!
//! Provides:
//! - [`QReal`]: validated base `q` in `[0, 1)`
//! - [`TruncationSpec`]: stopping rule for infinite products
//! - finite and infinite q-Pochhammer symbols over `Complex64`
//! - [`phi43`]: balanced-form `4phi3` series, terminating or convergent
//! - [`LogScaled`]: sign and log-magnitude pair for products that overflow
//! - grid membership tests against `q^{-l}` and `q^l`
//! - [`compensated_sum`]: Neumaier summation in caller order

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Base of the q-series, `0 <= q < 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, serde::Serialize)]
pub struct QReal(f64);

impl QReal {
    pub fn new(q: f64) -> Result<Self> {
        if q.is_finite() && (0.0..1.0).contains(&q) {
            Ok(Self(q))
        } else {
            Err(Error::InvalidQ(q))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `q^k` for signed `k`, with `0^0 = 1`.
    pub fn pow(self, k: i32) -> f64 {
        self.0.powi(k)
    }
}

/// Stopping rule for infinite products: stop at the first factor whose
/// perturbation `|z| q^j` drops below `eps`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationSpec {
    pub eps: f64,
    pub max_terms: usize,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { eps: 1e-15, max_terms: 10_000 }
    }
}

/// Finite product `(z;q)_n = prod_{j<n} (1 - z q^j)`.
pub fn qpoch_finite(z: Complex64, q: QReal, n: usize) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut zq = z;
    for _ in 0..n {
        acc *= 1.0 - zq;
        zq *= q.get();
    }
    acc
}

/// Real-argument finite product.
pub fn qpoch_finite_re(z: f64, q: QReal, n: usize) -> f64 {
    let mut acc = 1.0;
    let mut zq = z;
    for _ in 0..n {
        acc *= 1.0 - zq;
        zq *= q.get();
    }
    acc
}

/// Infinite product `(z;q)_inf`, truncated per `trunc`.
pub fn qpoch_inf(z: Complex64, q: QReal, trunc: &TruncationSpec) -> Result<Complex64> {
    let mut acc = Complex64::new(1.0, 0.0);
    let mut zq = z;
    let mut j = 0;
    while zq.norm() >= trunc.eps {
        if j >= trunc.max_terms {
            return Err(Error::TruncationBudgetExceeded { max_terms: trunc.max_terms });
        }
        acc *= 1.0 - zq;
        zq *= q.get();
        j += 1;
    }
    Ok(acc)
}

/// Real-argument infinite product.
pub fn qpoch_inf_re(z: f64, q: QReal, trunc: &TruncationSpec) -> Result<f64> {
    let mut acc = 1.0;
    let mut zq = z;
    let mut j = 0;
    while zq.abs() >= trunc.eps {
        if j >= trunc.max_terms {
            return Err(Error::TruncationBudgetExceeded { max_terms: trunc.max_terms });
        }
        acc *= 1.0 - zq;
        zq *= q.get();
        j += 1;
    }
    Ok(acc)
}

/// Product of several infinite symbols `(z_1, ..., z_k; q)_inf`.
pub fn qpoch_inf_many(zs: &[Complex64], q: QReal, trunc: &TruncationSpec) -> Result<Complex64> {
    zs.iter().try_fold(Complex64::new(1.0, 0.0), |acc, &z| Ok(acc * qpoch_inf(z, q, trunc)?))
}

/// Product of several finite symbols `(z_1, ..., z_k; q)_n`.
pub fn qpoch_finite_many(zs: &[Complex64], q: QReal, n: usize) -> Complex64 {
    zs.iter().fold(Complex64::new(1.0, 0.0), |acc, &z| acc * qpoch_finite(z, q, n))
}

/// Project a value that is real in exact arithmetic onto the reals.
pub fn realize(v: Complex64) -> Result<f64> {
    if v.im.abs() <= 1e-10 * (1.0 + v.norm()) {
        Ok(v.re)
    } else {
        Err(Error::NotReal { real: v.re, imag: v.im })
    }
}

/// If `z` is within relative `tol` of `q^{-l}` for some `l >= 0`, return `l`.
pub fn neg_power_index(z: Complex64, q: QReal, tol: f64) -> Option<u32> {
    let near = |g: f64| (z - g).norm() <= tol * g.abs().max(1.0);
    if q.get() == 0.0 {
        return near(1.0).then_some(0);
    }
    let m = z.norm();
    if m < 0.5 || !m.is_finite() {
        return None;
    }
    let guess = (m.ln() / -q.get().ln()).round().max(0.0) as i64;
    (guess.saturating_sub(1)..=guess + 1)
        .filter(|&l| (0..4000).contains(&l))
        .find(|&l| near(q.pow(-(l as i32))))
        .map(|l| l as u32)
}

/// If `z` is within relative `tol` of `q^l` for some integer `l`, return `l`.
/// For `q = 0` the only grid value reachable by nonzero `z` is `1`.
pub fn int_power_index(z: Complex64, q: QReal, tol: f64) -> Option<i32> {
    let near = |g: f64| (z - g).norm() <= tol * g.abs().max(f64::MIN_POSITIVE);
    if q.get() == 0.0 {
        return near(1.0).then_some(0);
    }
    let m = z.norm();
    if m == 0.0 || !m.is_finite() {
        return None;
    }
    let guess = (m.ln() / q.get().ln()).round() as i64;
    (guess - 1..=guess + 1)
        .filter(|l| l.abs() < 4000)
        .find(|&l| near(q.pow(l as i32)))
        .map(|l| l as i32)
}

/// Neumaier-compensated sum of the terms in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Balanced `4phi3` series
/// `sum_k (a1,a2,a3,a4;q)_k / (b1,b2,b3,q;q)_k z^k`.
///
/// A numerator equal to `q^{-m}` (within `1e-10`) terminates the sum at `k = m`.
/// Otherwise the series must satisfy `|z| < 1` and is summed until the terms
/// fall below `trunc.eps` relative to the partial sum.
pub fn phi43(
    num: [Complex64; 4],
    den: [Complex64; 3],
    q: QReal,
    z: Complex64,
    trunc: &TruncationSpec,
) -> Result<Complex64> {
    let stop = num.iter().filter_map(|&a| neg_power_index(a, q, 1e-10)).min();
    let limit = match stop {
        Some(m) => m as usize,
        None => {
            if z.norm() >= 1.0 {
                return Err(Error::NonTerminatingDivergent { z_abs: z.norm() });
            }
            trunc.max_terms
        }
    };
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    let mut qk = 1.0;
    let mut quiet = 0;
    for k in 0..limit {
        let mut ratio = z / (1.0 - qk * q.get());
        for a in num {
            ratio *= 1.0 - a * qk;
        }
        for b in den {
            let f = 1.0 - b * qk;
            if f.norm() < 1e-14 {
                return Err(Error::DenominatorPole { index: k + 1 });
            }
            ratio /= f;
        }
        term *= ratio;
        sum += term;
        qk *= q.get();
        if stop.is_none() {
            if term.norm() <= trunc.eps * sum.norm().max(f64::MIN_POSITIVE) {
                quiet += 1;
                if quiet >= 3 {
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
        }
    }
    if stop.is_none() {
        return Err(Error::NonTerminatingDivergent { z_abs: z.norm() });
    }
    Ok(sum)
}

/// Real number stored as a sign and natural log of the magnitude.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LogScaled {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogScaled {
    pub const ZERO: Self = Self { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { sign: x.signum(), ln_abs: x.abs().ln() }
        }
    }

    /// `value * exp(ln_scale)`.
    pub fn scaled(value: f64, ln_scale: f64) -> Self {
        let mut r = Self::from_f64(value);
        r.ln_abs += ln_scale;
        r
    }

    pub fn to_f64(self) -> f64 {
        self.sign * self.ln_abs.exp()
    }

    /// `self / other` as a plain float.
    pub fn ratio(self, other: Self) -> f64 {
        self.sign * other.sign * (self.ln_abs - other.ln_abs).exp()
    }
}

impl std::ops::Mul for LogScaled {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0.0 || rhs.sign == 0.0 {
            return Self::ZERO;
        }
        Self { sign: self.sign * rhs.sign, ln_abs: self.ln_abs + rhs.ln_abs }
    }
}
