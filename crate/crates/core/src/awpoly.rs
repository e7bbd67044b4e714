//! Askey-Wilson polynomials through their three-term recurrence.
//!
//! `w_m(x; a, b, c, d | q)` are generated by
//! `A_m w_{m+1} + B_m w_m + C_m w_{m-1} = 2x w_m` with `w_0 = 1`, `w_{-1} = 0`.
//! The normalized family `w_m / (ab;q)_m` is what the projection formulas use,
//! and [`connection_coeffs`] re-expands a normalized polynomial with a new
//! `(c, d)` pair in the basis belonging to the old pair.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{phi43, qpoch_finite, realize, QReal, TruncationSpec};

const DEN_TOL: f64 = 1e-13;

/// Askey-Wilson parameters: `a, b` real, `c, d` real or a conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwParams {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
    pub q: QReal,
}

impl AwParams {
    pub fn new(a: f64, b: f64, c: Complex64, d: Complex64, q: QReal) -> Result<Self> {
        let scale = 1.0 + c.norm().max(d.norm());
        let (c, d) = if c.im.abs() <= 1e-12 * scale && d.im.abs() <= 1e-12 * scale {
            (Complex64::new(c.re, 0.0), Complex64::new(d.re, 0.0))
        } else if (c - d.conj()).norm() <= 1e-12 * scale {
            (c, c.conj())
        } else {
            return Err(Error::InvalidParams(format!(
                "c = {c}, d = {d} must be real or a conjugate pair"
            )));
        };
        if ![a, b, c.re, c.im].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        Ok(Self { a: Complex64::new(a, 0.0), b: Complex64::new(b, 0.0), c, d, q })
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64, q: QReal) -> Result<Self> {
        Self::new(a, b, Complex64::new(c, 0.0), Complex64::new(d, 0.0), q)
    }

    pub fn params(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_conjugate_pair(&self) -> bool {
        self.c.im != 0.0
    }

    /// Elementary symmetric functions `e1..e4` of `(a, b, c, d)`.
    pub fn elementary(&self) -> [Complex64; 4] {
        let [a, b, c, d] = self.params();
        [
            a + b + c + d,
            a * b + a * c + a * d + b * c + b * d + c * d,
            a * b * c + a * b * d + a * c * d + b * c * d,
            a * b * c * d,
        ]
    }

    pub fn abcd(&self) -> Complex64 {
        self.a * self.b * self.c * self.d
    }

    /// The six pairwise products `ab, ac, ad, bc, bd, cd`.
    pub fn pair_products(&self) -> [Complex64; 6] {
        let [a, b, c, d] = self.params();
        [a * b, a * c, a * d, b * c, b * d, c * d]
    }
}

/// Coefficients `(A_m, B_m, C_m)` of the recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recurrence {
    pub up: Complex64,
    pub diag: Complex64,
    pub down: Complex64,
}

fn checked(den: Complex64, degree: usize) -> Result<Complex64> {
    if den.norm() < DEN_TOL {
        Err(Error::RecurrenceDenominatorZero { degree })
    } else {
        Ok(den)
    }
}

pub fn recurrence_coeffs(p: &AwParams, m: usize) -> Result<Recurrence> {
    let [e1, _, e3, e4] = p.elementary();
    let one = Complex64::new(1.0, 0.0);
    let q = p.q.get();
    if m == 0 {
        // the q^{-1} factors cancel in closed form at degree 0
        let den = checked(one - e4, 0)?;
        return Ok(Recurrence { up: one / den, diag: (e1 - e3) / den, down: Complex64::new(0.0, 0.0) });
    }
    let mi = m as i32;
    let qm1 = p.q.pow(mi - 1);
    let q2m2 = p.q.pow(2 * mi - 2);
    let q2m1 = p.q.pow(2 * mi - 1);
    let q2m = p.q.pow(2 * mi);
    let d_up = checked((one - q2m1 * e4) * (one - q2m * e4), m)?;
    let d_diag = checked((one - q2m2 * e4) * (one - q2m * e4), m)?;
    let d_down = checked((one - q2m2 * e4) * (one - q2m1 * e4), m)?;
    let up = (one - qm1 * e4) / d_up;
    let bracket = (one + q2m1 * e4) * (q * e1 + e3) - qm1 * (1.0 + q) * (e4 * e1 + q * e3);
    let diag = qm1 * bracket / d_diag;
    let pairs: Complex64 = p.pair_products().iter().map(|&x| one - qm1 * x).product();
    let down = (1.0 - p.q.pow(mi)) * pairs / d_down;
    Ok(Recurrence { up, diag, down })
}

/// `w_0(x), ..., w_mmax(x)` in complex arithmetic.
pub fn aw_eval_all(x: f64, mmax: usize, p: &AwParams) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(mmax + 1);
    out.push(Complex64::new(1.0, 0.0));
    let mut prev = Complex64::new(0.0, 0.0);
    for m in 0..mmax {
        let r = recurrence_coeffs(p, m)?;
        if r.up.norm() < DEN_TOL {
            return Err(Error::RecurrenceDenominatorZero { degree: m });
        }
        let cur = out[m];
        let next = ((2.0 * x - r.diag) * cur - r.down * prev) / r.up;
        prev = cur;
        out.push(next);
    }
    Ok(out)
}

/// `w_m(x; a, b, c, d | q)`.
pub fn aw_eval(x: f64, m: usize, p: &AwParams) -> Result<f64> {
    realize(aw_eval_all(x, m, p)?[m])
}

/// Normalized values `w_r(x) / (ab;q)_r` for `r = 0..=mmax`.
pub fn aw_norm_eval_all(x: f64, mmax: usize, p: &AwParams) -> Result<Vec<Complex64>> {
    let raw = aw_eval_all(x, mmax, p)?;
    raw.into_iter()
        .enumerate()
        .map(|(r, w)| {
            let norm = qpoch_finite(p.a * p.b, p.q, r);
            if norm.norm() < DEN_TOL {
                Err(Error::NormalizerZero { degree: r })
            } else {
                Ok(w / norm)
            }
        })
        .collect()
}

/// `w_m(x) / (ab;q)_m`.
pub fn aw_norm_eval(x: f64, m: usize, p: &AwParams) -> Result<f64> {
    realize(aw_norm_eval_all(x, m, p)?[m])
}

/// Boundary parameters seen at time `t`: `(A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`.
pub fn time_params(t: f64, abcd: [f64; 4], q: QReal) -> Result<AwParams> {
    let r = t.sqrt();
    AwParams::real(abcd[0] * r, abcd[1] * r, abcd[2] / r, abcd[3] / r, q)
}

/// Projection polynomial `t^{m/2} wbar_m(x; A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`.
pub fn proj_poly_eval(x: f64, m: usize, t: f64, abcd: [f64; 4], q: QReal) -> Result<f64> {
    let p = time_params(t, abcd, q)?;
    Ok(t.powf(m as f64 / 2.0) * aw_norm_eval(x, m, &p)?)
}

/// The pair `sqrt(s/t) (x +- sqrt(x^2 - 1))`, a conjugate pair for `|x| < 1`.
pub fn kernel_pair(x: f64, s: f64, t: f64) -> (Complex64, Complex64) {
    let root = Complex64::new(x * x - 1.0, 0.0).sqrt();
    let scale = (s / t).sqrt();
    let c = scale * (x + root);
    let d = scale * (x - root);
    (c, d)
}

/// `Q_m(y; x, t, s) = t^{m/2} wbar_m(y; A sqrt t, B sqrt t, c~, d~)` with
/// `(c~, d~)` from [`kernel_pair`].
pub fn transition_poly_eval(y: f64, m: usize, x: f64, t: f64, s: f64, abcd: [f64; 4], q: QReal) -> Result<f64> {
    let r = t.sqrt();
    let (c, d) = kernel_pair(x, s, t);
    let p = AwParams::new(abcd[0] * r, abcd[1] * r, c, d, q)?;
    Ok(t.powf(m as f64 / 2.0) * aw_norm_eval(y, m, &p)?)
}

/// Coefficients `cbar_{r,m}`, `r = 0..=m`, with
/// `wbar_m(y; a, b, c~, d~) = sum_r cbar_{r,m} wbar_r(y; a, b, c, d)`,
/// from the closed `4phi3` form.
pub fn connection_coeffs(
    m: usize,
    p: &AwParams,
    c_new: Complex64,
    d_new: Complex64,
    trunc: &TruncationSpec,
) -> Result<Vec<Complex64>> {
    if p.a.norm() == 0.0 {
        return Err(Error::RequiresNonzeroA);
    }
    if p.q.get() == 0.0 && m > 0 {
        return Err(Error::RequiresPositiveQ);
    }
    let q = p.q;
    let one = Complex64::new(1.0, 0.0);
    let (a, b) = (p.a, p.b);
    let abcd = p.abcd();
    let ab_new = a * b * c_new * d_new;
    let mi = m as i32;
    (0..=m)
        .map(|r| {
            let ri = r as i32;
            let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
            let qpow = q.pow(ri * (ri + 1) / 2);
            let num_r = qpoch_finite(Complex64::new(q.pow(-mi), 0.0), q, r)
                * qpoch_finite(q.pow(mi - 1) * ab_new, q, r);
            // (a c~, a d~)_m / (a c~, a d~)_r without forming either product
            let tail: Complex64 = (r..m)
                .map(|j| (one - a * c_new * q.pow(j as i32)) * (one - a * d_new * q.pow(j as i32)))
                .product();
            let shifted = if r == 0 { one } else { qpoch_finite(q.pow(ri - 1) * abcd, q, r) };
            let den_r = a.powi(mi - ri) * qpoch_finite(Complex64::new(q.get(), 0.0), q, r) * shifted;
            if den_r.norm() < DEN_TOL {
                return Err(Error::RecurrenceDenominatorZero { degree: r });
            }
            let qr = q.pow(ri);
            let series = phi43(
                [
                    Complex64::new(q.pow(ri - mi), 0.0),
                    ab_new * q.pow(mi + ri - 1),
                    a * p.c * qr,
                    a * p.d * qr,
                ],
                [abcd * q.pow(2 * ri), a * c_new * qr, a * d_new * qr],
                q,
                Complex64::new(q.get(), 0.0),
                trunc,
            )?;
            Ok(sign * qpow * num_r * tail / den_r * series)
        })
        .collect()
}

/// Same coefficients as [`connection_coeffs`], obtained by solving the
/// triangular change of basis on `m + 1` Chebyshev points.
pub fn connection_coeffs_solve(
    m: usize,
    p: &AwParams,
    c_new: Complex64,
    d_new: Complex64,
) -> Result<Vec<Complex64>> {
    let target = AwParams { c: c_new, d: d_new, ..*p };
    let n = m + 1;
    let mut mat = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = DVector::<Complex64>::zeros(n);
    for k in 0..n {
        let x = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
        let basis = aw_norm_eval_all(x, m, p)?;
        for (r, v) in basis.into_iter().enumerate() {
            mat[(k, r)] = v;
        }
        rhs[k] = aw_norm_eval_all(x, m, &target)?[m];
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or(Error::RecurrenceDenominatorZero { degree: m })?;
    Ok(sol.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: f64) -> QReal {
        QReal::new(v).unwrap()
    }

    #[test]
    fn zero_parameters_give_chebyshev_like_recurrence() {
        let p = AwParams::real(0.0, 0.0, 0.0, 0.0, q(0.3)).unwrap();
        let r0 = recurrence_coeffs(&p, 0).unwrap();
        assert_eq!(r0.up.re, 1.0);
        assert_eq!(r0.diag.re, 0.0);
        let r1 = recurrence_coeffs(&p, 1).unwrap();
        assert!((r1.up.re - 1.0).abs() < 1e-15);
        assert!(r1.diag.norm() < 1e-15);
        assert!((r1.down.re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn q_zero_all_zero_gives_chebyshev_second_kind() {
        // with q = 0 and zero parameters, w_m = U_m
        let p = AwParams::real(0.0, 0.0, 0.0, 0.0, q(0.0)).unwrap();
        for &x in &[-0.7, 0.1, 0.95] {
            let th = f64::acos(x);
            for m in 0..6 {
                let u = ((m as f64 + 1.0) * th).sin() / th.sin();
                assert!((aw_eval(x, m, &p).unwrap() - u).abs() < 1e-12);
            }
        }
    }

    /// Independent evaluation of the standard basic-hypergeometric form
    /// `a^{-m} (ab, ac, ad)_m 4phi3(q^{-m}, abcd q^{m-1}, a e^{i th}, a e^{-i th}; ab, ac, ad; q, q)`.
    fn aw_hypergeometric(x: f64, m: usize, a: f64, b: f64, c: f64, d: f64, qq: f64) -> f64 {
        let qr = q(qq);
        let e = Complex64::new(x, (1.0 - x * x).sqrt());
        let cc = |v: f64| Complex64::new(v, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..=m {
            sum += term;
            let qk = qq.powi(k as i32);
            let num = (1.0 - qq.powi(k as i32 - m as i32))
                * (1.0 - a * b * c * d * qq.powi(m as i32 - 1) * qk)
                * (cc(1.0) - a * e * qk)
                * (cc(1.0) - a * e.conj() * qk);
            let den = (1.0 - a * b * qk) * (1.0 - a * c * qk) * (1.0 - a * d * qk) * (1.0 - qk * qq);
            term *= num / den * qq;
        }
        let pre = qpoch_finite(cc(a * b), qr, m) * qpoch_finite(cc(a * c), qr, m) * qpoch_finite(cc(a * d), qr, m);
        (pre * sum).re / a.powi(m as i32)
    }

    #[test]
    fn recurrence_matches_hypergeometric_form() {
        let (a, b, c, d, qq) = (0.6, -0.3, 0.45, 0.2, 0.4);
        let p = AwParams::real(a, b, c, d, q(qq)).unwrap();
        for &x in &[-0.9, -0.2, 0.35, 0.8] {
            for m in 0..7 {
                let lhs = aw_eval(x, m, &p).unwrap();
                let rhs = aw_hypergeometric(x, m, a, b, c, d, qq);
                assert!((lhs - rhs).abs() < 1e-7 * (1.0 + rhs.abs()), "m={m} x={x}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn frozen_high_precision_value() {
        // 50-digit evaluation of the hypergeometric form
        let p = AwParams::real(0.6, -0.3, 0.45, 0.2, q(0.4)).unwrap();
        let v = aw_eval(-0.2, 6, &p).unwrap();
        assert!((v - 1.074_969_540_669_344).abs() < 1e-13, "{v}");
    }

    #[test]
    fn symmetric_in_parameters() {
        let qr = q(0.55);
        let p1 = AwParams::real(0.7, 0.2, -0.4, 1.3, qr).unwrap();
        let p2 = AwParams::real(1.3, -0.4, 0.2, 0.7, qr).unwrap();
        for m in 0..6 {
            let v1 = aw_eval(0.3, m, &p1).unwrap();
            let v2 = aw_eval(0.3, m, &p2).unwrap();
            assert!((v1 - v2).abs() < 1e-11 * (1.0 + v1.abs()));
        }
    }

    #[test]
    fn conjugate_pair_is_real() {
        let c = Complex64::new(0.3, 0.5);
        let p = AwParams::new(0.5, 0.1, c, c.conj(), q(0.5)).unwrap();
        assert!(p.is_conjugate_pair());
        for m in 0..8 {
            assert!(aw_eval(0.4, m, &p).is_ok());
        }
        assert!(AwParams::new(0.5, 0.1, c, c, q(0.5)).is_err());
    }

    #[test]
    fn singular_abcd_is_reported() {
        let p = AwParams::real(2.0, 1.0, 1.0, 1.0, q(0.5)).unwrap();
        assert!(matches!(recurrence_coeffs(&p, 1), Err(Error::RecurrenceDenominatorZero { .. })));
    }

    #[test]
    fn transition_polys_vanish_on_the_diagonal() {
        let qr = q(0.5);
        let abcd = [1.5, -0.2, 0.6, -0.1];
        for &x in &[-0.6, 0.25, 0.9, 1.4] {
            for m in 1..6 {
                let v = transition_poly_eval(x, m, x, 0.9, 0.9, abcd, qr).unwrap();
                assert!(v.abs() < 1e-12, "m={m} x={x}: {v}");
            }
        }
    }

    #[test]
    fn connection_closed_form_matches_solve() {
        let qr = q(0.5);
        let p = AwParams::real(0.8, -0.3, 0.6, 0.1, qr).unwrap();
        let tr = TruncationSpec::default();
        let (c_new, d_new) = kernel_pair(0.3, 0.8, 0.9);
        for m in 0..6 {
            let closed = connection_coeffs(m, &p, c_new, d_new, &tr).unwrap();
            let solved = connection_coeffs_solve(m, &p, c_new, d_new).unwrap();
            for (u, v) in closed.iter().zip(&solved) {
                assert!((u - v).norm() < 1e-9 * (1.0 + v.norm()), "m={m}: {u} vs {v}");
            }
            // top coefficient is the ratio of leading terms
            let top = qpoch_finite(p.a * p.b * c_new * d_new * 0.5f64.powi(m as i32 - 1), qr, m)
                / qpoch_finite(p.abcd() * 0.5f64.powi(m as i32 - 1), qr, m);
            assert!((closed[m] - top).norm() < 1e-12);
        }
    }

    #[test]
    fn connection_expansion_reconstructs_polynomial() {
        let qr = q(0.35);
        let p = AwParams::real(1.6, -0.2, 0.5, 0.3, qr).unwrap();
        let (c_new, d_new) = (Complex64::new(0.9, 0.0), Complex64::new(-0.4, 0.0));
        let target = AwParams { c: c_new, d: d_new, ..p };
        let m = 5;
        let coeffs = connection_coeffs(m, &p, c_new, d_new, &TruncationSpec::default()).unwrap();
        for &y in &[-0.8, 0.0, 0.6, 1.3] {
            let basis = aw_norm_eval_all(y, m, &p).unwrap();
            let lhs: Complex64 = coeffs.iter().zip(&basis).map(|(c, b)| c * b).sum();
            let rhs = aw_norm_eval_all(y, m, &target).unwrap()[m];
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn connection_errors() {
        let tr = TruncationSpec::default();
        let z = Complex64::new(0.2, 0.0);
        let p = AwParams::real(0.0, 0.1, 0.2, 0.3, q(0.5)).unwrap();
        assert_eq!(connection_coeffs(2, &p, z, z, &tr), Err(Error::RequiresNonzeroA));
        let p = AwParams::real(0.5, 0.1, 0.2, 0.3, q(0.0)).unwrap();
        assert_eq!(connection_coeffs(2, &p, z, z, &tr), Err(Error::RequiresPositiveQ));
    }
}
