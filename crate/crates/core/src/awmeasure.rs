//! Signed Askey-Wilson measures.
//!
//! The measure has an absolutely continuous part on `(-1, 1)` and finitely many
//! atoms outside `[-1, 1]`, one for every real parameter `e` and level `j` with
//! `|e q^j| > 1`. The continuous part is discretized by Gauss-Legendre nodes in
//! `theta` after the substitution `x = cos theta`, which removes the square-root
//! endpoint behavior of the density.

use num_complex::Complex64;
use serde::Serialize;

use crate::awpoly::AwParams;
use crate::error::{Error, Result};
use crate::qcore::{
    compensated_sum, int_power_index, neg_power_index, qpoch_finite, qpoch_inf, qpoch_inf_many,
    realize, QReal, TruncationSpec,
};
use crate::quad::{graded_theta_rule, GaussLegendre, GRADING_WIDTH};

pub const DEFAULT_NODES: usize = 200;
pub const DEFAULT_TOL_GRID: f64 = 1e-9;

/// Which of the four parameters generated an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Slot {
    A,
    B,
    C,
    D,
}

impl Slot {
    pub const ALL: [Slot; 4] = [Slot::A, Slot::B, Slot::C, Slot::D];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
    pub generator: Slot,
    pub level: u32,
}

/// Quadrature node: `x = cos theta`, the `dx` weight `w`, and the density `f(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadNode {
    pub theta: f64,
    pub x: f64,
    pub w: f64,
    pub f: f64,
}

impl QuadNode {
    pub fn mass(&self) -> f64 {
        self.w * self.f
    }
}

/// Which defining conditions of the admissible region hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    /// No pairwise product or square lies on `q^{-l}`.
    pub pairs_off_grid: bool,
    /// `abcd` is off `q^{-l}`.
    pub abcd_off_grid: bool,
    /// Ratios of distinct parameters of modulus at least one are off `q^Z`.
    pub large_ratios_off_grid: bool,
    /// Reality pattern and `ab < 1`, `cd < 1`.
    pub reality_ok: bool,
    pub notes: Vec<String>,
}

impl RegionReport {
    /// Every condition, including the pairwise one, holds.
    pub fn in_omega_tilde(&self) -> bool {
        self.pairs_off_grid && self.in_omega()
    }

    /// Membership in the closure where atoms may carry zero mass.
    pub fn in_omega(&self) -> bool {
        self.abcd_off_grid && self.large_ratios_off_grid && self.reality_ok
    }
}

pub fn region_check(p: &AwParams, tol: f64) -> RegionReport {
    let q = p.q;
    let ps = p.params();
    let names = ["a", "b", "c", "d"];
    let mut notes = Vec::new();

    let mut pairs_off_grid = true;
    for i in 0..4 {
        for j in i..4 {
            let v = ps[i] * ps[j];
            if let Some(l) = neg_power_index(v, q, tol) {
                pairs_off_grid = false;
                notes.push(format!("{}{} = q^-{l}", names[i], names[j]));
            }
        }
    }

    let abcd_off_grid = match neg_power_index(p.abcd(), q, tol) {
        Some(l) => {
            notes.push(format!("abcd = q^-{l}"));
            false
        }
        None => true,
    };

    let mut large_ratios_off_grid = true;
    for i in 0..4 {
        for j in i + 1..4 {
            if ps[i].norm() >= 1.0 && ps[j].norm() >= 1.0 {
                if let Some(l) = int_power_index(ps[i] / ps[j], q, tol) {
                    large_ratios_off_grid = false;
                    notes.push(format!("{}/{} = q^{l}", names[i], names[j]));
                }
            }
        }
    }

    let mut reality_ok = true;
    if p.a.im != 0.0 || p.b.im != 0.0 {
        reality_ok = false;
        notes.push("a, b must be real".into());
    }
    let ab = (p.a * p.b).re;
    let cd = (p.c * p.d).re;
    if ab >= 1.0 {
        reality_ok = false;
        notes.push(format!("ab = {ab} >= 1"));
    }
    if cd >= 1.0 {
        reality_ok = false;
        notes.push(format!("cd = {cd} >= 1"));
    }

    RegionReport { pairs_off_grid, abcd_off_grid, large_ratios_off_grid, reality_ok, notes }
}

/// Parameters rotated so that `slot` comes first.
fn rotated(p: &AwParams, slot: Slot) -> (f64, [Complex64; 3]) {
    let ps = p.params();
    let i = slot.index();
    let others: Vec<Complex64> = (0..4).filter(|&k| k != i).map(|k| ps[k]).collect();
    (ps[i].re, [others[0], others[1], others[2]])
}

fn atom_mass(p: &AwParams, slot: Slot, level: u32, trunc: &TruncationSpec) -> Result<f64> {
    let q = p.q;
    let (e, [f, g, h]) = rotated(p, slot);
    let ec = Complex64::new(e, 0.0);
    let base = qpoch_inf_many(&[Complex64::new(e.powi(-2), 0.0), f * g, f * h, g * h], q, trunc)?
        / qpoch_inf_many(&[f / ec, g / ec, h / ec, ec * f * g * h], q, trunc)?;
    if level == 0 {
        return realize(base);
    }
    let j = level as usize;
    let ji = level as i32;
    let e2 = e * e;
    // (e^2;q)_j / (1 - e^2) with the vanishing-prone first factor cancelled
    let head = qpoch_finite(Complex64::new(e2 * q.get(), 0.0), q, j - 1);
    let num = q.pow(ji)
        * (1.0 - e2 * q.pow(2 * ji))
        * head
        * qpoch_finite(ec * f, q, j)
        * qpoch_finite(ec * g, q, j)
        * qpoch_finite(ec * h, q, j);
    let mut den = qpoch_finite(Complex64::new(q.get(), 0.0), q, j) * e.powi(ji);
    for l in 1..=ji {
        let eq = ec * q.pow(l);
        den *= (f - eq) * (g - eq) * (h - eq);
    }
    if den.norm() == 0.0 {
        return Err(Error::OutsideOmega(format!("atom mass denominator vanishes at level {level}")));
    }
    realize(base * num / den)
}

/// Atoms of the measure, sorted by position descending.
pub fn atoms(p: &AwParams, trunc: &TruncationSpec) -> Result<Vec<Atom>> {
    let q = p.q.get();
    let mut out = Vec::new();
    for slot in Slot::ALL {
        let e = p.params()[slot.index()];
        if e.im != 0.0 || e.re.abs() <= 1.0 {
            continue;
        }
        let mut level = 0u32;
        let mut eq = e.re;
        while eq.abs() > 1.0 + 1e-14 {
            let mass = atom_mass(p, slot, level, trunc)?;
            out.push(Atom { position: 0.5 * (eq + 1.0 / eq), mass, generator: slot, level });
            if q == 0.0 {
                break;
            }
            level += 1;
            eq *= q;
        }
    }
    out.sort_by(|x, y| y.position.total_cmp(&x.position));
    Ok(out)
}

/// Density of the absolutely continuous part, with the `x`-independent
/// prefactor evaluated once.
#[derive(Debug, Clone)]
pub struct Density {
    params: AwParams,
    prefactor: f64,
    trunc: TruncationSpec,
}

impl Density {
    pub fn new(p: &AwParams, trunc: &TruncationSpec) -> Result<Self> {
        let q = p.q;
        let mut zs = vec![Complex64::new(q.get(), 0.0)];
        zs.extend(p.pair_products());
        let num = realize(qpoch_inf_many(&zs, q, trunc)?)?;
        let den = realize(qpoch_inf(p.abcd(), q, trunc)?)?;
        if den == 0.0 {
            return Err(Error::OutsideOmega("abcd on q^-l".into()));
        }
        Ok(Self { params: *p, prefactor: num / (2.0 * std::f64::consts::PI * den), trunc: *trunc })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if x.abs() >= 1.0 {
            return Ok(0.0);
        }
        self.eval_theta(x.acos())
    }

    /// Density at `x = cos theta`, `theta` in `(0, pi)`.
    pub fn eval_theta(&self, theta: f64) -> Result<f64> {
        if self.prefactor == 0.0 || !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Ok(0.0);
        }
        let p = &self.params;
        let q = p.q;
        let (sin, cos) = theta.sin_cos();
        let half = TrigHalf::new(theta);
        let cos2t = cos * cos - sin * sin;
        let mut theta_factor = 1.0;
        let mut qj = q.get();
        let mut j = 1;
        while qj >= self.trunc.eps {
            if j > self.trunc.max_terms {
                return Err(Error::TruncationBudgetExceeded { max_terms: self.trunc.max_terms });
            }
            theta_factor *= 1.0 - 2.0 * qj * cos2t + qj * qj;
            qj *= q.get();
            j += 1;
        }
        let eith = Complex64::new(cos, sin);
        let mut den = 1.0;
        for e in p.params() {
            den *= if e.im == 0.0 {
                pair_modulus_real(e.re, &half, q, &self.trunc)?
            } else {
                qpoch_inf(e * eith, q, &self.trunc)?.norm_sqr()
            };
        }
        Ok(self.prefactor * theta_factor * 4.0 * sin / den)
    }
}

/// `1 - cos theta` and `1 + cos theta` without cancellation.
struct TrigHalf {
    one_minus: f64,
    one_plus: f64,
}

impl TrigHalf {
    fn new(theta: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { one_minus: 2.0 * s * s, one_plus: 2.0 * c * c }
    }
}

/// `|(e e^{i theta}; q)_inf|^2` for real `e`.
fn pair_modulus_real(e: f64, half: &TrigHalf, q: QReal, trunc: &TruncationSpec) -> Result<f64> {
    let mut acc = 1.0;
    let mut eq = e;
    let mut j = 0;
    while eq.abs() >= trunc.eps {
        if j >= trunc.max_terms {
            return Err(Error::TruncationBudgetExceeded { max_terms: trunc.max_terms });
        }
        acc *= if eq >= 0.0 {
            (1.0 - eq) * (1.0 - eq) + 2.0 * eq * half.one_minus
        } else {
            (1.0 + eq) * (1.0 + eq) - 2.0 * eq * half.one_plus
        };
        eq *= q.get();
        j += 1;
    }
    Ok(acc)
}

pub fn density_at(p: &AwParams, x: f64, trunc: &TruncationSpec) -> Result<f64> {
    Density::new(p, trunc)?.eval(x)
}

/// Serializable view of the parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamsDump {
    pub a: f64,
    pub b: f64,
    pub c: [f64; 2],
    pub d: [f64; 2],
    pub q: f64,
}

impl From<&AwParams> for ParamsDump {
    fn from(p: &AwParams) -> Self {
        Self { a: p.a.re, b: p.b.re, c: [p.c.re, p.c.im], d: [p.d.re, p.d.im], q: p.q.get() }
    }
}

/// Discretized signed measure: atoms (position descending) and quadrature
/// nodes (ascending in `x`).
#[derive(Debug, Clone, Serialize)]
pub struct SignedMeasure {
    pub params: ParamsDump,
    pub atoms: Vec<Atom>,
    pub nodes: Vec<QuadNode>,
    pub total_mass: f64,
    pub total_variation: f64,
}

impl SignedMeasure {
    /// `int f dnu` in fixed order with compensated summation.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        compensated_sum(
            self.atoms
                .iter()
                .map(|a| a.mass * f(a.position))
                .chain(self.nodes.iter().map(|n| n.mass() * f(n.x))),
        )
    }

    pub fn continuous_mass(&self) -> f64 {
        compensated_sum(self.nodes.iter().map(QuadNode::mass))
    }

    pub fn atom_at(&self, generator: Slot, level: u32) -> Option<&Atom> {
        self.atoms.iter().find(|a| a.generator == generator && a.level == level)
    }
}

/// Continuous nodes `cos theta_k` of the `n`-point rule, ascending, with
/// their `dx` weights.
pub fn theta_nodes(n: usize) -> Vec<(f64, f64)> {
    plain_theta_rule(n).into_iter().map(|(th, w)| (th.cos(), th.sin() * w)).collect()
}

/// `(theta, d theta weight)` of the plain rule, `theta` descending.
pub fn plain_theta_rule(n: usize) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::cached(n);
    let half_pi = std::f64::consts::FRAC_PI_2;
    gl.nodes.iter().zip(&gl.weights).rev().map(|(&u, &w)| (half_pi * (1.0 + u), half_pi * w)).collect()
}

/// Locations `theta` and widths of the near-poles of the density: one for
/// every parameter `e` and level `j` with `|e q^j|` close to 1.
fn density_poles(p: &AwParams) -> Vec<(f64, f64)> {
    let q = p.q.get();
    let mut out = Vec::new();
    for e in p.params() {
        let (mut r, phi) = (e.norm(), e.arg().abs());
        while r > (-GRADING_WIDTH).exp() {
            out.push((phi, r.ln().abs()));
            if q == 0.0 {
                break;
            }
            r *= q;
        }
    }
    out
}

/// `(theta, dx weight)` for the measure of `p`, `theta` descending so that
/// `x = cos theta` ascends. Plain Gauss-Legendre unless some parameter sits
/// near the unit circle.
pub fn measure_theta_rule(p: &AwParams, n: usize) -> Vec<(f64, f64)> {
    let poles = density_poles(p);
    let rule = if poles.iter().any(|(_, w)| *w < GRADING_WIDTH) {
        let mut r = graded_theta_rule(n, &poles);
        r.reverse();
        r
    } else {
        plain_theta_rule(n)
    };
    rule.into_iter().map(|(th, w)| (th, th.sin() * w)).collect()
}

/// Build the discretized measure, rejecting parameters outside the region.
pub fn measure_build(p: &AwParams, n_nodes: usize, trunc: &TruncationSpec) -> Result<SignedMeasure> {
    measure_build_with(p, n_nodes, trunc, DEFAULT_TOL_GRID)
}

pub fn measure_build_with(
    p: &AwParams,
    n_nodes: usize,
    trunc: &TruncationSpec,
    tol_grid: f64,
) -> Result<SignedMeasure> {
    let report = region_check(p, tol_grid);
    if !report.in_omega() {
        return Err(Error::OutsideOmega(report.notes.join("; ")));
    }
    let atoms = atoms(p, trunc)?;
    let density = Density::new(p, trunc)?;
    let nodes = measure_theta_rule(p, n_nodes)
        .into_iter()
        .map(|(th, w)| Ok(QuadNode { theta: th, x: th.cos(), w, f: density.eval_theta(th)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut m = SignedMeasure {
        params: ParamsDump::from(p),
        atoms,
        nodes,
        total_mass: 0.0,
        total_variation: 0.0,
    };
    m.total_mass = m.integrate(|_| 1.0);
    m.total_variation = compensated_sum(
        m.atoms.iter().map(|a| a.mass.abs()).chain(m.nodes.iter().map(|n| n.mass().abs())),
    );
    Ok(m)
}

/// Closed-form `int w_m^2 dnu` for the unnormalized polynomials.
pub fn orthogonality_norm(p: &AwParams, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    let q = p.q;
    let e4 = p.abcd();
    let mi = m as i32;
    let one = Complex64::new(1.0, 0.0);
    let mut zs = vec![Complex64::new(q.get(), 0.0)];
    zs.extend(p.pair_products());
    let num = (one - q.pow(mi - 1) * e4) * crate::qcore::qpoch_finite_many(&zs, q, m);
    let den = (one - q.pow(2 * mi - 1) * e4) * qpoch_finite(e4, q, m);
    realize(num / den)
}
