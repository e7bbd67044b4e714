//! Boundary rates of the open ASEP and their `(A, B, C, D)` parametrization.
//!
//! Particles enter on the left at rate `alpha`, leave on the left at `gamma`,
//! enter on the right at `delta` and leave on the right at `beta`; bulk jumps
//! go right at rate 1 and left at rate `q`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::awmeasure::DEFAULT_TOL_GRID;
use crate::error::{Error, Result};
use crate::qcore::{int_power_index, neg_power_index, QReal};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub q: f64,
}

impl Rates {
    pub fn validate(&self) -> Result<QReal> {
        let q = QReal::new(self.q).map_err(|_| Error::DomainError(format!("q = {}", self.q)))?;
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::DomainError("alpha and beta must be positive".into()));
        }
        if !(self.gamma >= 0.0 && self.delta >= 0.0) {
            return Err(Error::DomainError("gamma and delta must be nonnegative".into()));
        }
        if ![self.alpha, self.beta, self.gamma, self.delta].iter().all(|v| v.is_finite()) {
            return Err(Error::DomainError("rates must be finite".into()));
        }
        Ok(q)
    }
}

/// Boundary parameters `A, C >= 0`, `B, D in (-1, 0]`, with `ABCD` off `q^{-l}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub q: QReal,
}

impl BoundaryParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64, q: QReal) -> Result<Self> {
        if !(a >= 0.0 && c >= 0.0 && a.is_finite() && c.is_finite()) {
            return Err(Error::DomainError(format!("A = {a}, C = {c} must be finite and >= 0")));
        }
        if !(b > -1.0 && b <= 0.0 && d > -1.0 && d <= 0.0) {
            return Err(Error::DomainError(format!("B = {b}, D = {d} must lie in (-1, 0]")));
        }
        let bp = Self { a, b, c, d, q };
        let abcd = bp.abcd();
        if neg_power_index(Complex64::new(abcd, 0.0), q, DEFAULT_TOL_GRID).is_some() {
            return Err(Error::SingularCase { abcd });
        }
        Ok(bp)
    }

    pub fn abcd(&self) -> f64 {
        self.a * self.b * self.c * self.d
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }
}

/// The two roots `kappa_+ >= kappa_-` of `x k^2 - (1 - q - x + y) k - y = 0`.
pub fn kappa(x: f64, y: f64, q: f64) -> (f64, f64) {
    let u = 1.0 - q - x + y;
    let r = (u * u + 4.0 * x * y).sqrt();
    // pick the cancellation-free root first, then use the product -y/x
    if u >= 0.0 {
        let s = u + r;
        if s == 0.0 {
            return (0.0, 0.0);
        }
        (s / (2.0 * x), -2.0 * y / s)
    } else {
        let s = u - r;
        (-2.0 * y / s, s / (2.0 * x))
    }
}

pub fn rates_to_abcd(r: &Rates) -> Result<BoundaryParams> {
    let q = r.validate()?;
    let (a, b) = kappa(r.beta, r.delta, r.q);
    let (c, d) = kappa(r.alpha, r.gamma, r.q);
    let abcd = a * b * c * d;
    if neg_power_index(Complex64::new(abcd, 0.0), q, DEFAULT_TOL_GRID).is_some() {
        return Err(Error::SingularCase { abcd });
    }
    BoundaryParams::new(a, b.min(0.0), c, d.min(0.0), q)
}

/// Exact inverse: `x = (1 - q) / ((1 + k+)(1 + k-))`, `y = -k+ k- x`.
pub fn abcd_to_rates(bp: &BoundaryParams) -> Result<Rates> {
    let q = bp.q.get();
    let inv = |kp: f64, km: f64| {
        let x = (1.0 - q) / ((1.0 + kp) * (1.0 + km));
        (x, -kp * km * x)
    };
    let (beta, delta) = inv(bp.a, bp.b);
    let (alpha, gamma) = inv(bp.c, bp.d);
    let rates = Rates { alpha, beta, gamma, delta: delta.max(0.0), q };
    let (a, b) = kappa(beta, rates.delta, q);
    let (c, d) = kappa(alpha, rates.gamma.max(0.0), q);
    let residual = [(a, bp.a), (b, bp.b), (c, bp.c), (d, bp.d)]
        .iter()
        .map(|(x, y)| (x - y).abs() / (1.0 + y.abs()))
        .fold(0.0, f64::max);
    if residual > 1e-9 {
        return Err(Error::InversionFailure { residual });
    }
    Ok(Rates { gamma: gamma.max(0.0), ..rates })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    MaximalCurrent,
    HighDensity,
    LowDensity,
    Coexistence,
    /// On a transition line other than the coexistence line.
    Transition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    Fan,
    Shock,
    Boundary,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Phase::MaximalCurrent => "maximal-current",
            Phase::HighDensity => "high-density",
            Phase::LowDensity => "low-density",
            Phase::Coexistence => "coexistence",
            Phase::Transition => "transition-line",
        };
        f.write_str(s)
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Region::Fan => "fan",
            Region::Shock => "shock",
            Region::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0)
}

pub fn classify_phase(bp: &BoundaryParams) -> (Phase, Region) {
    classify_phase_with(bp, DEFAULT_TOL_GRID)
}

pub fn classify_phase_with(bp: &BoundaryParams, tol: f64) -> (Phase, Region) {
    let (a, c) = (bp.a, bp.c);
    let a_one = close(a, 1.0, tol);
    let c_one = close(c, 1.0, tol);
    let phase = if close(a, c, tol) && a > 1.0 && !a_one {
        Phase::Coexistence
    } else if a > 1.0 && !a_one && a > c && !close(a, c, tol) {
        Phase::HighDensity
    } else if c > 1.0 && !c_one && c > a && !close(a, c, tol) {
        Phase::LowDensity
    } else if a < 1.0 && c < 1.0 && !a_one && !c_one {
        Phase::MaximalCurrent
    } else {
        Phase::Transition
    };
    let ac = a * c;
    let region = if close(ac, 1.0, tol) {
        Region::Boundary
    } else if ac < 1.0 {
        Region::Fan
    } else {
        Region::Shock
    };
    (phase, region)
}

/// Outcome of the time-admissibility conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    /// Parameters inside the unit disk stay inside after scaling by `sqrt t`.
    pub small_stay_small: bool,
    /// Parameters outside the unit disk stay outside after scaling.
    pub large_stay_large: bool,
    /// `t` lies in `(sqrt q, 1/sqrt q)`, and `s/t` is off `q^Z` when given.
    pub window: bool,
    /// When `A, C >= 1`, `A t / C` is off `q^Z`.
    pub ratio_off_grid: bool,
    pub notes: Vec<String>,
}

impl Admissibility {
    pub fn ok(&self) -> bool {
        self.small_stay_small && self.large_stay_large && self.window && self.ratio_off_grid
    }
}

pub fn admissible_time(bp: &BoundaryParams, t: f64, s: Option<f64>) -> Admissibility {
    admissible_time_with(bp, t, s, DEFAULT_TOL_GRID)
}

pub fn admissible_time_with(bp: &BoundaryParams, t: f64, s: Option<f64>, tol: f64) -> Admissibility {
    let mut notes = Vec::new();
    let q = bp.q;
    let names = ["A", "B", "C", "D"];
    let mut small_stay_small = true;
    let mut large_stay_large = true;
    let window = t > 0.0 && t > q.get().sqrt() && t * q.get().sqrt() < 1.0;
    if !window {
        notes.push(format!("t = {t} outside (sqrt q, 1/sqrt q)"));
    }
    let mut window = window;
    if t > 0.0 {
        let r = t.sqrt();
        for (e, name) in bp.as_array().iter().zip(names) {
            let (lo, hi) = ((e * r).abs(), (e / r).abs());
            if e.abs() < 1.0 && !(lo < 1.0 && hi < 1.0) {
                small_stay_small = false;
                notes.push(format!("|{name}| < 1 but a scaled copy reaches 1"));
            }
            if e.abs() > 1.0 && !(lo > 1.0 && hi > 1.0) {
                large_stay_large = false;
                notes.push(format!("|{name}| > 1 but a scaled copy drops to 1"));
            }
        }
    }
    if let Some(s) = s {
        let ok = s > 0.0 && int_power_index(Complex64::new(s / t, 0.0), q, tol).is_none();
        if !ok {
            window = false;
            notes.push(format!("s/t = {} lies on q^Z", s / t));
        }
    }
    let mut ratio_off_grid = true;
    if bp.a >= 1.0 && bp.c >= 1.0 {
        let ratio = bp.a * t / bp.c;
        if int_power_index(Complex64::new(ratio, 0.0), q, tol).is_some() {
            ratio_off_grid = false;
            notes.push(format!("A t / C = {ratio} lies on q^Z"));
        }
    }
    Admissibility { small_stay_small, large_stay_large, window, ratio_off_grid, notes }
}

/// Exchange of particles and holes combined with reversing the segment.
pub fn particle_hole(bp: &BoundaryParams) -> BoundaryParams {
    BoundaryParams { a: bp.c, b: bp.d, c: bp.a, d: bp.b, q: bp.q }
}

pub fn particle_hole_rates(r: &Rates) -> Rates {
    Rates { alpha: r.beta, beta: r.alpha, gamma: r.delta, delta: r.gamma, q: r.q }
}
