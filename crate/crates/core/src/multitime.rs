//! Marginal and transition measures in the time variable `t`, and the
//! multi-time Laplace transform computed by backward induction.
//!
//! At time `t` the marginal is the Askey-Wilson measure with parameters
//! `(A sqrt t, B sqrt t, C / sqrt t, D / sqrt t)`; from a point `x` at time `s`
//! the transition to time `t > s` replaces the last two parameters by
//! `sqrt(s/t) (x +- sqrt(x^2 - 1))`. Every atom reachable this way is labelled
//! by the boundary parameter that generated it and its level, so integrals can
//! be carried from one time to the next on a fixed set of support points.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::asepmap::{admissible_time_with, classify_phase_with, BoundaryParams, Phase};
use crate::awmeasure::{measure_build_with, plain_theta_rule, Atom, SignedMeasure, Slot, DEFAULT_NODES, DEFAULT_TOL_GRID};
use crate::awpoly::{proj_poly_eval, AwParams};
use crate::error::{Error, Result};
use crate::qcore::{compensated_sum, TruncationSpec};
use crate::quad::Barycentric;

/// Quadrature and tolerance settings shared by every measure in a computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureConfig {
    pub nodes: usize,
    pub trunc: TruncationSpec,
    pub tol_grid: f64,
    /// Largest number of times `pin_integral` accepts.
    pub max_times: usize,
}

/// Default cap on the number of times in `pin_integral`; total variation grows
/// quickly with n on the shock region.
pub const DEFAULT_MAX_TIMES: usize = 5;

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            nodes: DEFAULT_NODES,
            trunc: TruncationSpec::default(),
            tol_grid: DEFAULT_TOL_GRID,
            max_times: DEFAULT_MAX_TIMES,
        }
    }
}

/// Boundary parameter that generated an atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    A,
    B,
    C,
    D,
}

impl Label {
    fn value(self, bp: &BoundaryParams) -> f64 {
        match self {
            Label::A => bp.a,
            Label::B => bp.b,
            Label::C => bp.c,
            Label::D => bp.d,
        }
    }

    fn scales_up(self) -> bool {
        matches!(self, Label::A | Label::B)
    }
}

/// Starting point of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Point {
    Interior(f64),
    Atom(Label, u32),
}

/// Signed measure whose atoms carry boundary labels.
#[derive(Debug, Clone, Serialize)]
pub struct LabeledMeasure {
    pub measure: SignedMeasure,
    pub labels: Vec<(Label, u32)>,
}

impl LabeledMeasure {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.measure.integrate(f)
    }

    fn integrate_on_support(&self, g: &SupportValues) -> Result<f64> {
        let atoms = self
            .measure
            .atoms
            .iter()
            .zip(&self.labels)
            .map(|(a, lbl)| {
                g.atoms.get(lbl).map(|v| a.mass * v).ok_or(Error::XOutsideSupport {
                    x: a.position,
                    s: f64::NAN,
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let nodes = &self.measure.nodes;
        let shared = nodes.len() == g.nodes.len() && nodes.iter().zip(&g.thetas).all(|(n, th)| n.theta == *th);
        let continuous: Vec<f64> = if shared {
            nodes.iter().zip(&g.nodes).map(|(n, v)| n.mass() * v).collect()
        } else {
            nodes.iter().map(|n| n.mass() * g.interp.eval(&g.nodes, theta_to_u(n.theta))).collect()
        };
        Ok(compensated_sum(atoms.into_iter().chain(continuous)))
    }
}

/// Labelled atoms of the support at time `t` and the markers used by the
/// asymptotic analysis.
#[derive(Debug, Clone, Serialize)]
pub struct SupportSet {
    pub t: f64,
    pub atoms: Vec<(Label, u32, f64)>,
    /// Top `A`-generated atom, if any.
    pub y0_a: Option<f64>,
    /// Top `C`-generated atom, if any.
    pub y0_c: Option<f64>,
    /// Largest support point below the dominant atom(s).
    pub y1_star: f64,
}

fn label_of_slot(slot: Slot) -> Label {
    match slot {
        Slot::A => Label::A,
        Slot::B => Label::B,
        Slot::C => Label::C,
        Slot::D => Label::D,
    }
}

pub fn marginal_params(bp: &BoundaryParams, t: f64) -> Result<AwParams> {
    crate::awpoly::time_params(t, bp.as_array(), bp.q)
}

fn check_time(bp: &BoundaryParams, t: f64, cfg: &MeasureConfig) -> Result<()> {
    let adm = admissible_time_with(bp, t, None, cfg.tol_grid);
    if adm.ok() {
        Ok(())
    } else {
        Err(Error::InadmissibleTime { t, reason: adm.notes.join("; ") })
    }
}

pub fn marginal_measure(bp: &BoundaryParams, t: f64, cfg: &MeasureConfig) -> Result<LabeledMeasure> {
    check_time(bp, t, cfg)?;
    let p = marginal_params(bp, t)?;
    let measure = measure_build_with(&p, cfg.nodes, &cfg.trunc, cfg.tol_grid)?;
    let labels = measure.atoms.iter().map(|a| (label_of_slot(a.generator), a.level)).collect();
    Ok(LabeledMeasure { measure, labels })
}

pub fn support_points(bp: &BoundaryParams, t: f64, cfg: &MeasureConfig) -> Result<SupportSet> {
    let p = marginal_params(bp, t)?;
    let atoms: Vec<(Label, u32, f64)> = crate::awmeasure::atoms(&p, &cfg.trunc)?
        .into_iter()
        .map(|a| (label_of_slot(a.generator), a.level, a.position))
        .collect();
    let top = |l: Label| atoms.iter().find(|a| a.0 == l && a.1 == 0).map(|a| a.2);
    let y0_a = top(Label::A);
    let y0_c = top(Label::C);
    let (phase, _) = classify_phase_with(bp, cfg.tol_grid);
    let mut dominant: Vec<(Label, u32)> = Vec::new();
    if let Some(first) = atoms.first() {
        dominant.push((first.0, first.1));
    }
    if phase == Phase::Coexistence {
        dominant = vec![(Label::A, 0), (Label::C, 0)];
    }
    let y1_star = atoms
        .iter()
        .filter(|a| !dominant.contains(&(a.0, a.1)))
        .map(|a| a.2)
        .fold(1.0, f64::max);
    Ok(SupportSet { t, atoms, y0_a, y0_c, y1_star })
}

/// Parameters of the transition from `x` at time `s` to time `t`, and how
/// the third-slot atoms map to support labels.
fn transition_params(bp: &BoundaryParams, s: f64, t: f64, x: Point) -> Result<(AwParams, Option<Label>, u32)> {
    let q = bp.q;
    let rt = t.sqrt();
    let (c, d, third, offset) = match x {
        Point::Interior(x) => {
            if x.abs() > 1.0 {
                return Err(Error::XOutsideSupport { x, s });
            }
            let (c, d) = crate::awpoly::kernel_pair(x, s, t);
            (c, d, None, 0)
        }
        Point::Atom(label, level) => {
            let e = label.value(bp) * q.pow(level as i32);
            if label.scales_up() {
                // x generated by e sqrt(s); the third-slot atoms carry zero mass
                let c = e * s / rt;
                let d = 1.0 / (e * rt);
                (Complex64::new(c, 0.0), Complex64::new(d, 0.0), None, 0)
            } else {
                let c = e / rt;
                let d = s / (e * rt);
                (Complex64::new(c, 0.0), Complex64::new(d, 0.0), Some(label), level)
            }
        }
    };
    let p = AwParams::new(bp.a * rt, bp.b * rt, c, d, q)?;
    Ok((p, third, offset))
}

pub fn transition_measure(
    bp: &BoundaryParams,
    s: f64,
    t: f64,
    x: Point,
    cfg: &MeasureConfig,
) -> Result<LabeledMeasure> {
    if !(s < t) {
        return Err(Error::InadmissiblePair { s, t, reason: "need s < t".into() });
    }
    let adm = admissible_time_with(bp, t, Some(s), cfg.tol_grid);
    let adm_s = admissible_time_with(bp, s, None, cfg.tol_grid);
    if !adm.ok() || !adm_s.ok() {
        let mut notes = adm.notes;
        notes.extend(adm_s.notes);
        return Err(Error::InadmissiblePair { s, t, reason: notes.join("; ") });
    }
    let (p, third, offset) = transition_params(bp, s, t, x)?;
    let mut measure = measure_build_with(&p, cfg.nodes, &cfg.trunc, cfg.tol_grid)?;
    let mut kept: Vec<Atom> = Vec::new();
    let mut labels = Vec::new();
    for a in &measure.atoms {
        let label = match a.generator {
            Slot::A => Some((Label::A, a.level)),
            Slot::B => Some((Label::B, a.level)),
            Slot::C => third.map(|l| (l, a.level + offset)),
            Slot::D => {
                return Err(Error::XOutsideSupport { x: a.position, s: t });
            }
        };
        if let Some(lbl) = label {
            kept.push(*a);
            labels.push(lbl);
        }
    }
    measure.atoms = kept;
    measure.total_mass = measure.integrate(|_| 1.0);
    measure.total_variation = compensated_sum(
        measure.atoms.iter().map(|a| a.mass.abs()).chain(measure.nodes.iter().map(|n| n.mass().abs())),
    );
    Ok(LabeledMeasure { measure, labels })
}

/// Resolve a real starting point: an atom of the support at time `s`
/// (within `tol_grid`), or an interior point of `[-1, 1]`.
pub fn resolve_point(bp: &BoundaryParams, s: f64, x: f64, cfg: &MeasureConfig) -> Result<Point> {
    if x.abs() <= 1.0 {
        return Ok(Point::Interior(x));
    }
    let support = support_points(bp, s, cfg)?;
    support
        .atoms
        .iter()
        .find(|a| (a.2 - x).abs() <= cfg.tol_grid * a.2.abs().max(1.0) * 10.0)
        .map(|a| Point::Atom(a.0, a.1))
        .ok_or(Error::XOutsideSupport { x, s })
}

/// Values of a function on the support at one time: on the plain quadrature
/// nodes in `(-1, 1)` and on the labelled atoms.
#[derive(Debug, Clone)]
struct SupportValues {
    interp: Arc<Barycentric>,
    thetas: Vec<f64>,
    nodes: Vec<f64>,
    atoms: HashMap<(Label, u32), f64>,
}

/// Interpolation in the Gauss-Legendre variable `u`, where the nodes are
/// well spread; their cosines would crowd the endpoints.
fn interpolator(n: usize) -> Arc<Barycentric> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Barycentric>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("interpolator cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(Barycentric::new(plain_thetas(n).into_iter().map(theta_to_u).collect())))
        .clone()
}

fn theta_to_u(theta: f64) -> f64 {
    theta / std::f64::consts::FRAC_PI_2 - 1.0
}

fn plain_thetas(n: usize) -> Vec<f64> {
    plain_theta_rule(n).into_iter().map(|(th, _)| th).collect()
}

fn support_values<F: Fn(f64) -> f64>(bp: &BoundaryParams, t: f64, cfg: &MeasureConfig, f: F) -> Result<(SupportValues, Vec<(Label, u32, f64)>)> {
    let support = support_points(bp, t, cfg)?;
    let thetas = plain_thetas(cfg.nodes);
    let nodes = thetas.iter().map(|th| f(th.cos())).collect();
    let atoms = support.atoms.iter().map(|a| ((a.0, a.1), f(a.2))).collect();
    Ok((SupportValues { interp: interpolator(cfg.nodes), thetas, nodes, atoms }, support.atoms))
}

/// Carry `g` (known on the support at time `t`) back to time `s`:
/// `x -> weight(x) * int g dP_{s,t}(x, .)` on the support at time `s`.
fn pull_back<W: Fn(f64) -> f64 + Sync>(
    bp: &BoundaryParams,
    s: f64,
    t: f64,
    g: &SupportValues,
    weight: W,
    cfg: &MeasureConfig,
) -> Result<SupportValues> {
    let support = support_points(bp, s, cfg)?;
    let thetas = plain_thetas(cfg.nodes);
    let nodes = thetas
        .par_iter()
        .map(|th| {
            let x = th.cos();
            let k = transition_measure(bp, s, t, Point::Interior(x), cfg)?;
            Ok(weight(x) * k.integrate_on_support(g)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let atoms = support
        .atoms
        .par_iter()
        .map(|&(label, level, pos)| {
            let k = transition_measure(bp, s, t, Point::Atom(label, level), cfg)?;
            Ok(((label, level), weight(pos) * k.integrate_on_support(g)?))
        })
        .collect::<Result<HashMap<_, _>>>()?;
    Ok(SupportValues { interp: interpolator(cfg.nodes), thetas, nodes, atoms })
}

/// `int prod_k (1 + t_k + 2 sqrt(t_k) x_k) d(pi_{t_1} P_{t_1,t_2} ... )`, which
/// equals `Pi_n(t_1, ..., t_n)` for admissible increasing times.
pub fn pin_integral(bp: &BoundaryParams, ts: &[f64], cfg: &MeasureConfig) -> Result<f64> {
    if ts.is_empty() {
        return Ok(1.0);
    }
    if ts.len() > cfg.max_times {
        return Err(Error::SizeCap { n: ts.len(), cap: cfg.max_times });
    }
    if ts.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidGrid("times must be strictly increasing".into()));
    }
    let lin = |t: f64| move |x: f64| 1.0 + t + 2.0 * t.sqrt() * x;
    let n = ts.len();
    let (mut g, _) = support_values(bp, ts[n - 1], cfg, lin(ts[n - 1]))?;
    for k in (0..n - 1).rev() {
        g = pull_back(bp, ts[k], ts[k + 1], &g, lin(ts[k]), cfg)?;
    }
    let pi = marginal_measure(bp, ts[0], cfg)?;
    pi.integrate_on_support(&g)
}

/// `int p_m(y; t) P_{s,t}(x, dy) - p_m(x; s)`.
pub fn projection_residual(bp: &BoundaryParams, m: usize, s: f64, t: f64, x: Point, cfg: &MeasureConfig) -> Result<f64> {
    let k = transition_measure(bp, s, t, x, cfg)?;
    let abcd = bp.as_array();
    let q = bp.q;
    let vals: Vec<f64> = k
        .measure
        .atoms
        .iter()
        .map(|a| proj_poly_eval(a.position, m, t, abcd, q))
        .chain(k.measure.nodes.iter().map(|n| proj_poly_eval(n.x, m, t, abcd, q)))
        .collect::<Result<_>>()?;
    let natoms = k.measure.atoms.len();
    let lhs = compensated_sum(
        k.measure.atoms.iter().zip(&vals).map(|(a, v)| a.mass * v).chain(
            k.measure.nodes.iter().zip(&vals[natoms..]).map(|(n, v)| n.mass() * v),
        ),
    );
    let xpos = point_position(bp, s, x);
    Ok(lhs - proj_poly_eval(xpos, m, s, abcd, q)?)
}

/// Position of a labelled point at time `s`.
pub fn point_position(bp: &BoundaryParams, s: f64, x: Point) -> f64 {
    match x {
        Point::Interior(x) => x,
        Point::Atom(label, level) => {
            let e = label.value(bp) * bp.q.pow(level as i32);
            let g = if label.scales_up() { e * s.sqrt() } else { e / s.sqrt() };
            0.5 * (g + 1.0 / g)
        }
    }
}

/// Two-step minus one-step integral of `f` from `x` at time `s`:
/// `int P_{s,u}(x,dy) int P_{u,t}(y,dz) f(z) - int P_{s,t}(x,dz) f(z)`.
pub fn chapman_kolmogorov_residual<F: Fn(f64) -> f64 + Sync>(
    bp: &BoundaryParams,
    s: f64,
    u: f64,
    t: f64,
    x: Point,
    f: F,
    cfg: &MeasureConfig,
) -> Result<f64> {
    let (g_t, _) = support_values(bp, t, cfg, &f)?;
    let g_u = pull_back(bp, u, t, &g_t, |_| 1.0, cfg)?;
    let two_step = transition_measure(bp, s, u, x, cfg)?.integrate_on_support(&g_u)?;
    let one_step = transition_measure(bp, s, t, x, cfg)?.integrate_on_support(&g_t)?;
    Ok(two_step - one_step)
}

/// Largest deviation of `P_{s,t}(y_0^a(s), .)` from the point mass at `y_0^a(t)`.
pub fn delta_residual(bp: &BoundaryParams, s: f64, t: f64, cfg: &MeasureConfig) -> Result<f64> {
    let k = transition_measure(bp, s, t, Point::Atom(Label::A, 0), cfg)?;
    let target = point_position(bp, t, Point::Atom(Label::A, 0));
    let mut worst = 0.0f64;
    for (a, lbl) in k.measure.atoms.iter().zip(&k.labels) {
        let want = if *lbl == (Label::A, 0) { 1.0 } else { 0.0 };
        worst = worst.max((a.mass - want).abs());
        if *lbl == (Label::A, 0) {
            worst = worst.max((a.position - target).abs());
        }
    }
    let cont: f64 = k.measure.nodes.iter().map(|n| n.mass().abs()).sum();
    Ok(worst.max(cont))
}

/// Increasing times `t_1 < ... < t_k` spread evenly inside `(1 - eps, 1)`,
/// using the largest `eps <= 0.2` (in steps of 0.005) for which every time
/// and every consecutive pair is admissible.
pub fn choose_times(bp: &BoundaryParams, k: usize, cfg: &MeasureConfig) -> Result<(Vec<f64>, f64)> {
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    for step in 0..40 {
        let eps = 0.2 - 0.005 * step as f64;
        let ts: Vec<f64> = (0..k).map(|i| 1.0 - eps + eps * (i as f64 + 0.5) / k as f64).collect();
        let singles = ts.iter().all(|&t| admissible_time_with(bp, t, None, cfg.tol_grid).ok());
        let pairs = ts.windows(2).all(|w| admissible_time_with(bp, w[1], Some(w[0]), cfg.tol_grid).ok());
        let measures = singles && ts.iter().all(|&t| marginal_measure(bp, t, cfg).is_ok());
        if singles && pairs && measures {
            return Ok((ts, eps));
        }
    }
    Err(Error::InadmissibleTime { t: 1.0, reason: "no admissible window below 0.2".into() })
}
