//! Gauss-Legendre rules on `[-1, 1]`, cached by order, a graded variant for
//! integrands with near-poles, and barycentric interpolation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the Legendre recurrence; nodes returned ascending.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "quadrature order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared rule of order `n`.
    pub fn cached(n: usize) -> Arc<Self> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(Self::new(n))).clone()
    }
}

/// Near-poles closer than this to the real `theta` axis get graded nodes.
pub const GRADING_WIDTH: f64 = 0.5;

/// `(theta, weight)` pairs of an `n`-point rule on `[0, pi]` for integrands
/// with near-poles at `theta_k + i width_k`. The interval is split at every
/// pole and each piece is mapped by `theta = theta_k + width_k sinh(v)`, which
/// spreads the nodes logarithmically away from the pole. Poles with
/// `width >= GRADING_WIDTH` are ignored; with none left this is plain
/// Gauss-Legendre on `[0, pi]`.
pub fn graded_theta_rule(n: usize, poles: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let pi = std::f64::consts::PI;
    let merge = 1e-12;
    let mut marks: Vec<(f64, f64)> = Vec::new();
    for &(theta, width) in poles {
        if !(width < GRADING_WIDTH) || !(0.0..=pi).contains(&theta) {
            continue;
        }
        let width = width.max(1e-14);
        let theta = if theta < merge { 0.0 } else if theta > pi - merge { pi } else { theta };
        match marks.iter_mut().find(|m| (m.0 - theta).abs() < merge) {
            Some(m) => m.1 = m.1.min(width),
            None => marks.push((theta, width)),
        }
    }
    if marks.is_empty() {
        return mapped_gl(n, 0.0, pi);
    }
    let mut cuts: Vec<(f64, Option<f64>)> = vec![(0.0, None), (pi, None)];
    for (theta, width) in marks {
        match cuts.iter_mut().find(|c| c.0 == theta) {
            Some(c) => c.1 = Some(width),
            None => cuts.push((theta, Some(width))),
        }
    }
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    // one-sided pieces: (start, end, width at start if graded)
    let mut pieces: Vec<(f64, f64, Option<f64>)> = Vec::new();
    for w in cuts.windows(2) {
        let ((l, wl), (r, wr)) = (w[0], w[1]);
        match (wl, wr) {
            (None, None) => pieces.push((l, r, None)),
            (Some(_), None) => pieces.push((l, r, wl)),
            (None, Some(_)) => pieces.push((r, l, wr)),
            (Some(_), Some(_)) => {
                let mid = 0.5 * (l + r);
                pieces.push((l, mid, wl));
                pieces.push((r, mid, wr));
            }
        }
    }
    let k = pieces.len();
    let mut out = Vec::with_capacity(n.max(8 * k));
    for (i, (start, end, width)) in pieces.into_iter().enumerate() {
        let m = (n / k + usize::from(i < n % k)).max(8);
        match width {
            None => out.extend(mapped_gl(m, start.min(end), start.max(end))),
            Some(width) => {
                let dir = (end - start).signum();
                let span = ((end - start).abs() / width).asinh();
                let gl = GaussLegendre::cached(m);
                out.extend(gl.nodes.iter().zip(&gl.weights).map(|(u, w)| {
                    let v = 0.5 * span * (1.0 + u);
                    (start + dir * width * v.sinh(), 0.5 * span * w * width * v.cosh())
                }));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn mapped_gl(n: usize, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let gl = GaussLegendre::cached(n);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    gl.nodes.iter().zip(&gl.weights).map(|(u, w)| (mid + half * u, half * w)).collect()
}

/// Barycentric Lagrange interpolation through fixed points in `[-1, 1]`.
/// The points should be well spread (Chebyshev- or Legendre-like).
#[derive(Debug, Clone)]
pub struct Barycentric {
    xs: Vec<f64>,
    weights: Vec<f64>,
}

impl Barycentric {
    pub fn new(xs: Vec<f64>) -> Self {
        // weights 1 / prod 2(x_i - x_j), formed in logs and rescaled
        let logs: Vec<(f64, f64)> = xs
            .iter()
            .enumerate()
            .map(|(i, xi)| {
                xs.iter().enumerate().filter(|(j, _)| *j != i).fold((1.0, 0.0), |(sign, ln), (_, xj)| {
                    let d = 2.0 * (xi - xj);
                    (sign * d.signum(), ln - d.abs().ln())
                })
            })
            .collect();
        let top = logs.iter().map(|l| l.1).fold(f64::NEG_INFINITY, f64::max);
        let weights = logs.iter().map(|(sign, ln)| sign * (ln - top).exp()).collect();
        Self { xs, weights }
    }

    pub fn points(&self) -> &[f64] {
        &self.xs
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((xi, wi), fi) in self.xs.iter().zip(&self.weights).zip(values) {
            let d = x - xi;
            if d == 0.0 {
                return *fi;
            }
            num += wi / d * fi;
            den += wi / d;
        }
        num / den
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
