//! Large-`n` predictions for the partition function, density profiles and
//! height fluctuations, together with the exact finite-`n` quantities they
//! are compared against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asepmap::{classify_phase_with, particle_hole, BoundaryParams, Phase};
use crate::awmeasure::DEFAULT_TOL_GRID;
use crate::error::{Error, Result};
use crate::multitime::{marginal_measure, MeasureConfig};
use crate::qcore::{neg_power_index, qpoch_inf_re, LogScaled, TruncationSpec};
use crate::quad::GaussLegendre;
use crate::usw_mpa::{height_moments, partition, pi_n};
use num_complex::Complex64;

/// Points `0 < x_1 < ... < x_d = 1` with nonnegative weights `c_k`, and the
/// tail sums `s_k = c_k + ... + c_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceGrid {
    pub xs: Vec<f64>,
    pub cs: Vec<f64>,
    pub ss: Vec<f64>,
}

impl LaplaceGrid {
    pub fn new(xs: Vec<f64>, cs: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != cs.len() {
            return Err(Error::InvalidGrid("xs and cs must be nonempty and of equal length".into()));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || !(xs[0] > 0.0) || xs[xs.len() - 1] != 1.0 {
            return Err(Error::InvalidGrid("need 0 < x_1 < ... < x_d = 1".into()));
        }
        if cs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidGrid("weights must be finite and nonnegative".into()));
        }
        let mut ss = cs.clone();
        for k in (0..ss.len().saturating_sub(1)).rev() {
            ss[k] += ss[k + 1];
        }
        Ok(Self { xs, cs, ss })
    }

    /// Whether `s_k != 2 s_{k+1}` for every consecutive pair with `s_{k+1} > 0`.
    pub fn satisfies_spacing(&self) -> bool {
        self.ss
            .windows(2)
            .all(|w| w[1] == 0.0 || (w[0] - 2.0 * w[1]).abs() > 1e-12 * w[0])
    }

    fn require_valid(&self) -> Result<()> {
        if self.satisfies_spacing() {
            Ok(())
        } else {
            Err(Error::InvalidGrid("s_k = 2 s_(k+1) for some k".into()))
        }
    }

    fn x_prev(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.xs[k - 1]
        }
    }

    /// Block sizes `n_k - n_(k-1)` with `n_k = floor(n x_k)`.
    pub fn blocks(&self, n: usize) -> Vec<usize> {
        let mut prev = 0;
        self.xs
            .iter()
            .map(|&x| {
                let nk = (n as f64 * x).floor() as usize;
                let b = nk - prev;
                prev = nk;
                b
            })
            .collect()
    }

    fn block_times(&self, n: usize, scale: f64) -> Vec<f64> {
        self.blocks(n)
            .into_iter()
            .zip(&self.ss)
            .flat_map(|(b, s)| std::iter::repeat_n((-s / scale).exp(), b))
            .collect()
    }
}

fn phase_name(p: Phase) -> String {
    p.to_string()
}

fn require_phase(bp: &BoundaryParams, want: &[Phase]) -> Result<Phase> {
    let (phase, _) = classify_phase_with(bp, DEFAULT_TOL_GRID);
    if want.contains(&phase) {
        Ok(phase)
    } else {
        let expected = want.iter().map(|p| phase_name(*p)).collect::<Vec<_>>().join(" or ");
        Err(Error::WrongPhase { expected, actual: phase_name(phase) })
    }
}

fn require_off_grid(what: &str, value: f64, bp: &BoundaryParams) -> Result<()> {
    if neg_power_index(Complex64::new(value, 0.0), bp.q, DEFAULT_TOL_GRID).is_some() {
        return Err(Error::GridHit { what: what.into(), value });
    }
    Ok(())
}

fn qprod(zs: &[f64], bp: &BoundaryParams) -> Result<f64> {
    let trunc = TruncationSpec::default();
    zs.iter().try_fold(1.0, |acc, &z| Ok(acc * qpoch_inf_re(z, bp.q, &trunc)?))
}

/// Constant in the high-density growth `Z_n ~ 𝔭₀ (1+A)^(2n) / A^n`.
pub fn frak_p0(bp: &BoundaryParams) -> Result<f64> {
    require_phase(bp, &[Phase::HighDensity])?;
    let (a, b, c, d) = (bp.a, bp.b, bp.c, bp.d);
    require_off_grid("A/C", a / c, bp)?;
    require_off_grid("ABCD", bp.abcd(), bp)?;
    let num = qprod(&[1.0 / (a * a), b * c, b * d, c * d], bp)?;
    let den = qprod(&[b / a, c / a, d / a, bp.abcd()], bp)?;
    Ok(num / den)
}

/// Constant in the coexistence growth `Z_n ~ 𝔠₀ (A-1)/(A+1) n (1+A)^(2n) / A^n`.
pub fn frak_c0(bp: &BoundaryParams) -> Result<f64> {
    require_phase(bp, &[Phase::Coexistence])?;
    let (a, b, d) = (bp.a, bp.b, bp.d);
    require_off_grid("ABCD", bp.abcd(), bp)?;
    let num = qprod(&[1.0 / (a * a), a * b, b * d, a * d], bp)?;
    let den = qprod(&[b / a, bp.q.get(), d / a, a * a * b * d], bp)?;
    Ok(num / den)
}

/// Leading-order prediction for `Z_n`; the low-density case goes through
/// particle-hole duality.
pub fn zn_prediction(n: usize, bp: &BoundaryParams) -> Result<LogScaled> {
    let phase = require_phase(bp, &[Phase::HighDensity, Phase::LowDensity, Phase::Coexistence])?;
    let nf = n as f64;
    match phase {
        Phase::LowDensity => zn_prediction(n, &particle_hole(bp)),
        Phase::HighDensity => {
            let a = bp.a;
            Ok(LogScaled::scaled(frak_p0(bp)?, 2.0 * nf * (1.0 + a).ln() - nf * a.ln()))
        }
        _ => {
            let a = bp.a;
            let lead = frak_c0(bp)? * (a - 1.0) / (a + 1.0) * nf;
            Ok(LogScaled::scaled(lead, 2.0 * nf * (1.0 + a).ln() - nf * a.ln()))
        }
    }
}

/// `Z_n / prediction`.
pub fn zn_ratio(n: usize, bp: &BoundaryParams) -> Result<f64> {
    Ok(partition(bp, n)?.ratio(zn_prediction(n, bp)?))
}

/// Limiting mean density at macroscopic position `x`.
pub fn density_profile_prediction(x: f64, bp: &BoundaryParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!("position {x} outside [0, 1]")));
    }
    let phase = require_phase(
        bp,
        &[Phase::HighDensity, Phase::LowDensity, Phase::Coexistence, Phase::MaximalCurrent],
    )?;
    let (a, c) = (bp.a, bp.c);
    Ok(match phase {
        Phase::HighDensity => a / (1.0 + a),
        Phase::LowDensity => 1.0 / (1.0 + c),
        Phase::Coexistence => (1.0 + (a - 1.0) * x) / (1.0 + a),
        _ => 0.5,
    })
}

/// Limiting `Var(h_n(x)) / n` in the high-density phase.
pub fn hd_variance_prediction(x: f64, a: f64) -> f64 {
    x * a / ((1.0 + a) * (1.0 + a))
}

/// `Var(h_n(x)) / n` from the matrix representation.
pub fn hd_variance_empirical(n: usize, x: f64, bp: &BoundaryParams) -> Result<f64> {
    let k = (n as f64 * x).floor() as usize;
    Ok(height_moments(bp, n, k)?.1 / n as f64)
}

/// `exp(A / (2 (1+A)^2) sum_k s_k^2 (x_k - x_(k-1)))`.
pub fn hd_laplace_limit(g: &LaplaceGrid, a: f64) -> Result<f64> {
    g.require_valid()?;
    let sigma2 = a / (2.0 * (1.0 + a) * (1.0 + a));
    let sum: f64 = (0..g.xs.len()).map(|k| g.ss[k] * g.ss[k] * (g.xs[k] - g.x_prev(k))).sum();
    Ok((sigma2 * sum).exp())
}

/// Laplace transform of `sigma B(x)` with `sigma^2 = A/(1+A)^2`, from the
/// Brownian covariance `min(x_j, x_k)`.
pub fn brownian_laplace(g: &LaplaceGrid, a: f64) -> f64 {
    let sigma2 = a / ((1.0 + a) * (1.0 + a));
    let d = g.xs.len();
    let mut quad = 0.0;
    for j in 0..d {
        for k in 0..d {
            quad += g.cs[j] * g.cs[k] * g.xs[j].min(g.xs[k]);
        }
    }
    (0.5 * sigma2 * quad).exp()
}

/// `(e^(r x1) - e^(r x0)) / s` with `r = lambda s`, continuous at `s = 0`.
fn exp_diff_over(s: f64, lambda: f64, x0: f64, x1: f64) -> f64 {
    if s == 0.0 {
        return lambda * (x1 - x0);
    }
    (lambda * s * x0).exp() * (lambda * s * (x1 - x0)).exp_m1() / s
}

/// Limit of the coexistence-line transform `E exp(-sum c_k h_n(x_k) / n)`.
pub fn cl_laplace_limit(g: &LaplaceGrid, a: f64) -> Result<f64> {
    g.require_valid()?;
    if !(a > 1.0) {
        return Err(Error::DomainError(format!("coexistence needs A > 1, got {a}")));
    }
    let d = g.xs.len();
    let lambda = (a - 1.0) / (a + 1.0);
    let mut total = 0.0;
    for l in 0..d {
        let left: f64 = (0..l).map(|k| g.cs[k] * g.xs[k]).sum();
        let right: f64 = (l..d).map(|k| g.cs[k] * g.xs[k]).sum();
        let damp = (-(left + a * right) / (a + 1.0)).exp();
        total += damp * exp_diff_over(g.ss[l], lambda, g.x_prev(l), g.xs[l]);
    }
    Ok(total / lambda)
}

/// Random shock profile `eta(x) = (A x + (1 - A) min(x, u)) / (1 + A)`.
pub fn shock_profile(x: f64, u: f64, a: f64) -> f64 {
    (a * x + (1.0 - a) * x.min(u)) / (1.0 + a)
}

fn shock_weight(g: &LaplaceGrid, u: f64, a: f64) -> f64 {
    let e: f64 = g.xs.iter().zip(&g.cs).map(|(&x, &c)| c * shock_profile(x, u, a)).sum();
    (-e).exp()
}

/// `E exp(-sum c_k eta(x_k))` over a uniform shock location, by Gauss-Legendre
/// quadrature on each smooth piece.
pub fn cl_laplace_quadrature(g: &LaplaceGrid, a: f64) -> f64 {
    let gl = GaussLegendre::cached(32);
    (0..g.xs.len())
        .map(|l| {
            let (lo, hi) = (g.x_prev(l), g.xs[l]);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            gl.nodes.iter().zip(&gl.weights).map(|(z, w)| half * w * shock_weight(g, mid + half * z, a)).sum::<f64>()
        })
        .sum()
}

/// Monte Carlo mean and standard error of `exp(-sum c_k eta(x_k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

pub fn cl_laplace_monte_carlo(g: &LaplaceGrid, a: f64, samples: usize, seed: u64) -> MonteCarlo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..samples {
        let v = shock_weight(g, rng.gen::<f64>(), a);
        sum += v;
        sum2 += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    MonteCarlo { mean, std_err: (var / n).sqrt(), samples }
}

/// Exact `Phi_{x,n}(c / sqrt n)` in the high-density phase.
pub fn hd_laplace_empirical(n: usize, g: &LaplaceGrid, bp: &BoundaryParams) -> Result<f64> {
    require_phase(bp, &[Phase::HighDensity])?;
    let rn = (n as f64).sqrt();
    let a = bp.a;
    let shift: f64 = g.blocks(n).iter().zip(&g.ss).map(|(&b, s)| s / rn * b as f64).sum::<f64>() * a / (1.0 + a);
    let ratio = pi_n(bp, &g.block_times(n, rn))?;
    let z = partition(bp, n)?;
    Ok(ratio.sign * z.sign * (ratio.ln_abs - z.ln_abs + shift).exp())
}

/// Exact `Psi_{x,n}(c / n)` on the coexistence line.
pub fn cl_laplace_empirical(n: usize, g: &LaplaceGrid, bp: &BoundaryParams) -> Result<f64> {
    require_phase(bp, &[Phase::Coexistence])?;
    Ok(pi_n(bp, &g.block_times(n, n as f64))?.ratio(partition(bp, n)?))
}

/// `(phi(s, y), psi(s, y))`, the per-site weights after removing the growth rate.
pub fn phi_psi(s: f64, y: f64, a: f64) -> (f64, f64) {
    let base = (1.0 + (-s).exp() + 2.0 * (-s / 2.0).exp() * y) * a / ((1.0 + a) * (1.0 + a));
    (base * (s * a / (1.0 + a)).exp(), base)
}

/// Total variation of the marginal at `t = exp(-s / n)`.
pub fn marginal_total_variation(bp: &BoundaryParams, s: f64, n: usize, cfg: &MeasureConfig) -> Result<f64> {
    Ok(marginal_measure(bp, (-s / n as f64).exp(), cfg)?.measure.total_variation)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Doubling `n` must shrink the error by at least this factor.
pub const TREND_FACTOR: f64 = 0.7;

pub fn improves(err_n: f64, err_2n: f64) -> bool {
    err_2n.abs() < TREND_FACTOR * err_n.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::QReal;

    fn bp(a: f64, b: f64, c: f64, d: f64, q: f64) -> BoundaryParams {
        BoundaryParams::new(a, b, c, d, QReal::new(q).unwrap()).unwrap()
    }

    #[test]
    fn p0_specializations() {
        let q = QReal::new(0.5).unwrap();
        let t = TruncationSpec::default();
        let b = bp(2.0, 0.0, 0.4, 0.0, 0.5);
        let want = qpoch_inf_re(0.25, q, &t).unwrap() / qpoch_inf_re(0.2, q, &t).unwrap();
        assert!((frak_p0(&b).unwrap() - want).abs() < 1e-15);
        let b = bp(2.0, 0.0, 0.0, 0.0, 0.5);
        assert!((frak_p0(&b).unwrap() - 0.577576190173205).abs() < 1e-14);
        assert!(matches!(frak_p0(&bp(2.0, 0.0, 2.0, 0.0, 0.5)), Err(Error::WrongPhase { .. })));
    }

    #[test]
    fn c0_specialization() {
        let b = bp(2.0, 0.0, 2.0, 0.0, 0.5);
        let q = QReal::new(0.5).unwrap();
        let t = TruncationSpec::default();
        let want = qpoch_inf_re(0.25, q, &t).unwrap() / qpoch_inf_re(0.5, q, &t).unwrap();
        assert!((frak_c0(&b).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn low_density_by_duality() {
        let ld = bp(0.4, -0.1, 2.0, -0.05, 0.5);
        let hd = bp(2.0, -0.05, 0.4, -0.1, 0.5);
        let x = zn_prediction(50, &ld).unwrap();
        let y = zn_prediction(50, &hd).unwrap();
        assert!((x.ln_abs - y.ln_abs).abs() < 1e-12);
    }

    #[test]
    fn profiles() {
        let hd = bp(2.0, 0.0, 0.4, 0.0, 0.5);
        assert!((density_profile_prediction(0.3, &hd).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
        for (x, v) in [(0.0, 1.0 / 3.0), (0.5, 0.5), (1.0, 2.0 / 3.0)] {
            assert!((density_profile_prediction(x, &cl).unwrap() - v).abs() < 1e-15);
        }
        let ld = bp(0.4, 0.0, 2.0, 0.0, 0.5);
        assert!((density_profile_prediction(0.7, &ld).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hd_limit_is_brownian() {
        let g = LaplaceGrid::new(vec![0.25, 0.6, 1.0], vec![0.3, 0.5, 0.4]).unwrap();
        let a = 2.5;
        assert!((hd_laplace_limit(&g, a).unwrap() - brownian_laplace(&g, a)).abs() < 1e-14);
        let one = LaplaceGrid::new(vec![1.0], vec![0.7]).unwrap();
        let want = (a * 0.49 / (2.0 * 3.5 * 3.5)).exp();
        assert!((hd_laplace_limit(&one, a).unwrap() - want).abs() < 1e-15);
        let zero = LaplaceGrid::new(vec![0.5, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(hd_laplace_limit(&zero, a).unwrap(), 1.0);
    }

    #[test]
    fn spacing_hypothesis() {
        let g = LaplaceGrid::new(vec![0.5, 1.0], vec![0.5, 0.5]).unwrap();
        assert!(!g.satisfies_spacing());
        assert!(matches!(hd_laplace_limit(&g, 2.0), Err(Error::InvalidGrid(_))));
        assert!(LaplaceGrid::new(vec![0.5, 0.9], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cl_limit_single_point() {
        let (a, c) = (2.0, 0.8);
        let g = LaplaceGrid::new(vec![1.0], vec![c]).unwrap();
        let want = (a + 1.0) / ((a - 1.0) * c) * (-a * c / (a + 1.0)).exp() * (((a - 1.0) * c / (a + 1.0)).exp() - 1.0);
        assert!((cl_laplace_limit(&g, a).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn cl_limit_matches_quadrature() {
        for a in [1.5, 2.0, 4.0] {
            let g = LaplaceGrid::new(vec![0.2, 0.45, 0.8, 1.0], vec![0.3, 0.9, 0.2, 0.6]).unwrap();
            let closed = cl_laplace_limit(&g, a).unwrap();
            assert!((closed - cl_laplace_quadrature(&g, a)).abs() < 1e-12);
        }
        let tiny = LaplaceGrid::new(vec![0.5, 1.0], vec![1e-9, 3e-9]).unwrap();
        assert!((cl_laplace_limit(&tiny, 2.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let g = LaplaceGrid::new(vec![0.4, 1.0], vec![0.4, 0.6]).unwrap();
        let x = cl_laplace_monte_carlo(&g, 2.0, 10_000, 5);
        let y = cl_laplace_monte_carlo(&g, 2.0, 10_000, 5);
        assert_eq!(x, y);
        assert!((x.mean - cl_laplace_limit(&g, 2.0).unwrap()).abs() < 4.0 * x.std_err);
    }

    #[test]
    fn phi_psi_values() {
        let a = 2.0;
        let (phi, _) = phi_psi(0.0, 0.3, a);
        assert!((phi - 2.6 * a / 9.0).abs() < 1e-15);
        let s = 0.4;
        let ya = 0.5 * (a * (-s / 2.0f64).exp() + 1.0 / (a * (-s / 2.0f64).exp()));
        let (_, psi) = phi_psi(s, ya, a);
        assert!((psi - (1.0 + a * (-s).exp()) / (1.0 + a)).abs() < 1e-14);
        let s = 1e-3;
        let ya = 0.5 * (a * (-s / 2.0f64).exp() + 1.0 / (a * (-s / 2.0f64).exp()));
        let (phi, _) = phi_psi(s, ya, a);
        let two_terms = (s * a / (1.0 + a)).exp() / (1.0 + a) + a / (1.0 + a) * (-s / (1.0 + a)).exp();
        assert!((phi - two_terms).abs() < 1e-14);
        assert!((phi - (1.0 + a * s * s / (2.0 * 9.0))).abs() < 1e-8);
    }

    #[test]
    fn zero_weights_give_one() {
        let g = LaplaceGrid::new(vec![0.5, 1.0], vec![0.0, 0.0]).unwrap();
        let b = bp(2.0, 0.0, 0.4, 0.0, 0.5);
        assert!((hd_laplace_empirical(37, &g, &b).unwrap() - 1.0).abs() < 1e-13);
        let c = bp(2.0, 0.0, 2.0, 0.0, 0.5);
        assert!((cl_laplace_empirical(37, &g, &c).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn slope_fit() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.7)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.7).abs() < 1e-12);
    }
}
