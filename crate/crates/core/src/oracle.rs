//! Stationary law of the open ASEP by direct solution of `mu Q = 0` on all
//! `2^n` configurations.
//!
//! Configuration encoding: bit `i` of the state index is the occupation of
//! site `i + 1`, so site 1 is the least significant bit.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::asepmap::Rates;
use crate::error::{Error, Result};

pub const MAX_SITES: usize = 14;
const DENSE_MAX_STATES: usize = 1 << 10;

/// Sparse generator stored by incoming transitions.
#[derive(Debug, Clone)]
pub struct Generator {
    pub n: usize,
    /// `incoming[j]` lists `(i, rate)` for transitions `i -> j`.
    pub incoming: Vec<Vec<(usize, f64)>>,
    /// Total exit rate of each state.
    pub exit: Vec<f64>,
}

impl Generator {
    pub fn states(&self) -> usize {
        self.exit.len()
    }

    /// `max_j |(mu Q)_j|`.
    pub fn residual(&self, mu: &[f64]) -> f64 {
        (0..self.states())
            .map(|j| {
                let inflow: f64 = self.incoming[j].iter().map(|&(i, r)| mu[i] * r).sum();
                (inflow - mu[j] * self.exit[j]).abs()
            })
            .fold(0.0, f64::max)
    }
}

pub fn build_generator(n: usize, rates: &Rates) -> Result<Generator> {
    if n == 0 {
        return Err(Error::DomainError("need at least one site".into()));
    }
    if n > MAX_SITES {
        return Err(Error::SizeCap { n, cap: MAX_SITES });
    }
    rates.validate()?;
    let states = 1usize << n;
    let mut incoming = vec![Vec::new(); states];
    let mut exit = vec![0.0; states];
    let last = 1usize << (n - 1);
    let mut push = |from: usize, to: usize, rate: f64| {
        if rate > 0.0 {
            incoming[to].push((from, rate));
            exit[from] += rate;
        }
    };
    for s in 0..states {
        if s & 1 == 0 {
            push(s, s | 1, rates.alpha);
        } else {
            push(s, s & !1, rates.gamma);
        }
        if s & last == 0 {
            push(s, s | last, rates.delta);
        } else {
            push(s, s & !last, rates.beta);
        }
        for i in 0..n - 1 {
            let here = 1usize << i;
            let next = here << 1;
            match (s & here != 0, s & next != 0) {
                (true, false) => push(s, (s & !here) | next, 1.0),
                (false, true) => push(s, (s & !next) | here, rates.q),
                _ => {}
            }
        }
    }
    Ok(Generator { n, incoming, exit })
}

fn solve_dense(g: &Generator) -> Option<Vec<f64>> {
    let m = g.states();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        a[(j, j)] -= g.exit[j];
        for &(i, r) in &g.incoming[j] {
            a[(j, i)] += r;
        }
    }
    for i in 0..m {
        a[(m - 1, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    a.lu().solve(&rhs).map(|v| v.iter().copied().collect())
}

fn solve_gauss_seidel(g: &Generator) -> Vec<f64> {
    let m = g.states();
    let mut mu = vec![1.0 / m as f64; m];
    for sweep in 0..200_000 {
        for j in 0..m {
            let inflow: f64 = g.incoming[j].iter().map(|&(i, r)| mu[i] * r).sum();
            mu[j] = inflow / g.exit[j];
        }
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|v| *v /= total);
        if sweep % 25 == 24 && g.residual(&mu) <= 1e-14 {
            break;
        }
    }
    mu
}

/// Stationary distribution indexed by configuration.
pub fn stationary(n: usize, rates: &Rates) -> Result<Vec<f64>> {
    let g = build_generator(n, rates)?;
    let mu = if g.states() <= DENSE_MAX_STATES {
        solve_dense(&g).unwrap_or_else(|| solve_gauss_seidel(&g))
    } else {
        solve_gauss_seidel(&g)
    };
    let residual = g.residual(&mu);
    if !(residual <= 1e-10) || mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolveFailure { residual });
    }
    Ok(mu)
}

/// `E[prod_i t_i^{tau_i}]` under `probs`.
pub fn oracle_gen_fn(probs: &[f64], ts: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(s, p)| {
            let w: f64 = ts.iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).map(|(_, t)| t).product();
            p * w
        })
        .sum()
}

pub fn oracle_one_point(probs: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| probs.iter().enumerate().filter(|(s, _)| s >> i & 1 == 1).map(|(_, p)| p).sum())
        .collect()
}

/// Mean and variance of `tau_1 + ... + tau_k`.
pub fn oracle_height_moments(probs: &[f64], k: usize) -> (f64, f64) {
    let mask = (1usize << k) - 1;
    let (m1, m2) = probs.iter().enumerate().fold((0.0, 0.0), |(a, b), (s, p)| {
        let h = (s & mask).count_ones() as f64;
        (a + p * h, b + p * h * h)
    });
    (m1, m2 - m1 * m1)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleDump {
    pub n: usize,
    pub rates: Rates,
    pub probs: Vec<f64>,
    pub encoding: &'static str,
}

pub fn oracle_dump(n: usize, rates: &Rates) -> Result<OracleDump> {
    Ok(OracleDump { n, rates: *rates, probs: stationary(n, rates)?, encoding: "bit i = site i+1" })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rates(alpha: f64, beta: f64, gamma: f64, delta: f64, q: f64) -> Rates {
        Rates { alpha, beta, gamma, delta, q }
    }

    #[test]
    fn tasep_two_sites_golden() {
        // (tau_1, tau_2) = 00, 01, 10, 11; index bit 0 is tau_1
        let p = stationary(2, &rates(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        let by_sites = [p[0b00], p[0b10], p[0b01], p[0b11]];
        for (a, b) in by_sites.iter().zip([0.2, 0.2, 0.4, 0.2]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_site() {
        let r = rates(0.3, 0.5, 0.2, 0.1, 0.4);
        let p = stationary(1, &r).unwrap();
        let occ = (r.alpha + r.delta) / (r.alpha + r.delta + r.beta + r.gamma);
        assert!((p[1] - occ).abs() < 1e-14);
    }

    #[test]
    fn size_cap() {
        assert!(matches!(stationary(15, &rates(1.0, 1.0, 0.0, 0.0, 0.0)), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn residual_tiny_and_normalized() {
        let r = rates(0.7, 0.4, 0.1, 0.05, 0.3);
        let g = build_generator(8, &r).unwrap();
        let p = stationary(8, &r).unwrap();
        assert!(g.residual(&p) <= 1e-12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn iterative_agrees_with_dense() {
        let r = rates(0.9, 0.6, 0.2, 0.1, 0.4);
        let g = build_generator(7, &r).unwrap();
        let a = solve_dense(&g).unwrap();
        let b = solve_gauss_seidel(&g);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn height_moments_consistent() {
        let p = stationary(3, &rates(1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        let (m, _) = oracle_height_moments(&p, 3);
        let one = oracle_one_point(&p, 3);
        assert!((m - one.iter().sum::<f64>()).abs() < 1e-14);
    }
}
