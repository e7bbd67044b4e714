//! Built-in verification suites. Each check records a measured residual and
//! the tolerance it must meet.

use asep_aw::asepmap::{BoundaryParams, Rates};
use asep_aw::asymptotics::{
    brownian_laplace, cl_laplace_limit, cl_laplace_monte_carlo, cl_laplace_quadrature, hd_laplace_limit, improves,
    zn_ratio, LaplaceGrid,
};
use asep_aw::awmeasure::{measure_build, orthogonality_norm};
use asep_aw::awpoly::{aw_eval_all, AwParams};
use asep_aw::multitime::{
    choose_times, delta_residual, marginal_measure, marginal_params, pin_integral, projection_residual,
    support_points, transition_measure, Label, MeasureConfig, Point,
};
use asep_aw::oracle::{oracle_gen_fn, stationary};
use asep_aw::qcore::{compensated_sum, phi43, qpoch_finite, qpoch_inf_re, QReal};
use asep_aw::usw_mpa::{gen_fn, pi_n};
use clap::ValueEnum;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::{Report, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Qseries,
    Measure,
    Projection,
    MpaOracle,
    Theorem1,
    Asymptote,
    All,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
    pub error: Option<String>,
}

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: &'static str) -> Self {
        Self { suite, checks: Vec::new() }
    }

    fn record(&mut self, name: impl Into<String>, value: asep_aw::Result<f64>, tol: f64) {
        let name = name.into();
        let check = match value {
            Ok(v) => Check { suite: self.suite, name, value: v, tol, pass: v.abs() <= tol, error: None },
            Err(e) => {
                Check { suite: self.suite, name, value: f64::NAN, tol, pass: false, error: Some(e.to_string()) }
            }
        };
        self.checks.push(check);
    }
}

fn bp(a: f64, b: f64, c: f64, d: f64, q: f64) -> BoundaryParams {
    BoundaryParams::new(a, b, c, d, QReal::new(q).expect("valid q")).expect("valid boundary parameters")
}

fn qseries() -> Vec<Check> {
    let mut r = Recorder::new("qseries");
    let q = QReal::new(0.5).expect("valid q");
    let trunc = Default::default();
    let euler_series = {
        // sum_k (-1)^k q^(k(k-1)/2) z^k / (q; q)_k at z = 1/4
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for k in 1..60 {
            term *= -0.25 * 0.5f64.powi(k - 1) / (1.0 - 0.5f64.powi(k));
            sum += term;
        }
        sum
    };
    r.record("(1/4; 1/2)_inf against Euler series", qpoch_inf_re(0.25, q, &trunc).map(|v| v - euler_series), 1e-14);
    let euler = qpoch_inf_re(0.5, q, &trunc).map(|v| {
        // pentagonal number theorem
        let series: f64 = (-30i32..=30)
            .map(|k| {
                let e = (k * (3 * k - 1) / 2) as f64;
                if k % 2 == 0 { 0.5f64.powf(e) } else { -0.5f64.powf(e) }
            })
            .sum();
        v - series
    });
    r.record("pentagonal identity", euler, 1e-14);
    let qv = 0.3;
    let qq = QReal::new(qv).expect("valid q");
    let c = |x: f64| Complex64::new(x, 0.0);
    for n in 1..=5usize {
        // q-Saalschutz: 3phi2(q^-n, a, b; c, abq^(1-n)/c; q, q)
        let (a, b, cc) = (0.4, -0.7, 0.25);
        let qn = qv.powi(-(n as i32));
        let lhs = phi43(
            [c(qn), c(a), c(b), c(0.0)],
            [c(cc), c(a * b * qv.powi(1 - n as i32) / cc), c(0.0)],
            qq,
            c(qv),
            &trunc,
        );
        let rhs = qpoch_finite(c(cc / a), qq, n) * qpoch_finite(c(cc / b), qq, n)
            / (qpoch_finite(c(cc), qq, n) * qpoch_finite(c(cc / (a * b)), qq, n));
        r.record(format!("q-Saalschutz sum, n = {n}"), lhs.map(|v| (v - rhs).norm() / rhs.norm()), 1e-12);
    }
    r.checks
}

fn corpus() -> Vec<BoundaryParams> {
    vec![
        bp(0.6, -0.3, 0.5, -0.2, 0.3),
        bp(2.0, -0.2, 1.5, -0.1, 0.5),
        bp(2.0, 0.0, 0.4, 0.0, 0.5),
        bp(0.4, -0.1, 2.2, 0.0, 0.45),
        bp(2.0, 0.0, 2.1, -0.3, 0.5),
        bp(1.7, -0.5, 0.0, 0.0, 0.0),
        bp(0.0, 0.0, 0.0, 0.0, 0.6),
    ]
}

fn gram_residual(p: &AwParams, nodes: usize) -> asep_aw::Result<f64> {
    let m = measure_build(p, nodes, &Default::default())?;
    let pts: Vec<(f64, f64)> =
        m.atoms.iter().map(|a| (a.position, a.mass)).chain(m.nodes.iter().map(|n| (n.x, n.mass()))).collect();
    let vals = pts.iter().map(|(x, _)| aw_eval_all(*x, 4, p)).collect::<asep_aw::Result<Vec<_>>>()?;
    let gram = |i: usize, j: usize| compensated_sum(pts.iter().zip(&vals).map(|((_, w), v)| w * v[i].re * v[j].re));
    let mut worst = 0.0f64;
    for i in 0..=4 {
        let gii = gram(i, i);
        worst = worst.max((gii / orthogonality_norm(p, i)? - 1.0).abs());
        for j in 0..i {
            worst = worst.max(gram(i, j).abs() / (gii * gram(j, j)).abs().sqrt());
        }
    }
    Ok(worst)
}

fn measure_suite(cfg: &MeasureConfig) -> Vec<Check> {
    let mut r = Recorder::new("measure");
    for (i, p) in corpus().iter().enumerate() {
        let times = choose_times(p, 2, cfg);
        let Ok((ts, _)) = times else {
            r.record(format!("corpus {i}: time window"), times.map(|_| 0.0), 0.0);
            continue;
        };
        r.record(
            format!("corpus {i}: marginal mass at t = {:.4}", ts[1]),
            marginal_measure(p, ts[1], cfg).map(|m| m.measure.total_mass - 1.0),
            1e-8,
        );
        for x in [-0.6, 0.2, 0.9] {
            r.record(
                format!("corpus {i}: kernel mass from x = {x}"),
                transition_measure(p, ts[0], ts[1], Point::Interior(x), cfg).map(|k| k.measure.total_mass - 1.0),
                1e-8,
            );
        }
        if let Ok(aw) = marginal_params(p, ts[1]) {
            r.record(format!("corpus {i}: orthogonality m, k <= 4"), gram_residual(&aw, cfg.nodes), 1e-7);
        }
    }
    r.checks
}

fn projection_suite(cfg: &MeasureConfig) -> Vec<Check> {
    let mut r = Recorder::new("projection");
    for (i, p) in [bp(0.7, -0.3, 0.9, -0.2, 0.4), bp(2.2, -0.2, 1.6, -0.3, 0.5)].iter().enumerate() {
        let Ok((ts, _)) = choose_times(p, 2, cfg) else { continue };
        let mut pts: Vec<Point> = [-0.8, 0.1, 0.9].iter().map(|&x| Point::Interior(x)).collect();
        let atoms = support_points(p, ts[0], cfg).map(|s| s.atoms).unwrap_or_default();
        pts.extend(atoms.iter().map(|a| Point::Atom(a.0, a.1)));
        let has_a_atom = atoms.iter().any(|a| a.0 == Label::A && a.1 == 0);
        for x in pts {
            let worst = (0..=5).try_fold(0.0f64, |acc, m| {
                projection_residual(p, m, ts[0], ts[1], x, cfg).map(|v| acc.max(v.abs()))
            });
            r.record(format!("point {i}: start {x:?}, m <= 5"), worst, 1e-7);
        }
        if has_a_atom {
            r.record(format!("point {i}: delta property"), delta_residual(p, ts[0], ts[1], cfg), 1e-9);
        }
    }
    r.checks
}

fn mpa_oracle_suite() -> Vec<Check> {
    let mut r = Recorder::new("mpa-oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for case in 0..8 {
        let rates = Rates {
            alpha: rng.gen_range(0.1..2.0),
            beta: rng.gen_range(0.1..2.0),
            gamma: if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..1.0) },
            delta: if case % 3 == 0 { 0.0 } else { rng.gen_range(0.0..1.0) },
            q: if case % 4 == 1 { 0.0 } else { rng.gen_range(0.0..0.8) },
        };
        let worst = (1..=6).try_fold(0.0f64, |acc, n| {
            let probs = stationary(n, &rates)?;
            let p = asep_aw::asepmap::rates_to_abcd(&rates)?;
            let ts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.5)).collect();
            let want = oracle_gen_fn(&probs, &ts);
            Ok(acc.max((gen_fn(&p, &ts)? - want).abs() / want))
        });
        r.record(format!("random rates {case}, n <= 6"), worst, 1e-9);
    }
    let tasep = Rates { alpha: 1.0, beta: 1.0, gamma: 0.0, delta: 0.0, q: 0.0 };
    r.record(
        "TASEP n = 2 distribution",
        stationary(2, &tasep).map(|p| {
            [p[0b00] - 0.2, p[0b10] - 0.2, p[0b01] - 0.4, p[0b11] - 0.2].iter().map(|v| v.abs()).fold(0.0, f64::max)
        }),
        1e-12,
    );
    r.checks
}

fn theorem1_suite(cfg: &MeasureConfig, n_max: usize) -> Vec<Check> {
    let mut r = Recorder::new("theorem1");
    for (i, p) in [bp(2.0, -0.2, 1.5, -0.1, 0.5), bp(0.6, -0.3, 0.5, -0.2, 0.3)].iter().enumerate() {
        for n in 1..=n_max {
            let value = choose_times(p, n, cfg).and_then(|(ts, _)| {
                let want = pi_n(p, &ts)?.to_f64();
                Ok((pin_integral(p, &ts, cfg)? - want) / want)
            });
            r.record(format!("point {i}: n = {n}"), value, 1e-5);
        }
    }
    r.checks
}

fn asymptote_suite() -> Vec<Check> {
    let mut r = Recorder::new("asymptote");
    let hd = bp(2.0, 0.0, 0.4, 0.0, 0.5);
    r.record("HD partition ratio, n = 200", zn_ratio(200, &hd).map(|v| v - 1.0), 0.005);
    let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
    let trend = zn_ratio(500, &cl).and_then(|a| {
        let b = zn_ratio(1000, &cl)?;
        Ok(if improves(a - 1.0, b - 1.0) { 0.0 } else { 1.0 })
    });
    r.record("coexistence partition ratio improves from n = 500 to 1000", trend, 0.0);
    let g = LaplaceGrid::new(vec![0.3, 0.65, 1.0], vec![0.5, 0.7, 0.6]).expect("valid grid");
    r.record(
        "HD limit equals Brownian transform",
        hd_laplace_limit(&g, 2.0).map(|v| v - brownian_laplace(&g, 2.0)),
        1e-12,
    );
    r.record(
        "coexistence limit equals U-quadrature",
        cl_laplace_limit(&g, 2.0).map(|v| v - cl_laplace_quadrature(&g, 2.0)),
        1e-10,
    );
    let mc = cl_laplace_monte_carlo(&g, 2.0, 1_000_000, 7);
    r.record("coexistence limit vs Monte Carlo (standard errors)", cl_laplace_limit(&g, 2.0).map(|v| (v - mc.mean) / mc.std_err), 3.0);
    r.checks
}

pub fn run(suite: Suite, cfg: &MeasureConfig, n_max: usize) -> Vec<Check> {
    match suite {
        Suite::Qseries => qseries(),
        Suite::Measure => measure_suite(cfg),
        Suite::Projection => projection_suite(cfg),
        Suite::MpaOracle => mpa_oracle_suite(),
        Suite::Theorem1 => theorem1_suite(cfg, n_max),
        Suite::Asymptote => asymptote_suite(),
        Suite::All => [Suite::Qseries, Suite::Measure, Suite::Projection, Suite::MpaOracle, Suite::Theorem1, Suite::Asymptote]
            .into_iter()
            .flat_map(|s| run(s, cfg, n_max))
            .collect(),
    }
}

pub fn report(checks: &[Check]) -> Report {
    let mut table = Table::new(vec!["suite", "check", "value", "tolerance", "pass", "error"]);
    for c in checks {
        table.push(vec![
            c.suite.into(),
            c.name.clone().into(),
            c.value.into(),
            c.tol.into(),
            c.pass.into(),
            c.error.clone().into(),
        ]);
    }
    let passed = checks.iter().all(|c| c.pass);
    let json = serde_json::json!({ "passed": passed, "checks": checks });
    Report { json, table }
}

/// Aligned text table for a terminal.
pub fn human_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        let status = if c.pass { "ok  " } else { "FAIL" };
        let detail = c.error.clone().unwrap_or_else(|| format!("{:.3e} (tol {:.1e})", c.value, c.tol));
        out.push_str(&format!("{status} {:<11} {:<width$}  {detail}\n", c.suite, c.name));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    out.push_str(&format!("{} checks, {failed} failed\n", checks.len()));
    out
}
