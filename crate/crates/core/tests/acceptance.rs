//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p asep-aw --test acceptance`.

use std::time::{Duration, Instant};

use asep_aw::asepmap::{classify_phase, particle_hole_rates, rates_to_abcd, BoundaryParams, Rates, Region};
use asep_aw::asymptotics::{
    cl_laplace_empirical, cl_laplace_limit, cl_laplace_monte_carlo, cl_laplace_quadrature, density_profile_prediction,
    frak_c0, frak_p0, hd_laplace_empirical, hd_laplace_limit, hd_variance_empirical, hd_variance_prediction, improves,
    loglog_slope, marginal_total_variation, zn_ratio, LaplaceGrid,
};
use asep_aw::awmeasure::{measure_build, orthogonality_norm};
use asep_aw::awpoly::{aw_eval_all, AwParams};
use asep_aw::multitime::{
    chapman_kolmogorov_residual, choose_times, delta_residual, marginal_measure, marginal_params, pin_integral,
    projection_residual, support_points, transition_measure, MeasureConfig, Point,
};
use asep_aw::oracle::{oracle_gen_fn, stationary};
use asep_aw::qcore::{compensated_sum, QReal, TruncationSpec};
use asep_aw::usw_mpa::{gen_fn, one_point, pi_n};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn bp(a: f64, b: f64, c: f64, d: f64, q: f64) -> BoundaryParams {
    BoundaryParams::new(a, b, c, d, QReal::new(q).unwrap()).unwrap()
}

fn cfg(nodes: usize) -> MeasureConfig {
    MeasureConfig { nodes, ..Default::default() }
}

#[derive(Debug, Clone, Copy)]
struct Case {
    bp: BoundaryParams,
    s: f64,
    t: f64,
}

/// Sixty parameter tuples with two admissible times each, spread over the
/// fan, high- and low-density shock, near-coexistence and zero-parameter
/// regimes.
fn corpus() -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    let mut kind = 0usize;
    while out.len() < 60 {
        let q = if kind % 7 == 3 { 0.0 } else { rng.gen_range(0.05..0.75) };
        let b = if kind % 5 == 0 { 0.0 } else { -rng.gen_range(0.0..0.7) };
        let d = if kind % 3 == 0 { 0.0 } else { -rng.gen_range(0.0..0.7) };
        let (a, c) = match kind % 5 {
            0 => (rng.gen_range(0.0..0.95), rng.gen_range(0.0..0.95)),
            1 => {
                let a: f64 = rng.gen_range(1.2..3.0);
                (a, rng.gen_range(1.1 / a..0.9 * a))
            }
            2 => {
                let c: f64 = rng.gen_range(1.2..3.0);
                (rng.gen_range(1.1 / c..0.9 * c), c)
            }
            3 => {
                let a: f64 = rng.gen_range(1.3..3.0);
                (a, a * (1.0 + rng.gen_range(-0.03..0.03)))
            }
            _ => (rng.gen_range(0.0..2.0), 0.0),
        };
        kind += 1;
        let Ok(p) = BoundaryParams::new(a, b, c, d, QReal::new(q).unwrap()) else { continue };
        let Ok((ts, _)) = choose_times(&p, 2, &cfg(20)) else { continue };
        out.push(Case { bp: p, s: ts[0], t: ts[1] });
    }
    out
}

fn sample_points(case: &Case) -> Vec<Point> {
    let mut pts = vec![Point::Interior(-0.83), Point::Interior(0.05), Point::Interior(0.71)];
    if let Ok(sup) = support_points(&case.bp, case.s, &cfg(20)) {
        pts.extend(sup.atoms.iter().take(2).map(|a| Point::Atom(a.0, a.1)));
    }
    let mut x = 0.97;
    while pts.len() < 5 {
        pts.push(Point::Interior(x));
        x = -x;
    }
    pts
}

fn c1_mass_one() -> Outcome {
    let cases = corpus();
    let nodes = cfg(400);
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut failures = Vec::new();
    for case in &cases {
        for t in [case.s, case.t] {
            match marginal_measure(&case.bp, t, &nodes) {
                Ok(m) => {
                    worst = worst.max((m.measure.total_mass - 1.0).abs());
                    count += 1;
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
        for x in sample_points(case) {
            match transition_measure(&case.bp, case.s, case.t, x, &nodes) {
                Ok(k) => {
                    worst = worst.max((k.measure.total_mass - 1.0).abs());
                    count += 1;
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
    }
    // conjugate-pair (c, d) measures do not arise from real boundary rates
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = 0;
    for k in 0..12 {
        let a = if k % 3 == 0 { rng.gen_range(1.1..2.5) } else { rng.gen_range(-0.9..0.9) };
        let b = rng.gen_range(-0.8..0.8);
        let c = Complex64::from_polar(rng.gen_range(0.2..0.95), rng.gen_range(0.1..3.0));
        let q = if k == 5 { 0.0 } else { rng.gen_range(0.05..0.7) };
        let Ok(p) = AwParams::new(a, b, c, c.conj(), QReal::new(q).unwrap()) else { continue };
        match measure_build(&p, 400, &TruncationSpec::default()) {
            Ok(m) => {
                worst = worst.max((m.total_mass - 1.0).abs());
                pairs += 1;
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    let regions = cases.iter().map(|c| classify_phase(&c.bp).1);
    let shocks = regions.clone().filter(|r| *r == Region::Shock).count();
    check(
        worst <= 1e-8 && failures.is_empty(),
        format!(
            "{count} measures over {} tuples ({shocks} shock), {pairs} conjugate-pair measures, max |mass - 1| = {worst:.2e}, {} build errors",
            cases.len(),
            failures.len()
        ),
    )
}

fn gram_check(p: &AwParams, nodes: usize) -> (f64, f64) {
    let m = measure_build(p, nodes, &TruncationSpec::default()).unwrap();
    let points: Vec<(f64, f64)> =
        m.atoms.iter().map(|a| (a.position, a.mass)).chain(m.nodes.iter().map(|n| (n.x, n.mass()))).collect();
    let vals: Vec<Vec<f64>> =
        points.iter().map(|(x, _)| aw_eval_all(*x, 6, p).unwrap().iter().map(|v| v.re).collect()).collect();
    let mut gram = [[0.0f64; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            gram[i][j] = compensated_sum(vals.iter().zip(&points).map(|(row, (_, w))| w * row[i] * row[j]));
        }
    }
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for i in 0..7 {
        let norm = orthogonality_norm(p, i).unwrap();
        diag = diag.max((gram[i][i] - norm).abs() / norm.abs());
        for j in 0..7 {
            if i != j {
                let scale = (gram[i][i] * gram[j][j]).abs().sqrt();
                off = off.max(gram[i][j].abs() / scale);
            }
        }
    }
    (off, diag)
}

fn c2_orthogonality() -> Outcome {
    let cases = corpus();
    let mut params: Vec<AwParams> = cases.iter().take(15).map(|c| marginal_params(&c.bp, c.t).unwrap()).collect();
    for c in cases.iter().skip(15).take(5) {
        let (cc, dd) = asep_aw::awpoly::kernel_pair(0.3, c.s, c.t);
        params.push(AwParams::new(c.bp.a * c.t.sqrt(), c.bp.b * c.t.sqrt(), cc, dd, c.bp.q).unwrap());
    }
    let (mut off, mut diag) = (0.0f64, 0.0f64);
    for p in &params {
        let (o, d) = gram_check(p, 400);
        off = off.max(o);
        diag = diag.max(d);
    }
    check(
        off <= 1e-7 && diag <= 1e-7,
        format!("{} points, m,k <= 6: max off-diagonal {off:.2e}, max diagonal rel. error {diag:.2e}", params.len()),
    )
}

fn c3_projection() -> Outcome {
    let fan = bp(0.7, -0.3, 0.9, -0.2, 0.4);
    let shock = bp(2.2, -0.2, 1.6, -0.3, 0.5);
    let hd_shock = bp(2.5, 0.0, 0.8, -0.1, 0.35);
    let nodes = cfg(400);
    let mut worst = 0.0f64;
    let mut atoms_seen = 0;
    for p in [fan, shock, hd_shock] {
        let (ts, _) = choose_times(&p, 2, &nodes).unwrap();
        let (s, t) = (ts[0], ts[1]);
        let mut pts: Vec<Point> = [-0.9, -0.4, 0.0, 0.55, 0.93].iter().map(|&x| Point::Interior(x)).collect();
        let sup = support_points(&p, s, &nodes).unwrap();
        atoms_seen += sup.atoms.len();
        pts.extend(sup.atoms.iter().map(|a| Point::Atom(a.0, a.1)));
        for x in pts {
            for m in 0..=5 {
                let r = projection_residual(&p, m, s, t, x, &nodes).unwrap();
                let scale = asep_aw::awpoly::proj_poly_eval(
                    asep_aw::multitime::point_position(&p, s, x),
                    m,
                    s,
                    p.as_array(),
                    p.q,
                )
                .unwrap()
                .abs()
                .max(1.0);
                worst = worst.max(r.abs() / scale);
            }
        }
    }
    check(worst <= 1e-7, format!("m <= 5, fan + shock points, {atoms_seen} atoms: max residual {worst:.2e}"))
}

fn c4_mpa_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    let mut tuples = 0;
    while tuples < 20 {
        let r = Rates {
            alpha: rng.gen_range(0.05..2.5),
            beta: rng.gen_range(0.05..2.5),
            gamma: if tuples % 4 == 0 { 0.0 } else { rng.gen_range(0.0..1.5) },
            delta: if tuples % 4 == 0 { 0.0 } else { rng.gen_range(0.0..1.5) },
            q: if tuples % 5 == 1 { 0.0 } else { rng.gen_range(0.0..0.9) },
        };
        let Ok(p) = rates_to_abcd(&r) else { continue };
        tuples += 1;
        for n in 1..=8 {
            let probs = stationary(n, &r).unwrap();
            for _ in 0..5 {
                let ts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
                let want = oracle_gen_fn(&probs, &ts);
                worst = worst.max((gen_fn(&p, &ts).unwrap() - want).abs() / want.abs());
            }
        }
    }
    let tasep = Rates { alpha: 1.0, beta: 1.0, gamma: 0.0, delta: 0.0, q: 0.0 };
    let probs = stationary(2, &tasep).unwrap();
    let golden = [probs[0b00], probs[0b10], probs[0b01], probs[0b11]];
    let golden_err = golden.iter().zip([0.2, 0.2, 0.4, 0.2]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let a = 1.6;
    let product = bp(a, -0.2, 1.0 / a, -0.4, 0.3);
    let rho = a / (1.0 + a);
    let ts: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..3.0)).collect();
    let want: f64 = ts.iter().map(|t| 1.0 + rho * (t - 1.0)).product();
    let bern_err = (gen_fn(&product, &ts).unwrap() - want).abs() / want;
    check(
        worst <= 1e-9 && golden_err <= 1e-12 && bern_err <= 1e-12,
        format!("{tuples} rate tuples, n <= 8: max rel. error {worst:.2e}; TASEP n=2 {golden_err:.1e}; AC=1 product {bern_err:.1e}"),
    )
}

fn c5_pin_integral() -> Outcome {
    let points = [bp(2.0, -0.2, 1.5, -0.1, 0.5), bp(1.8, 0.0, 2.4, -0.3, 0.4), bp(2.5, -0.1, 0.7, 0.0, 0.3)];
    let nodes = cfg(400);
    let mut worst = 0.0f64;
    for p in &points {
        for n in 1..=4 {
            let (ts, _) = choose_times(p, n, &nodes).unwrap();
            let got = pin_integral(p, &ts, &nodes).unwrap();
            let want = pi_n(p, &ts).unwrap().to_f64();
            worst = worst.max((got - want).abs() / want.abs());
        }
    }
    check(worst <= 1e-5, format!("3 shock points, n <= 4, 400 nodes: max rel. error {worst:.2e}"))
}

fn c6_partition_asymptotics() -> Outcome {
    let hd = bp(2.0, 0.0, 0.4, 0.0, 0.5);
    let hd_err = (zn_ratio(200, &hd).unwrap() - 1.0).abs();
    let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
    let e1000 = (zn_ratio(1000, &cl).unwrap() - 1.0).abs();
    let e2000 = (zn_ratio(2000, &cl).unwrap() - 1.0).abs();
    let positive = frak_p0(&hd).unwrap() > 0.0 && frak_c0(&cl).unwrap() > 0.0;
    check(
        hd_err <= 0.005 && e1000 <= 0.02 && improves(e1000, e2000) && positive,
        format!("HD n=200 error {hd_err:.2e}; coexistence n=1000 {e1000:.2e}, n=2000 {e2000:.2e}"),
    )
}

fn max_profile_dev(p: &BoundaryParams, n: usize) -> f64 {
    one_point(p, n)
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, v)| (v - density_profile_prediction((i + 1) as f64 / n as f64, p).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn c7_profiles() -> Outcome {
    let hd = bp(2.0, 0.0, 0.4, 0.0, 0.5);
    let occ = one_point(&hd, 500).unwrap();
    let hd_err = (occ[249] - 2.0 / 3.0).abs();
    let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
    let d200 = max_profile_dev(&cl, 200);
    let d400 = max_profile_dev(&cl, 400);
    check(
        hd_err <= 1e-3 && d400 <= 5e-2 && d400 < d200,
        format!("HD n=500 site 250 error {hd_err:.2e}; coexistence max deviation n=200 {d200:.3e}, n=400 {d400:.3e}"),
    )
}

fn c8_fluctuations() -> Outcome {
    let hd = bp(2.0, 0.0, 0.4, 0.0, 0.5);
    let var = hd_variance_empirical(200, 1.0, &hd).unwrap();
    let want = hd_variance_prediction(1.0, hd.a);
    let var_err = (var / want - 1.0).abs();
    let g = LaplaceGrid::new(vec![0.3, 0.65, 1.0], vec![0.5, 0.7, 0.6]).unwrap();
    let lap = hd_laplace_empirical(400, &g, &hd).unwrap() / hd_laplace_limit(&g, hd.a).unwrap();
    let lap_err = (lap - 1.0).abs();
    check(
        var_err <= 0.05 && lap_err <= 0.02 && g.satisfies_spacing(),
        format!("HD n=200 Var(h(1))/n relative error {var_err:.2e}; n=400 Laplace ratio error {lap_err:.2e}"),
    )
}

fn c9_coexistence_laplace() -> Outcome {
    let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
    let g = LaplaceGrid::new(vec![0.35, 1.0], vec![0.4, 0.6]).unwrap();
    let limit = cl_laplace_limit(&g, cl.a).unwrap();
    let e400 = (cl_laplace_empirical(400, &g, &cl).unwrap() / limit - 1.0).abs();
    let e800 = (cl_laplace_empirical(800, &g, &cl).unwrap() / limit - 1.0).abs();
    let mc = cl_laplace_monte_carlo(&g, cl.a, 10_000_000, 7);
    let z = (mc.mean - limit).abs() / mc.std_err;
    let quad = (cl_laplace_quadrature(&g, cl.a) - limit).abs();
    check(
        e400 <= 0.05 && e800 < e400 && z <= 3.0 && quad <= 1e-10,
        format!("n=400 error {e400:.2e}, n=800 {e800:.2e}; Monte Carlo |z| = {z:.2}; U-quadrature {quad:.1e}"),
    )
}

fn c10_total_variation() -> Outcome {
    let cl = bp(2.0, 0.0, 2.0, 0.0, 0.5);
    let ns = [10usize, 20, 40, 80, 160, 320];
    let nodes = cfg(200);
    let tvs: Vec<f64> = ns.iter().map(|&n| marginal_total_variation(&cl, 1.0, n, &nodes).unwrap()).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &tvs);
    check(slope <= 2.2, format!("TV at t = exp(-1/n), n = 10..320: {:.3e} .. {:.3e}, slope {slope:.3}", tvs[0], tvs[5]))
}

fn c11_structure() -> Outcome {
    let nodes = cfg(300);
    let mut delta = 0.0f64;
    for p in [bp(2.0, -0.2, 1.5, -0.1, 0.5), bp(2.0, 0.0, 2.0, 0.0, 0.5), bp(3.0, -0.4, 0.2, 0.0, 0.2)] {
        let (ts, _) = choose_times(&p, 2, &nodes).unwrap();
        delta = delta.max(delta_residual(&p, ts[0], ts[1], &nodes).unwrap());
    }
    let mut ck = 0.0f64;
    for p in [bp(0.6, -0.3, 0.5, -0.2, 0.3), bp(2.0, -0.2, 1.5, -0.1, 0.5)] {
        let (ts, _) = choose_times(&p, 3, &nodes).unwrap();
        let mut pts = vec![Point::Interior(-0.5), Point::Interior(0.4)];
        let sup = support_points(&p, ts[0], &nodes).unwrap();
        pts.extend(sup.atoms.iter().map(|a| Point::Atom(a.0, a.1)));
        for x in pts {
            for k in 0..3 {
                let r = chapman_kolmogorov_residual(&p, ts[0], ts[1], ts[2], x, |z| z.powi(k), &nodes).unwrap();
                ck = ck.max(r.abs());
            }
        }
    }
    let r = Rates { alpha: 0.7, beta: 1.3, gamma: 0.2, delta: 0.45, q: 0.35 };
    let n = 4;
    let direct = stationary(n, &r).unwrap();
    let dual = stationary(n, &particle_hole_rates(&r)).unwrap();
    let flip = |s: usize| (0..n).fold(0usize, |acc, i| if s >> i & 1 == 0 { acc | 1 << (n - 1 - i) } else { acc });
    let ph = (0..1usize << n).map(|s| (direct[s] - dual[flip(s)]).abs()).fold(0.0, f64::max);
    check(
        delta <= 1e-9 && ck <= 1e-6 && ph <= 1e-12,
        format!("delta property {delta:.1e}; Chapman-Kolmogorov on 1, x, x^2 {ck:.1e}; particle-hole n=4 {ph:.1e}"),
    )
}

fn main() {
    type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("C1", "total mass one", 30, c1_mass_one),
        ("C2", "orthogonality", 60, c2_orthogonality),
        ("C3", "projection formula", 60, c3_projection),
        ("C4", "matrix product vs brute force", 120, c4_mpa_oracle),
        ("C5", "signed-measure integral vs matrix product", 180, c5_pin_integral),
        ("C6", "partition function asymptotics", 60, c6_partition_asymptotics),
        ("C7", "density profiles", 120, c7_profiles),
        ("C8", "high-density fluctuations", 300, c8_fluctuations),
        ("C9", "coexistence Laplace transform", 180, c9_coexistence_laplace),
        ("C10", "total-variation growth", 60, c10_total_variation),
        ("C11", "structural identities", 60, c11_structure),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            check(false, format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let in_budget = elapsed <= Duration::from_secs(budget);
        let pass = outcome.pass && in_budget;
        if !pass {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {} ({:.1}s, budget {budget}s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
