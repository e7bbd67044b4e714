use anyhow::{bail, Result};
use asep_aw::asepmap::{classify_phase_with, particle_hole, BoundaryParams, Phase, Region};
use asep_aw::asymptotics::{density_profile_prediction, hd_variance_prediction, improves, zn_prediction};
use asep_aw::multitime::{marginal_measure, pin_integral, resolve_point, transition_measure, LabeledMeasure};
use asep_aw::oracle::{oracle_gen_fn, stationary, MAX_SITES};
use asep_aw::usw_mpa::{gen_fn, height_covariance, height_moments, one_point, partition, pi_n};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{Cell, Report, Table};

fn phase_of(bp: &BoundaryParams, cfg: &RunConfig) -> (Phase, Region) {
    classify_phase_with(bp, cfg.measure.tol_grid)
}

pub fn phase(cfg: &RunConfig) -> Result<Report> {
    let p = cfg.params()?;
    let bp = &p.abcd;
    let (phase, region) = phase_of(bp, cfg);
    let bernoulli = region == Region::Boundary;
    let t1 = marginal_measure(bp, 1.0, &cfg.measure);
    let json = json!({
        "rates": p.rates,
        "abcd": { "A": bp.a, "B": bp.b, "C": bp.c, "D": bp.d, "q": bp.q.get() },
        "phase": phase.to_string(),
        "region": region.to_string(),
        "bernoulli_product": bernoulli,
        "t1_measure": t1.as_ref().map(|_| "ok".to_string()).unwrap_or_else(|e| e.to_string()),
        "time_interval": if phase == Phase::Coexistence { "one-sided (1 - eps, 1)" } else { "two-sided around 1" },
    });
    let mut table = Table::new(vec![
        "alpha", "beta", "gamma", "delta", "q", "A", "B", "C", "D", "phase", "region", "bernoulli_product",
        "t1_admissible",
    ]);
    let r = &p.rates;
    table.push(vec![
        r.alpha.into(),
        r.beta.into(),
        r.gamma.into(),
        r.delta.into(),
        r.q.into(),
        bp.a.into(),
        bp.b.into(),
        bp.c.into(),
        bp.d.into(),
        phase.to_string().into(),
        region.to_string().into(),
        bernoulli.into(),
        t1.is_ok().into(),
    ]);
    Ok(Report { json, table })
}

fn config_string(state: usize, n: usize) -> String {
    (0..n).map(|i| if state >> i & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn stationary_cmd(cfg: &RunConfig, n: usize, samples: usize, seed: u64) -> Result<Report> {
    let p = cfg.params()?;
    if n > MAX_SITES {
        bail!(asep_aw::Error::SizeCap { n, cap: MAX_SITES });
    }
    let probs = stationary(n, &p.rates)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for _ in 0..samples {
        let ts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let oracle = oracle_gen_fn(&probs, &ts);
        let mpa = gen_fn(&p.abcd, &ts)?;
        checks.push(json!({ "ts": ts, "oracle": oracle, "matrix_product": mpa, "abs_diff": (oracle - mpa).abs() }));
    }
    let max_diff = checks.iter().filter_map(|c| c["abs_diff"].as_f64()).fold(0.0, f64::max);
    let bernoulli = phase_of(&p.abcd, cfg).1 == Region::Boundary;
    let mut table = Table::new(vec!["state", "configuration", "probability"]);
    for (s, pr) in probs.iter().enumerate() {
        table.push(vec![s.into(), config_string(s, n).into(), (*pr).into()]);
    }
    let json = json!({
        "n": n,
        "rates": p.rates,
        "probs": probs,
        "encoding": "bit i = site i+1",
        "states": table.to_json(),
        "crosscheck": checks,
        "crosscheck_max_abs_diff": max_diff,
        "bernoulli_product": bernoulli,
        "bernoulli_density": bernoulli.then(|| p.abcd.a / (1.0 + p.abcd.a)),
    });
    Ok(Report { json, table })
}

fn measure_table(m: &LabeledMeasure) -> Table {
    let mut table = Table::new(vec!["kind", "label", "level", "x", "weight", "density", "mass"]);
    for (a, (label, level)) in m.measure.atoms.iter().zip(&m.labels) {
        table.push(vec![
            "atom".into(),
            format!("{label:?}").into(),
            (*level).into(),
            a.position.into(),
            Cell::Empty,
            Cell::Empty,
            a.mass.into(),
        ]);
    }
    for n in &m.measure.nodes {
        table.push(vec!["node".into(), Cell::Empty, Cell::Empty, n.x.into(), n.w.into(), n.f.into(), n.mass().into()]);
    }
    table
}

pub fn measure(cfg: &RunConfig, t: f64) -> Result<Report> {
    let p = cfg.params()?;
    let m = marginal_measure(&p.abcd, t, &cfg.measure)?;
    let json = json!({ "t": t, "measure": m.measure, "labels": m.labels });
    Ok(Report { json, table: measure_table(&m) })
}

pub fn kernel(cfg: &RunConfig, s: f64, t: f64, x: f64) -> Result<Report> {
    let p = cfg.params()?;
    let point = resolve_point(&p.abcd, s, x, &cfg.measure)?;
    let k = transition_measure(&p.abcd, s, t, point, &cfg.measure)?;
    let json = json!({ "s": s, "t": t, "x": x, "start": point, "measure": k.measure, "labels": k.labels });
    Ok(Report { json, table: measure_table(&k) })
}

pub fn pi(cfg: &RunConfig, ts: &[f64]) -> Result<Report> {
    let p = cfg.params()?;
    let mpa = pi_n(&p.abcd, ts)?;
    let z = partition(&p.abcd, ts.len())?;
    let integral = pin_integral(&p.abcd, ts, &cfg.measure);
    let rel = integral.as_ref().ok().map(|v| (v - mpa.to_f64()).abs() / mpa.to_f64().abs());
    let json = json!({
        "ts": ts,
        "matrix_product": mpa.to_f64(),
        "ln_matrix_product": mpa.ln_abs,
        "generating_function": mpa.ratio(z),
        "signed_measure_integral": integral.as_ref().ok(),
        "measure_error": integral.as_ref().err().map(|e| e.to_string()),
        "relative_difference": rel,
    });
    let mut table = Table::new(vec!["n", "matrix_product", "signed_measure_integral", "relative_difference"]);
    table.push(vec![ts.len().into(), mpa.to_f64().into(), integral.ok().into(), rel.into()]);
    Ok(Report { json, table })
}

pub fn profile(cfg: &RunConfig, n: usize) -> Result<Report> {
    let p = cfg.params()?;
    let occ = one_point(&p.abcd, n)?;
    let mut table = Table::new(vec!["site", "x", "density", "prediction"]);
    for (i, v) in occ.iter().enumerate() {
        let x = (i + 1) as f64 / n as f64;
        table.push(vec![(i + 1).into(), x.into(), (*v).into(), density_profile_prediction(x, &p.abcd).ok().into()]);
    }
    let (phase, _) = phase_of(&p.abcd, cfg);
    let json = json!({ "n": n, "phase": phase.to_string(), "profile": table.to_json() });
    Ok(Report { json, table })
}

fn variance_prediction(bp: &BoundaryParams, phase: Phase, x: f64) -> Option<f64> {
    match phase {
        Phase::HighDensity => Some(hd_variance_prediction(x, bp.a)),
        Phase::LowDensity => Some(hd_variance_prediction(x, particle_hole(bp).a)),
        _ => None,
    }
}

pub fn fluct(cfg: &RunConfig, n: usize, xs: &[f64]) -> Result<Report> {
    let p = cfg.params()?;
    if xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
        bail!("positions must lie in [0, 1]");
    }
    let ks: Vec<usize> = xs.iter().map(|x| (n as f64 * x).floor() as usize).collect();
    let (phase, _) = phase_of(&p.abcd, cfg);
    let moments = ks.par_iter().map(|&k| height_moments(&p.abcd, n, k)).collect::<Result<Vec<_>, _>>()?;
    let cov = height_covariance(&p.abcd, n, &ks)?;
    let mut table = Table::new(vec!["x", "k", "mean", "variance", "variance_over_n", "prediction"]);
    for ((x, k), (mean, var)) in xs.iter().zip(&ks).zip(&moments) {
        table.push(vec![
            (*x).into(),
            (*k).into(),
            (*mean).into(),
            (*var).into(),
            (var / n as f64).into(),
            variance_prediction(&p.abcd, phase, *x).into(),
        ]);
    }
    let json = json!({ "n": n, "phase": phase.to_string(), "heights": table.to_json(), "covariance": cov });
    Ok(Report { json, table })
}

pub fn asymptote(cfg: &RunConfig, ns: &[usize]) -> Result<Report> {
    let p = cfg.params()?;
    let rows = ns
        .par_iter()
        .map(|&n| Ok((n, partition(&p.abcd, n)?, zn_prediction(n, &p.abcd)?)))
        .collect::<Result<Vec<_>, asep_aw::Error>>()?;
    let mut table = Table::new(vec!["n", "ln_zn", "ln_prediction", "ratio", "trend_pass"]);
    let mut prev: Option<(usize, f64)> = None;
    for (n, z, pred) in rows {
        let ratio = z.ratio(pred);
        let err = (ratio - 1.0).abs();
        let trend = prev.filter(|(pn, _)| 2 * pn == n).map(|(_, pe)| improves(pe, err));
        table.push(vec![n.into(), z.ln_abs.into(), pred.ln_abs.into(), ratio.into(), trend.into()]);
        prev = Some((n, err));
    }
    let (phase, _) = phase_of(&p.abcd, cfg);
    let json = json!({ "phase": phase.to_string(), "rows": table.to_json() });
    Ok(Report { json, table })
}
