//! `asep-aw`: stationary measures, Askey-Wilson signed measures and
//! asymptotics for open ASEP from the command line.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides, RateBlock, RunConfig};
use output::{emit, OutFormat};
use verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "asep-aw", version, about = "Open ASEP stationary measures via Askey-Wilson signed measures")]
struct Cli {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Boundary rates alpha,beta,gamma,delta
    #[arg(long, global = true, value_name = "a,b,g,d", value_parser = parse_four, conflicts_with = "abcd")]
    rates: Option<[f64; 4]>,

    /// Askey-Wilson parameters A,B,C,D
    #[arg(long, global = true, value_name = "A,B,C,D", value_parser = parse_four)]
    abcd: Option<[f64; 4]>,

    /// Asymmetry q in [0, 1)
    #[arg(long, global = true)]
    q: Option<f64>,

    /// Gauss-Legendre nodes for the continuous part [default: 200]
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,

    /// Relative truncation threshold for q-series [default: 1e-15]
    #[arg(long, global = true)]
    trunc_eps: Option<f64>,

    /// Tolerance for deciding that a parameter sits on a singular grid [default: 1e-9]
    #[arg(long, global = true)]
    tol_grid: Option<f64>,

    /// Largest number of times accepted by the signed-measure integral [default: 5]
    #[arg(long, global = true)]
    max_times: Option<usize>,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    out: OutFormat,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Phase, region and parameter conversion.
    /// CSV columns: alpha, beta, gamma, delta, q, A, B, C, D, phase, region,
    /// bernoulli_product, t1_admissible
    Phase,

    /// Exact stationary distribution on n <= 14 sites, cross-checked against
    /// the matrix product.
    /// CSV columns: state, configuration, probability
    Stationary {
        #[arg(long)]
        n: usize,
        /// Random generating-function cross-checks
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Marginal signed measure at time t.
    /// CSV columns: kind, label, level, x, weight, density, mass
    Measure {
        #[arg(long)]
        t: f64,
    },

    /// Transition signed measure from x at time s to time t.
    /// CSV columns: kind, label, level, x, weight, density, mass
    Kernel {
        #[arg(long)]
        s: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
    },

    /// Unnormalized generating function by matrix product and by integration
    /// against the signed measures.
    /// CSV columns: n, matrix_product, signed_measure_integral, relative_difference
    Pi {
        #[arg(long, value_delimiter = ',', required = true)]
        ts: Vec<f64>,
    },

    /// Density profile.
    /// CSV columns: site, x, density, prediction
    Profile {
        #[arg(long)]
        n: usize,
    },

    /// Height function mean and variance at positions x in [0, 1].
    /// CSV columns: x, k, mean, variance, variance_over_n, prediction
    Fluct {
        #[arg(long)]
        n: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        xs: Vec<f64>,
    },

    /// Partition function against its large-n prediction.
    /// CSV columns: n, ln_zn, ln_prediction, ratio, trend_pass
    Asymptote {
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
    },

    /// Built-in numerical checks. JSON report on stdout, summary on stderr;
    /// exits nonzero if any check fails.
    /// CSV columns: suite, check, value, tolerance, pass, error
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Largest n for the signed-measure integral checks
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

fn parse_four(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated numbers, got {}", v.len()))
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        rates: cli.rates.map(|[alpha, beta, gamma, delta]| RateBlock { alpha, beta, gamma, delta }),
        abcd: cli.abcd,
        q: cli.q,
        quad_nodes: cli.quad_nodes,
        trunc_eps: cli.trunc_eps,
        tol_grid: cli.tol_grid,
        threads: cli.threads,
        max_times: cli.max_times,
    };
    RunConfig::resolve(file, overrides)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = resolve(&cli)?;
    if let Some(threads) = cfg.threads {
        if threads == 0 {
            bail!("threads must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("building thread pool")?;
    }
    let report = match &cli.command {
        Command::Phase => commands::phase(&cfg)?,
        Command::Stationary { n, samples, seed } => commands::stationary_cmd(&cfg, *n, *samples, *seed)?,
        Command::Measure { t } => commands::measure(&cfg, *t)?,
        Command::Kernel { s, t, x } => commands::kernel(&cfg, *s, *t, *x)?,
        Command::Pi { ts } => commands::pi(&cfg, ts)?,
        Command::Profile { n } => commands::profile(&cfg, *n)?,
        Command::Fluct { n, xs } => commands::fluct(&cfg, *n, xs)?,
        Command::Asymptote { ns } => commands::asymptote(&cfg, ns)?,
        Command::Verify { suite, n } => {
            let checks = verify::run(*suite, &cfg.measure, *n);
            eprint!("{}", verify::human_table(&checks));
            emit(&verify::report(&checks), cli.out)?;
            return Ok(checks.iter().all(|c| c.pass));
        }
    };
    emit(&report, cli.out)?;
    Ok(true)
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| {
            c.downcast_ref::<csv::Error>().and_then(|e| match e.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            })
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    }) || e.chain().any(|c| c.downcast_ref::<serde_json::Error>().is_some_and(|j| j.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe)))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
