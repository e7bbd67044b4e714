//! Run configuration: a JSON file overlaid by command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use asep_aw::asepmap::{abcd_to_rates, rates_to_abcd, BoundaryParams, Rates};
use asep_aw::multitime::MeasureConfig;
use asep_aw::qcore::{QReal, TruncationSpec};
use serde::{Deserialize, Serialize};

/// Boundary rates without `q`, as written in config files and `--rates`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBlock {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub rates: Option<RateBlock>,
    pub abcd: Option<[f64; 4]>,
    pub q: Option<f64>,
    pub quad_nodes: Option<usize>,
    pub trunc_eps: Option<f64>,
    pub max_terms: Option<usize>,
    pub tol_grid: Option<f64>,
    pub threads: Option<usize>,
    pub max_times: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Values given on the command line; these win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rates: Option<RateBlock>,
    pub abcd: Option<[f64; 4]>,
    pub q: Option<f64>,
    pub quad_nodes: Option<usize>,
    pub trunc_eps: Option<f64>,
    pub tol_grid: Option<f64>,
    pub threads: Option<usize>,
    pub max_times: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub rates: Rates,
    pub abcd: BoundaryParams,
}

/// Fully resolved configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: Option<Parameters>,
    pub measure: MeasureConfig,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: FileConfig, cli: Overrides) -> Result<Self> {
        // a parameter block given on the command line replaces the file's
        let (rates, abcd) = if cli.rates.is_some() || cli.abcd.is_some() {
            (cli.rates, cli.abcd)
        } else {
            (file.rates, file.abcd)
        };
        let q = cli.q.or(file.q);
        let params = match (rates, abcd) {
            (Some(_), Some(_)) => bail!("give exactly one of rates or abcd, not both"),
            (None, None) => None,
            (Some(r), None) => {
                let q = q.context("rates need q")?;
                let rates = Rates { alpha: r.alpha, beta: r.beta, gamma: r.gamma, delta: r.delta, q };
                Some(Parameters { rates, abcd: rates_to_abcd(&rates)? })
            }
            (None, Some([a, b, c, d])) => {
                let q = q.context("abcd need q")?;
                let abcd = BoundaryParams::new(a, b, c, d, QReal::new(q)?)?;
                Some(Parameters { rates: abcd_to_rates(&abcd)?, abcd })
            }
        };
        let defaults = MeasureConfig::default();
        let trunc = TruncationSpec {
            eps: cli.trunc_eps.or(file.trunc_eps).unwrap_or(defaults.trunc.eps),
            max_terms: file.max_terms.unwrap_or(defaults.trunc.max_terms),
        };
        let measure = MeasureConfig {
            nodes: cli.quad_nodes.or(file.quad_nodes).unwrap_or(defaults.nodes),
            trunc,
            tol_grid: cli.tol_grid.or(file.tol_grid).unwrap_or(defaults.tol_grid),
            max_times: cli.max_times.or(file.max_times).unwrap_or(defaults.max_times),
        };
        if measure.nodes == 0 {
            bail!("quad-nodes must be positive");
        }
        if !(trunc.eps > 0.0 && measure.tol_grid > 0.0) {
            bail!("trunc-eps and tol-grid must be positive");
        }
        Ok(Self { params, measure, threads: cli.threads.or(file.threads) })
    }

    pub fn params(&self) -> Result<&Parameters> {
        self.params.as_ref().context("this command needs parameters: pass --rates or --abcd with --q, or --config")
    }
}
