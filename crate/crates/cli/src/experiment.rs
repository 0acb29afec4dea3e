//! Error-versus-n and error-versus-β sweeps.
//!
//! A sweep is the grid of cells `(β, n, method, seed)`. Each cell draws the
//! hypergraph of its seed, samples `n` configurations exactly, fits with the
//! configured λ rule and scores the estimate against the truth. Errors are
//! reported in the unit of `β` (see [`CouplingScale`]), so with the default
//! hyperedge scale they compare directly with the coupling intensity.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use kspin::{
    recover_tensor, sample_exact, BicScaling, CouplingScale, HypergraphSpec, LambdaRule,
    LearnConfig, Method, Reconcile, SignMode, SolverConfig,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::with_output;
use crate::error::{CliError, CliResult};

pub const RESULT_COLUMNS: [&str; 10] = [
    "beta",
    "n",
    "method",
    "seed",
    "max_abs_error",
    "mean_node_l2",
    "support_exact",
    "lambda_selected",
    "wall_time_s",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub p: usize,
    pub k: usize,
    pub d: usize,
    pub sign_mode: SignMode,
    pub scale: CouplingScale,
    pub methods: Vec<Method>,
    pub n_grid: Vec<usize>,
    pub beta_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub lambda_rule: LambdaRule,
    /// Support threshold in β units; `β/2` of each cell when absent.
    pub support_threshold: Option<f64>,
    pub reconcile: Reconcile,
    pub bic_scaling: BicScaling,
    pub solver: SolverConfig,
    pub output: Option<PathBuf>,
    pub jobs: usize,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spec = HypergraphSpec::default();
        Self {
            p: spec.p,
            k: spec.k,
            d: spec.d,
            sign_mode: spec.sign_mode,
            scale: CouplingScale::Hyperedge,
            methods: vec![Method::Rise, Method::Rple],
            n_grid: vec![1_000, 10_000, 100_000],
            beta_grid: vec![1.0, 1.5, 2.0, 2.5],
            seeds: (0..10).collect(),
            lambda_rule: LambdaRule::default(),
            support_threshold: None,
            reconcile: Reconcile::Mean,
            bic_scaling: BicScaling::SampleSize,
            solver: SolverConfig::default(),
            output: None,
            jobs: 1,
            record_wall_time: true,
        }
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub beta: f64,
    pub n: usize,
    pub method: Method,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub max_abs_error: f64,
    pub mean_node_l2: f64,
    pub support_exact: bool,
    /// Mean of the per-node λ values.
    pub lambda_selected: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<CellMetrics, String>,
    pub wall_time_s: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Validation(m));
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be non-empty with positive sizes".into());
        }
        if self.beta_grid.is_empty() || self.beta_grid.iter().any(|b| b.is_nan() || *b <= 0.0 || b.is_infinite()) {
            return bad("beta_grid must be non-empty with positive values".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be >= 1".into());
        }
        if let Some(t) = self.support_threshold {
            if t.is_nan() || t < 0.0 {
                return bad(format!("support_threshold {t} must be >= 0"));
            }
        }
        self.spec(self.beta_grid[0], self.seeds[0]).validate()?;
        self.solver.validate()?;
        Ok(())
    }

    pub fn spec(&self, beta: f64, seed: u64) -> HypergraphSpec {
        HypergraphSpec { p: self.p, k: self.k, d: self.d, sign_mode: self.sign_mode, beta, seed, scale: self.scale }
    }

    /// All cells, sorted by `(β, n, method, seed)`.
    pub fn cells(&self) -> Vec<Cell> {
        let mut betas = self.beta_grid.clone();
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        let mut ns = self.n_grid.clone();
        ns.sort_unstable();
        ns.dedup();
        let mut methods = self.methods.clone();
        methods.sort_by_key(|m| m.to_string());
        methods.dedup();
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        seeds.dedup();
        let mut out = Vec::new();
        for &beta in &betas {
            for &n in &ns {
                for &method in &methods {
                    for &seed in &seeds {
                        out.push(Cell { beta, n, method, seed });
                    }
                }
            }
        }
        out
    }
}

fn cell_metrics(cfg: &ExperimentConfig, cell: &Cell) -> kspin::Result<CellMetrics> {
    let spec = cfg.spec(cell.beta, cell.seed);
    let truth = spec.build()?;
    let x = sample_exact(&truth, cell.n, cell.seed)?;
    let unit = cfg.scale.unit(cfg.k);
    let threshold = cfg.support_threshold.unwrap_or(cell.beta / 2.0) / unit;
    let learn = LearnConfig {
        method: cell.method,
        lambda_rule: cfg.lambda_rule.clone(),
        support_threshold: threshold,
        reconcile: cfg.reconcile,
        bic_scaling: cfg.bic_scaling,
        solver: cfg.solver,
    };
    let report = recover_tensor(&x, cfg.k, &learn, Some(&truth))?;
    let m = report.metrics.as_ref().expect("truth supplied");
    let lambdas = report.per_node_lambdas();
    Ok(CellMetrics {
        max_abs_error: m.max_abs_error * unit,
        mean_node_l2: m.mean_node_l2() * unit,
        support_exact: m.exact_support,
        lambda_selected: lambdas.iter().sum::<f64>() / lambdas.len() as f64,
    })
}

/// Runs one cell; failures are captured in the result rather than returned.
pub fn run_cell(cfg: &ExperimentConfig, cell: Cell) -> CellResult {
    let start = Instant::now();
    let outcome = cell_metrics(cfg, &cell).map_err(|e| e.to_string());
    let wall_time_s = if cfg.record_wall_time { start.elapsed().as_secs_f64() } else { 0.0 };
    if let Err(e) = &outcome {
        log::warn!("cell beta={} n={} method={} seed={} failed: {e}", cell.beta, cell.n, cell.method, cell.seed);
    }
    CellResult { cell, outcome, wall_time_s }
}

/// Runs every cell on a pool of `cfg.jobs` workers. Results come back in
/// cell order whatever the completion order.
pub fn run(cfg: &ExperimentConfig) -> CliResult<Vec<CellResult>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| cells.into_par_iter().map(|c| run_cell(cfg, c)).collect()))
}

pub fn write_results<W: Write>(w: W, results: &[CellResult], record_wall_time: bool) -> CliResult<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULT_COLUMNS)?;
    for r in results {
        let c = &r.cell;
        let mut row = vec![c.beta.to_string(), c.n.to_string(), c.method.to_string(), c.seed.to_string()];
        match &r.outcome {
            Ok(m) => row.extend([
                m.max_abs_error.to_string(),
                m.mean_node_l2.to_string(),
                m.support_exact.to_string(),
                m.lambda_selected.to_string(),
            ]),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        row.push(if record_wall_time { r.wall_time_s.to_string() } else { String::new() });
        row.push(r.outcome.as_ref().err().cloned().unwrap_or_default());
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn experiment(cfg: &ExperimentConfig) -> CliResult<Vec<CellResult>> {
    let results = run(cfg)?;
    with_output(cfg.output.as_deref(), |w| write_results(w, &results, cfg.record_wall_time))?;
    Ok(results)
}

/// Mean `max_abs_error` over the successful cells matching `filter`.
pub fn mean_error<F: Fn(&Cell) -> bool>(results: &[CellResult], filter: F) -> Option<f64> {
    let errs: Vec<f64> = results
        .iter()
        .filter(|r| filter(&r.cell))
        .filter_map(|r| r.outcome.as_ref().ok().map(|m| m.max_abs_error))
        .collect();
    (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
}
