//! `generate`, `sample`, `fit` and `diag`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kspin::io::{read_samples, read_tensor, write_samples, write_tensor};
use kspin::{
    empirical_gram, graph_stats, recover_tensor, restricted_eigen_diag, sample_exact, sample_gibbs,
    theorem_lambda, BicScaling, GibbsConfig, HypergraphSpec, InteractionTensor, LambdaRule,
    LearnConfig, Method, NodeDesign, Reconcile, RiseLoss, RpleLoss, SampleMatrix, SmoothLoss,
    SolverConfig, TupleIndex,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub(crate) fn open_read(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub(crate) fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

/// Runs `body` against the file at `path`, or stdout when absent.
pub(crate) fn with_output<F>(path: Option<&Path>, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    match path {
        Some(path) => {
            let mut w = create(path)?;
            body(&mut w)?;
            w.flush().map_err(|e| CliError::io(path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush().map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn load_tensor(path: &Path) -> CliResult<InteractionTensor> {
    read_tensor(open_read(path)?).map_err(|e| CliError::in_file(path, e))
}

pub fn load_samples(path: &Path) -> CliResult<SampleMatrix> {
    read_samples(open_read(path)?).map_err(|e| CliError::in_file(path, e))
}

fn required<'a>(path: &'a Option<PathBuf>, what: &str) -> CliResult<&'a Path> {
    path.as_deref().ok_or_else(|| CliError::Validation(format!("missing required input: {what}")))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateOptions {
    #[serde(flatten)]
    pub spec: HypergraphSpec,
    pub out: Option<PathBuf>,
}

/// Writes a random regular hypergraph model and returns its summary line.
pub fn generate(opts: &GenerateOptions) -> CliResult<String> {
    let j = opts.spec.build()?;
    with_output(opts.out.as_deref(), |w| Ok(write_tensor(w, &j)?))?;
    let s = graph_stats(&j);
    Ok(format!(
        "p={} k={} edges={} d_max={} beta_min={} beta_max={}",
        j.p(),
        j.k(),
        s.num_edges,
        s.d_max,
        s.beta_min,
        s.beta_max
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    #[default]
    Exact,
    Gibbs,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleOptions {
    pub tensor: Option<PathBuf>,
    pub n: usize,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub out: Option<PathBuf>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        let g = GibbsConfig::default();
        Self {
            tensor: None,
            n: 1000,
            sampler: SamplerKind::Exact,
            seed: 0,
            burn_in: g.burn_in_sweeps,
            thin: g.thin_sweeps,
            out: None,
        }
    }
}

pub fn sample(opts: &SampleOptions) -> CliResult<()> {
    let j = load_tensor(required(&opts.tensor, "tensor file")?)?;
    let x = match opts.sampler {
        SamplerKind::Exact => sample_exact(&j, opts.n, opts.seed)?,
        SamplerKind::Gibbs => {
            let cfg = GibbsConfig { burn_in_sweeps: opts.burn_in, thin_sweeps: opts.thin, seed: opts.seed };
            sample_gibbs(&j, opts.n, &cfg)?
        }
    };
    with_output(opts.out.as_deref(), |w| Ok(write_samples(w, &x, Some(opts.seed))?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub samples: Option<PathBuf>,
    pub k: usize,
    pub method: Method,
    pub lambda_rule: LambdaRule,
    /// Fixed λ; overrides `lambda_rule`.
    pub lambda: Option<f64>,
    /// Theorem rule at this ε; overrides `lambda_rule` unless `lambda` is set.
    pub theorem_eps: Option<f64>,
    pub beta_hint: Option<f64>,
    pub d_hint: Option<usize>,
    /// Support threshold; defaults to half the smallest true weight when a
    /// truth tensor is supplied, else 0.
    pub threshold: Option<f64>,
    pub reconcile: Reconcile,
    pub bic_scaling: BicScaling,
    pub solver: SolverConfig,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tensor_out: Option<PathBuf>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            samples: None,
            k: 3,
            method: Method::Rise,
            lambda_rule: LambdaRule::default(),
            lambda: None,
            theorem_eps: None,
            beta_hint: None,
            d_hint: None,
            threshold: None,
            reconcile: Reconcile::Mean,
            bic_scaling: BicScaling::SampleSize,
            solver: SolverConfig::default(),
            truth: None,
            out: None,
            tensor_out: None,
        }
    }
}

impl FitOptions {
    pub fn effective_rule(&self) -> LambdaRule {
        if let Some(lambda) = self.lambda {
            LambdaRule::Fixed { lambda }
        } else if let Some(eps) = self.theorem_eps {
            LambdaRule::Theorem { eps, beta: self.beta_hint, d: self.d_hint }
        } else {
            self.lambda_rule.clone()
        }
    }
}

pub fn fit(opts: &FitOptions) -> CliResult<serde_json::Value> {
    let x = load_samples(required(&opts.samples, "samples file")?)?;
    let truth = opts.truth.as_deref().map(load_tensor).transpose()?;
    let threshold = opts
        .threshold
        .or_else(|| truth.as_ref().filter(|t| !t.is_empty()).map(|t| graph_stats(t).beta_min / 2.0))
        .unwrap_or(0.0);
    let cfg = LearnConfig {
        method: opts.method,
        lambda_rule: opts.effective_rule(),
        support_threshold: threshold,
        reconcile: opts.reconcile,
        bic_scaling: opts.bic_scaling,
        solver: opts.solver,
    };
    let report = recover_tensor(&x, opts.k, &cfg, truth.as_ref())?;
    let json = report.to_json();
    with_output(opts.out.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &json)?;
        writeln!(w).map_err(|e| CliError::Io(e.to_string()))
    })?;
    if let Some(path) = &opts.tensor_out {
        with_output(Some(path), |w| Ok(write_tensor(w, &report.estimate)?))?;
    }
    Ok(json)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagOptions {
    pub samples: Option<PathBuf>,
    pub k: usize,
    pub method: Method,
    pub truth: Option<PathBuf>,
    pub eps: f64,
    pub out: Option<PathBuf>,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self { samples: None, k: 3, method: Method::Rise, truth: None, eps: 0.05, out: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeDiag {
    /// 1-based node id.
    pub node: usize,
    /// Smallest eigenvalue of the empirical Gram of the node's design.
    pub alpha_min: f64,
    /// Max-norm of the loss gradient at the true neighborhood.
    pub grad_inf_at_truth: Option<f64>,
    pub theorem_lambda: Option<f64>,
}

/// Per-node Gram eigenvalue and, given a truth tensor, the gradient-at-truth
/// check against the theorem λ (RISE uses the truth's β_max and d_max).
pub fn diag_rows(x: &SampleMatrix, k: usize, method: Method, truth: Option<&InteractionTensor>, eps: f64) -> CliResult<Vec<NodeDiag>> {
    let p = x.p();
    let index = TupleIndex::new(p, k)?;
    let lambda = match truth {
        Some(t) => {
            let s = graph_stats(t);
            Some(theorem_lambda(method, p, k, x.n(), eps, s.beta_max, s.d_max)?)
        }
        None => None,
    };
    (0..p)
        .map(|r| {
            let alpha_min = restricted_eigen_diag(&empirical_gram(x, r, k)?)?;
            let grad = match truth {
                Some(t) => {
                    let design = NodeDesign::new(x, r, k)?;
                    let jr = t.neighborhood(r, &index)?;
                    let eval = match method {
                        Method::Rise => RiseLoss(&design).eval(&jr),
                        Method::Rple => RpleLoss(&design).eval(&jr),
                    };
                    Some(eval.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs())))
                }
                None => None,
            };
            Ok(NodeDiag { node: r + 1, alpha_min, grad_inf_at_truth: grad, theorem_lambda: lambda })
        })
        .collect()
}

pub fn diag(opts: &DiagOptions) -> CliResult<Vec<NodeDiag>> {
    let x = load_samples(required(&opts.samples, "samples file")?)?;
    let truth = opts.truth.as_deref().map(load_tensor).transpose()?;
    if let Some(t) = &truth {
        if t.p() != x.p() || t.k() != opts.k {
            return Err(CliError::Validation(format!(
                "truth tensor (p={}, k={}) does not match samples (p={}) and k={}",
                t.p(),
                t.k(),
                x.p(),
                opts.k
            )));
        }
    }
    let rows = diag_rows(&x, opts.k, opts.method, truth.as_ref(), opts.eps)?;
    with_output(opts.out.as_deref(), |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["node", "alpha_min", "grad_inf_at_truth", "theorem_lambda", "below_lambda"])?;
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for row in &rows {
            let below = match (row.grad_inf_at_truth, row.theorem_lambda) {
                (Some(g), Some(l)) => (g < l).to_string(),
                _ => String::new(),
            };
            out.write_record([
                row.node.to_string(),
                row.alpha_min.to_string(),
                opt(row.grad_inf_at_truth),
                opt(row.theorem_lambda),
                below,
            ])?;
        }
        out.flush().map_err(|e| CliError::Io(e.to_string()))
    })?;
    Ok(rows)
}
