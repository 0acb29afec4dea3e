//! Full tensor recovery from per-node regressions.
//!
//! Every node gets its own L1-regularized fit of the chosen loss. The
//! coefficient of a hyperedge `e` is then estimated `k` times, once from each
//! of its nodes, and the `k` estimates are reconciled into one symmetric
//! tensor entry.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::{CompressedSamples, NodeDesign, RiseLoss, RpleLoss, SmoothLoss};
use crate::optimizer::{minimize_l1, FitResult, SolverConfig};
use crate::sampler::SampleMatrix;
use crate::tensor::{binomial, factorial, InteractionTensor, TupleIndex};

/// Coefficients with magnitude at or below this count as zero in `df`.
pub const DF_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Regularized interaction screening.
    Rise,
    /// Regularized pseudolikelihood.
    Rple,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rise => "rise",
            Method::Rple => "rple",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rise" => Ok(Method::Rise),
            "rple" => Ok(Method::Rple),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}` (rise|rple)"))),
        }
    }
}

/// λ grid `c · sqrt(log(4 C(p-1,k-1) / eps) / n)` over a set of multipliers `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BicGrid {
    pub multipliers: Vec<f64>,
    pub eps: f64,
}

impl Default for BicGrid {
    fn default() -> Self {
        Self::log_spaced(20, 2f64.powi(-6), 2f64.powi(4), 0.05)
    }
}

impl BicGrid {
    pub fn log_spaced(count: usize, lo: f64, hi: f64, eps: f64) -> Self {
        let multipliers = if count == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
        };
        Self { multipliers, eps }
    }

    /// λ values in decreasing order.
    pub fn lambdas(&self, p: usize, k: usize, n: usize) -> Result<Vec<f64>> {
        check_eps(self.eps)?;
        if self.multipliers.is_empty() {
            return Err(Error::InvalidArgument("empty lambda grid".into()));
        }
        let base = lambda_base(p, k, n, self.eps);
        let mut out: Vec<f64> = self.multipliers.iter().map(|c| c * base).collect();
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum LambdaRule {
    Fixed { lambda: f64 },
    /// Closed-form λ of the error bounds. `beta` and `d` feed the RISE
    /// formula; unknown values fall back to `beta = 1`, `d = 1`.
    Theorem {
        eps: f64,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        d: Option<usize>,
    },
    BicGrid(BicGrid),
}

impl Default for LambdaRule {
    fn default() -> Self {
        LambdaRule::BicGrid(BicGrid::default())
    }
}

/// How the `k` per-node estimates of a hyperedge become one weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconcile {
    #[default]
    Mean,
    MinMagnitude,
    MaxMagnitude,
}

/// Loss term of the BIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BicScaling {
    /// `n × (average loss) + df · log p`
    #[default]
    SampleSize,
    /// `(average loss) + df · log p`
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    pub method: Method,
    pub lambda_rule: LambdaRule,
    pub support_threshold: f64,
    pub reconcile: Reconcile,
    pub bic_scaling: BicScaling,
    pub solver: SolverConfig,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            method: Method::Rise,
            lambda_rule: LambdaRule::default(),
            support_threshold: 0.0,
            reconcile: Reconcile::Mean,
            bic_scaling: BicScaling::SampleSize,
            solver: SolverConfig::default(),
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("eps {eps} must lie in (0, 1)")));
    }
    Ok(())
}

/// `sqrt(log(4 C(p-1,k-1) / eps) / n)`
fn lambda_base(p: usize, k: usize, n: usize, eps: f64) -> f64 {
    let dim = binomial(p - 1, k - 1) as f64;
    ((4.0 * dim / eps).ln() / n as f64).sqrt()
}

/// Closed-form regularization from the error bounds:
/// RPLE `4√2 k! sqrt(log(4C/ε)/n)`, RISE `2√2 k! e^{k! β d} sqrt(log(4C/ε)/n)`
/// with `C = C(p-1, k-1)`.
pub fn theorem_lambda(method: Method, p: usize, k: usize, n: usize, eps: f64, beta: f64, d: usize) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if k < 2 || k > p {
        return Err(Error::InvalidArgument(format!("need 2 <= k <= p, got k={k}, p={p}")));
    }
    let kf = factorial(k);
    let base = lambda_base(p, k, n, eps);
    Ok(match method {
        Method::Rple => 4.0 * std::f64::consts::SQRT_2 * kf * base,
        Method::Rise => {
            if beta.is_nan() || beta < 0.0 {
                return Err(Error::InvalidArgument(format!("beta {beta} must be >= 0")));
            }
            2.0 * std::f64::consts::SQRT_2 * kf * (kf * beta * d as f64).exp() * base
        }
    })
}

fn loss_for<'a>(method: Method, design: &'a NodeDesign) -> Box<dyn SmoothLoss + 'a> {
    match method {
        Method::Rise => Box::new(RiseLoss(design)),
        Method::Rple => Box::new(RpleLoss(design)),
    }
}

fn fit_design(
    design: &NodeDesign,
    method: Method,
    lambda: f64,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    minimize_l1(loss_for(method, design).as_ref(), lambda, cfg, warm)
}

/// L1-regularized fit of node `r`'s neighborhood.
pub fn fit_node(
    x: &SampleMatrix,
    r: usize,
    k: usize,
    method: Method,
    lambda: f64,
    cfg: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<FitResult> {
    let design = NodeDesign::new(x, r, k)?;
    fit_design(&design, method, lambda, cfg, warm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicPoint {
    pub lambda: f64,
    pub bic: f64,
    pub df: usize,
    /// Unpenalized average loss at the fitted coefficients.
    pub loss: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicSelection {
    pub lambda: f64,
    pub fit: FitResult,
    /// One point per grid value, in decreasing λ order.
    pub trace: Vec<BicPoint>,
}

fn degrees_of_freedom(coeffs: &[f64]) -> usize {
    coeffs.iter().filter(|c| c.abs() > DF_TOLERANCE).count()
}

fn bic_design(
    design: &NodeDesign,
    n: usize,
    p: usize,
    method: Method,
    grid: &[f64],
    cfg: &SolverConfig,
    scaling: BicScaling,
) -> Result<BicSelection> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    let mut lambdas = grid.to_vec();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let loss = loss_for(method, design);
    let log_p = (p as f64).ln();
    let mut trace = Vec::with_capacity(lambdas.len());
    let mut best: Option<(f64, f64, FitResult)> = None;
    let mut warm: Option<Vec<f64>> = None;
    for &lambda in &lambdas {
        let fit = minimize_l1(loss.as_ref(), lambda, cfg, warm.as_deref())?;
        let avg = loss.value(&fit.coeffs);
        let df = degrees_of_freedom(&fit.coeffs);
        let fit_term = match scaling {
            BicScaling::SampleSize => n as f64 * avg,
            BicScaling::Literal => avg,
        };
        let bic = fit_term + df as f64 * log_p;
        trace.push(BicPoint { lambda, bic, df, loss: avg, iterations: fit.iterations });
        warm = Some(fit.coeffs.clone());
        // descending order: `<=` keeps the smallest λ among ties
        if best.as_ref().is_none_or(|(b, _, _)| bic <= *b) {
            best = Some((bic, lambda, fit));
        }
    }
    let (_, lambda, fit) = best.expect("grid is non-empty");
    Ok(BicSelection { lambda, fit, trace })
}

/// Fits node `r` over the λ grid (largest first, warm-started) and keeps the
/// fit minimizing BIC.
pub fn bic_select(
    x: &SampleMatrix,
    r: usize,
    k: usize,
    method: Method,
    grid: &[f64],
    cfg: &SolverConfig,
    scaling: BicScaling,
) -> Result<BicSelection> {
    let design = NodeDesign::new(x, r, k)?;
    bic_design(&design, x.n(), x.p(), method, grid, cfg, scaling)
}

/// Per-node outcome inside a [`RecoveryReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeFit {
    pub node: usize,
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    pub overflow_seen: bool,
    pub bic_trace: Vec<BicPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryMetrics {
    /// `max_e |Ĵ_e - J_e|` over all sorted k-tuples.
    pub max_abs_error: f64,
    /// `‖Ĵ_r - J_r‖₂` of each raw per-node fit.
    pub node_l2: Vec<f64>,
    pub precision: f64,
    pub recall: f64,
    pub exact_support: bool,
}

impl RecoveryMetrics {
    pub fn mean_node_l2(&self) -> f64 {
        self.node_l2.iter().sum::<f64>() / self.node_l2.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub method: Method,
    pub support_threshold: f64,
    pub estimate: InteractionTensor,
    pub nodes: Vec<NodeFit>,
    pub metrics: Option<RecoveryMetrics>,
}

impl RecoveryReport {
    pub fn per_node_lambdas(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.lambda).collect()
    }

    /// Estimated hyperedges, sorted by decreasing |weight| (ties by tuple).
    pub fn ranked_edges(&self) -> Vec<(Vec<usize>, f64)> {
        let mut edges = self.estimate.edges();
        edges.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then_with(|| a.0.cmp(&b.0)));
        edges
    }

    pub fn support(&self) -> Vec<Vec<usize>> {
        self.estimate.edges().into_iter().map(|(e, _)| e).collect()
    }

    /// JSON document with 1-based node ids.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Edge {
            nodes: Vec<usize>,
            weight: f64,
        }
        #[derive(Serialize)]
        struct Node<'a> {
            node: usize,
            lambda: f64,
            converged: bool,
            iterations: usize,
            kkt_residual: f64,
            overflow_seen: bool,
            bic_trace: &'a [BicPoint],
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            p: usize,
            k: usize,
            method: Method,
            support_threshold: f64,
            edges: Vec<Edge>,
            nodes: Vec<Node<'a>>,
            metrics: Option<&'a RecoveryMetrics>,
        }
        let doc = Doc {
            p: self.estimate.p(),
            k: self.estimate.k(),
            method: self.method,
            support_threshold: self.support_threshold,
            edges: self
                .ranked_edges()
                .into_iter()
                .map(|(e, weight)| Edge { nodes: e.iter().map(|s| s + 1).collect(), weight })
                .collect(),
            nodes: self
                .nodes
                .iter()
                .map(|n| Node {
                    node: n.node + 1,
                    lambda: n.lambda,
                    converged: n.converged,
                    iterations: n.iterations,
                    kkt_residual: n.kkt_residual,
                    overflow_seen: n.overflow_seen,
                    bic_trace: &n.bic_trace,
                })
                .collect(),
            metrics: self.metrics.as_ref(),
        };
        serde_json::to_value(doc).expect("report serializes")
    }
}

fn fit_one_node(
    data: &CompressedSamples,
    r: usize,
    k: usize,
    cfg: &LearnConfig,
) -> Result<NodeFit> {
    let design = NodeDesign::from_compressed(data, r, k)?;
    let (p, n) = (data.p(), data.n());
    let (lambda, fit, bic_trace) = match &cfg.lambda_rule {
        LambdaRule::Fixed { lambda } => {
            (*lambda, fit_design(&design, cfg.method, *lambda, &cfg.solver, None)?, Vec::new())
        }
        LambdaRule::Theorem { eps, beta, d } => {
            let lambda = theorem_lambda(cfg.method, p, k, n, *eps, beta.unwrap_or(1.0), d.unwrap_or(1))?;
            (lambda, fit_design(&design, cfg.method, lambda, &cfg.solver, None)?, Vec::new())
        }
        LambdaRule::BicGrid(grid) => {
            let lambdas = grid.lambdas(p, k, n)?;
            let sel = bic_design(&design, n, p, cfg.method, &lambdas, &cfg.solver, cfg.bic_scaling)?;
            (sel.lambda, sel.fit, sel.trace)
        }
    };
    Ok(NodeFit {
        node: r,
        lambda,
        coeffs: fit.coeffs,
        iterations: fit.iterations,
        converged: fit.converged,
        kkt_residual: fit.kkt_residual,
        overflow_seen: fit.overflow_seen,
        bic_trace,
    })
}

fn reconcile(values: &[f64], how: Reconcile) -> f64 {
    match how {
        Reconcile::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Reconcile::MinMagnitude => {
            values.iter().copied().min_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0)
        }
        Reconcile::MaxMagnitude => {
            values.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0)
        }
    }
}

/// Fits every node, reconciles the per-hyperedge estimates and, when `truth`
/// is given, scores the result against it.
pub fn recover_tensor(
    x: &SampleMatrix,
    k: usize,
    cfg: &LearnConfig,
    truth: Option<&InteractionTensor>,
) -> Result<RecoveryReport> {
    cfg.solver.validate()?;
    if cfg.support_threshold.is_nan() || cfg.support_threshold < 0.0 {
        return Err(Error::InvalidArgument("support threshold must be >= 0".into()));
    }
    let p = x.p();
    let index = TupleIndex::new(p, k)?;
    if let Some(t) = truth {
        if t.p() != p || t.k() != k {
            return Err(Error::Shape(format!(
                "truth tensor (p={}, k={}) does not match data (p={p}, k={k})",
                t.p(),
                t.k()
            )));
        }
    }
    let data = CompressedSamples::new(x);
    let results: Vec<Result<NodeFit>> =
        (0..p).into_par_iter().map(|r| fit_one_node(&data, r, k, cfg)).collect();
    let mut nodes = Vec::with_capacity(p);
    for (r, res) in results.into_iter().enumerate() {
        nodes.push(res.map_err(|e| Error::NodeFit { node: r, source: Box::new(e) })?);
    }

    // every hyperedge with a nonzero estimate at one of its nodes
    let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
    for fit in &nodes {
        for (i, &c) in fit.coeffs.iter().enumerate() {
            if c != 0.0 {
                let mut e = index.unrank(i, fit.node)?;
                e.push(fit.node);
                e.sort_unstable();
                candidates.insert(e);
            }
        }
    }
    let mut estimate = InteractionTensor::new(p, k)?;
    for e in candidates {
        let values: Vec<f64> = e
            .iter()
            .map(|&r| {
                let rest: Vec<usize> = e.iter().copied().filter(|&s| s != r).collect();
                index.rank(&rest, r).map(|i| nodes[r].coeffs[i])
            })
            .collect::<Result<_>>()?;
        let w = reconcile(&values, cfg.reconcile);
        if w.abs() >= cfg.support_threshold && w != 0.0 {
            estimate.set(&e, w)?;
        }
    }

    let metrics = truth.map(|t| score(&estimate, &nodes, t, &index)).transpose()?;
    Ok(RecoveryReport { method: cfg.method, support_threshold: cfg.support_threshold, estimate, nodes, metrics })
}

fn score(
    estimate: &InteractionTensor,
    nodes: &[NodeFit],
    truth: &InteractionTensor,
    index: &TupleIndex,
) -> Result<RecoveryMetrics> {
    let est: HashSet<Vec<usize>> = estimate.edges().into_iter().map(|(e, _)| e).collect();
    let tru: HashSet<Vec<usize>> = truth.edges().into_iter().map(|(e, _)| e).collect();
    let mut max_abs_error: f64 = 0.0;
    for e in est.union(&tru) {
        max_abs_error = max_abs_error.max((estimate.get(e)? - truth.get(e)?).abs());
    }
    let node_l2 = nodes
        .iter()
        .map(|fit| {
            let jr = truth.neighborhood(fit.node, index)?;
            Ok(fit.coeffs.iter().zip(&jr).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let hits = est.intersection(&tru).count() as f64;
    Ok(RecoveryMetrics {
        max_abs_error,
        node_l2,
        precision: if est.is_empty() { 1.0 } else { hits / est.len() as f64 },
        recall: if tru.is_empty() { 1.0 } else { hits / tru.len() as f64 },
        exact_support: est == tru,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn theorem_lambda_values() {
        let l = theorem_lambda(Method::Rple, 16, 3, 100_000, 0.05, 0.0, 0).unwrap();
        let hand = 4.0 * 2f64.sqrt() * 6.0 * (8400f64.ln() / 1e5).sqrt();
        assert_relative_eq!(l, hand, max_relative = 1e-14);
        assert!((l - 0.3226).abs() < 5e-4);
        let l4 = theorem_lambda(Method::Rple, 16, 3, 400_000, 0.05, 0.0, 0).unwrap();
        assert_relative_eq!(l4, l / 2.0, max_relative = 1e-14);
        let rise0 = theorem_lambda(Method::Rise, 16, 3, 100_000, 0.05, 0.0, 3).unwrap();
        assert_relative_eq!(rise0, l / 2.0, max_relative = 1e-14);
        let rise = theorem_lambda(Method::Rise, 16, 3, 100_000, 0.05, 0.5, 2).unwrap();
        assert_relative_eq!(rise / rise0, 6f64.exp(), max_relative = 1e-12);
        assert!(theorem_lambda(Method::Rple, 16, 3, 10, 1.0, 0.0, 0).is_err());
        assert!(theorem_lambda(Method::Rple, 16, 3, 10, 0.0, 0.0, 0).is_err());
    }

    #[test]
    fn grid_is_descending_and_log_spaced() {
        let grid = BicGrid::default();
        assert_eq!(grid.multipliers.len(), 20);
        assert_relative_eq!(grid.multipliers[0], 1.0 / 64.0, max_relative = 1e-12);
        assert_relative_eq!(grid.multipliers[19], 16.0, max_relative = 1e-12);
        let l = grid.lambdas(16, 3, 1000).unwrap();
        assert!(l.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn reconcile_modes() {
        let v = [0.2, -0.5, 0.3];
        assert_relative_eq!(reconcile(&v, Reconcile::Mean), 0.0, epsilon = 1e-15);
        assert_eq!(reconcile(&v, Reconcile::MinMagnitude), 0.2);
        assert_eq!(reconcile(&v, Reconcile::MaxMagnitude), -0.5);
    }

    #[test]
    fn method_parse() {
        assert_eq!("RISE".parse::<Method>().unwrap(), Method::Rise);
        assert_eq!("rple".parse::<Method>().unwrap(), Method::Rple);
        assert!("lasso".parse::<Method>().is_err());
        assert_eq!(Method::Rple.to_string(), "rple");
    }
}
