//! Per-node convex losses and their gradients.
//!
//! For a center node `r` write `u_i = k x_r m_r(x^(i)) = k! ⟨J_r, x_r·X_{·r}^(i)⟩`
//! where `X_{·r}` is the vector of (k-1)-fold spin monomials over the
//! neighborhood tuples. Both losses depend on the data only through `u`:
//!
//! - interaction screening: `S(J_r) = (1/n) Σ exp(-u_i)`
//! - pseudolikelihood: `ℓ(J_r) = (1/n) Σ [log cosh(u_i) - u_i + log 2]`
//!
//! The design rows `x_r·X_{·r}` are materialized once per node (over distinct
//! sample rows, weighted by multiplicity) and reused across evaluations.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::sampler::SampleMatrix;
use crate::tensor::{factorial, TupleIndex};

/// Largest neighborhood dimension that is materialized densely.
pub const DENSE_LIMIT: usize = 20_000;

/// Cap on `rows × dim` for the cached design matrix; beyond it monomials are
/// recomputed on every evaluation.
const DESIGN_ENTRY_CAP: usize = 1 << 25;

/// Exponent arguments are clamped to this magnitude.
pub const EXP_CLAMP: f64 = 700.0;

/// `log cosh(x)` evaluated as `|x| + log1p(e^{-2|x|}) - log 2`.
pub fn logcosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// Per-sample pseudolikelihood term `log cosh(u) - u + log 2`, written as
/// `|u| - u + log1p(e^{-2|u|})` to avoid cancellation.
fn pl_term(u: f64) -> f64 {
    let a = u.abs();
    a - u + (-2.0 * a).exp().ln_1p()
}

/// Coefficients `J_r` of one node's neighborhood, indexed by [`TupleIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodVector {
    pub r: usize,
    pub coeffs: Vec<f64>,
}

impl NeighborhoodVector {
    pub fn zeros(r: usize, dim: usize) -> Self {
        Self { r, coeffs: vec![0.0; dim] }
    }
}

/// Loss value and gradient at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    /// Set when an exponent argument had to be clamped.
    pub overflow: bool,
}

/// Differentiable convex loss over `R^dim`.
pub trait SmoothLoss {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> LossEval;

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).value
    }
}

/// Distinct sample rows with their multiplicities.
#[derive(Debug, Clone)]
pub struct CompressedSamples {
    p: usize,
    n: usize,
    rows: Vec<i8>,
    weights: Vec<f64>,
}

impl CompressedSamples {
    /// Distinct rows are kept in order of first appearance, which does not
    /// depend on how the columns are labeled.
    pub fn new(x: &SampleMatrix) -> Self {
        let p = x.p();
        let mut slot: HashMap<&[i8], usize> = HashMap::new();
        let mut rows: Vec<i8> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for row in x.rows() {
            match slot.get(row) {
                Some(&i) => counts[i] += 1,
                None => {
                    slot.insert(row, counts.len());
                    rows.extend_from_slice(row);
                    counts.push(1);
                }
            }
        }
        let n = x.n() as f64;
        Self { p, n: x.n(), rows, weights: counts.iter().map(|&c| c as f64 / n).collect() }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of original samples.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn distinct(&self) -> usize {
        self.weights.len()
    }

    fn row(&self, i: usize) -> &[i8] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }
}

#[derive(Debug, Clone)]
enum Features {
    Dense(Vec<f64>),
    Streaming(CompressedSamples),
}

/// Weighted design `x_r·X_{·r}` for one center node.
#[derive(Debug, Clone)]
pub struct NodeDesign {
    r: usize,
    dim: usize,
    kfact: f64,
    index: TupleIndex,
    weights: Vec<f64>,
    features: Features,
}

impl NodeDesign {
    pub fn new(x: &SampleMatrix, r: usize, k: usize) -> Result<Self> {
        Self::from_compressed(&CompressedSamples::new(x), r, k)
    }

    pub fn from_compressed(data: &CompressedSamples, r: usize, k: usize) -> Result<Self> {
        let index = TupleIndex::new(data.p(), k)?;
        if r >= data.p() {
            return Err(Error::Shape(format!("node {r} out of range for p={}", data.p())));
        }
        let dim = index.dim();
        let rows = data.distinct();
        let features = if dim <= DENSE_LIMIT && rows.saturating_mul(dim) <= DESIGN_ENTRY_CAP {
            let mut f = vec![0.0; rows * dim];
            for (i, out) in f.chunks_exact_mut(dim).enumerate() {
                let row = data.row(i);
                let xr = row[r] as f64;
                index.fill_monomials(row, r, out, |m| xr * m as f64);
            }
            Features::Dense(f)
        } else {
            Features::Streaming(data.clone())
        };
        Ok(Self { r, dim, kfact: factorial(k), index, weights: data.weights.clone(), features })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.index.k()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.features, Features::Dense(_))
    }

    /// Calls `f(weight, row)` for every distinct sample row's design vector.
    fn for_each_row(&self, mut f: impl FnMut(usize, f64, &[f64])) {
        match &self.features {
            Features::Dense(feat) => {
                for (i, (row, &w)) in feat.chunks_exact(self.dim).zip(&self.weights).enumerate() {
                    f(i, w, row);
                }
            }
            Features::Streaming(data) => {
                let mut scratch = vec![0.0; self.dim];
                for (i, &w) in self.weights.iter().enumerate() {
                    let spins = data.row(i);
                    let xr = spins[self.r] as f64;
                    self.index.fill_monomials(spins, self.r, &mut scratch, |m| xr * m as f64);
                    f(i, w, &scratch);
                }
            }
        }
    }

    /// `u_i = k! ⟨row_i, coeffs⟩` for every distinct row.
    fn margins(&self, coeffs: &[f64]) -> Vec<f64> {
        let support: Vec<(usize, f64)> =
            coeffs.iter().copied().enumerate().filter(|&(_, c)| c != 0.0).collect();
        let mut u = vec![0.0; self.weights.len()];
        if support.is_empty() {
            return u;
        }
        self.for_each_row(|i, _, row| {
            let dot: f64 = support.iter().map(|&(j, c)| row[j] * c).sum();
            u[i] = self.kfact * dot;
        });
        u
    }

    /// Σ_i coef_i · row_i
    fn weighted_rows(&self, coef: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        self.for_each_row(|i, _, row| {
            let c = coef[i];
            if c != 0.0 {
                for (gj, &fj) in g.iter_mut().zip(row) {
                    *gj += c * fj;
                }
            }
        });
        g
    }

    fn check(&self, coeffs: &[f64]) {
        assert_eq!(coeffs.len(), self.dim, "coefficient vector has wrong length");
    }

    /// Empirical Gram `Q̂ = (1/n) Σ X_{·r} X_{·r}^T`.
    pub fn gram(&self) -> Result<DMatrix<f64>> {
        if self.dim > DENSE_LIMIT {
            return Err(Error::Capability(format!(
                "Gram of dimension {} exceeds dense limit {DENSE_LIMIT}",
                self.dim
            )));
        }
        let d = self.dim;
        let mut q = vec![0.0; d * d];
        self.for_each_row(|_, w, row| {
            for a in 0..d {
                let wa = w * row[a];
                let out = &mut q[a * d..a * d + a + 1];
                for (o, &rb) in out.iter_mut().zip(&row[..=a]) {
                    *o += wa * rb;
                }
            }
        });
        for a in 0..d {
            for b in 0..a {
                q[b * d + a] = q[a * d + b];
            }
        }
        Ok(DMatrix::from_row_slice(d, d, &q))
    }
}

/// Interaction screening loss of one node.
#[derive(Debug, Clone, Copy)]
pub struct RiseLoss<'a>(pub &'a NodeDesign);

/// Negative log-pseudolikelihood of one node.
#[derive(Debug, Clone, Copy)]
pub struct RpleLoss<'a>(pub &'a NodeDesign);

impl SmoothLoss for RiseLoss<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn eval(&self, x: &[f64]) -> LossEval {
        let d = self.0;
        d.check(x);
        let u = d.margins(x);
        let mut overflow = false;
        let mut value = 0.0;
        let coef: Vec<f64> = u
            .iter()
            .zip(&d.weights)
            .map(|(&ui, &w)| {
                if ui.abs() > EXP_CLAMP {
                    overflow = true;
                }
                let e = (-ui.clamp(-EXP_CLAMP, EXP_CLAMP)).exp();
                value += w * e;
                -w * e * d.kfact
            })
            .collect();
        LossEval { value, gradient: d.weighted_rows(&coef), overflow }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.0;
        d.check(x);
        d.margins(x)
            .iter()
            .zip(&d.weights)
            .map(|(&ui, &w)| w * (-ui.clamp(-EXP_CLAMP, EXP_CLAMP)).exp())
            .sum()
    }
}

impl SmoothLoss for RpleLoss<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn eval(&self, x: &[f64]) -> LossEval {
        let d = self.0;
        d.check(x);
        let u = d.margins(x);
        let mut value = 0.0;
        let coef: Vec<f64> = u
            .iter()
            .zip(&d.weights)
            .map(|(&ui, &w)| {
                value += w * pl_term(ui);
                w * (ui.tanh() - 1.0) * d.kfact
            })
            .collect();
        LossEval { value, gradient: d.weighted_rows(&coef), overflow: false }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let d = self.0;
        d.check(x);
        d.margins(x).iter().zip(&d.weights).map(|(&ui, &w)| w * pl_term(ui)).sum()
    }
}

fn checked_design(jr: &NeighborhoodVector, x: &SampleMatrix, k: usize) -> Result<NodeDesign> {
    let design = NodeDesign::new(x, jr.r, k)?;
    if jr.coeffs.len() != design.dim() {
        return Err(Error::Shape(format!(
            "neighborhood has {} coefficients, expected C({}, {}) = {}",
            jr.coeffs.len(),
            x.p() - 1,
            k - 1,
            design.dim()
        )));
    }
    if jr.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("neighborhood has non-finite coefficients".into()));
    }
    Ok(design)
}

/// Pseudolikelihood loss and gradient of `jr` on the samples `x` for a
/// `k`-spin model.
pub fn rple_eval(jr: &NeighborhoodVector, x: &SampleMatrix, k: usize) -> Result<LossEval> {
    let design = checked_design(jr, x, k)?;
    Ok(RpleLoss(&design).eval(&jr.coeffs))
}

/// Interaction screening loss and gradient of `jr` on the samples `x`.
pub fn rise_eval(jr: &NeighborhoodVector, x: &SampleMatrix, k: usize) -> Result<LossEval> {
    let design = checked_design(jr, x, k)?;
    Ok(RiseLoss(&design).eval(&jr.coeffs))
}

/// Empirical Gram matrix of the neighborhood monomials of node `r`.
pub fn empirical_gram(x: &SampleMatrix, r: usize, k: usize) -> Result<DMatrix<f64>> {
    let index = TupleIndex::new(x.p(), k)?;
    if index.dim() > DENSE_LIMIT {
        return Err(Error::Capability(format!(
            "Gram of dimension {} exceeds dense limit {DENSE_LIMIT}",
            index.dim()
        )));
    }
    NodeDesign::new(x, r, k)?.gram()
}

/// Smallest eigenvalue of a symmetric matrix (the restricted-eigenvalue
/// diagnostic when applied to `Q̂`).
pub fn restricted_eigen_diag(q: &DMatrix<f64>) -> Result<f64> {
    if !q.is_square() || q.nrows() == 0 {
        return Err(Error::Shape(format!("expected a non-empty square matrix, got {}x{}", q.nrows(), q.ncols())));
    }
    if q.nrows() > DENSE_LIMIT {
        return Err(Error::Capability(format!("matrix dimension {} exceeds dense limit", q.nrows())));
    }
    let scale = q.amax().max(1.0);
    for a in 0..q.nrows() {
        for b in 0..a {
            if (q[(a, b)] - q[(b, a)]).abs() > 1e-12 * scale {
                return Err(Error::Shape(format!("matrix is not symmetric at ({a}, {b})")));
            }
        }
    }
    let eig = SymmetricEigen::new(q.clone());
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
