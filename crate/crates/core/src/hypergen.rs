//! Random d-regular k-uniform hypergraphs and coupling assignment.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::{factorial, InteractionTensor};

const MAX_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    AllPositive,
    Rademacher,
}

/// Unit in which `beta` is expressed.
///
/// `Tensor` stores `beta` as the tensor entry, so each hyperedge contributes
/// `k! · beta` to `H`. `Hyperedge` makes `beta` the coefficient of the
/// hyperedge monomial in `H`, storing `beta / k!`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingScale {
    #[default]
    Tensor,
    Hyperedge,
}

impl CouplingScale {
    /// Factor converting tensor weights into `beta` units.
    pub fn unit(self, k: usize) -> f64 {
        match self {
            CouplingScale::Tensor => 1.0,
            CouplingScale::Hyperedge => factorial(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypergraphSpec {
    pub p: usize,
    pub k: usize,
    pub d: usize,
    pub sign_mode: SignMode,
    pub beta: f64,
    pub seed: u64,
    pub scale: CouplingScale,
}

impl Default for HypergraphSpec {
    fn default() -> Self {
        Self {
            p: 16,
            k: 3,
            d: 3,
            sign_mode: SignMode::AllPositive,
            beta: 1.0,
            seed: 0,
            scale: CouplingScale::Tensor,
        }
    }
}

impl HypergraphSpec {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.k == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("p, k and d must be positive".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("k={} must be >= 2", self.k)));
        }
        if self.k > self.p {
            return Err(Error::InvalidArgument(format!("k={} exceeds p={}", self.k, self.p)));
        }
        if !(self.d * self.p).is_multiple_of(self.k) {
            return Err(Error::InvalidArgument(format!(
                "d*p = {} is not divisible by k = {}",
                self.d * self.p,
                self.k
            )));
        }
        if self.beta.is_nan() || self.beta <= 0.0 || self.beta.is_infinite() {
            return Err(Error::InvalidArgument(format!("beta {} must be > 0", self.beta)));
        }
        Ok(())
    }

    /// Stored tensor weight magnitude for this spec's `beta` and scale.
    pub fn tensor_weight(&self) -> f64 {
        self.beta / self.scale.unit(self.k)
    }

    /// Generates the hypergraph and assigns its couplings.
    pub fn build(&self) -> Result<InteractionTensor> {
        let edges = random_regular_uniform(self)?;
        assign_couplings(self.p, self.k, &edges, self.tensor_weight(), self.sign_mode, self.seed)
    }
}

/// Configuration-model sampling: `d` stubs per node are shuffled and cut into
/// groups of `k`; a draw with a repeated node inside a group or a repeated
/// group is rejected and redrawn.
///
/// Returns `d·p/k` sorted hyperedges, sorted lexicographically.
pub fn random_regular_uniform(spec: &HypergraphSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    let (p, k, d) = (spec.p, spec.k, spec.d);
    if d > crate::tensor::binomial(p - 1, k - 1) as usize {
        return Err(Error::InvalidArgument(format!(
            "degree {d} exceeds the {} hyperedges available per node",
            crate::tensor::binomial(p - 1, k - 1)
        )));
    }
    let mut rng = stream_rng(spec.seed, 1);
    let mut stubs: Vec<usize> = (0..p).flat_map(|v| std::iter::repeat_n(v, d)).collect();
    'attempt: for _ in 0..MAX_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(stubs.len() / k);
        let mut edges = Vec::with_capacity(stubs.len() / k);
        for group in stubs.chunks_exact(k) {
            let mut e = group.to_vec();
            e.sort_unstable();
            if e.windows(2).any(|w| w[0] == w[1]) || !seen.insert(e.clone()) {
                continue 'attempt;
            }
            edges.push(e);
        }
        edges.sort();
        return Ok(edges);
    }
    Err(Error::GenerationFailure(format!(
        "no simple {d}-regular {k}-uniform hypergraph on {p} nodes after {MAX_ATTEMPTS} attempts"
    )))
}

/// Tensor with weight `beta` (or independent fair ±`beta`) on each edge.
pub fn assign_couplings(
    p: usize,
    k: usize,
    edges: &[Vec<usize>],
    beta: f64,
    sign_mode: SignMode,
    seed: u64,
) -> Result<InteractionTensor> {
    if beta.is_nan() || beta <= 0.0 || beta.is_infinite() {
        return Err(Error::InvalidArgument(format!("beta {beta} must be > 0")));
    }
    let mut rng = stream_rng(seed, 2);
    let weighted = edges.iter().map(|e| {
        let w = match sign_mode {
            SignMode::AllPositive => beta,
            SignMode::Rademacher => {
                if rng.random::<bool>() {
                    beta
                } else {
                    -beta
                }
            }
        };
        (e, w)
    });
    InteractionTensor::from_edges(p, k, weighted)
}
