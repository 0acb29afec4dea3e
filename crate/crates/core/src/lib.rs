//! Structure learning for k-spin (tensor) Ising models.
//!
//! The model over spins `x ∈ {-1,+1}^p` is `P_J(x) ∝ exp(H(x))` with
//! `H(x) = Σ_{(r1..rk) ∈ [p]^k} J[r1..rk] x_r1 … x_rk` for a symmetric,
//! zero-diagonal order-k tensor `J`. Because the sum runs over ordered tuples,
//! each stored hyperedge contributes `k!` times its weight.
//!
//! The crate recovers a sparse `J` from samples by fitting, for every node,
//! one of two L1-regularized convex losses over that node's neighborhood:
//!
//! - interaction screening ([`Method::Rise`]): `(1/n) Σ exp(-k x_r m_r(x))`
//! - negative log-pseudolikelihood ([`Method::Rple`])
//!
//! and then reconciling the `k` per-node estimates of every hyperedge.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`tensor`] | [`InteractionTensor`], colex [`TupleIndex`], Hamiltonian, local fields |
//! | [`sampler`] | exact enumeration (log Z, pmf, exact sampling) and Gibbs sampling |
//! | [`objectives`] | RISE / RPLE values and gradients, empirical Gram diagnostics |
//! | [`optimizer`] | accelerated proximal gradient for `loss + λ‖·‖₁` |
//! | [`learner`] | λ rules (theorem, BIC), per-node fits, tensor recovery and metrics |
//! | [`hypergen`] | random d-regular k-uniform hypergraphs |
//! | [`io`] | tensor and sample CSV formats |
//!
//! Library indices are 0-based; the file formats and reports are 1-based.

pub mod error;
pub mod hypergen;
pub mod io;
pub mod learner;
pub mod objectives;
pub mod optimizer;
pub mod sampler;
pub mod tensor;

mod rng;

pub use error::{Error, Result};
pub use hypergen::{assign_couplings, random_regular_uniform, CouplingScale, HypergraphSpec, SignMode};
pub use learner::{
    bic_select, fit_node, recover_tensor, theorem_lambda, BicGrid, BicPoint, BicScaling,
    BicSelection, LambdaRule, LearnConfig, Method, NodeFit, RecoveryMetrics, RecoveryReport,
    Reconcile,
};
pub use objectives::{
    empirical_gram, logcosh, CompressedSamples, restricted_eigen_diag, rise_eval, rple_eval, LossEval,
    NeighborhoodVector, NodeDesign, RiseLoss, RpleLoss, SmoothLoss,
};
pub use optimizer::{minimize_l1, soft_threshold, FitResult, SolverConfig};
pub use sampler::{
    conditional_prob, partition_function, pmf, sample_exact, sample_gibbs, GibbsConfig,
    SampleMatrix,
};
pub use tensor::{binomial, factorial, graph_stats, GraphStats, InteractionTensor, TupleIndex};
pub use rng::stream_rng;
