//! Shared fixtures for the criterion benchmarks.

use kspin::{sample_exact, CouplingScale, HypergraphSpec, InteractionTensor, SampleMatrix};

/// Random 3-regular 3-uniform model on `p` nodes (hyperedge scale) with `n`
/// exact samples.
pub fn fixture(p: usize, beta: f64, n: usize, seed: u64) -> (InteractionTensor, SampleMatrix) {
    let spec = HypergraphSpec { p, k: 3, d: 3, beta, seed, scale: CouplingScale::Hyperedge, ..Default::default() };
    let j = spec.build().expect("feasible spec");
    let x = sample_exact(&j, n, seed).expect("enumerable model");
    (j, x)
}
