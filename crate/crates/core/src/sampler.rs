//! Sampling from `P_J(x) ∝ exp(H(x))`.
//!
//! Small models (`p <= 25`) are handled by streaming enumeration over all
//! `2^p` states: log-partition function, pmf and exact i.i.d. sampling. Larger
//! models use single-site Gibbs sampling.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::{bits_to_spins, check_spins, CompiledModel, InteractionTensor};

/// Largest `p` for which the `2^p` state space is enumerated.
pub const ENUMERATION_LIMIT: usize = 25;

/// `n × p` matrix of ±1 spins, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMatrix {
    n: usize,
    p: usize,
    data: Vec<i8>,
}

impl SampleMatrix {
    pub fn new(n: usize, p: usize, data: Vec<i8>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSample("sample matrix needs at least one row".into()));
        }
        if p == 0 {
            return Err(Error::InvalidSample("sample matrix needs at least one column".into()));
        }
        if data.len() != n * p {
            return Err(Error::Shape(format!("{} entries for a {n} x {p} matrix", data.len())));
        }
        if let Some(pos) = data.iter().position(|&v| v != 1 && v != -1) {
            return Err(Error::InvalidSample(format!(
                "row {}, column {} is {}, expected +1 or -1",
                pos / p + 1,
                pos % p + 1,
                data[pos]
            )));
        }
        Ok(Self { n, p, data })
    }

    pub fn from_rows(rows: &[Vec<i8>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Shape(format!("row {} has {} entries, expected {p}", bad + 1, rows[bad].len())));
        }
        Self::new(rows.len(), p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[i8]> {
        self.data.chunks_exact(self.p)
    }

    /// Relabels columns: column `s` moves to position `perm[s]`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        crate::tensor::check_permutation(perm, self.p)?;
        let mut data = vec![0i8; self.data.len()];
        for (src, dst) in self.data.chunks_exact(self.p).zip(data.chunks_exact_mut(self.p)) {
            for (s, &v) in src.iter().enumerate() {
                dst[perm[s]] = v;
            }
        }
        Ok(Self { n: self.n, p: self.p, data })
    }

    /// Empirical frequency of every state, indexed by [`state_index`].
    pub fn empirical_pmf(&self) -> Result<Vec<f64>> {
        enumeration_guard(self.p)?;
        let mut freq = vec![0.0; 1 << self.p];
        for row in self.rows() {
            freq[state_index(row)] += 1.0;
        }
        let n = self.n as f64;
        freq.iter_mut().for_each(|f| *f /= n);
        Ok(freq)
    }
}

/// Gibbs sampler schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GibbsConfig {
    pub burn_in_sweeps: usize,
    pub thin_sweeps: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { burn_in_sweeps: 1000, thin_sweeps: 10, seed: 0 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin_sweeps == 0 {
            return Err(Error::InvalidArgument("thin_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

fn enumeration_guard(p: usize) -> Result<()> {
    if p > ENUMERATION_LIMIT {
        return Err(Error::Capability(format!(
            "exact enumeration supports p <= {ENUMERATION_LIMIT}, got p={p}"
        )));
    }
    Ok(())
}

/// Index of a spin vector in the enumeration order: bit `s` is set when
/// `x_s = -1`.
pub fn state_index(x: &[i8]) -> usize {
    x.iter().enumerate().fold(0, |acc, (s, &v)| if v == -1 { acc | 1 << s } else { acc })
}

/// Spin vector of an enumeration index.
pub fn state_spins(index: usize, p: usize) -> Vec<i8> {
    let mut x = vec![0i8; p];
    bits_to_spins(index as u64, p, &mut x);
    x
}

/// `(max H, Σ exp(H - max H))`, both computed by streaming over all states.
fn shifted_mass(model: &CompiledModel) -> (f64, f64) {
    let states = 1u64 << model.p;
    let max_h = (0..states).map(|s| model.hamiltonian_bits(s)).fold(f64::NEG_INFINITY, f64::max);
    let mass = (0..states).map(|s| (model.hamiltonian_bits(s) - max_h).exp()).sum();
    (max_h, mass)
}

/// `log Z(J) = log Σ_x exp(H(x))`.
pub fn partition_function(j: &InteractionTensor) -> Result<f64> {
    enumeration_guard(j.p())?;
    let (max_h, mass) = shifted_mass(&CompiledModel::new(j));
    Ok(max_h + mass.ln())
}

/// `P_J(x) = exp(H(x) - log Z)`.
pub fn pmf(j: &InteractionTensor, x: &[i8]) -> Result<f64> {
    enumeration_guard(j.p())?;
    check_spins(x, j.p())?;
    Ok((j.hamiltonian(x)? - partition_function(j)?).exp())
}

/// Probabilities of all `2^p` states, indexed by [`state_index`].
pub fn pmf_table(j: &InteractionTensor) -> Result<Vec<f64>> {
    enumeration_guard(j.p())?;
    let model = CompiledModel::new(j);
    let log_z = {
        let (max_h, mass) = shifted_mass(&model);
        max_h + mass.ln()
    };
    Ok((0..1u64 << j.p()).map(|s| (model.hamiltonian_bits(s) - log_z).exp()).collect())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `P(X_r = +1 | x_{\r}) = e^{k m_r} / (2 cosh(k m_r)) = σ(2 k m_r)`.
/// The current value of `x_r` is ignored.
pub fn conditional_prob(j: &InteractionTensor, x: &[i8], r: usize) -> Result<f64> {
    let m = j.local_field(x, r)?;
    Ok(sigmoid(2.0 * j.k() as f64 * m))
}

/// `n` i.i.d. exact draws by inverse CDF over the enumerated states.
///
/// The uniforms are sorted once and matched against the running cumulative
/// mass, so memory stays `O(n)` regardless of `2^p`. Rows come back in draw
/// order.
pub fn sample_exact(j: &InteractionTensor, n: usize, seed: u64) -> Result<SampleMatrix> {
    enumeration_guard(j.p())?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let p = j.p();
    let model = CompiledModel::new(j);
    let (max_h, mass) = shifted_mass(&model);

    let mut rng = stream_rng(seed, 0);
    let mut targets: Vec<(f64, usize)> = (0..n).map(|i| (rng.random::<f64>() * mass, i)).collect();
    targets.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut chosen = vec![0u64; n];
    let mut next = 0;
    let mut cumulative = 0.0;
    let mut last_positive = 0u64;
    for state in 0..1u64 << p {
        let w = (model.hamiltonian_bits(state) - max_h).exp();
        if w > 0.0 {
            last_positive = state;
        }
        cumulative += w;
        while next < n && targets[next].0 < cumulative {
            chosen[targets[next].1] = state;
            next += 1;
        }
        if next == n {
            break;
        }
    }
    // rounding can leave targets equal to the total mass
    for &(_, i) in &targets[next..] {
        chosen[i] = last_positive;
    }

    let mut data = vec![0i8; n * p];
    for (row, &state) in data.chunks_exact_mut(p).zip(&chosen) {
        bits_to_spins(state, p, row);
    }
    SampleMatrix::new(n, p, data)
}

fn gibbs_sweep<R: Rng>(model: &CompiledModel, k: f64, x: &mut [i8], rng: &mut R) {
    for r in 0..x.len() {
        let prob = sigmoid(2.0 * k * model.local_field(x, r));
        x[r] = if rng.random::<f64>() < prob { 1 } else { -1 };
    }
}

/// Single-site Gibbs sampling with systematic scan over nodes `0..p`.
///
/// Starts from a uniform random state, discards `burn_in_sweeps` sweeps, then
/// records the state after every `thin_sweeps` sweeps until `n` rows exist.
pub fn sample_gibbs(j: &InteractionTensor, n: usize, cfg: &GibbsConfig) -> Result<SampleMatrix> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    let p = j.p();
    let k = j.k() as f64;
    let model = CompiledModel::new(j);
    let mut rng = stream_rng(cfg.seed, 0);
    let mut x: Vec<i8> = (0..p).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    for _ in 0..cfg.burn_in_sweeps {
        gibbs_sweep(&model, k, &mut x, &mut rng);
    }
    let mut data = Vec::with_capacity(n * p);
    for _ in 0..n {
        for _ in 0..cfg.thin_sweeps {
            gibbs_sweep(&model, k, &mut x, &mut rng);
        }
        data.extend_from_slice(&x);
    }
    SampleMatrix::new(n, p, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pair() -> InteractionTensor {
        InteractionTensor::from_edges(2, 2, [([0, 1], 0.5)]).unwrap()
    }

    #[test]
    fn log_partition_examples() {
        let zero = InteractionTensor::new(3, 3).unwrap();
        assert_relative_eq!(partition_function(&zero).unwrap(), 8f64.ln(), epsilon = 1e-14);
        // states: (++),(--) give H = 1; (+-),(-+) give H = -1
        let e = 1f64.exp();
        assert_relative_eq!(
            partition_function(&pair()).unwrap(),
            (2.0 * e + 2.0 / e).ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn pmf_examples() {
        let zero = InteractionTensor::new(4, 2).unwrap();
        assert_relative_eq!(pmf(&zero, &[1, -1, 1, 1]).unwrap(), 1.0 / 16.0, epsilon = 1e-15);
        let e = 1f64.exp();
        let expect = e / (2.0 * e + 2.0 / e);
        assert_relative_eq!(pmf(&pair(), &[1, 1]).unwrap(), expect, epsilon = 1e-14);
        assert!((expect - 0.44039).abs() < 1e-5);
    }

    #[test]
    fn conditional_examples() {
        let zero = InteractionTensor::new(3, 3).unwrap();
        assert_eq!(conditional_prob(&zero, &[1, 1, -1], 1).unwrap(), 0.5);
        let e = 1f64.exp();
        let p = conditional_prob(&pair(), &[-1, 1], 0).unwrap();
        assert_relative_eq!(p, e / (e + 1.0 / e), epsilon = 1e-14);
        assert!((p - 0.88080).abs() < 1e-5);
        assert!(matches!(conditional_prob(&pair(), &[2, 1], 0), Err(Error::InvalidSample(_))));
    }

    #[test]
    fn enumeration_limit() {
        let big = InteractionTensor::new(26, 3).unwrap();
        assert!(matches!(partition_function(&big), Err(Error::Capability(_))));
        assert!(matches!(sample_exact(&big, 1, 0), Err(Error::Capability(_))));
    }

    #[test]
    fn exact_sampling_is_deterministic() {
        let j = InteractionTensor::from_edges(5, 3, [([0, 1, 2], 0.4), ([2, 3, 4], -0.3)]).unwrap();
        let a = sample_exact(&j, 500, 11).unwrap();
        let b = sample_exact(&j, 500, 11).unwrap();
        let c = sample_exact(&j, 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gibbs_contract() {
        let j = InteractionTensor::from_edges(4, 3, [([0, 1, 2], 0.2)]).unwrap();
        let cfg = GibbsConfig { burn_in_sweeps: 5, thin_sweeps: 10, seed: 3 };
        let x = sample_gibbs(&j, 100, &cfg).unwrap();
        assert_eq!((x.n(), x.p()), (100, 4));
        assert_eq!(x, sample_gibbs(&j, 100, &cfg).unwrap());
        let bad = GibbsConfig { thin_sweeps: 0, ..cfg };
        assert!(matches!(sample_gibbs(&j, 10, &bad), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sample_matrix_validation() {
        assert!(SampleMatrix::new(0, 2, vec![]).is_err());
        assert!(matches!(SampleMatrix::new(1, 2, vec![1, 0]), Err(Error::InvalidSample(_))));
        assert!(matches!(SampleMatrix::new(1, 2, vec![1]), Err(Error::Shape(_))));
        let x = SampleMatrix::new(1, 3, vec![1, -1, -1]).unwrap();
        assert_eq!(x.permute_columns(&[2, 0, 1]).unwrap().row(0), &[-1, -1, 1]);
        assert_eq!(state_spins(state_index(&[1, -1, -1]), 3), vec![1, -1, -1]);
    }
}
