//! Sparse symmetric interaction tensors and neighborhood indexing.
//!
//! A tensor stores one weight per *sorted* k-tuple of distinct nodes. Lookups
//! with any ordering of the same nodes return that weight, and any tuple with
//! a repeated node reads as zero.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// `k!` as a float.
pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub(crate) fn check_spins(x: &[i8], p: usize) -> Result<()> {
    if x.len() != p {
        return Err(Error::InvalidSample(format!(
            "expected {p} spins, got {}",
            x.len()
        )));
    }
    if let Some(pos) = x.iter().position(|&s| s != 1 && s != -1) {
        return Err(Error::InvalidSample(format!(
            "entry {} is {}, expected +1 or -1",
            pos + 1,
            x[pos]
        )));
    }
    Ok(())
}

/// Colexicographic ranking of the increasing (k-1)-tuples drawn from
/// `[p] \ {r}`.
///
/// Nodes are relabeled onto `0..p-1` by closing the gap at `r`, then a tuple
/// `s_0 < s_1 < … < s_{m-1}` ranks as `Σ_i C(s_i, i+1)` (combinatorial number
/// system). The same index serves every center node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleIndex {
    p: usize,
    k: usize,
    dim: usize,
}

impl TupleIndex {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("interaction order k={k} must be >= 2")));
        }
        if k > p {
            return Err(Error::InvalidArgument(format!("k={k} exceeds node count p={p}")));
        }
        let dim = binomial(p - 1, k - 1);
        if dim > usize::MAX as u64 / 2 {
            return Err(Error::Capability(format!("C({}, {}) is too large to index", p - 1, k - 1)));
        }
        Ok(Self { p, k, dim: dim as usize })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of neighborhood coordinates, `C(p-1, k-1)`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense index of the increasing tuple `t` (0-based nodes, none equal to `r`).
    pub fn rank(&self, t: &[usize], r: usize) -> Result<usize> {
        if r >= self.p {
            return Err(Error::InvalidTuple(format!("center node {r} out of range")));
        }
        if t.len() != self.k - 1 {
            return Err(Error::InvalidTuple(format!(
                "expected {} nodes, got {}",
                self.k - 1,
                t.len()
            )));
        }
        let mut idx: u64 = 0;
        for (i, &s) in t.iter().enumerate() {
            if s >= self.p {
                return Err(Error::InvalidTuple(format!("node {s} out of range")));
            }
            if s == r {
                return Err(Error::InvalidTuple(format!("tuple contains center node {r}")));
            }
            if i > 0 && t[i - 1] >= s {
                return Err(Error::InvalidTuple(format!("tuple {t:?} is not strictly increasing")));
            }
            let relabeled = if s > r { s - 1 } else { s };
            idx += binomial(relabeled, i + 1);
        }
        Ok(idx as usize)
    }

    /// Inverse of [`rank`](Self::rank).
    pub fn unrank(&self, idx: usize, r: usize) -> Result<Vec<usize>> {
        if r >= self.p {
            return Err(Error::InvalidTuple(format!("center node {r} out of range")));
        }
        if idx >= self.dim {
            return Err(Error::InvalidTuple(format!("index {idx} out of range 0..{}", self.dim)));
        }
        let m = self.k - 1;
        let mut out = vec![0usize; m];
        let mut rest = idx as u64;
        let mut upper = self.p - 1;
        for i in (1..=m).rev() {
            // largest c < upper with C(c, i) <= rest
            let mut c = upper - 1;
            while binomial(c, i) > rest {
                c -= 1;
            }
            rest -= binomial(c, i);
            out[i - 1] = if c >= r { c + 1 } else { c };
            upper = c;
        }
        Ok(out)
    }

    /// Visits every tuple in rank order as relabeled nodes in `0..p-1`.
    pub(crate) fn for_each_relabeled(&self, mut f: impl FnMut(usize, &[usize])) {
        let m = self.k - 1;
        let n = self.p - 1;
        let mut c: Vec<usize> = (0..m).collect();
        for idx in 0..self.dim {
            f(idx, &c);
            // colex successor
            let mut i = 0;
            while i < m {
                let limit = if i + 1 < m { c[i + 1] } else { n };
                if c[i] + 1 < limit {
                    c[i] += 1;
                    for (j, cj) in c.iter_mut().enumerate().take(i) {
                        *cj = j;
                    }
                    break;
                }
                i += 1;
            }
        }
    }

    /// Monomials `Π_{s∈t} x_s` over every tuple `t` of node `r`, in rank order.
    pub fn local_monomials(&self, x: &[i8], r: usize) -> Result<Vec<i8>> {
        check_spins(x, self.p)?;
        if r >= self.p {
            return Err(Error::InvalidTuple(format!("center node {r} out of range")));
        }
        let mut out = vec![0i8; self.dim];
        self.fill_monomials(x, r, &mut out, |v| v);
        Ok(out)
    }

    /// Writes `map(Π_{s∈t} x_s)` for every tuple into `out` (length `dim`).
    /// Spins are assumed valid.
    pub(crate) fn fill_monomials<T>(&self, x: &[i8], r: usize, out: &mut [T], map: impl Fn(i8) -> T) {
        // spins of the relabeled node set
        let others: Vec<i8> = x
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != r)
            .map(|(_, &v)| v)
            .collect();
        if self.k == 2 {
            for (o, &v) in out.iter_mut().zip(&others) {
                *o = map(v);
            }
            return;
        }
        if self.k == 3 {
            let mut idx = 0;
            for b in 1..others.len() {
                let xb = others[b];
                for &xa in &others[..b] {
                    out[idx] = map(xa * xb);
                    idx += 1;
                }
            }
            return;
        }
        self.for_each_relabeled(|idx, t| {
            let prod = t.iter().fold(1i8, |acc, &s| acc * others[s]);
            out[idx] = map(prod);
        });
    }
}

/// Symmetric zero-diagonal order-k coupling tensor over `p` nodes, stored
/// sparsely by sorted tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTensor {
    p: usize,
    k: usize,
    entries: HashMap<Box<[usize]>, f64>,
}

impl InteractionTensor {
    pub fn new(p: usize, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("interaction order k={k} must be >= 2")));
        }
        if p < k {
            return Err(Error::InvalidArgument(format!("node count p={p} is smaller than k={k}")));
        }
        Ok(Self { p, k, entries: HashMap::new() })
    }

    /// Builds a tensor from `(tuple, weight)` pairs; tuples may be in any order
    /// but must not repeat after sorting.
    pub fn from_edges<I, T>(p: usize, k: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: AsRef<[usize]>,
    {
        let mut j = Self::new(p, k)?;
        for (t, w) in edges {
            let key = j.canonical(t.as_ref())?;
            let Some(key) = key else {
                return Err(Error::InvalidTuple(format!("tuple {:?} has a repeated node", t.as_ref())));
            };
            if j.entries.contains_key(&key) {
                return Err(Error::InvalidTuple(format!("duplicate hyperedge {:?}", key)));
            }
            if w != 0.0 {
                j.entries.insert(key, w);
            }
        }
        Ok(j)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of stored (nonzero) hyperedges.
    pub fn num_edges(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted tuple, or `None` when a node repeats.
    fn canonical(&self, t: &[usize]) -> Result<Option<Box<[usize]>>> {
        if t.len() != self.k {
            return Err(Error::InvalidTuple(format!("expected {} nodes, got {}", self.k, t.len())));
        }
        if let Some(&s) = t.iter().find(|&&s| s >= self.p) {
            return Err(Error::InvalidTuple(format!("node {s} out of range for p={}", self.p)));
        }
        let mut key: Box<[usize]> = t.into();
        key.sort_unstable();
        if key.windows(2).any(|w| w[0] == w[1]) {
            return Ok(None);
        }
        Ok(Some(key))
    }

    /// Weight of the tuple in any order; 0 on the diagonal or when absent.
    pub fn get(&self, t: &[usize]) -> Result<f64> {
        Ok(match self.canonical(t)? {
            Some(key) => self.entries.get(&key).copied().unwrap_or(0.0),
            None => 0.0,
        })
    }

    /// Sets the weight of the tuple (any order). A zero weight removes the
    /// entry. Diagonal tuples accept only zero.
    pub fn set(&mut self, t: &[usize], w: f64) -> Result<()> {
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite weight {w}")));
        }
        match self.canonical(t)? {
            Some(key) => {
                if w == 0.0 {
                    self.entries.remove(&key);
                } else {
                    self.entries.insert(key, w);
                }
                Ok(())
            }
            None if w == 0.0 => Ok(()),
            None => Err(Error::InvalidTuple(format!("diagonal tuple {t:?} must stay zero"))),
        }
    }

    /// Stored hyperedges in lexicographic order of their sorted tuples.
    pub fn edges(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out: Vec<(Vec<usize>, f64)> =
            self.entries.iter().map(|(k, &w)| (k.to_vec(), w)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Dense neighborhood `J_r` indexed by `idx`.
    pub fn neighborhood(&self, r: usize, idx: &TupleIndex) -> Result<Vec<f64>> {
        if idx.p() != self.p || idx.k() != self.k {
            return Err(Error::Shape(format!(
                "tuple index (p={}, k={}) does not match tensor (p={}, k={})",
                idx.p(),
                idx.k(),
                self.p,
                self.k
            )));
        }
        if r >= self.p {
            return Err(Error::InvalidTuple(format!("node {r} out of range")));
        }
        let mut out = vec![0.0; idx.dim()];
        for (key, &w) in &self.entries {
            if let Ok(pos) = key.binary_search(&r) {
                let rest: Vec<usize> =
                    key.iter().enumerate().filter(|&(i, _)| i != pos).map(|(_, &s)| s).collect();
                out[idx.rank(&rest, r)?] = w;
            }
        }
        Ok(out)
    }

    /// Relabels nodes: node `s` becomes `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.p)?;
        let edges = self
            .entries
            .iter()
            .map(|(key, &w)| (key.iter().map(|&s| perm[s]).collect::<Vec<_>>(), w));
        Self::from_edges(self.p, self.k, edges)
    }

    /// `H(x)`: the ordered-tuple sum, i.e. `k!` times the sum over stored
    /// hyperedges of weight times spin product.
    pub fn hamiltonian(&self, x: &[i8]) -> Result<f64> {
        check_spins(x, self.p)?;
        let sum: f64 = self
            .edges()
            .iter()
            .map(|(e, w)| w * e.iter().map(|&s| x[s] as f64).product::<f64>())
            .sum();
        Ok(factorial(self.k) * sum)
    }

    /// Local field `m_r(x) = Σ_{[p]^{k-1}} J[r, r1..] x_r1 …`, which equals
    /// `(k-1)!` times the sum over hyperedges containing `r`.
    pub fn local_field(&self, x: &[i8], r: usize) -> Result<f64> {
        check_spins(x, self.p)?;
        if r >= self.p {
            return Err(Error::InvalidTuple(format!("node {r} out of range")));
        }
        let mut sum = 0.0;
        for (key, w) in self.edges() {
            if key.contains(&r) {
                let prod: f64 = key.iter().filter(|&&s| s != r).map(|&s| x[s] as f64).product();
                sum += w * prod;
            }
        }
        Ok(factorial(self.k - 1) * sum)
    }
}

pub(crate) fn check_permutation(perm: &[usize], p: usize) -> Result<()> {
    let mut seen = vec![false; p];
    if perm.len() != p {
        return Err(Error::InvalidArgument(format!("permutation has length {}, expected {p}", perm.len())));
    }
    for &s in perm {
        if s >= p || std::mem::replace(&mut seen[s], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{p}")));
        }
    }
    Ok(())
}

/// Maximum coupling and hypergraph degrees of a tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    /// Largest absolute stored weight.
    pub beta_max: f64,
    /// Smallest absolute stored weight (0 for an empty tensor).
    pub beta_min: f64,
    /// Number of stored hyperedges containing each node.
    pub degree: Vec<usize>,
    pub d_max: usize,
    pub num_edges: usize,
}

pub fn graph_stats(j: &InteractionTensor) -> GraphStats {
    let mut degree = vec![0usize; j.p()];
    let mut beta_max: f64 = 0.0;
    let mut beta_min = f64::INFINITY;
    for (key, w) in &j.entries {
        beta_max = beta_max.max(w.abs());
        beta_min = beta_min.min(w.abs());
        for &s in key.iter() {
            degree[s] += 1;
        }
    }
    if j.is_empty() {
        beta_min = 0.0;
    }
    let d_max = degree.iter().copied().max().unwrap_or(0);
    GraphStats { beta_max, beta_min, degree, d_max, num_edges: j.num_edges() }
}

/// Flattened hyperedge list with per-node incidence, used by the samplers.
#[derive(Debug, Clone)]
pub(crate) struct CompiledModel {
    pub p: usize,
    pub kfact: f64,
    pub km1fact: f64,
    pub edges: Vec<(Vec<usize>, f64)>,
    pub incident: Vec<Vec<usize>>,
    /// Bit masks of each edge, available when `p <= 64`.
    pub masks: Option<Vec<u64>>,
}

impl CompiledModel {
    pub fn new(j: &InteractionTensor) -> Self {
        let edges = j.edges();
        let mut incident = vec![Vec::new(); j.p()];
        for (e, (key, _)) in edges.iter().enumerate() {
            for &s in key {
                incident[s].push(e);
            }
        }
        let masks = (j.p() <= 64)
            .then(|| edges.iter().map(|(key, _)| key.iter().fold(0u64, |m, &s| m | 1 << s)).collect());
        Self {
            p: j.p(),
            kfact: factorial(j.k()),
            km1fact: factorial(j.k() - 1),
            edges,
            incident,
            masks,
        }
    }

    /// `H` of the state whose bit `s` set means `x_s = -1`.
    pub fn hamiltonian_bits(&self, state: u64) -> f64 {
        let masks = self.masks.as_ref().expect("bit states need p <= 64");
        let mut sum = 0.0;
        for (mask, (_, w)) in masks.iter().zip(&self.edges) {
            if (state & mask).count_ones().is_multiple_of(2) {
                sum += w;
            } else {
                sum -= w;
            }
        }
        self.kfact * sum
    }

    pub fn local_field(&self, x: &[i8], r: usize) -> f64 {
        let mut sum = 0.0;
        for &e in &self.incident[r] {
            let (key, w) = &self.edges[e];
            let prod = key.iter().filter(|&&s| s != r).fold(1i8, |acc, &s| acc * x[s]);
            sum += w * prod as f64;
        }
        self.km1fact * sum
    }
}

/// Spins of a bit state: bit `s` set means `x_s = -1`.
pub(crate) fn bits_to_spins(state: u64, p: usize, out: &mut [i8]) {
    for (s, o) in out.iter_mut().enumerate().take(p) {
        *o = if state >> s & 1 == 1 { -1 } else { 1 };
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn colex_enumeration(p: usize, k: usize, r: usize) -> Vec<Vec<usize>> {
        // all increasing (k-1)-subsets of [p]\{r}, sorted colex: compare from the largest element
        let nodes: Vec<usize> = (0..p).filter(|&s| s != r).collect();
        let mut all: Vec<Vec<usize>> = Vec::new();
        let m = k - 1;
        let mut stack = vec![(Vec::new(), 0usize)];
        while let Some((cur, start)) = stack.pop() {
            if cur.len() == m {
                all.push(cur);
                continue;
            }
            for (i, &node) in nodes.iter().enumerate().skip(start) {
                let mut next = cur.clone();
                next.push(node);
                stack.push((next, i + 1));
            }
        }
        all.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
        all
    }

    #[test]
    fn rank_examples() {
        let idx = TupleIndex::new(5, 3).unwrap();
        assert_eq!(idx.rank(&[1, 2], 0).unwrap(), 0);
        assert_eq!(idx.rank(&[3, 4], 0).unwrap(), 5);
        assert_eq!(idx.dim(), 6);
    }

    #[test]
    fn rank_matches_enumeration_oracle() {
        for (p, k) in [(6, 3), (7, 4), (5, 2), (8, 3)] {
            let idx = TupleIndex::new(p, k).unwrap();
            for r in 0..p {
                let all = colex_enumeration(p, k, r);
                assert_eq!(all.len(), idx.dim());
                for (i, t) in all.iter().enumerate() {
                    assert_eq!(idx.rank(t, r).unwrap(), i, "p={p} k={k} r={r} t={t:?}");
                    assert_eq!(&idx.unrank(i, r).unwrap(), t);
                }
            }
        }
        // p=6, k=3, r=2 (1-based) and t=(3,5) (1-based)
        let idx = TupleIndex::new(6, 3).unwrap();
        let all = colex_enumeration(6, 3, 1);
        let pos = all.iter().position(|t| t == &vec![2, 4]).unwrap();
        assert_eq!(idx.rank(&[2, 4], 1).unwrap(), pos);
        assert_eq!(pos, 4);
    }

    #[test]
    fn rank_rejects_bad_tuples() {
        let idx = TupleIndex::new(5, 3).unwrap();
        assert!(matches!(idx.rank(&[2, 1], 0), Err(Error::InvalidTuple(_))));
        assert!(matches!(idx.rank(&[1, 5], 0), Err(Error::InvalidTuple(_))));
        assert!(matches!(idx.rank(&[0, 2], 0), Err(Error::InvalidTuple(_))));
        assert!(matches!(idx.rank(&[2, 2], 0), Err(Error::InvalidTuple(_))));
        assert!(matches!(idx.unrank(6, 0), Err(Error::InvalidTuple(_))));
    }

    #[test]
    fn relabeled_iteration_matches_unrank() {
        let idx = TupleIndex::new(9, 4).unwrap();
        let mut count = 0;
        idx.for_each_relabeled(|i, t| {
            let back = idx.unrank(i, 8).unwrap();
            assert_eq!(back, t.to_vec());
            count += 1;
        });
        assert_eq!(count, idx.dim());
    }

    #[test]
    fn coupling_lookup() {
        let mut j = InteractionTensor::new(5, 3).unwrap();
        j.set(&[0, 1, 2], 0.5).unwrap();
        assert_eq!(j.get(&[0, 0, 1]).unwrap(), 0.0);
        assert_eq!(j.get(&[2, 0, 1]).unwrap(), 0.5);
        assert_eq!(j.get(&[1, 3, 4]).unwrap(), 0.0);
        assert!(matches!(j.get(&[0, 1, 5]), Err(Error::InvalidTuple(_))));
        j.set(&[1, 2, 0], 0.0).unwrap();
        assert!(j.is_empty());
        assert!(j.set(&[1, 1, 2], 0.3).is_err());
        j.set(&[1, 1, 2], 0.0).unwrap();
    }

    #[test]
    fn from_edges_rejects_duplicates() {
        let err = InteractionTensor::from_edges(4, 3, [(vec![0, 1, 2], 1.0), (vec![2, 1, 0], 1.0)]);
        assert!(matches!(err, Err(Error::InvalidTuple(_))));
    }

    #[test]
    fn hamiltonian_examples() {
        let j = InteractionTensor::from_edges(2, 2, [([0, 1], 0.5)]).unwrap();
        assert_eq!(j.hamiltonian(&[1, 1]).unwrap(), 1.0);
        let j = InteractionTensor::from_edges(3, 3, [([0, 1, 2], 0.5)]).unwrap();
        assert_eq!(j.hamiltonian(&[1, -1, 1]).unwrap(), -3.0);
        assert!(matches!(j.hamiltonian(&[1, 0, 1]), Err(Error::InvalidSample(_))));
        assert!(matches!(j.hamiltonian(&[1, 1]), Err(Error::InvalidSample(_))));
    }

    #[test]
    fn monomial_examples() {
        let idx = TupleIndex::new(4, 3).unwrap();
        assert_eq!(idx.local_monomials(&[1, 1, 1, 1], 2).unwrap(), vec![1, 1, 1]);
        // tuples of node 0 in colex order: (1,2), (1,3), (2,3)
        assert_eq!(idx.local_monomials(&[1, -1, 1, -1], 0).unwrap(), vec![-1, 1, -1]);
    }

    #[test]
    fn monomial_sign_flip() {
        let idx = TupleIndex::new(6, 3).unwrap();
        let x = [1, -1, 1, 1, -1, 1];
        let r = 2;
        let base = idx.local_monomials(&x, r).unwrap();
        for s in (0..6).filter(|&s| s != r) {
            let mut y = x;
            y[s] = -y[s];
            let flipped = idx.local_monomials(&y, r).unwrap();
            for i in 0..idx.dim() {
                let t = idx.unrank(i, r).unwrap();
                let expect = if t.contains(&s) { -base[i] } else { base[i] };
                assert_eq!(flipped[i], expect);
            }
        }
    }

    #[test]
    fn local_field_examples() {
        let j = InteractionTensor::from_edges(3, 3, [([0, 1, 2], 0.5)]).unwrap();
        assert_eq!(j.local_field(&[1, 1, 1], 0).unwrap(), 1.0);
        let z = InteractionTensor::new(3, 3).unwrap();
        assert_eq!(z.local_field(&[1, -1, 1], 1).unwrap(), 0.0);
    }

    #[test]
    fn graph_stats_examples() {
        let empty = InteractionTensor::new(5, 3).unwrap();
        let s = graph_stats(&empty);
        assert_eq!((s.beta_max, s.degree.clone(), s.d_max), (0.0, vec![0; 5], 0));
        let j = InteractionTensor::from_edges(5, 3, [([0, 1, 2], -0.7)]).unwrap();
        let s = graph_stats(&j);
        assert_eq!(s.beta_max, 0.7);
        assert_eq!(s.degree, vec![1, 1, 1, 0, 0]);
        assert_eq!(s.d_max, 1);
    }

    #[test]
    fn compiled_bits_match_hamiltonian() {
        let j = InteractionTensor::from_edges(5, 3, [([0, 1, 2], 0.3), ([1, 3, 4], -0.8)]).unwrap();
        let m = CompiledModel::new(&j);
        let mut x = [0i8; 5];
        for state in 0..32u64 {
            bits_to_spins(state, 5, &mut x);
            assert!((m.hamiltonian_bits(state) - j.hamiltonian(&x).unwrap()).abs() < 1e-12);
            for r in 0..5 {
                assert!((m.local_field(&x, r) - j.local_field(&x, r).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(15, 2), 105);
        assert_eq!(binomial(50, 2), 1225);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
        assert_eq!(factorial(3), 6.0);
    }
}
