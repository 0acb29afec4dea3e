//! Hamiltonian, local field and tuple indexing against brute-force
//! ordered-tuple sums.

use kspin::{binomial, graph_stats, InteractionTensor, TupleIndex};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tensor(p: usize, k: usize, edges: usize, seed: u64) -> InteractionTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = InteractionTensor::new(p, k).unwrap();
    for _ in 0..edges {
        let mut e = sample(&mut rng, p, k).into_vec();
        e.sort_unstable();
        j.set(&e, rng.random_range(-1.0..1.0)).unwrap();
    }
    j
}

fn spins(p: usize, bits: usize) -> Vec<i8> {
    (0..p).map(|s| if bits >> s & 1 == 1 { -1 } else { 1 }).collect()
}

/// Calls `f` on every ordered tuple in `[p]^m`, repeats included.
fn for_each_ordered(p: usize, m: usize, f: &mut impl FnMut(&[usize])) {
    let mut t = vec![0usize; m];
    loop {
        f(&t);
        let mut i = 0;
        loop {
            if i == m {
                return;
            }
            t[i] += 1;
            if t[i] < p {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}

fn brute_hamiltonian(j: &InteractionTensor, x: &[i8]) -> f64 {
    let mut h = 0.0;
    for_each_ordered(j.p(), j.k(), &mut |t| {
        let prod: f64 = t.iter().map(|&s| x[s] as f64).product();
        h += j.get(t).unwrap() * prod;
    });
    h
}

fn brute_local_field(j: &InteractionTensor, x: &[i8], r: usize) -> f64 {
    let mut m = 0.0;
    for_each_ordered(j.p(), j.k() - 1, &mut |t| {
        let mut full = vec![r];
        full.extend_from_slice(t);
        let prod: f64 = t.iter().map(|&s| x[s] as f64).product();
        m += j.get(&full).unwrap() * prod;
    });
    m
}

#[test]
fn hamiltonian_matches_ordered_tuple_sum() {
    for (p, k, edges) in [(4, 2, 4), (5, 3, 6), (6, 3, 10), (6, 4, 7), (7, 3, 12), (5, 5, 1)] {
        for seed in 0..3 {
            let j = random_tensor(p, k, edges, seed);
            for bits in 0..1usize << p {
                let x = spins(p, bits);
                let fast = j.hamiltonian(&x).unwrap();
                let slow = brute_hamiltonian(&j, &x);
                assert!((fast - slow).abs() < 1e-10 * (1.0 + slow.abs()), "p={p} k={k}: {fast} vs {slow}");
            }
        }
    }
}

#[test]
fn local_field_matches_ordered_tuple_sum() {
    for (p, k, edges) in [(4, 2, 5), (5, 3, 6), (7, 3, 15), (7, 4, 9)] {
        let j = random_tensor(p, k, edges, 11);
        for bits in (0..1usize << p).step_by(3) {
            let x = spins(p, bits);
            for r in 0..p {
                let fast = j.local_field(&x, r).unwrap();
                let slow = brute_local_field(&j, &x, r);
                assert!((fast - slow).abs() < 1e-10 * (1.0 + slow.abs()));
            }
        }
    }
}

#[test]
fn colex_rank_matches_enumeration_order() {
    // colex: compare tuples from the largest element down
    for (p, k) in [(5, 2), (6, 3), (7, 4), (8, 3)] {
        let idx = TupleIndex::new(p, k).unwrap();
        for r in 0..p {
            let others: Vec<usize> = (0..p).filter(|&s| s != r).collect();
            let mut tuples: Vec<Vec<usize>> = Vec::new();
            let mut pick = vec![false; others.len()];
            for mask in 0..1u32 << others.len() {
                if mask.count_ones() as usize == k - 1 {
                    pick.iter_mut().enumerate().for_each(|(i, b)| *b = mask >> i & 1 == 1);
                    tuples.push(others.iter().zip(&pick).filter(|(_, &b)| b).map(|(&s, _)| s).collect());
                }
            }
            tuples.sort_by(|a, b| a.iter().rev().cmp(b.iter().rev()));
            assert_eq!(tuples.len() as u64, binomial(p - 1, k - 1));
            for (i, t) in tuples.iter().enumerate() {
                assert_eq!(idx.rank(t, r).unwrap(), i);
                assert_eq!(&idx.unrank(i, r).unwrap(), t);
            }
        }
    }
}

#[test]
fn graph_stats_examples() {
    let empty = InteractionTensor::new(5, 3).unwrap();
    let s = graph_stats(&empty);
    assert_eq!((s.beta_max, s.d_max, s.num_edges), (0.0, 0, 0));
    assert_eq!(s.degree, vec![0; 5]);

    let single = InteractionTensor::from_edges(6, 3, [([0, 1, 2], -0.7)]).unwrap();
    let s = graph_stats(&single);
    assert_eq!(s.beta_max, 0.7);
    assert_eq!(s.degree, vec![1, 1, 1, 0, 0, 0]);
}

fn tensor_strategy() -> impl Strategy<Value = InteractionTensor> {
    (3usize..=7, 2usize..=4, 0usize..10, any::<u64>())
        .prop_filter("k <= p", |(p, k, _, _)| k <= p)
        .prop_map(|(p, k, e, seed)| random_tensor(p, k, e, seed))
}

proptest! {
    #[test]
    fn relabeling_preserves_energy(j in tensor_strategy(), bits in any::<u32>(), perm_seed in any::<u64>()) {
        let p = j.p();
        let x = spins(p, bits as usize);
        let mut perm: Vec<usize> = (0..p).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(perm_seed));
        let mut px = vec![0i8; p];
        for s in 0..p {
            px[perm[s]] = x[s];
        }
        let h = j.hamiltonian(&x).unwrap();
        let hp = j.permuted(&perm).unwrap().hamiltonian(&px).unwrap();
        prop_assert!((h - hp).abs() < 1e-10 * (1.0 + h.abs()));
    }

    #[test]
    fn global_flip_parity(j in tensor_strategy(), bits in any::<u32>()) {
        let x = spins(j.p(), bits as usize);
        let neg: Vec<i8> = x.iter().map(|v| -v).collect();
        let sign = if j.k() % 2 == 0 { 1.0 } else { -1.0 };
        let h = j.hamiltonian(&x).unwrap();
        prop_assert!((j.hamiltonian(&neg).unwrap() - sign * h).abs() < 1e-10 * (1.0 + h.abs()));
    }

    #[test]
    fn single_flip_identity(j in tensor_strategy(), bits in any::<u32>(), r in 0usize..7) {
        let p = j.p();
        let r = r % p;
        let x = spins(p, bits as usize);
        let mut flipped = x.clone();
        flipped[r] = -flipped[r];
        let lhs = j.k() as f64 * x[r] as f64 * j.local_field(&x, r).unwrap();
        let rhs = (j.hamiltonian(&x).unwrap() - j.hamiltonian(&flipped).unwrap()) / 2.0;
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn rank_unrank_bijection(p in 3usize..12, k in 2usize..5, r in 0usize..12, seed in any::<u64>()) {
        prop_assume!(k <= p);
        let r = r % p;
        let idx = TupleIndex::new(p, k).unwrap();
        let i = (seed % idx.dim() as u64) as usize;
        let t = idx.unrank(i, r).unwrap();
        prop_assert_eq!(t.len(), k - 1);
        prop_assert!(t.windows(2).all(|w| w[0] < w[1]) && !t.contains(&r));
        prop_assert_eq!(idx.rank(&t, r).unwrap(), i);
    }

    #[test]
    fn neighborhood_reads_tensor(j in tensor_strategy(), r in 0usize..7) {
        let r = r % j.p();
        let idx = TupleIndex::new(j.p(), j.k()).unwrap();
        let jr = j.neighborhood(r, &idx).unwrap();
        for (i, &w) in jr.iter().enumerate() {
            let mut e = idx.unrank(i, r).unwrap();
            e.push(r);
            prop_assert_eq!(w, j.get(&e).unwrap());
        }
    }
}
