//! Proximal solver against a cyclic coordinate-descent oracle and its
//! structural properties on real losses.

use kspin::objectives::LossEval;
use kspin::{minimize_l1, HypergraphSpec, CouplingScale, NodeDesign, RiseLoss, RpleLoss, SampleMatrix, SmoothLoss, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn planted_samples(p: usize, n: usize, seed: u64) -> SampleMatrix {
    let spec = HypergraphSpec { p, k: 3, d: 3, beta: 0.4, seed, scale: CouplingScale::Hyperedge, ..Default::default() };
    kspin::sample_exact(&spec.build().unwrap(), n, seed).unwrap()
}

fn composite(loss: &dyn SmoothLoss, x: &[f64], lambda: f64) -> f64 {
    loss.value(x) + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exact minimization of `loss + λ|·|₁` along one coordinate at a time, each
/// 1-D problem solved by bisection on its monotone subgradient.
fn coordinate_descent(loss: &dyn SmoothLoss, lambda: f64, sweeps: usize) -> Vec<f64> {
    let dim = loss.dim();
    let mut x = vec![0.0; dim];
    let deriv = |x: &mut Vec<f64>, i: usize, z: f64| {
        x[i] = z;
        loss.eval(x).gradient[i]
    };
    for _ in 0..sweeps {
        let mut moved: f64 = 0.0;
        for i in 0..dim {
            let old = x[i];
            let g0 = deriv(&mut x, i, 0.0);
            let z = if g0.abs() <= lambda {
                0.0
            } else {
                // root of f'(z) + λ sign(z) on the side where it changes sign
                let (sign, shift) = if g0 < -lambda { (1.0, lambda) } else { (-1.0, -lambda) };
                let mut lo = 0.0;
                let mut hi = sign;
                while (deriv(&mut x, i, hi) + shift) * sign < 0.0 {
                    lo = hi;
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if (deriv(&mut x, i, mid) + shift) * sign < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if lo == mid && hi == mid {
                        break;
                    }
                }
                0.5 * (lo + hi)
            };
            x[i] = z;
            moved = moved.max((z - old).abs());
        }
        if moved < 1e-13 {
            break;
        }
    }
    x
}

#[test]
fn matches_coordinate_descent() {
    for seed in 0..5 {
        let x = planted_samples(5, 200, seed);
        for r in [0, 2, 4] {
            let design = NodeDesign::new(&x, r, 3).unwrap();
            let losses: [&dyn SmoothLoss; 2] = [&RpleLoss(&design), &RiseLoss(&design)];
            for loss in losses {
                for lambda in [0.01, 0.1, 1.0] {
                    let fit = minimize_l1(loss, lambda, &SolverConfig::default(), None).unwrap();
                    assert!(fit.converged);
                    let oracle = coordinate_descent(loss, lambda, 100_000);
                    let (a, b) = (fit.objective(), composite(loss, &oracle, lambda));
                    assert!((a - b).abs() < 1e-6, "seed {seed} r {r} λ {lambda}: {a} vs {b}");
                    assert!((composite(loss, &fit.coeffs, lambda) - a).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn warm_start_does_not_change_the_solution() {
    let x = planted_samples(7, 500, 3);
    let design = NodeDesign::new(&x, 1, 3).unwrap();
    let loss = RpleLoss(&design);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cold = minimize_l1(&loss, 0.05, &SolverConfig::default(), None).unwrap();
    for _ in 0..5 {
        let warm: Vec<f64> = (0..design.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fit = minimize_l1(&loss, 0.05, &SolverConfig::default(), Some(&warm)).unwrap();
        assert!(fit.converged);
        assert!((fit.objective() - cold.objective()).abs() < 1e-6);
        for w in fit.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }
}

/// The wrapped loss with coordinate `i` reading the inner coordinate `perm[i]`.
struct Permuted<'a> {
    inner: &'a dyn SmoothLoss,
    perm: Vec<usize>,
}

impl Permuted<'_> {
    fn inner_point(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        for (i, &v) in x.iter().enumerate() {
            y[self.perm[i]] = v;
        }
        y
    }
}

impl SmoothLoss for Permuted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> LossEval {
        let e = self.inner.eval(&self.inner_point(x));
        LossEval { gradient: self.perm.iter().map(|&j| e.gradient[j]).collect(), ..e }
    }
}

#[test]
fn coordinate_permutation_permutes_the_solution() {
    let x = planted_samples(7, 400, 5);
    let design = NodeDesign::new(&x, 6, 3).unwrap();
    let loss = RiseLoss(&design);
    let base = minimize_l1(&loss, 0.05, &SolverConfig::default(), None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..3 {
        let mut perm: Vec<usize> = (0..design.dim()).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        let wrapped = Permuted { inner: &loss, perm: perm.clone() };
        let fit = minimize_l1(&wrapped, 0.05, &SolverConfig::default(), None).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert!((fit.coeffs[i] - base.coeffs[j]).abs() < 1e-6);
            assert_eq!(fit.coeffs[i] == 0.0, base.coeffs[j] == 0.0);
        }
    }
}

#[test]
fn unpenalized_fit_reaches_stationarity() {
    let x = planted_samples(6, 5000, 8);
    let design = NodeDesign::new(&x, 0, 3).unwrap();
    let losses: [&dyn SmoothLoss; 2] = [&RpleLoss(&design), &RiseLoss(&design)];
    for loss in losses {
        let fit = minimize_l1(loss, 0.0, &SolverConfig::default(), None).unwrap();
        assert!(fit.converged);
        let g = loss.eval(&fit.coeffs).gradient;
        assert!(g.iter().all(|v| v.abs() <= 1e-6), "{g:?}");
    }
}

#[test]
fn large_lambda_returns_exact_zero() {
    let x = planted_samples(6, 300, 2);
    let design = NodeDesign::new(&x, 3, 3).unwrap();
    let loss = RpleLoss(&design);
    let at_zero = loss.eval(&vec![0.0; design.dim()]);
    let lambda = at_zero.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    for l in [lambda, 1e6] {
        let fit = minimize_l1(&loss, l, &SolverConfig::default(), None).unwrap();
        assert_eq!(fit.coeffs, vec![0.0; design.dim()]);
        assert_eq!(fit.iterations, 0);
    }
    let below = minimize_l1(&loss, 0.9 * lambda, &SolverConfig::default(), None).unwrap();
    assert!(below.coeffs.iter().any(|&c| c != 0.0));
}
