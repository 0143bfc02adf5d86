#![allow(dead_code)]

use brwcrit_core::WeightedKernel;
use nalgebra::DMatrix;
use rand::Rng;

/// Weight in `(0, 2]`.
pub fn weight<R: Rng>(rng: &mut R) -> f64 {
    2.0 * (1.0 - rng.random::<f64>())
}

/// Random irreducible kernel: a Hamiltonian cycle plus random extra edges.
pub fn random_irreducible<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        m[i][(i + 1) % n] = weight(rng);
        for j in 0..n {
            if m[i][j] == 0.0 && rng.random_bool(0.35) {
                m[i][j] = weight(rng);
            }
        }
    }
    m
}

pub fn kernel(m: &[Vec<f64>]) -> WeightedKernel {
    WeightedKernel::from_dense(m).unwrap()
}

/// Spectral radius from the full eigen-decomposition.
pub fn eigen_rho(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 0 {
        return 0.0;
    }
    let a = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn matrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    let n = m.len();
    DMatrix::from_fn(n, n, |i, j| m[i][j])
}

/// Random kernel with every entry present with probability `density`; may be reducible.
pub fn random_dense<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..n)
                .map(|_| if rng.random_bool(density) { weight(rng) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Right Perron vector of an irreducible matrix, by power iteration on `K + I`, max-normalised.
pub fn perron_vector(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut v = vec![1.0; n];
    for _ in 0..20_000 {
        let mut next: Vec<f64> = (0..n).map(|i| v[i] + (0..n).map(|j| m[i][j] * v[j]).sum::<f64>()).collect();
        let top = next.iter().cloned().fold(0.0, f64::max);
        next.iter_mut().for_each(|a| *a /= top);
        v = next;
    }
    v
}

/// Generated banded kernel on the naturals with pseudo-random weights keyed by `seed`.
pub fn random_generated(seed: u64) -> WeightedKernel {
    use rand::SeedableRng;
    use std::sync::Arc;
    WeightedKernel::generated(
        Arc::new(move |x: usize| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut row = vec![(x + 1, weight(&mut rng))];
            if rng.random_bool(0.5) {
                row.push((x, weight(&mut rng)));
            }
            if x > 0 && rng.random_bool(0.8) {
                row.push((x - 1, weight(&mut rng)));
            }
            if rng.random_bool(0.3) {
                row.push((x + 2, weight(&mut rng)));
            }
            row
        }),
        8.0,
        None,
    )
    .unwrap()
}
