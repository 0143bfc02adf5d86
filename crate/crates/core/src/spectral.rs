//! Spectral radius of nonnegative kernels by power iteration on `K + I`, with
//! Collatz–Wielandt bounds as the stopping test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{classes_of, SubKernel, WeightedKernel};

pub const SPECTRAL_TOL: f64 = 1e-12;
pub const SPECTRAL_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralRadius {
    /// Midpoint of the final bounds.
    pub rho: f64,
    /// `min_i (Ku)_i/u_i` for the final positive `u`; never above the true radius.
    pub lower: f64,
    /// `max_i (Ku)_i/u_i`; never below the true radius.
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on `K + I` from `𝟙`, meant for irreducible kernels.
///
/// The shift keeps every iterate strictly positive and makes irreducible
/// classes aperiodic; `ρ(K) = ρ(K + I) − 1`.
pub fn spectral_radius_sub(sub: &SubKernel) -> SpectralRadius {
    let n = sub.size();
    let mut u = vec![1.0; n];
    let mut au = vec![0.0; n];
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < SPECTRAL_MAX_ITER {
        iterations += 1;
        sub.apply_into(&u, &mut au);
        for i in 0..n {
            au[i] += u[i];
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let r = au[i] / u[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower = f64::max(lower, lo);
        upper = f64::min(upper, hi);
        let norm = au.iter().cloned().fold(0.0, f64::max);
        for i in 0..n {
            u[i] = (au[i] / norm).max(f64::MIN_POSITIVE);
        }
        if upper - lower <= SPECTRAL_TOL * upper {
            converged = true;
            break;
        }
    }
    let lower = (lower - 1.0).max(0.0);
    let upper = (upper - 1.0).max(0.0);
    SpectralRadius {
        rho: 0.5 * (lower + upper),
        lower,
        upper,
        iterations,
        converged,
    }
}

/// Spectral radius of a finite kernel: the largest radius among its irreducible classes.
pub fn spectral_radius(k: &WeightedKernel) -> Result<SpectralRadius> {
    let w = k
        .full_window()
        .ok_or_else(|| Error::InvalidParameter("spectral radius needs a finite kernel".into()))?;
    let classes = classes_of(&k.restrict(w)?);
    let mut best = SpectralRadius {
        rho: 0.0,
        lower: 0.0,
        upper: 0.0,
        iterations: 0,
        converged: true,
    };
    for (c, sites) in classes.classes.iter().enumerate() {
        if !classes.cyclic[c] {
            continue;
        }
        let r = class_radius(k, sites)?;
        best.iterations += r.iterations;
        best.converged &= r.converged;
        best.lower = best.lower.max(r.lower);
        best.upper = best.upper.max(r.upper);
        if r.rho > best.rho {
            best.rho = r.rho;
        }
    }
    Ok(best)
}

/// Radius of `K` restricted to one irreducible class; zero for an acyclic singleton.
pub fn class_radius(k: &WeightedKernel, sites: &[usize]) -> Result<SpectralRadius> {
    let induced = k.induced(sites)?;
    let w = induced.full_window().expect("induced kernels are finite");
    Ok(spectral_radius_sub(&induced.restrict(w)?))
}

/// Spectral radius of `K` restricted to `sites` (of a finite or generated kernel).
pub fn spectral_radius_on(k: &WeightedKernel, sites: &[usize]) -> Result<SpectralRadius> {
    spectral_radius(&k.induced(sites)?)
}

/// Collatz–Wielandt upper bound `max_i (Ku)_i/u_i` at the final iterate, for
/// any nonnegative sub-kernel; it never falls below the true radius.
pub fn radius_upper_bound(sub: &SubKernel) -> f64 {
    spectral_radius_sub(sub).upper
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bipartite_two_site() {
        let k = WeightedKernel::from_dense(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let r = spectral_radius(&k).unwrap();
        assert!(r.converged);
        assert!((r.rho - 2.0).abs() < 1e-11);
    }

    #[test]
    fn reducible_takes_the_largest_class() {
        let k = WeightedKernel::from_dense(&[
            vec![0.0, 1.0, 0.5, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 3.0],
            vec![0.0, 0.0, 3.0, 0.0],
        ])
        .unwrap();
        let r = spectral_radius(&k).unwrap();
        assert!((r.rho - 3.0).abs() < 1e-10);
    }

    #[test]
    fn zero_kernel() {
        let k = WeightedKernel::finite(vec![vec![]], None).unwrap();
        let r = spectral_radius(&k).unwrap();
        assert_eq!(r.rho, 0.0);
    }

    #[test]
    fn bounds_bracket_the_radius() {
        // ρ of [[1,2],[3,4]] is (5 + √33)/2
        let k = WeightedKernel::from_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let r = spectral_radius(&k).unwrap();
        let exact = (5.0 + 33f64.sqrt()) / 2.0;
        assert!(r.lower <= exact + 1e-12 && exact <= r.upper + 1e-12);
        assert!((r.rho - exact).abs() < 1e-10);
    }
}
