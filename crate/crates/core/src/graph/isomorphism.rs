use serde::Serialize;

use super::kernel::{WeightedKernel, Window};
use crate::error::{Error, Result};

/// Absolute tolerance on each local-isomorphism row identity.
pub const TOL_ISO: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IsomorphismCheck {
    /// The identity holds for every window site (and nothing beyond it was checked).
    VerifiedUpToWindow { rows_checked: usize },
    /// First `(x, y)` with `|Σ_{z ∈ f⁻¹(y)} k_xz − k̃_{f(x)y}| > TOL_ISO`.
    Counterexample { x: usize, y: usize, lhs: f64, rhs: f64 },
    /// Some `y` has no preimage among the window sites.
    NotSurjective { missing: usize },
}

impl IsomorphismCheck {
    pub fn is_verified(&self) -> bool {
        matches!(self, IsomorphismCheck::VerifiedUpToWindow { .. })
    }
}

/// Checks `Σ_{z ∈ f⁻¹(y)} k_xz = k̃_{f(x) y}` for every `x` in the window and
/// every `y` of the finite quotient.
///
/// Rows of `k_x` are read in full from the kernel, so edges leaving the window
/// still count; only the set of rows is truncated.
pub fn check_local_isomorphism(
    k_x: &WeightedKernel,
    k_y: &WeightedKernel,
    f: &dyn Fn(usize) -> usize,
    w: Window,
) -> Result<IsomorphismCheck> {
    let m = k_y
        .num_sites()
        .ok_or_else(|| Error::InvalidParameter("quotient kernel must be finite".into()))?;
    let quotient = k_y.to_dense().expect("finite kernel");

    let mut hit = vec![false; m];
    for x in 0..w.size() {
        let fx = f(x);
        if fx >= m {
            return Err(Error::InvalidParameter(format!(
                "site map sends {x} to {fx}, outside the quotient"
            )));
        }
        hit[fx] = true;
    }
    if let Some(missing) = hit.iter().position(|h| !h) {
        return Ok(IsomorphismCheck::NotSurjective { missing });
    }

    let mut lumped = vec![0.0; m];
    for x in 0..w.size() {
        lumped.iter_mut().for_each(|v| *v = 0.0);
        for (z, weight) in k_x.row(x)? {
            let fz = f(z);
            if fz >= m {
                return Err(Error::InvalidParameter(format!(
                    "site map sends {z} to {fz}, outside the quotient"
                )));
            }
            lumped[fz] += weight;
        }
        let fx = f(x);
        for y in 0..m {
            let rhs = quotient[fx][y];
            if (lumped[y] - rhs).abs() > TOL_ISO {
                return Ok(IsomorphismCheck::Counterexample {
                    x,
                    y,
                    lhs: lumped[y],
                    rhs,
                });
            }
        }
    }
    Ok(IsomorphismCheck::VerifiedUpToWindow {
        rows_checked: w.size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn tree_line(m: f64) -> WeightedKernel {
        WeightedKernel::generated(
            Arc::new(move |x: usize| {
                if x == 0 {
                    vec![(1, m)]
                } else {
                    vec![(x + 1, m - 1.0), (x - 1, 1.0)]
                }
            }),
            m,
            None,
        )
        .unwrap()
    }

    #[test]
    fn tree_line_collapses_to_a_point() {
        let quotient = WeightedKernel::finite(vec![vec![(0, 4.0)]], None).unwrap();
        let r = check_local_isomorphism(&tree_line(4.0), &quotient, &|_| 0, Window::new(64).unwrap())
            .unwrap();
        assert_eq!(r, IsomorphismCheck::VerifiedUpToWindow { rows_checked: 64 });
    }

    #[test]
    fn identity_map_on_finite_kernel() {
        let k = WeightedKernel::from_dense(&[vec![0.2, 1.0], vec![0.7, 0.0]]).unwrap();
        let r = check_local_isomorphism(&k, &k, &|x| x, k.window(2)).unwrap();
        assert!(r.is_verified());
    }

    #[test]
    fn perturbation_is_caught_at_its_row() {
        let k = WeightedKernel::from_dense(&[vec![0.2, 1.0], vec![0.7, 0.0]]).unwrap();
        let bumped =
            WeightedKernel::from_dense(&[vec![0.2, 1.0], vec![0.7 + 2.0 * TOL_ISO, 0.0]]).unwrap();
        let r = check_local_isomorphism(&bumped, &k, &|x| x, k.window(2)).unwrap();
        assert!(matches!(r, IsomorphismCheck::Counterexample { x: 1, y: 0, .. }));
    }

    #[test]
    fn non_surjective_map_is_structural_failure() {
        let k = WeightedKernel::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let r = check_local_isomorphism(&k, &k, &|_| 0, k.window(2)).unwrap();
        assert_eq!(r, IsomorphismCheck::NotSurjective { missing: 1 });
    }
}
