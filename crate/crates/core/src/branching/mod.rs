//! Multitype branching processes with countably many types: offspring laws,
//! generating functions, the monotone fixed-point engine, extinction and
//! survival probabilities.

mod fixed_point;
mod law;

pub use fixed_point::{
    is_sub_solution, is_super_solution, monotone_iterate, monotone_iterate_observed, FixedPointReport,
    IterOptions, Method, MonotoneMap, Start, DEFAULT_MAX_ITER, DEFAULT_TOL, MONOTONE_SLACK, NEWTON_MAX_DIM,
};
pub use law::{Boundary, LawMap, LawRow, OffspringLaw, TableLaw, LAW_MASS_TOL};

use serde::Serialize;

use crate::error::Result;
use crate::graph::{classes_of, SiteVector, WeightedKernel, Window};

/// Survival above this after convergence counts as survival.
pub const DELTA_SURVIVE: f64 = 1e-6;
/// Survival below this on an unconverged run counts as numerical extinction.
pub const DELTA_EXTINCT: f64 = 1e-8;

/// `G(z|x)` of any law.
pub fn evaluate_g(law: &OffspringLaw, z: &SiteVector, x: usize) -> Result<f64> {
    law.evaluate_g(z, x)
}

/// Smallest fixed point of `G` on the window: the extinction probabilities `q`.
pub fn extinction_probs(law: &OffspringLaw, w: Window, opts: &IterOptions) -> Result<FixedPointReport> {
    extinction_probs_with(law, w, &Boundary::NeverBorn, opts)
}

pub fn extinction_probs_with(
    law: &OffspringLaw,
    w: Window,
    boundary: &Boundary,
    opts: &IterOptions,
) -> Result<FixedPointReport> {
    let g = law.g_map(w, boundary)?;
    fixed_point::check_dim(&g, w)?;
    monotone_iterate(&g, Start::Zero, opts)
}

/// Largest fixed point of `H = 𝟙 − G(𝟙 − ·)` reached from `v_0 = 𝟙`: the survival probabilities `v`.
pub fn survival_probs(law: &OffspringLaw, w: Window, opts: &IterOptions) -> Result<FixedPointReport> {
    survival_probs_with(law, w, &Boundary::NeverBorn, opts)
}

pub fn survival_probs_with(
    law: &OffspringLaw,
    w: Window,
    boundary: &Boundary,
    opts: &IterOptions,
) -> Result<FixedPointReport> {
    let h = law.h_map(w, boundary)?;
    fixed_point::check_dim(&h, w)?;
    monotone_iterate(&h, Start::One, opts)
}

/// Whether the graph of possible parent-child types is strongly connected on the window.
pub fn ibp_irreducible(law: &OffspringLaw, w: Window) -> Result<bool> {
    let rows = (0..w.size())
        .map(|x| {
            Ok(law
                .children_types(x)?
                .into_iter()
                .filter(|&y| w.contains(y))
                .map(|y| (y, 1.0))
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let k = WeightedKernel::finite(rows, None)?;
    Ok(classes_of(&k.restrict(w)?).num_classes() == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Survives,
    Extinct,
    ExtinctNumerical,
    Undecided,
}

impl Verdict {
    pub fn survives(self) -> bool {
        self == Verdict::Survives
    }

    pub fn extinct(self) -> bool {
        matches!(self, Verdict::Extinct | Verdict::ExtinctNumerical)
    }
}

/// Scalings tried when looking for a sub-solution below an unconverged iterate.
const SUB_SOLUTION_SCALES: [f64; 3] = [0.999, 0.9, 0.5];

/// Verdict at `x` from a survival run of the map `h`.
///
/// An unconverged run still proves survival when some `s·v_n` is a
/// sub-solution `H(y) ≥ y` with `y(x) > DELTA_SURVIVE`, since then `v ≥ y`.
pub fn survival_verdict(report: &FixedPointReport, h: &dyn MonotoneMap, x: usize) -> Verdict {
    let v = report.limit.as_slice();
    let vx = v[x];
    if report.converged {
        return if vx > DELTA_SURVIVE {
            Verdict::Survives
        } else {
            Verdict::Extinct
        };
    }
    if vx < DELTA_EXTINCT {
        return Verdict::ExtinctNumerical;
    }
    for s in SUB_SOLUTION_SCALES {
        let y: Vec<f64> = v.iter().map(|a| s * a).collect();
        if y[x] > DELTA_SURVIVE && is_sub_solution(h, &y) {
            return Verdict::Survives;
        }
    }
    Verdict::Undecided
}
