use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{SiteVector, Window};

/// Order violations larger than this make a map invalid.
pub const MONOTONE_SLACK: f64 = 1e-12;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Newton is used automatically up to this many window sites.
pub const NEWTON_MAX_DIM: usize = 256;

/// A nondecreasing map on `[0,1]^window`.
pub trait MonotoneMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, z: &[f64], out: &mut [f64]);
    /// Partial derivatives `∂W_x/∂z_y`, when the map can supply them.
    fn jacobian(&self, _z: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Iterate from `𝟘`; iterates are nondecreasing.
    Zero,
    /// Iterate from `𝟙`; iterates are nonincreasing.
    One,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Newton on small windows when the map has a Jacobian, Picard otherwise.
    Auto,
    Picard,
    Newton,
}

#[derive(Debug, Clone, Copy)]
pub struct IterOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: Method,
}

impl Default for IterOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            method: Method::Auto,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub limit: SiteVector,
    pub iterations: usize,
    /// Sup-norm of the last step.
    pub residual: f64,
    /// Contraction ratio of the last two steps (1 when unknown).
    pub rate: f64,
    pub converged: bool,
    /// False if any step moved against the iteration direction, however slightly.
    pub monotone_ok: bool,
    pub max_violation: f64,
    pub direction: Start,
    pub method: Method,
}

/// Stopping test: the last step is small and, extrapolating its contraction
/// ratio geometrically, so is the remaining distance to the limit.
fn settled(res: f64, rate: Option<f64>, tol: f64, scale: f64) -> bool {
    if res <= 4.0 * f64::EPSILON * scale.max(1.0) {
        return true;
    }
    match rate {
        Some(r) if r < 1.0 => res * r / (1.0 - r) < tol && res < tol,
        _ => false,
    }
}

struct Audit {
    direction: Start,
    monotone_ok: bool,
    max_violation: f64,
}

impl Audit {
    fn check(&mut self, iteration: usize, prev: &[f64], next: &[f64]) -> Result<()> {
        for (site, (&a, &b)) in prev.iter().zip(next).enumerate() {
            let against = match self.direction {
                Start::Zero => a - b,
                Start::One => b - a,
            };
            if against > 0.0 {
                self.monotone_ok = false;
                self.max_violation = self.max_violation.max(against);
                if against > MONOTONE_SLACK {
                    return Err(Error::NotMonotone {
                        iteration,
                        site,
                        delta: against,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Iterates `z_{n+1} = W(z_n)` from `𝟘` or `𝟙`, auditing the order of every step.
pub fn monotone_iterate(map: &dyn MonotoneMap, start: Start, opts: &IterOptions) -> Result<FixedPointReport> {
    monotone_iterate_observed(map, start, opts, &mut |_, _| {})
}

/// As [`monotone_iterate`], calling `observe(n, z_n)` after every step.
pub fn monotone_iterate_observed(
    map: &dyn MonotoneMap,
    start: Start,
    opts: &IterOptions,
    observe: &mut dyn FnMut(usize, &[f64]),
) -> Result<FixedPointReport> {
    let n = map.dim();
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {}", opts.tol)));
    }
    let use_newton = match opts.method {
        Method::Picard => false,
        Method::Newton => true,
        Method::Auto => n <= NEWTON_MAX_DIM && map.jacobian(&vec![0.5; n]).is_some(),
    };
    let init = match start {
        Start::Zero => 0.0,
        Start::One => 1.0,
    };
    let mut z = vec![init; n];
    let mut next = vec![0.0; n];
    let mut picard = vec![0.0; n];
    let mut audit = Audit {
        direction: start,
        monotone_ok: true,
        max_violation: 0.0,
    };
    let mut prev_res: Option<f64> = None;
    let mut res = f64::INFINITY;
    let mut rate = None;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        map.apply(&z, &mut picard);
        if use_newton {
            newton_step(map, start, &z, &picard, &mut next);
        } else {
            next.copy_from_slice(&picard);
        }
        audit.check(iterations, &z, &next)?;
        res = z
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rate = prev_res.map(|p: f64| if p > 0.0 { res / p } else { 0.0 });
        std::mem::swap(&mut z, &mut next);
        observe(iterations, &z);
        if settled(res, rate, opts.tol, 1.0) {
            converged = true;
            break;
        }
        prev_res = Some(res);
    }

    Ok(FixedPointReport {
        limit: SiteVector::new(z)?,
        iterations,
        residual: res,
        rate: rate.unwrap_or(1.0),
        converged,
        monotone_ok: audit.monotone_ok,
        max_violation: audit.max_violation,
        direction: start,
        method: if use_newton { Method::Newton } else { Method::Picard },
    })
}

/// One safeguarded Newton step for `W(z) = z`.
///
/// With `r = W(z) − z` of one sign, the step `(I − J)^{-1} r` dominates `r`
/// whenever `(I − J)^{-1}` is nonnegative; otherwise the plain Picard value is kept.
fn newton_step(map: &dyn MonotoneMap, start: Start, z: &[f64], picard: &[f64], out: &mut [f64]) {
    out.copy_from_slice(picard);
    let n = z.len();
    let Some(j) = map.jacobian(z) else { return };
    let r = DVector::from_iterator(n, picard.iter().zip(z).map(|(p, a)| p - a));
    if r.iter().all(|&v| v == 0.0) {
        return;
    }
    let a = DMatrix::<f64>::identity(n, n) - j;
    let Some(d) = a.lu().solve(&r) else { return };
    let dominates = match start {
        Start::Zero => d.iter().zip(r.iter()).all(|(&di, &ri)| di >= ri - 1e-15 && di.is_finite()),
        Start::One => d.iter().zip(r.iter()).all(|(&di, &ri)| di <= ri + 1e-15 && di.is_finite()),
    };
    if !dominates {
        return;
    }
    for i in 0..n {
        let v = (z[i] + d[i]).clamp(0.0, 1.0);
        out[i] = match start {
            Start::Zero => v.max(picard[i]),
            Start::One => v.min(picard[i]),
        };
    }
}

/// Applies `map` to `v` and reports whether `map(v) ≥ v` holds on every site.
pub fn is_sub_solution(map: &dyn MonotoneMap, v: &[f64]) -> bool {
    let mut out = vec![0.0; v.len()];
    map.apply(v, &mut out);
    out.iter().zip(v).all(|(h, y)| h >= y)
}

/// Applies `map` to `v` and reports whether `map(v) ≤ v` holds on every site.
pub fn is_super_solution(map: &dyn MonotoneMap, v: &[f64]) -> bool {
    let mut out = vec![0.0; v.len()];
    map.apply(v, &mut out);
    out.iter().zip(v).all(|(h, y)| h <= y)
}

pub(crate) fn check_dim(map: &dyn MonotoneMap, w: Window) -> Result<()> {
    if map.dim() != w.size() {
        return Err(Error::InvalidParameter(format!(
            "map acts on {} sites, window has {}",
            map.dim(),
            w.size()
        )));
    }
    Ok(())
}
