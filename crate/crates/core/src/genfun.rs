//! Geometric parameters `M_s`, `M_w`, `M_w⁻` from `n`-th roots of path weights,
//! and the generating functions `Γ`, `Θ`, `Φ` as truncated power series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{LogWeight, RowWalk, SubKernel, WeightedKernel, Window};

pub const DEFAULT_NMAX_FINITE: usize = 64;
pub const DEFAULT_NMAX_GENERATED: usize = 128;
pub const DEFAULT_BISECTION_TOL: f64 = 1e-6;

/// Relative size of the extrapolated tail below which a series counts as converged.
const SERIES_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    /// `limsup (k^n_xy)^{1/n}`
    Ms,
    /// `limsup (T^n_x)^{1/n}`
    Mw,
    /// `liminf (T^n_x)^{1/n}`
    MwMinus,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::Ms => "Ms",
            Parameter::Mw => "Mw",
            Parameter::MwMinus => "Mw_minus",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootSequenceEstimate {
    pub which: Parameter,
    pub n_max: usize,
    /// `(n, value^{1/n})` for every `n ≥ 1` with a positive value.
    pub roots: Vec<(usize, f64)>,
    pub limsup_est: f64,
    pub liminf_est: f64,
    /// The estimate reported for `which`: `limsup_est` for `Ms`/`Mw`, `liminf_est` for `MwMinus`.
    pub estimate: f64,
    pub warning: Option<String>,
}

/// Raw sequences from a single walk: `k^n_xy` and `T^n_x` for `n = 0..=n_max`.
struct Sequences {
    to_target: Vec<LogWeight>,
    totals: Vec<LogWeight>,
}

fn walk_sequences(sub: &SubKernel, x: usize, y: usize, n_max: usize) -> Result<Sequences> {
    sub.window().check(y)?;
    let mut walk = RowWalk::new(sub, x)?;
    let mut to_target = Vec::with_capacity(n_max + 1);
    let mut totals = Vec::with_capacity(n_max + 1);
    to_target.push(walk.current().get(y));
    totals.push(LogWeight::ONE);
    for _ in 0..n_max {
        let row = walk.advance();
        to_target.push(row.get(y));
        totals.push(row.total());
    }
    Ok(Sequences { to_target, totals })
}

fn positive_roots(seq: &[LogWeight]) -> Vec<(usize, f64)> {
    seq.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, w)| !w.is_zero())
        .map(|(n, w)| (n, w.root(n)))
        .collect()
}

/// Max and min of the roots with `n` in the upper half `[n_max/2, n_max]`.
/// Falls back to all roots when the upper half has none.
fn upper_half_extremes(roots: &[(usize, f64)], n_max: usize) -> Option<(f64, f64)> {
    let lo = n_max.div_ceil(2);
    let mut upper = roots.iter().filter(|(n, _)| *n >= lo).peekable();
    let pick: Vec<f64> = if upper.peek().is_some() {
        upper.map(|&(_, r)| r).collect()
    } else {
        roots.iter().map(|&(_, r)| r).collect()
    };
    if pick.is_empty() {
        return None;
    }
    let max = pick.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = pick.iter().cloned().fold(f64::INFINITY, f64::min);
    Some((max, min))
}

fn build(which: Parameter, n_max: usize, roots: Vec<(usize, f64)>, floor: f64) -> RootSequenceEstimate {
    match upper_half_extremes(&roots, n_max) {
        None => RootSequenceEstimate {
            which,
            n_max,
            roots,
            limsup_est: 0.0,
            liminf_est: 0.0,
            estimate: 0.0,
            warning: Some("all path weights vanish: target not reachable within the window".into()),
        },
        Some((max, min)) => {
            let limsup_est = max.max(floor);
            let liminf_est = min.max(floor);
            let estimate = match which {
                Parameter::Ms | Parameter::Mw => limsup_est,
                Parameter::MwMinus => liminf_est,
            };
            RootSequenceEstimate {
                which,
                n_max,
                roots,
                limsup_est,
                liminf_est,
                estimate,
                warning: None,
            }
        }
    }
}

/// Largest return root `max_n (k^n_xx)^{1/n}` over `1..=n_max`; a lower bound for `M_s(x)`.
fn return_root_bound(returns: &[LogWeight]) -> f64 {
    positive_roots(returns)
        .iter()
        .map(|&(_, r)| r)
        .fold(0.0, f64::max)
}

/// Estimates one of the geometric parameters at `x` (and `y` for `Ms`).
///
/// The `Mw` and `MwMinus` estimates are floored by the largest return root of
/// `x`, which never exceeds the true `M_s(x) ≤ M_w⁻(x)`. The reported `roots`
/// are always the raw sequence.
pub fn estimate_parameters(
    k: &WeightedKernel,
    which: Parameter,
    x: usize,
    y: usize,
    n_max: usize,
    w: Window,
) -> Result<RootSequenceEstimate> {
    let sub = k.restrict(w)?;
    estimate_on(&sub, which, x, y, n_max)
}

pub fn estimate_on(
    sub: &SubKernel,
    which: Parameter,
    x: usize,
    y: usize,
    n_max: usize,
) -> Result<RootSequenceEstimate> {
    if n_max < 8 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max}, need at least 8")));
    }
    match which {
        Parameter::Ms => {
            let seq = walk_sequences(sub, x, y, n_max)?;
            Ok(build(which, n_max, positive_roots(&seq.to_target), 0.0))
        }
        Parameter::Mw | Parameter::MwMinus => {
            let seq = walk_sequences(sub, x, x, n_max)?;
            let floor = return_root_bound(&seq.to_target);
            Ok(build(which, n_max, positive_roots(&seq.totals), floor))
        }
    }
}

/// `M_s(x)`, `M_w⁻(x)` and `M_w(x)` from one walk, so the three share their root range.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterEstimates {
    pub ms: RootSequenceEstimate,
    pub mw_minus: RootSequenceEstimate,
    pub mw: RootSequenceEstimate,
}

pub fn estimate_all(sub: &SubKernel, x: usize, n_max: usize) -> Result<ParameterEstimates> {
    if n_max < 8 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max}, need at least 8")));
    }
    let seq = walk_sequences(sub, x, x, n_max)?;
    let floor = return_root_bound(&seq.to_target);
    let totals = positive_roots(&seq.totals);
    Ok(ParameterEstimates {
        ms: build(Parameter::Ms, n_max, positive_roots(&seq.to_target), 0.0),
        mw_minus: build(Parameter::MwMinus, n_max, totals.clone(), floor),
        mw: build(Parameter::Mw, n_max, totals, floor),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Series {
    /// `Γ(x,y|λ) = Σ_{n≥0} k^n_xy λ^n`
    Gamma,
    /// `Θ(x|λ) = Σ_{n≥0} T^n_x λ^n`
    Theta,
    /// `Φ(x,y|λ) = Σ_{n≥1} φ^n_xy λ^n`
    Phi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFlag {
    Converged,
    Truncated,
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesValue {
    pub lambda: f64,
    /// May be `inf` once the sum leaves the `f64` range; `ln_partial_sum` stays finite.
    pub partial_sum: f64,
    pub ln_partial_sum: f64,
    pub terms_used: usize,
    pub tail_flag: TailFlag,
}

/// Coefficients `c_0..=c_{n_max}` of the requested series.
pub fn coefficients(
    sub: &SubKernel,
    which: Series,
    x: usize,
    y: usize,
    n_max: usize,
) -> Result<Vec<LogWeight>> {
    Ok(match which {
        Series::Gamma => walk_sequences(sub, x, y, n_max)?.to_target,
        Series::Theta => walk_sequences(sub, x, x, n_max)?.totals,
        Series::Phi => crate::graph::first_passage_sequence(sub, x, y, n_max)?,
    })
}

/// Sums `Σ c_n λ^n` in the log domain and classifies the tail from the last
/// quarter of the nonzero terms.
pub fn sum_series(coeffs: &[LogWeight], lambda: f64) -> SeriesValue {
    let ln_lambda = lambda.ln();
    let terms: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(n, c)| {
            let t = if n == 0 { c.ln() } else { c.ln() + n as f64 * ln_lambda };
            (n, t)
        })
        .filter(|(_, t)| *t > f64::NEG_INFINITY)
        .collect();
    let terms_used = coeffs.len();

    let Some(ln_max) = terms.iter().map(|&(_, t)| t).reduce(f64::max) else {
        return SeriesValue {
            lambda,
            partial_sum: 0.0,
            ln_partial_sum: f64::NEG_INFINITY,
            terms_used,
            tail_flag: TailFlag::Converged,
        };
    };
    let scaled: f64 = terms.iter().map(|&(_, t)| (t - ln_max).exp()).sum();
    let ln_sum = ln_max + scaled.ln();

    let n_last = coeffs.len().saturating_sub(1);
    let quarter_start = n_last - n_last / 4;
    let tail: Vec<(usize, f64)> = terms.iter().cloned().filter(|(n, _)| *n >= quarter_start).collect();
    let tail_flag = if tail.is_empty() {
        // nothing in the last quarter: the coefficients have died out
        TailFlag::Converged
    } else if tail.len() < 2 {
        let (_, t) = tail[0];
        if t - ln_sum < SERIES_REL_TOL.ln() {
            TailFlag::Converged
        } else {
            TailFlag::Truncated
        }
    } else {
        let (n0, t0) = tail[0];
        let (n1, t1) = tail[tail.len() - 1];
        let slope = (t1 - t0) / (n1 - n0) as f64;
        if slope >= 0.0 {
            TailFlag::Diverging
        } else {
            // geometric extrapolation of the remaining terms
            let r = slope.exp();
            let ln_rest = t1 + (r / (1.0 - r)).ln();
            if ln_rest - ln_sum < SERIES_REL_TOL.ln() {
                TailFlag::Converged
            } else {
                TailFlag::Truncated
            }
        }
    };

    SeriesValue {
        lambda,
        partial_sum: ln_sum.exp(),
        ln_partial_sum: ln_sum,
        terms_used,
        tail_flag,
    }
}

pub fn series(
    k: &WeightedKernel,
    which: Series,
    x: usize,
    y: usize,
    lambda: f64,
    n_max: usize,
    w: Window,
) -> Result<SeriesValue> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
    }
    let sub = k.restrict(w)?;
    Ok(sum_series(&coefficients(&sub, which, x, y, n_max)?, lambda))
}

/// `1/M_s(x)` as the largest `λ` with `Φ(x,x|λ) ≤ 1`, by bisection.
///
/// The upper end of the bracket is `1/max_n (k^n_xx)^{1/n}`, which is never
/// below `λ_s`. Returns `inf` when no return to `x` exists within `n_max` steps.
pub fn lambda_s_via_phi(
    k: &WeightedKernel,
    x: usize,
    n_max: usize,
    w: Window,
    tol: f64,
) -> Result<f64> {
    let sub = k.restrict(w)?;
    lambda_s_phi_on(&sub, x, n_max, tol)
}

/// `Φ(λ)` from the coefficients, plus a geometric estimate of the truncated tail.
///
/// The tail ratio comes from the sums over the last two quarters of the range,
/// so periodic coefficient patterns average out. Blocks that fail to shrink
/// mean the series diverges at `λ`, reported as `inf`.
fn phi_with_tail(phi: &[LogWeight], lambda: f64) -> f64 {
    let ln_l = lambda.ln();
    let n_last = phi.len() - 1;
    let q = (n_last / 4).max(1);
    let (mut s, mut b2, mut b3) = (0.0, 0.0, 0.0);
    for (n, c) in phi.iter().enumerate().skip(1) {
        if c.is_zero() {
            continue;
        }
        let t = (c.ln() + n as f64 * ln_l).exp();
        s += t;
        if n > n_last - q {
            b3 += t;
        } else if n > n_last.saturating_sub(2 * q) {
            b2 += t;
        }
    }
    if s > 1.0 || b3 == 0.0 || b2 == 0.0 {
        return s;
    }
    let r = b3 / b2;
    if r >= 1.0 {
        return f64::INFINITY;
    }
    s + b3 * r / (1.0 - r)
}

pub fn lambda_s_phi_on(sub: &SubKernel, x: usize, n_max: usize, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol = {tol}")));
    }
    let phi = crate::graph::first_passage_sequence(sub, x, x, n_max)?;
    let returns = walk_sequences(sub, x, x, n_max)?.to_target;
    let best = return_root_bound(&returns);
    if best == 0.0 {
        return Ok(f64::INFINITY);
    }
    let phi_at = |lambda: f64| phi_with_tail(&phi, lambda);
    let mut lo = 0.0;
    let mut hi = 1.0 / best;
    while hi - lo > tol * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if phi_at(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
