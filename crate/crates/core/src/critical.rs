//! Critical values `λ_s`, `λ_w`: spectral and series routes, survival
//! certificates, exact values on finite kernels, brackets on generated ones,
//! condition U and critical-behaviour probes.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::branching::{
    survival_probs_with, survival_verdict, Boundary, FixedPointReport, IterOptions, Method, OffspringLaw,
    Verdict,
};
use crate::brw::{BrwLaw, MapKind, BrwMap};
use crate::error::{Error, Result};
use crate::genfun::{estimate_all, lambda_s_phi_on, ParameterEstimates};
use crate::graph::{
    classes_of, exit_depths, total_weights_all, ClassStructure, SiteVector, SubKernel, WeightedKernel, Window,
};
use crate::spectral::{class_radius, spectral_radius_sub};

/// Absolute slack allowed on certificate inequalities.
pub const TOL_CERT: f64 = 1e-12;
/// Relative guard applied to rigorous lower bounds so that rounding in the
/// last digit never lifts them above the exact value.
const ROUNDING_GUARD: f64 = 1e-12;

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn serialize_real<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn serialize_opt_real<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_real(v, s),
        None => s.serialize_none(),
    }
}

fn finite_window(k: &WeightedKernel) -> Result<Window> {
    k.full_window()
        .ok_or_else(|| Error::InvalidParameter("operation needs a finite kernel".into()))
}

/// Sites reachable from `x` inside the sub-kernel, `x` included.
pub fn reachable_sites(sub: &SubKernel, x: usize) -> Vec<bool> {
    let mut seen = vec![false; sub.size()];
    let mut stack = vec![x];
    seen[x] = true;
    while let Some(a) = stack.pop() {
        for (b, _) in sub.edges(a) {
            if !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSMethod {
    /// `1/ρ` of the irreducible class of `x` (within the window).
    Spectral,
    /// Bisection on `Φ(x,x|λ) ≤ 1`.
    Phi,
}

/// `λ_s(x) = 1/M_s(x)`; `inf` when no cycle passes through `x`.
///
/// On generated kernels the spectral route sees only the part of the class
/// inside the window, so it returns an upper bound for `λ_s`.
pub fn lambda_s(
    k: &WeightedKernel,
    x: usize,
    method: LambdaSMethod,
    w: Window,
    n_max: usize,
    tol: f64,
) -> Result<f64> {
    let sub = k.restrict(w)?;
    w.check(x)?;
    match method {
        LambdaSMethod::Spectral => {
            let classes = classes_of(&sub);
            let c = classes.class_of[x];
            if !classes.cyclic[c] {
                return Ok(f64::INFINITY);
            }
            let r = class_radius(k, &classes.classes[c])?;
            Ok(1.0 / r.rho)
        }
        LambdaSMethod::Phi => lambda_s_phi_on(&sub, x, n_max, tol),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `λKv ≥ v/(1 − v)`, equivalently `H^λ(v) ≥ v`.
    Nonlinear,
    /// `λⁿKⁿv ≥ v`.
    Linear,
    /// `H^λ_n(v) ≥ v` for the `n`-fold iterate of `H^λ`.
    Iterated,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub v: SiteVector,
    pub lambda: f64,
    pub order: usize,
    pub kind: CertificateKind,
    pub base: usize,
}

impl Certificate {
    pub fn new(v: SiteVector, lambda: f64, order: usize, kind: CertificateKind, base: usize) -> Result<Self> {
        v.window().check(base)?;
        if !(v.get(base) > 0.0) {
            return Err(Error::Certificate(format!("v({base}) must be positive")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Certificate(format!("lambda = {lambda}")));
        }
        if order == 0 {
            return Err(Error::Certificate("order must be at least 1".into()));
        }
        if kind == CertificateKind::Nonlinear && order != 1 {
            return Err(Error::Certificate("nonlinear certificates have order 1".into()));
        }
        Ok(Self {
            v,
            lambda,
            order,
            kind,
            base,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CertificateCheck {
    /// Every checked site satisfies the inequality; `min_slack` is the smallest `lhs − rhs`.
    Holds { sites_checked: usize, min_slack: f64 },
    ViolatedAt { site: usize, lhs: f64, rhs: f64 },
}

impl CertificateCheck {
    pub fn holds(&self) -> bool {
        matches!(self, CertificateCheck::Holds { .. })
    }
}

/// Checks a certificate component-wise with slack `−TOL_CERT`.
///
/// On a generated kernel only sites whose order-`n` neighbourhood lies inside
/// the window of `v` can be checked; the rest are skipped and the count of
/// checked sites is reported.
pub fn check_certificate(cert: &Certificate, k: &WeightedKernel) -> Result<CertificateCheck> {
    let w = cert.v.window();
    let sub = k.restrict(w)?;
    let v = cert.v.as_slice();
    if cert.kind == CertificateKind::Nonlinear {
        if let Some(y) = v.iter().position(|&a| a >= 1.0) {
            return Err(Error::Certificate(format!("v({y}) = {} is not below 1", v[y])));
        }
    }
    let n = cert.order;
    let lambda = cert.lambda;
    let lhs: Vec<f64> = match cert.kind {
        CertificateKind::Nonlinear => sub.apply(v).into_iter().map(|a| lambda * a).collect(),
        CertificateKind::Linear => {
            let mut u = v.to_vec();
            for _ in 0..n {
                u = sub.apply(&u).into_iter().map(|a| lambda * a).collect();
            }
            u
        }
        CertificateKind::Iterated => {
            let h = BrwMap::from_sub(Arc::new(sub.clone()), lambda, &Boundary::NeverBorn, MapKind::H)?;
            let mut u = v.to_vec();
            let mut next = vec![0.0; u.len()];
            for _ in 0..n {
                crate::branching::MonotoneMap::apply(&h, &u, &mut next);
                std::mem::swap(&mut u, &mut next);
            }
            u
        }
    };
    let depth = exit_depths(&sub);
    let mut checked = 0;
    let mut min_slack = f64::INFINITY;
    for y in 0..w.size() {
        if depth[y] <= n {
            continue;
        }
        checked += 1;
        let rhs = match cert.kind {
            CertificateKind::Nonlinear => v[y] / (1.0 - v[y]),
            _ => v[y],
        };
        let slack = lhs[y] - rhs;
        if slack < -TOL_CERT {
            return Ok(CertificateCheck::ViolatedAt {
                site: y,
                lhs: lhs[y],
                rhs,
            });
        }
        min_slack = min_slack.min(slack);
    }
    if depth[cert.base] <= n {
        return Err(Error::Certificate(format!(
            "base site {} is too close to the window edge to be checked",
            cert.base
        )));
    }
    Ok(CertificateCheck::Holds {
        sites_checked: checked,
        min_slack,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassData {
    pub sites: Vec<usize>,
    #[serde(serialize_with = "serialize_real")]
    pub rho: f64,
    pub reachable: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaWFinite {
    #[serde(serialize_with = "serialize_real")]
    pub value: f64,
    pub classes: Vec<ClassData>,
}

fn class_data(k: &WeightedKernel, classes: &ClassStructure, x: usize) -> Result<Vec<ClassData>> {
    let reach = classes.reachable_from(classes.class_of[x]);
    classes
        .classes
        .iter()
        .enumerate()
        .map(|(c, sites)| {
            let rho = if classes.cyclic[c] {
                class_radius(k, sites)?.rho
            } else {
                0.0
            };
            Ok(ClassData {
                sites: sites.clone(),
                rho,
                reachable: reach.contains(&c),
            })
        })
        .collect()
}

/// `λ_w(x)` on a finite kernel: the minimum of `1/ρ_C` over the classes `C` reachable from `x`.
pub fn lambda_w_finite(k: &WeightedKernel, x: usize) -> Result<LambdaWFinite> {
    let w = finite_window(k)?;
    w.check(x)?;
    let classes = classes_of(&k.restrict(w)?);
    let data = class_data(k, &classes, x)?;
    let value = data
        .iter()
        .filter(|c| c.reachable)
        .map(|c| if c.rho > 0.0 { 1.0 / c.rho } else { f64::INFINITY })
        .fold(f64::INFINITY, f64::min);
    Ok(LambdaWFinite { value, classes: data })
}

/// Survival values beyond a window, valid for every `λ` past a threshold:
/// the tail of a vector `v` with `H^λ(v) ≥ v` on the whole site set.
#[derive(Clone)]
pub struct TailCertificate {
    values: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
    valid_from: f64,
    inclusive: bool,
    pub description: String,
}

impl fmt::Debug for TailCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailCertificate")
            .field("valid_from", &self.valid_from)
            .field("inclusive", &self.inclusive)
            .field("description", &self.description)
            .finish()
    }
}

impl TailCertificate {
    pub fn new(
        values: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
        valid_from: f64,
        inclusive: bool,
        description: impl Into<String>,
    ) -> Self {
        Self {
            values,
            valid_from,
            inclusive,
            description: description.into(),
        }
    }

    pub fn valid_at(&self, lambda: f64) -> bool {
        if self.inclusive {
            lambda >= self.valid_from
        } else {
            lambda > self.valid_from
        }
    }

    pub fn value(&self, site: usize, lambda: f64) -> f64 {
        (self.values)(site, lambda)
    }

    /// The tail as a boundary when valid at `λ`, never-born otherwise.
    pub fn boundary(&self, lambda: f64) -> Boundary {
        if self.valid_at(lambda) {
            let f = Arc::clone(&self.values);
            Boundary::Tail(Arc::new(move |y| f(y, lambda)))
        } else {
            Boundary::NeverBorn
        }
    }
}

pub fn boundary_for(tail: Option<&TailCertificate>, lambda: f64) -> Boundary {
    tail.map(|t| t.boundary(lambda)).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct BracketOptions {
    pub n_max: usize,
    /// Number of geometric grid points in `[lower, 4·lower]`.
    pub grid_points: usize,
    pub tol: f64,
    pub iter: IterOptions,
    pub tail: Option<TailCertificate>,
}

impl Default for BracketOptions {
    fn default() -> Self {
        Self {
            n_max: 64,
            grid_points: 17,
            tol: 1e-6,
            iter: IterOptions {
                max_iter: 20_000,
                ..Default::default()
            },
            tail: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaWBracket {
    #[serde(serialize_with = "serialize_real")]
    pub lower: f64,
    #[serde(serialize_with = "serialize_real")]
    pub upper: f64,
    pub window: usize,
    pub n_max: usize,
    /// How the lower end was obtained.
    pub lower_source: String,
    pub diagnostic: Option<String>,
}

impl LambdaWBracket {
    pub fn contains(&self, lambda: f64) -> bool {
        self.lower <= lambda && lambda <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Runs `survival_probs` for the BRW at `λ` and returns the verdict at `x`.
pub fn survival_at(
    k: &WeightedKernel,
    lambda: f64,
    x: usize,
    w: Window,
    tail: Option<&TailCertificate>,
    opts: &IterOptions,
) -> Result<(Verdict, FixedPointReport)> {
    let law = BrwLaw::new(k.clone(), lambda)?;
    let boundary = boundary_for(tail, lambda);
    let h = law.h_map(w, &boundary)?;
    let report = survival_probs_with(&OffspringLaw::Brw(law), w, &boundary, opts)?;
    let verdict = survival_verdict(&report, &h, x);
    Ok((verdict, report))
}

/// Lower end of the `λ_w` bracket and a note on how it was obtained.
fn bracket_lower(k: &WeightedKernel, sub: &SubKernel, x: usize, n_max: usize) -> Result<(f64, String)> {
    if k.is_finite() {
        // 1/max over reachable classes of the Collatz–Wielandt upper bound on ρ_C
        let classes = classes_of(sub);
        let reach = classes.reachable_from(classes.class_of[x]);
        let mut rho_upper = 0.0f64;
        for &c in &reach {
            if classes.cyclic[c] {
                let induced = k.induced(&classes.classes[c])?;
                let r = spectral_radius_sub(&induced.restrict(induced.full_window().expect("finite"))?);
                rho_upper = rho_upper.max(r.upper);
            }
        }
        let lower = if rho_upper > 0.0 {
            (1.0 / rho_upper) * (1.0 - ROUNDING_GUARD)
        } else {
            f64::INFINITY
        };
        Ok((lower, "collatz_wielandt".into()))
    } else {
        let est = estimate_all(sub, x, n_max)?;
        let m = est.mw_minus.estimate;
        let lower = if m > 0.0 {
            (1.0 / m) * (1.0 - ROUNDING_GUARD)
        } else {
            f64::INFINITY
        };
        Ok((lower, "liminf_root_estimate".into()))
    }
}

/// Bracket `[lower, upper]` for `λ_w(x)`.
///
/// `lower` is `1/M_w⁻` from the root sequence (generated kernels) or a
/// rigorous bound on the reachable classes (finite kernels). `upper` is the
/// smallest `λ` found, by a geometric grid on `[lower, 4·lower]` refined by
/// bisection, at which the windowed survival run proves survival at `x`.
pub fn lambda_w_bracket(k: &WeightedKernel, x: usize, w: Window, opts: &BracketOptions) -> Result<LambdaWBracket> {
    let sub = k.restrict(w)?;
    w.check(x)?;
    let (lower, lower_source) = bracket_lower(k, &sub, x, opts.n_max)?;
    let mut out = LambdaWBracket {
        lower,
        upper: f64::INFINITY,
        window: w.size(),
        n_max: opts.n_max,
        lower_source,
        diagnostic: None,
    };
    if !lower.is_finite() {
        out.diagnostic = Some("no cycle or path growth reachable from the site: lambda_w is infinite".into());
        return Ok(out);
    }

    let points = opts.grid_points.max(2);
    let grid: Vec<f64> = (0..points)
        .map(|i| lower * 4f64.powf(i as f64 / (points - 1) as f64))
        .collect();
    let verdicts: Vec<Verdict> = grid
        .par_iter()
        .map(|&l| survival_at(k, l, x, w, opts.tail.as_ref(), &opts.iter).map(|(v, _)| v))
        .collect::<Result<_>>()?;
    let Some(first) = verdicts.iter().position(|v| v.survives()) else {
        let undecided = verdicts.iter().filter(|v| **v == Verdict::Undecided).count();
        out.diagnostic = Some(format!(
            "no survival proven on the grid [{lower}, {}] ({undecided} of {points} points undecided)",
            4.0 * lower
        ));
        return Ok(out);
    };
    let mut hi = grid[first];
    let mut lo = if first == 0 { lower } else { grid[first - 1] };
    if first == 0 {
        out.upper = hi;
        return Ok(out);
    }
    while hi - lo > opts.tol * hi {
        let mid = 0.5 * (lo + hi);
        let (v, _) = survival_at(k, mid, x, w, opts.tail.as_ref(), &opts.iter)?;
        if v.survives() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    out.upper = hi;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CondU {
    pub holds: bool,
    /// First `N` with `T^N_y ≥ (M − ε)^N` on every checked site.
    pub witness: Option<usize>,
    pub m_estimate: f64,
    pub epsilon: f64,
    pub n_search: usize,
    /// Sites checked at the witness (or at `n_search` when none was found).
    pub sites_checked: usize,
}

/// Searches `N ≤ n_search` with `T^N_y ≥ (M_w⁻ − ε)^N` for every window site
/// `y` whose paths of length `N` stay inside the window.
pub fn cond_u_holds(k: &WeightedKernel, eps: f64, n_search: usize, w: Window, mw_minus: f64) -> Result<CondU> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {eps}")));
    }
    let sub = k.restrict(w)?;
    let depth = exit_depths(&sub);
    let base = mw_minus - eps;
    let mut last_checked = 0;
    for n in 1..=n_search {
        let totals = total_weights_all(&sub, n);
        let mut checked = 0;
        let mut ok = true;
        for (y, t) in totals.iter().enumerate() {
            if depth[y] <= n {
                continue;
            }
            checked += 1;
            if base > 0.0 && t.ln() < n as f64 * base.ln() {
                ok = false;
                break;
            }
        }
        last_checked = checked;
        if ok && checked > 0 {
            return Ok(CondU {
                holds: true,
                witness: Some(n),
                m_estimate: mw_minus,
                epsilon: eps,
                n_search,
                sites_checked: checked,
            });
        }
    }
    Ok(CondU {
        holds: false,
        witness: None,
        m_estimate: mw_minus,
        epsilon: eps,
        n_search,
        sites_checked: last_checked,
    })
}

/// `inf {v(y) : x → y, v(y) > 0}` over the window.
pub fn part_a_diagnostic(k: &WeightedKernel, cert: &Certificate, x: usize) -> Result<f64> {
    let w = cert.v.window();
    let sub = k.restrict(w)?;
    w.check(x)?;
    let reach = reachable_sites(&sub, x);
    Ok(cert
        .v
        .as_slice()
        .iter()
        .zip(&reach)
        .filter(|(v, r)| **r && **v > 0.0)
        .map(|(v, _)| *v)
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Survival {
    /// At `λ = λ_s(x)`.
    Strong,
    /// At `λ = λ_w(x)`.
    Weak,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    #[serde(serialize_with = "serialize_real")]
    pub lambda: f64,
    pub verdict: Verdict,
    pub v_x: f64,
    pub iterations: usize,
}

/// Runs the survival iteration at the critical value of a finite kernel.
pub fn critical_behavior_probe(k: &WeightedKernel, x: usize, which: Survival, opts: &IterOptions) -> Result<ProbeResult> {
    let w = finite_window(k)?;
    let lambda = match which {
        Survival::Strong => lambda_s(k, x, LambdaSMethod::Spectral, w, 64, 1e-9)?,
        Survival::Weak => lambda_w_finite(k, x)?.value,
    };
    if !lambda.is_finite() {
        return Ok(ProbeResult {
            lambda,
            verdict: Verdict::Extinct,
            v_x: 0.0,
            iterations: 0,
        });
    }
    let (verdict, report) = survival_at(k, lambda, x, w, None, opts)?;
    Ok(ProbeResult {
        lambda,
        verdict,
        v_x: report.limit.get(x),
        iterations: report.iterations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalReport {
    #[serde(serialize_with = "serialize_real")]
    pub lambda_s: f64,
    #[serde(serialize_with = "serialize_real")]
    pub lambda_w_lower: f64,
    #[serde(serialize_with = "serialize_real")]
    pub lambda_w_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_real")]
    pub lambda_w_exact: Option<f64>,
    pub classes: Vec<ClassData>,
    pub window: usize,
    pub n_max: usize,
    pub parameters: ParameterSummary,
    pub bracket_diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParameterSummary {
    pub ms: f64,
    pub mw_minus: f64,
    pub mw: f64,
}

impl From<&ParameterEstimates> for ParameterSummary {
    fn from(p: &ParameterEstimates) -> Self {
        Self {
            ms: p.ms.estimate,
            mw_minus: p.mw_minus.estimate,
            mw: p.mw.estimate,
        }
    }
}

/// All critical quantities at `x` on the window.
pub fn critical_report(k: &WeightedKernel, x: usize, w: Window, opts: &BracketOptions) -> Result<CriticalReport> {
    let sub = k.restrict(w)?;
    w.check(x)?;
    let params = estimate_all(&sub, x, opts.n_max)?;
    let bracket = lambda_w_bracket(k, x, w, opts)?;
    let (lambda_s_value, lambda_w_exact, classes) = if k.is_finite() {
        let lw = lambda_w_finite(k, x)?;
        let ls = lambda_s(k, x, LambdaSMethod::Spectral, w, opts.n_max, opts.tol)?;
        (ls, Some(lw.value), lw.classes)
    } else {
        let ls = lambda_s(k, x, LambdaSMethod::Phi, w, opts.n_max, opts.tol)?;
        let cs = classes_of(&sub);
        let reach = cs.reachable_from(cs.class_of[x]);
        let classes = cs
            .classes
            .iter()
            .enumerate()
            .filter(|(c, _)| cs.class_of[x] == *c)
            .map(|(c, sites)| {
                Ok(ClassData {
                    sites: sites.clone(),
                    rho: if cs.cyclic[c] { class_radius(k, sites)?.rho } else { 0.0 },
                    reachable: reach.contains(&c),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        (ls, None, classes)
    };
    Ok(CriticalReport {
        lambda_s: lambda_s_value,
        lambda_w_lower: bracket.lower,
        lambda_w_upper: bracket.upper,
        lambda_w_exact,
        classes,
        window: w.size(),
        n_max: opts.n_max,
        parameters: ParameterSummary::from(&params),
        bracket_diagnostic: bracket.diagnostic,
    })
}

/// The Picard method for large windows, Newton (via `Auto`) for small ones.
pub fn default_iter_options(window: usize) -> IterOptions {
    IterOptions {
        method: if window <= crate::branching::NEWTON_MAX_DIM {
            Method::Auto
        } else {
            Method::Picard
        },
        ..Default::default()
    }
}
