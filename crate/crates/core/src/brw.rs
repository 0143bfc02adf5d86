//! The canonical branching process of a BRW: offspring law `μ_x`, closed forms
//! of `G^λ` and `H^λ`, and the operator `K` on bounded site vectors.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::branching::{Boundary, MonotoneMap};
use crate::error::{Error, Result};
use crate::graph::{SiteVector, SubKernel, WeightedKernel, Window};

/// Sparse offspring counts `f`: `(type, count)` pairs.
pub type Offspring = Vec<(usize, u32)>;

/// The BRW with kernel `K` and birth parameter `λ`, seen as a branching process.
#[derive(Debug, Clone)]
pub struct BrwLaw {
    kernel: WeightedKernel,
    lambda: f64,
}

impl BrwLaw {
    pub fn new(kernel: WeightedKernel, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda = {lambda}, must be > 0")));
        }
        Ok(Self { kernel, lambda })
    }

    pub fn kernel(&self) -> &WeightedKernel {
        &self.kernel
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.kernel.clone(), lambda)
    }

    /// `S_x = Σ_y k_xy`.
    pub fn total_rate(&self, x: usize) -> Result<f64> {
        self.kernel.row_sum(x)
    }

    /// `ln μ_x(f)`; `-inf` when `f` places a child off the out-neighbours of `x`.
    pub fn ln_offspring_prob(&self, x: usize, f: &[(usize, u32)]) -> Result<f64> {
        let row = self.kernel.row(x)?;
        let s_x: f64 = row.iter().map(|&(_, k)| k).sum();
        let rates: BTreeMap<usize, f64> = row.into_iter().collect();
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        for &(y, c) in f {
            if c > 0 {
                *counts.entry(y).or_default() += c as u64;
            }
        }
        let total: u64 = counts.values().sum();
        let mut ln = ln_gamma(total as f64 + 1.0) - (total as f64 + 1.0) * (self.lambda * s_x).ln_1p();
        for (y, c) in counts {
            let Some(&k) = rates.get(&y) else {
                return Ok(f64::NEG_INFINITY);
            };
            ln += c as f64 * (self.lambda * k).ln() - ln_gamma(c as f64 + 1.0);
        }
        Ok(ln)
    }

    /// `μ_x(f) = S(f)! Π_y (λk_xy)^{f(y)} / ((1+λS_x)^{S(f)+1} Π_y f(y)!)`.
    pub fn offspring_prob(&self, x: usize, f: &[(usize, u32)]) -> Result<f64> {
        Ok(self.ln_offspring_prob(x, f)?.exp())
    }

    /// `G^λ` on the window, as a monotone map.
    pub fn g_map(&self, w: Window, boundary: &Boundary) -> Result<BrwMap> {
        BrwMap::new(self, w, boundary, MapKind::G)
    }

    /// `H^λ` on the window, as a monotone map.
    pub fn h_map(&self, w: Window, boundary: &Boundary) -> Result<BrwMap> {
        BrwMap::new(self, w, boundary, MapKind::H)
    }
}

/// `G^λ(z|x) = 1/(1 + λ Σ_y k_xy (1 − z(y)))`.
///
/// Neighbours outside the window of `z` are never born: they contribute nothing.
#[allow(non_snake_case)]
pub fn brw_G(law: &BrwLaw, z: &SiteVector, x: usize) -> Result<f64> {
    let w = z.window();
    w.check(x)?;
    let mut s = 0.0;
    for (y, k) in law.kernel.row(x)? {
        if w.contains(y) {
            s += k * (1.0 - z.get(y));
        }
    }
    Ok(1.0 / (1.0 + law.lambda * s))
}

/// `H^λ(v) = λKv / (𝟙 + λKv)`, component-wise on the window of `v`.
#[allow(non_snake_case)]
pub fn brw_H(law: &BrwLaw, v: &SiteVector) -> Result<SiteVector> {
    let kv = apply_K(&law.kernel, v)?;
    SiteVector::new(
        kv.as_slice()
            .iter()
            .map(|&a| {
                let t = law.lambda * a;
                t / (1.0 + t)
            })
            .collect(),
    )
}

/// `(Kv)(x) = Σ_y k_xy v(y)` on the window of `v`, dropping mass that leaves it.
#[allow(non_snake_case)]
pub fn apply_K(k: &WeightedKernel, v: &SiteVector) -> Result<SiteVector> {
    let sub = k.restrict(v.window())?;
    SiteVector::new(sub.apply(v.as_slice()))
}

/// `Kv` for signed `v`; the operator is linear on all bounded vectors.
#[allow(non_snake_case)]
pub fn apply_K_signed(k: &WeightedKernel, v: &[f64]) -> Result<Vec<f64>> {
    let w = Window::new(v.len())?;
    Ok(k.restrict(w)?.apply(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    G,
    H,
}

/// Windowed `G^λ` or `H^λ`. `extra[x]` is `Σ_{y ∉ window} k_xy v(y)` for the
/// boundary survival values (zero when offspring outside are never born).
#[derive(Clone)]
pub struct BrwMap {
    sub: Arc<SubKernel>,
    lambda: f64,
    extra: Vec<f64>,
    kind: MapKind,
}

impl BrwMap {
    fn new(law: &BrwLaw, w: Window, boundary: &Boundary, kind: MapKind) -> Result<Self> {
        let sub = Arc::new(law.kernel.restrict(w)?);
        Self::from_sub(sub, law.lambda, boundary, kind)
    }

    pub fn from_sub(sub: Arc<SubKernel>, lambda: f64, boundary: &Boundary, kind: MapKind) -> Result<Self> {
        let extra = (0..sub.size())
            .map(|x| {
                sub.exits(x)
                    .iter()
                    .map(|&(y, k)| k * boundary.survival(y))
                    .sum::<f64>()
            })
            .collect();
        Ok(Self {
            sub,
            lambda,
            extra,
            kind,
        })
    }

    pub fn sub(&self) -> &SubKernel {
        &self.sub
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    /// `λ((K u)(x) + extra(x))` with `u = v` for H and `u = 𝟙 − z` for G.
    fn drive(&self, z: &[f64], out: &mut [f64]) {
        match self.kind {
            MapKind::H => self.sub.apply_into(z, out),
            MapKind::G => {
                let u: Vec<f64> = z.iter().map(|a| 1.0 - a).collect();
                self.sub.apply_into(&u, out);
            }
        }
        for (o, e) in out.iter_mut().zip(&self.extra) {
            *o = self.lambda * (*o + e);
        }
    }
}

impl MonotoneMap for BrwMap {
    fn dim(&self) -> usize {
        self.sub.size()
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        self.drive(z, out);
        for o in out.iter_mut() {
            let t = *o;
            *o = match self.kind {
                MapKind::H => t / (1.0 + t),
                MapKind::G => 1.0 / (1.0 + t),
            };
        }
    }

    fn jacobian(&self, z: &[f64]) -> Option<DMatrix<f64>> {
        let n = self.sub.size();
        let mut t = vec![0.0; n];
        self.drive(z, &mut t);
        let mut j = DMatrix::zeros(n, n);
        for x in 0..n {
            let d = 1.0 + t[x];
            let scale = self.lambda / (d * d);
            for (y, k) in self.sub.edges(x) {
                j[(x, y)] += scale * k;
            }
        }
        Some(j)
    }
}
