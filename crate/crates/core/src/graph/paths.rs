//! Path weights `k^n_xy`, `T^n_x` and first-passage weights `φ^n_xy`.
//!
//! Running values are kept as a mantissa vector times a power of two. Once the
//! largest entry leaves `[1e-300, 1e300]` the whole row is rescaled by an exact
//! power of two, so long products such as `2^n` never saturate and `n`-th roots
//! are taken in the log domain.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::kernel::{SiteVector, SubKernel, WeightedKernel, Window};
use crate::error::{Error, Result};

const RESCALE_HIGH: f64 = 1e300;
const RESCALE_LOW: f64 = 1e-300;

/// A nonnegative weight stored by its natural logarithm (`-inf` for zero).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogWeight(f64);

impl LogWeight {
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_value(v: f64) -> Self {
        debug_assert!(v >= 0.0);
        LogWeight(v.ln())
    }

    pub fn from_ln(ln: f64) -> Self {
        LogWeight(ln)
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Plain value; `inf` once it exceeds the `f64` range.
    pub fn value(self) -> f64 {
        self.0.exp()
    }

    /// `value^(1/n)`, computed as `exp(ln / n)`.
    pub fn root(self, n: usize) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            (self.0 / n as f64).exp()
        }
    }
}

fn two_pow(e: i64) -> f64 {
    2f64.powi(e as i32)
}

/// A row of path weights, `value[y] = mantissa[y] * 2^exp2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathWeights {
    mantissa: Vec<f64>,
    exp2: i64,
}

impl PathWeights {
    pub fn indicator(window: Window, site: usize) -> Self {
        let mut mantissa = vec![0.0; window.size()];
        mantissa[site] = 1.0;
        Self { mantissa, exp2: 0 }
    }

    pub fn len(&self) -> usize {
        self.mantissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mantissa.is_empty()
    }

    pub fn get(&self, y: usize) -> LogWeight {
        let m = self.mantissa[y];
        if m == 0.0 {
            LogWeight::ZERO
        } else {
            LogWeight(m.ln() + self.exp2 as f64 * std::f64::consts::LN_2)
        }
    }

    pub fn total(&self) -> LogWeight {
        let s: f64 = self.mantissa.iter().sum();
        if s == 0.0 {
            LogWeight::ZERO
        } else {
            LogWeight(s.ln() + self.exp2 as f64 * std::f64::consts::LN_2)
        }
    }

    /// Plain values; fails if any entry does not fit in an `f64`.
    pub fn to_site_vector(&self) -> Result<SiteVector> {
        let scale = self.exp2 as f64 * std::f64::consts::LN_2;
        let values: Vec<f64> = self
            .mantissa
            .iter()
            .map(|&m| if m == 0.0 { 0.0 } else { (m.ln() + scale).exp() })
            .collect();
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidVector(
                "path weights exceed the f64 range; read them through LogWeight".into(),
            ));
        }
        SiteVector::new(values)
    }

    fn rescale(&mut self) {
        let max = self.mantissa.iter().fold(0.0f64, |m, &v| m.max(v));
        if max > RESCALE_HIGH || (max > 0.0 && max < RESCALE_LOW) {
            let e = max.log2().floor() as i64;
            let f = two_pow(-e);
            self.mantissa.iter_mut().for_each(|v| *v *= f);
            self.exp2 += e;
        }
    }

    fn step(&mut self, sub: &SubKernel, scratch: &mut Vec<f64>) {
        scratch.resize(self.mantissa.len(), 0.0);
        sub.left_apply_into(&self.mantissa, scratch);
        std::mem::swap(&mut self.mantissa, scratch);
        self.rescale();
    }

    fn clear(&mut self, y: usize) {
        self.mantissa[y] = 0.0;
    }
}

/// Successive rows `(k^n_xy)_y` for `n = 1, 2, ..` over a window.
pub struct RowWalk<'a> {
    sub: &'a SubKernel,
    current: PathWeights,
    scratch: Vec<f64>,
    avoid: Option<usize>,
    steps: usize,
}

impl<'a> RowWalk<'a> {
    pub fn new(sub: &'a SubKernel, x: usize) -> Result<Self> {
        sub.window().check(x)?;
        Ok(Self {
            sub,
            current: PathWeights::indicator(sub.window(), x),
            scratch: Vec::new(),
            avoid: None,
            steps: 0,
        })
    }

    /// Walk that removes mass arriving at `y`, so the weight observed at `y`
    /// after step `n` is `φ^n_xy`.
    pub fn first_passage(sub: &'a SubKernel, x: usize, y: usize) -> Result<Self> {
        sub.window().check(y)?;
        let mut walk = Self::new(sub, x)?;
        walk.avoid = Some(y);
        Ok(walk)
    }

    pub fn current(&self) -> &PathWeights {
        &self.current
    }

    /// Advances one step and returns the new row.
    pub fn advance(&mut self) -> &PathWeights {
        if let Some(y) = self.avoid {
            // mass sitting at y was counted at the previous step
            if self.steps > 0 {
                self.current.clear(y);
            }
        }
        self.current.step(self.sub, &mut self.scratch);
        self.steps += 1;
        &self.current
    }
}

/// `(k^n_xy)_{y ∈ w}` over paths staying inside the window.
pub fn kernel_power_row(k: &WeightedKernel, x: usize, n: usize, w: Window) -> Result<PathWeights> {
    let sub = k.restrict(w)?;
    power_row(&sub, x, n)
}

pub fn power_row(sub: &SubKernel, x: usize, n: usize) -> Result<PathWeights> {
    let mut walk = RowWalk::new(sub, x)?;
    for _ in 0..n {
        walk.advance();
    }
    Ok(walk.current)
}

/// `T^n_x` over paths staying inside the window.
pub fn total_weight(k: &WeightedKernel, x: usize, n: usize, w: Window) -> Result<LogWeight> {
    Ok(kernel_power_row(k, x, n, w)?.total())
}

/// `φ^n_xy`: weight of paths from `x` that reach `y` for the first time at step `n`.
pub fn first_passage_row(
    k: &WeightedKernel,
    x: usize,
    y: usize,
    n: usize,
    w: Window,
) -> Result<LogWeight> {
    let sub = k.restrict(w)?;
    Ok(first_passage_sequence(&sub, x, y, n)?[n])
}

/// `[φ^0_xy, φ^1_xy, .., φ^n_max_xy]`.
pub fn first_passage_sequence(
    sub: &SubKernel,
    x: usize,
    y: usize,
    n_max: usize,
) -> Result<Vec<LogWeight>> {
    let mut walk = RowWalk::first_passage(sub, x, y)?;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(LogWeight::ZERO);
    for _ in 0..n_max {
        out.push(walk.advance().get(y));
    }
    Ok(out)
}

/// For each window site, the length of the shortest path that leaves the
/// window (`usize::MAX` when none does). A site is interior for order `n` when
/// this exceeds `n`: every path of length at most `n` from it stays inside.
pub fn exit_depths(sub: &SubKernel) -> Vec<usize> {
    let n = sub.size();
    let mut depth = vec![usize::MAX; n];
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut queue = VecDeque::new();
    for x in 0..n {
        for (y, _) in sub.edges(x) {
            reverse[y].push(x);
        }
        if !sub.exits(x).is_empty() {
            depth[x] = 1;
            queue.push_back(x);
        }
    }
    while let Some(y) = queue.pop_front() {
        for &x in &reverse[y] {
            if depth[x] == usize::MAX {
                depth[x] = depth[y] + 1;
                queue.push_back(x);
            }
        }
    }
    depth
}

/// `T^n_x` for every window site at once, via `K^n 1`.
pub fn total_weights_all(sub: &SubKernel, n: usize) -> Vec<LogWeight> {
    let size = sub.size();
    let mut v = vec![1.0; size];
    let mut log_scale = 0.0f64;
    let mut scratch = vec![0.0; size];
    for _ in 0..n {
        sub.apply_into(&v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
        let max = v.iter().fold(0.0f64, |m, &a| m.max(a));
        if max > RESCALE_HIGH || (max > 0.0 && max < RESCALE_LOW) {
            let e = max.log2().floor() as i64;
            let f = two_pow(-e);
            v.iter_mut().for_each(|a| *a *= f);
            log_scale += e as f64 * std::f64::consts::LN_2;
        }
    }
    v.into_iter()
        .map(|a| {
            if a == 0.0 {
                LogWeight::ZERO
            } else {
                LogWeight(a.ln() + log_scale)
            }
        })
        .collect()
}
