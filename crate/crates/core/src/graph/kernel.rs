use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Out-neighbours of one site as `(target, weight)` pairs.
pub type Row = Vec<(usize, f64)>;

/// Relative slack allowed when auditing row sums against the declared bound.
const ROW_BOUND_SLACK: f64 = 1e-12;

/// Produces the out-neighbour list of a site of a kernel indexed by the naturals.
///
/// Implementations must be deterministic: the same site always yields the same row.
pub trait RowGenerator: Send + Sync {
    fn row(&self, site: usize) -> Row;
}

impl<F> RowGenerator for F
where
    F: Fn(usize) -> Row + Send + Sync,
{
    fn row(&self, site: usize) -> Row {
        self(site)
    }
}

/// Name and parameters of a registered generator, enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Finite,
    Generated,
}

#[derive(Clone)]
enum Repr {
    Finite(Arc<[Row]>),
    Generated {
        generator: Arc<dyn RowGenerator>,
        spec: Option<GeneratorSpec>,
    },
}

/// The weight matrix `K = (k_xy)` of a weighted graph together with a declared
/// bound `M` on its row sums.
///
/// Finite kernels hold explicit rows. Generated kernels live on the naturals and
/// enumerate rows on demand; every enumerated row is validated and audited
/// against the bound.
#[derive(Clone)]
pub struct WeightedKernel {
    repr: Repr,
    row_bound: f64,
}

impl fmt::Debug for WeightedKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite(rows) => f
                .debug_struct("WeightedKernel")
                .field("kind", &"finite")
                .field("sites", &rows.len())
                .field("row_bound", &self.row_bound)
                .finish(),
            Repr::Generated { spec, .. } => f
                .debug_struct("WeightedKernel")
                .field("kind", &"generated")
                .field("spec", spec)
                .field("row_bound", &self.row_bound)
                .finish(),
        }
    }
}

fn clean_row(from: usize, raw: Row, sites: Option<usize>) -> Result<Row> {
    let mut row: Row = Vec::with_capacity(raw.len());
    for (to, weight) in raw {
        if !weight.is_finite() || weight < 0.0 {
            return Err(Error::InvalidWeight { from, to, weight });
        }
        if let Some(n) = sites {
            if to >= n {
                return Err(Error::TargetOutOfRange { from, to, sites: n });
            }
        }
        if weight > 0.0 {
            row.push((to, weight));
        }
    }
    row.sort_by_key(|&(to, _)| to);
    row.dedup_by(|next, kept| {
        if next.0 == kept.0 {
            kept.1 += next.1;
            true
        } else {
            false
        }
    });
    Ok(row)
}

fn audit(site: usize, row: &Row, bound: f64) -> Result<()> {
    let sum: f64 = row.iter().map(|&(_, w)| w).sum();
    if sum > bound * (1.0 + ROW_BOUND_SLACK) {
        return Err(Error::RowBound { site, sum, bound });
    }
    Ok(())
}

impl WeightedKernel {
    /// Builds a finite kernel from sparse rows. Zero weights are dropped and
    /// repeated targets merged. When `row_bound` is `None` the largest row sum
    /// is used.
    pub fn finite(rows: Vec<Row>, row_bound: Option<f64>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyWindow);
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(x, r)| clean_row(x, r, Some(n)))
            .collect::<Result<Vec<_>>>()?;
        let max_sum = rows
            .iter()
            .map(|r| r.iter().map(|&(_, w)| w).sum::<f64>())
            .fold(0.0, f64::max);
        let bound = row_bound.unwrap_or(max_sum);
        if !bound.is_finite() || bound < 0.0 {
            return Err(Error::InvalidParameter(format!("row bound {bound}")));
        }
        for (x, r) in rows.iter().enumerate() {
            audit(x, r, bound)?;
        }
        Ok(Self {
            repr: Repr::Finite(rows.into()),
            row_bound: bound,
        })
    }

    /// Builds a finite kernel from a dense matrix.
    pub fn from_dense(matrix: &[Vec<f64>]) -> Result<Self> {
        let rows = matrix
            .iter()
            .map(|r| r.iter().copied().enumerate().collect())
            .collect();
        Self::finite(rows, None)
    }

    /// Wraps a generator over the naturals. Rows are checked lazily.
    pub fn generated(
        generator: Arc<dyn RowGenerator>,
        row_bound: f64,
        spec: Option<GeneratorSpec>,
    ) -> Result<Self> {
        if !row_bound.is_finite() || row_bound < 0.0 {
            return Err(Error::InvalidParameter(format!("row bound {row_bound}")));
        }
        Ok(Self {
            repr: Repr::Generated { generator, spec },
            row_bound,
        })
    }

    pub fn kind(&self) -> KernelKind {
        match self.repr {
            Repr::Finite(_) => KernelKind::Finite,
            Repr::Generated { .. } => KernelKind::Generated,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.repr, Repr::Finite(_))
    }

    /// Number of sites of a finite kernel.
    pub fn num_sites(&self) -> Option<usize> {
        match &self.repr {
            Repr::Finite(rows) => Some(rows.len()),
            Repr::Generated { .. } => None,
        }
    }

    pub fn row_bound(&self) -> f64 {
        self.row_bound
    }

    pub fn generator_spec(&self) -> Option<&GeneratorSpec> {
        match &self.repr {
            Repr::Generated { spec, .. } => spec.as_ref(),
            Repr::Finite(_) => None,
        }
    }

    /// Validated out-neighbours of `site`.
    pub fn row(&self, site: usize) -> Result<Row> {
        match &self.repr {
            Repr::Finite(rows) => rows.get(site).cloned().ok_or(Error::SiteOutsideWindow {
                site,
                size: rows.len(),
            }),
            Repr::Generated { generator, .. } => {
                let row = clean_row(site, generator.row(site), None)?;
                audit(site, &row, self.row_bound)?;
                Ok(row)
            }
        }
    }

    /// Total rate `S_x = Σ_y k_xy`.
    pub fn row_sum(&self, site: usize) -> Result<f64> {
        Ok(self.row(site)?.iter().map(|&(_, w)| w).sum())
    }

    /// Window of the requested size; a finite kernel always gets its full site set.
    pub fn window(&self, size: usize) -> Window {
        match &self.repr {
            Repr::Finite(rows) => Window { size: rows.len() },
            Repr::Generated { .. } => Window { size: size.max(1) },
        }
    }

    /// The full window of a finite kernel.
    pub fn full_window(&self) -> Option<Window> {
        self.num_sites().map(|size| Window { size })
    }

    /// Restricts the kernel to a window, splitting each row into the part kept
    /// inside the window and the part leaving it.
    pub fn restrict(&self, window: Window) -> Result<SubKernel> {
        if let Some(n) = self.num_sites() {
            if window.size != n {
                return Err(Error::InvalidParameter(format!(
                    "window of {} sites on a finite kernel with {n} sites",
                    window.size
                )));
            }
        }
        let n = window.size;
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut exits = Vec::with_capacity(n);
        let mut row_sums = Vec::with_capacity(n);
        offsets.push(0);
        for x in 0..n {
            let row = self.row(x)?;
            let mut out = Vec::new();
            let mut sum = 0.0;
            for (y, w) in row {
                sum += w;
                if y < n {
                    targets.push(y);
                    weights.push(w);
                } else {
                    out.push((y, w));
                }
            }
            offsets.push(targets.len());
            exits.push(out);
            row_sums.push(sum);
        }
        Ok(SubKernel {
            size: n,
            offsets,
            targets,
            weights,
            exits,
            row_sums,
        })
    }

    /// The kernel with every weight multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {c}")));
        }
        match &self.repr {
            Repr::Finite(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(|&(y, w)| (y, w * c)).collect())
                    .collect();
                Self::finite(rows, Some(self.row_bound * c))
            }
            Repr::Generated { generator, .. } => {
                let inner = Arc::clone(generator);
                let scaled = move |x: usize| -> Row {
                    inner.row(x).into_iter().map(|(y, w)| (y, w * c)).collect()
                };
                Self::generated(Arc::new(scaled), self.row_bound * c, None)
            }
        }
    }

    /// Finite kernel induced on `sites`, re-indexed by position in the slice.
    pub fn induced(&self, sites: &[usize]) -> Result<Self> {
        let index: std::collections::HashMap<usize, usize> =
            sites.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let rows = sites
            .iter()
            .map(|&s| {
                Ok(self
                    .row(s)?
                    .into_iter()
                    .filter_map(|(y, w)| index.get(&y).map(|&j| (j, w)))
                    .collect())
            })
            .collect::<Result<Vec<Row>>>()?;
        Self::finite(rows, Some(self.row_bound))
    }

    /// Dense copy of a finite kernel.
    pub fn to_dense(&self) -> Option<Vec<Vec<f64>>> {
        match &self.repr {
            Repr::Finite(rows) => {
                let n = rows.len();
                Some(
                    rows.iter()
                        .map(|r| {
                            let mut dense = vec![0.0; n];
                            for &(y, w) in r {
                                dense[y] = w;
                            }
                            dense
                        })
                        .collect(),
                )
            }
            Repr::Generated { .. } => None,
        }
    }
}

/// The finite set of sites `{0, .., size - 1}` on which numerics run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    size: usize,
}

impl Window {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::EmptyWindow);
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, site: usize) -> bool {
        site < self.size
    }

    pub fn check(&self, site: usize) -> Result<()> {
        if self.contains(site) {
            Ok(())
        } else {
            Err(Error::SiteOutsideWindow {
                site,
                size: self.size,
            })
        }
    }
}

/// A nonnegative, finite vector indexed by the sites of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteVector {
    values: Vec<f64>,
}

impl SiteVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyWindow);
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidVector(format!("entry {i} is {v}")));
        }
        Ok(Self { values })
    }

    /// Like [`SiteVector::new`] but additionally requires every entry to be at most 1.
    pub fn probability(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| **v > 1.0) {
            return Err(Error::InvalidVector(format!("entry {i} is {v} > 1")));
        }
        Self::new(values)
    }

    pub fn zeros(window: Window) -> Self {
        Self {
            values: vec![0.0; window.size],
        }
    }

    pub fn ones(window: Window) -> Self {
        Self {
            values: vec![1.0; window.size],
        }
    }

    pub fn indicator(window: Window, site: usize) -> Result<Self> {
        window.check(site)?;
        let mut values = vec![0.0; window.size];
        values[site] = 1.0;
        Ok(Self { values })
    }

    pub fn window(&self) -> Window {
        Window {
            size: self.values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, site: usize) -> f64 {
        self.values[site]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A kernel restricted to a window in compressed sparse row form. Edges leaving
/// the window are kept separately so callers can decide what happens there.
#[derive(Debug, Clone)]
pub struct SubKernel {
    size: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    exits: Vec<Row>,
    row_sums: Vec<f64>,
}

impl SubKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn window(&self) -> Window {
        Window { size: self.size }
    }

    /// In-window edges of `x`.
    pub fn edges(&self, x: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[x]..self.offsets[x + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Edges of `x` leaving the window.
    pub fn exits(&self, x: usize) -> &[(usize, f64)] {
        &self.exits[x]
    }

    /// Full row sum `S_x`, including edges leaving the window.
    pub fn row_sum(&self, x: usize) -> f64 {
        self.row_sums[x]
    }

    /// `(Kv)(x)` over in-window edges only.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (x, o) in out.iter_mut().enumerate() {
            *o = self.edges(x).map(|(y, w)| w * v[y]).sum();
        }
    }

    /// Row-vector product `uK` over in-window edges.
    pub fn left_apply_into(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (x, &ux) in u.iter().enumerate() {
            if ux != 0.0 {
                for (y, w) in self.edges(x) {
                    out[y] += ux * w;
                }
            }
        }
    }

    pub fn has_exits(&self) -> bool {
        self.exits.iter().any(|e| !e.is_empty())
    }

    /// Number of stored in-window edges.
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_are_dropped_and_duplicates_merged() {
        let k = WeightedKernel::finite(vec![vec![(1, 0.0), (0, 1.0), (0, 0.5)], vec![]], None)
            .unwrap();
        assert_eq!(k.row(0).unwrap(), vec![(0, 1.5)]);
        assert_eq!(k.row_bound(), 1.5);
    }

    #[test]
    fn negative_and_nan_weights_rejected() {
        assert!(matches!(
            WeightedKernel::finite(vec![vec![(0, -1.0)]], None),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(WeightedKernel::finite(vec![vec![(0, f64::NAN)]], None).is_err());
    }

    #[test]
    fn row_bound_violation_is_hard_error() {
        assert!(matches!(
            WeightedKernel::finite(vec![vec![(0, 3.0)]], Some(2.0)),
            Err(Error::RowBound { .. })
        ));
        let g = WeightedKernel::generated(Arc::new(|x: usize| vec![(x + 1, 3.0)]), 2.0, None)
            .unwrap();
        assert!(matches!(g.row(4), Err(Error::RowBound { site: 4, .. })));
    }

    #[test]
    fn finite_window_is_full_site_set() {
        let k = WeightedKernel::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(k.window(17).size(), 2);
        assert!(k.restrict(Window::new(3).unwrap()).is_err());
    }

    #[test]
    fn restriction_splits_exits() {
        let g = WeightedKernel::generated(
            Arc::new(|x: usize| vec![(x + 1, 2.0), (x.saturating_sub(1), 1.0)]),
            3.0,
            None,
        )
        .unwrap();
        let sub = g.restrict(Window::new(3).unwrap()).unwrap();
        assert_eq!(sub.exits(2), &[(3, 2.0)]);
        assert!(sub.exits(1).is_empty());
        assert_eq!(sub.row_sum(2), 3.0);
        assert_eq!(sub.apply(&[1.0, 1.0, 1.0]), vec![3.0, 3.0, 1.0]);
    }

    #[test]
    fn site_vector_rejects_negative_entries() {
        assert!(SiteVector::new(vec![0.5, -0.1]).is_err());
        assert!(SiteVector::probability(vec![1.2]).is_err());
        assert!(SiteVector::probability(vec![1.0, 0.0]).is_ok());
    }
}
