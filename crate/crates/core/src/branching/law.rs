use std::fmt;
use std::sync::Arc;

use crate::brw::{BrwLaw, BrwMap, MapKind, Offspring};
use crate::error::{Error, Result};
use crate::graph::{SiteVector, Window};

use super::fixed_point::MonotoneMap;

/// Tolerance on the total mass of an explicitly tabulated law.
pub const LAW_MASS_TOL: f64 = 1e-9;

/// Survival values assumed for types outside the window.
#[derive(Clone, Default)]
pub enum Boundary {
    /// Offspring outside the window are never born (`z = 1`, `v = 0` there).
    #[default]
    NeverBorn,
    /// Survival probability (or a lower bound for it) of each type beyond the window.
    Tail(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::NeverBorn => f.write_str("NeverBorn"),
            Boundary::Tail(_) => f.write_str("Tail(..)"),
        }
    }
}

impl Boundary {
    pub fn survival(&self, y: usize) -> f64 {
        match self {
            Boundary::NeverBorn => 0.0,
            Boundary::Tail(t) => t(y),
        }
    }
}

/// Offspring distribution of one type as `(f, μ_x(f))` pairs.
pub type LawRow = Vec<(Offspring, f64)>;

/// A law given by explicit finite tables, one per type.
#[derive(Clone)]
pub struct TableLaw {
    rows: Arc<dyn Fn(usize) -> LawRow + Send + Sync>,
}

impl fmt::Debug for TableLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TableLaw")
    }
}

impl TableLaw {
    pub fn new(rows: Arc<dyn Fn(usize) -> LawRow + Send + Sync>) -> Self {
        Self { rows }
    }

    /// Validated table of type `x`.
    pub fn row(&self, x: usize) -> Result<LawRow> {
        let row = (self.rows)(x);
        let mut mass = 0.0;
        for (_, p) in &row {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::LawMass { site: x, mass: *p });
            }
            mass += p;
        }
        if (mass - 1.0).abs() > LAW_MASS_TOL {
            return Err(Error::LawMass { site: x, mass });
        }
        Ok(row)
    }
}

#[derive(Debug, Clone)]
pub enum OffspringLaw {
    Table(TableLaw),
    Brw(BrwLaw),
}

impl From<BrwLaw> for OffspringLaw {
    fn from(l: BrwLaw) -> Self {
        OffspringLaw::Brw(l)
    }
}

impl From<TableLaw> for OffspringLaw {
    fn from(l: TableLaw) -> Self {
        OffspringLaw::Table(l)
    }
}

impl OffspringLaw {
    /// `G(z|x) = Σ_f μ_x(f) Π_y z(y)^{f(y)}`; types outside the window of `z` count as `z = 1`.
    pub fn evaluate_g(&self, z: &SiteVector, x: usize) -> Result<f64> {
        z.window().check(x)?;
        if z.as_slice().iter().any(|&a| a > 1.0) {
            return Err(Error::InvalidVector("generating function needs z in [0,1]".into()));
        }
        match self {
            OffspringLaw::Brw(l) => crate::brw::brw_G(l, z, x),
            OffspringLaw::Table(t) => {
                let w = z.window();
                Ok(t.row(x)?
                    .iter()
                    .map(|(f, p)| {
                        p * f
                            .iter()
                            .filter(|(y, _)| w.contains(*y))
                            .map(|&(y, c)| z.get(y).powi(c as i32))
                            .product::<f64>()
                    })
                    .sum())
            }
        }
    }

    /// Types `y` with `μ_x(f) > 0` for some `f` having `f(y) > 0`.
    pub fn children_types(&self, x: usize) -> Result<Vec<usize>> {
        let mut ys: Vec<usize> = match self {
            OffspringLaw::Brw(l) => l.kernel().row(x)?.into_iter().map(|(y, _)| y).collect(),
            OffspringLaw::Table(t) => t
                .row(x)?
                .into_iter()
                .filter(|(_, p)| *p > 0.0)
                .flat_map(|(f, _)| f.into_iter().filter(|&(_, c)| c > 0).map(|(y, _)| y))
                .collect(),
        };
        ys.sort_unstable();
        ys.dedup();
        Ok(ys)
    }

    pub fn g_map(&self, w: Window, boundary: &Boundary) -> Result<LawMap> {
        LawMap::new(self, w, boundary, MapKind::G)
    }

    pub fn h_map(&self, w: Window, boundary: &Boundary) -> Result<LawMap> {
        LawMap::new(self, w, boundary, MapKind::H)
    }
}

/// One tabulated outcome restricted to a window: probability times the
/// boundary factor, and the in-window counts.
#[derive(Clone)]
pub struct Term {
    weight: f64,
    counts: Vec<(usize, i32)>,
}

/// Windowed `G` or `H = 𝟙 − G(𝟙 − ·)` of any offspring law.
#[derive(Clone)]
pub enum LawMap {
    Brw(BrwMap),
    Table { terms: Vec<Vec<Term>>, kind: MapKind },
}

impl LawMap {
    fn new(law: &OffspringLaw, w: Window, boundary: &Boundary, kind: MapKind) -> Result<Self> {
        match law {
            OffspringLaw::Brw(l) => Ok(LawMap::Brw(match kind {
                MapKind::G => l.g_map(w, boundary)?,
                MapKind::H => l.h_map(w, boundary)?,
            })),
            OffspringLaw::Table(t) => {
                let mut terms = Vec::with_capacity(w.size());
                for x in 0..w.size() {
                    let row = t.row(x)?;
                    terms.push(
                        row.into_iter()
                            .filter(|(_, p)| *p > 0.0)
                            .map(|(f, p)| {
                                let mut weight = p;
                                let mut counts = Vec::new();
                                for (y, c) in f {
                                    if c == 0 {
                                        continue;
                                    }
                                    if w.contains(y) {
                                        counts.push((y, c as i32));
                                    } else {
                                        weight *= (1.0 - boundary.survival(y)).powi(c as i32);
                                    }
                                }
                                Term { weight, counts }
                            })
                            .collect(),
                    );
                }
                Ok(LawMap::Table { terms, kind })
            }
        }
    }
}

fn table_g(terms: &[Term], z: &[f64]) -> f64 {
    terms
        .iter()
        .map(|t| t.weight * t.counts.iter().map(|&(y, c)| z[y].powi(c)).product::<f64>())
        .sum()
}

impl MonotoneMap for LawMap {
    fn dim(&self) -> usize {
        match self {
            LawMap::Brw(m) => m.dim(),
            LawMap::Table { terms, .. } => terms.len(),
        }
    }

    fn apply(&self, z: &[f64], out: &mut [f64]) {
        match self {
            LawMap::Brw(m) => m.apply(z, out),
            LawMap::Table { terms, kind } => match kind {
                MapKind::G => {
                    for (o, t) in out.iter_mut().zip(terms) {
                        *o = table_g(t, z).min(1.0);
                    }
                }
                MapKind::H => {
                    let u: Vec<f64> = z.iter().map(|v| 1.0 - v).collect();
                    for (o, t) in out.iter_mut().zip(terms) {
                        *o = (1.0 - table_g(t, &u)).max(0.0);
                    }
                }
            },
        }
    }

    fn jacobian(&self, z: &[f64]) -> Option<nalgebra::DMatrix<f64>> {
        match self {
            LawMap::Brw(m) => m.jacobian(z),
            LawMap::Table { .. } => None,
        }
    }
}
