use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::brw::{BrwLaw, Offspring};
use crate::error::{Error, Result};

/// Out-neighbours of one site prepared for sampling.
#[derive(Debug)]
pub struct SiteRates {
    pub targets: Vec<usize>,
    pub total: f64,
    index: Option<WeightedIndex<f64>>,
}

impl SiteRates {
    fn new(row: Vec<(usize, f64)>) -> Result<Self> {
        let total: f64 = row.iter().map(|&(_, k)| k).sum();
        let (targets, weights): (Vec<usize>, Vec<f64>) = row.into_iter().unzip();
        let index = if targets.is_empty() {
            None
        } else {
            Some(WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?)
        };
        Ok(Self { targets, total, index })
    }

    /// A child type drawn with weights `k_xy / S_x`.
    pub fn child<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let index = self.index.as_ref().expect("no out-neighbours to draw from");
        self.targets[index.sample(rng)]
    }
}

/// Rows of a BRW law read once and kept for the rest of a replica.
pub struct RowCache<'a> {
    law: &'a BrwLaw,
    rows: BTreeMap<usize, Arc<SiteRates>>,
}

impl<'a> RowCache<'a> {
    pub fn new(law: &'a BrwLaw) -> Self {
        Self {
            law,
            rows: BTreeMap::new(),
        }
    }

    pub fn law(&self) -> &BrwLaw {
        self.law
    }

    pub fn get(&mut self, x: usize) -> Result<Arc<SiteRates>> {
        if let Some(r) = self.rows.get(&x) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(SiteRates::new(self.law.kernel().row(x)?)?);
        self.rows.insert(x, Arc::clone(&r));
        Ok(r)
    }
}

/// Number of failures before the first success, success probability `p`.
pub fn geometric<R: Rng + ?Sized>(p: f64, rng: &mut R) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    // 1 − U lies in (0, 1]
    let u: f64 = 1.0 - rng.random::<f64>();
    (u.ln() / (1.0 - p).ln()).floor() as u64
}

/// Draws the children of one particle at `x`: the total `S(f)` is geometric
/// with success probability `1/(1+λS_x)` and the types are i.i.d. with
/// weights `k_xy/S_x`.
pub fn sample_with<R: Rng + ?Sized>(lambda: f64, rates: &SiteRates, rng: &mut R) -> Offspring {
    if rates.targets.is_empty() {
        return Vec::new();
    }
    let n = geometric(1.0 / (1.0 + lambda * rates.total), rng);
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for _ in 0..n {
        *counts.entry(rates.child(rng)).or_default() += 1;
    }
    counts.into_iter().collect()
}

pub fn sample_offspring<R: Rng + ?Sized>(law: &BrwLaw, x: usize, rng: &mut R) -> Result<Offspring> {
    let rates = SiteRates::new(law.kernel().row(x)?)?;
    Ok(sample_with(law.lambda(), &rates, rng))
}
