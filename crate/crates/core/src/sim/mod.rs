//! Monte Carlo simulation of a BRW, generation by generation (the canonical
//! branching process) or in continuous time, with survival-frequency estimates.

mod sampler;
mod wilson;

pub use sampler::{geometric, sample_offspring, sample_with, RowCache, SiteRates};
pub use wilson::{wilson, Interval, Z95, Z99};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::brw::BrwLaw;
use crate::error::{Error, Result};

pub const DEFAULT_P_MAX: u64 = 1000;
pub const DEFAULT_LOCAL_THRESHOLD: u64 = 50;
pub const DEFAULT_G_MAX: u64 = 200;
pub const DEFAULT_HORIZON: f64 = 50.0;
pub const MIN_REPLICAS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Generations { g_max: u64 },
    Continuous { horizon: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub start: usize,
    pub mode: Mode,
    /// Population above which a run stops and counts as alive (censored).
    pub p_max: u64,
    /// Births at the start site needed for the local-survival flag.
    pub local_threshold: u64,
    pub replicas: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(start: usize, mode: Mode, replicas: usize, seed: u64) -> Self {
        Self {
            start,
            mode,
            p_max: DEFAULT_P_MAX,
            local_threshold: DEFAULT_LOCAL_THRESHOLD,
            replicas,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_max < 1 || self.local_threshold < 1 || self.replicas < 1 {
            return Err(Error::InvalidParameter(
                "population cap, local threshold and replica count must be at least 1".into(),
            ));
        }
        match self.mode {
            Mode::Generations { g_max } if g_max < 1 => {
                Err(Error::InvalidParameter("generation cap must be at least 1".into()))
            }
            Mode::Continuous { horizon } if !(horizon > 0.0 && horizon.is_finite()) => {
                Err(Error::InvalidParameter(format!("horizon = {horizon}")))
            }
            _ => Ok(()),
        }
    }

    /// The replica's random stream: the master seed selects the key, the replica index the stream.
    pub fn rng(&self, replica: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Censor {
    /// Population exceeded the cap.
    Cap,
    /// Still alive at the generation cap or time horizon.
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub global_alive: bool,
    pub local: bool,
    pub censored: Option<Censor>,
    /// Generation count or time at extinction.
    pub extinction_time: Option<f64>,
    pub total_births: u64,
    pub births_at_start: u64,
    /// Generations completed or events processed.
    pub steps: u64,
}

struct Tally {
    births: u64,
    at_start: u64,
}

impl Tally {
    fn finish(
        self,
        replica: u64,
        cfg: &SimConfig,
        censored: Option<Censor>,
        extinction_time: Option<f64>,
        steps: u64,
    ) -> ReplicaOutcome {
        ReplicaOutcome {
            replica,
            global_alive: extinction_time.is_none(),
            local: self.at_start >= cfg.local_threshold,
            censored,
            extinction_time,
            total_births: self.births,
            births_at_start: self.at_start,
            steps,
        }
    }
}

/// One replica of the branching process, expanded generation by generation.
pub fn simulate_generations(law: &BrwLaw, cfg: &SimConfig, replica: u64) -> Result<ReplicaOutcome> {
    cfg.validate()?;
    let Mode::Generations { g_max } = cfg.mode else {
        return Err(Error::InvalidParameter("configuration is not in generation mode".into()));
    };
    let mut rng = cfg.rng(replica);
    let mut cache = RowCache::new(law);
    cache.get(cfg.start)?;
    let mut tally = Tally { births: 0, at_start: 0 };
    let mut pop: BTreeMap<usize, u64> = BTreeMap::from([(cfg.start, 1)]);
    for generation in 1..=g_max {
        let mut next: BTreeMap<usize, u64> = BTreeMap::new();
        let mut size = 0u64;
        for (&x, &count) in &pop {
            let rates = cache.get(x)?;
            for _ in 0..count {
                for (y, c) in sample_with(law.lambda(), &rates, &mut rng) {
                    let c = c as u64;
                    *next.entry(y).or_default() += c;
                    size += c;
                    tally.births += c;
                    if y == cfg.start {
                        tally.at_start += c;
                    }
                }
                if size > cfg.p_max {
                    return Ok(tally.finish(replica, cfg, Some(Censor::Cap), None, generation));
                }
            }
        }
        if size == 0 {
            return Ok(tally.finish(replica, cfg, None, Some(generation as f64), generation));
        }
        pop = next;
    }
    Ok(tally.finish(replica, cfg, Some(Censor::Horizon), None, g_max))
}

/// One replica of the continuous-time BRW, run through its embedded jump chain.
///
/// A particle at `x` waits an exponential time of rate `1 + λS_x`, then dies
/// with probability `1/(1+λS_x)` or else places a child at `y` with weight `k_xy`.
pub fn simulate_continuous(law: &BrwLaw, cfg: &SimConfig, replica: u64) -> Result<ReplicaOutcome> {
    cfg.validate()?;
    let Mode::Continuous { horizon } = cfg.mode else {
        return Err(Error::InvalidParameter("configuration is not in continuous mode".into()));
    };
    let lambda = law.lambda();
    let mut rng = cfg.rng(replica);
    let mut cache = RowCache::new(law);
    let mut tally = Tally { births: 0, at_start: 0 };
    // site -> (count, rate per particle)
    let mut pop: BTreeMap<usize, (u64, f64)> = BTreeMap::new();
    let r0 = 1.0 + lambda * cache.get(cfg.start)?.total;
    pop.insert(cfg.start, (1, r0));
    let mut size = 1u64;
    let mut total_rate = r0;
    let mut t = 0.0;
    let mut events = 0u64;
    loop {
        let u: f64 = 1.0 - rng.random::<f64>();
        t += -u.ln() / total_rate;
        if t > horizon {
            return Ok(tally.finish(replica, cfg, Some(Censor::Horizon), None, events));
        }
        events += 1;
        let mut pick = rng.random::<f64>() * total_rate;
        let mut chosen = *pop.keys().next_back().expect("population is not empty");
        for (&x, &(count, rate)) in &pop {
            let mass = count as f64 * rate;
            if pick < mass {
                chosen = x;
                break;
            }
            pick -= mass;
        }
        let x = chosen;
        let rate = pop[&x].1;
        if rng.random::<f64>() * rate < 1.0 {
            let entry = pop.get_mut(&x).expect("chosen site is populated");
            entry.0 -= 1;
            if entry.0 == 0 {
                pop.remove(&x);
            }
            size -= 1;
            total_rate -= rate;
            if size == 0 {
                return Ok(tally.finish(replica, cfg, None, Some(t), events));
            }
            if pop.len() == 1 {
                // refresh to keep rounding from accumulating
                total_rate = pop.values().map(|&(c, r)| c as f64 * r).sum();
            }
        } else {
            let y = cache.get(x)?.child(&mut rng);
            let ry = 1.0 + lambda * cache.get(y)?.total;
            pop.entry(y).or_insert((0, ry)).0 += 1;
            size += 1;
            total_rate += ry;
            tally.births += 1;
            if y == cfg.start {
                tally.at_start += 1;
            }
            if size > cfg.p_max {
                return Ok(tally.finish(replica, cfg, Some(Censor::Cap), None, events));
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimOutcome {
    pub config: SimConfig,
    pub lambda: f64,
    pub replicas: Vec<ReplicaOutcome>,
    pub survivors: usize,
    pub p_hat: f64,
    pub ci95: Interval,
    pub local_survivors: usize,
    pub local_p_hat: f64,
    pub local_ci95: Interval,
    pub censored_cap: usize,
    pub censored_horizon: usize,
    /// Operational definition of the local-survival flag.
    pub local_proxy: String,
}

impl SimOutcome {
    pub fn interval(&self, z: f64) -> Interval {
        wilson(self.survivors, self.replicas.len(), z)
    }
}

/// Runs all replicas (concurrently, each on its own stream) and aggregates
/// the global survival frequency with its Wilson interval.
pub fn estimate_survival(law: &BrwLaw, cfg: &SimConfig) -> Result<SimOutcome> {
    cfg.validate()?;
    if cfg.replicas < MIN_REPLICAS {
        return Err(Error::InvalidParameter(format!(
            "{} replicas requested, at least {MIN_REPLICAS} needed for an estimate",
            cfg.replicas
        )));
    }
    let run = |r: u64| match cfg.mode {
        Mode::Generations { .. } => simulate_generations(law, cfg, r),
        Mode::Continuous { .. } => simulate_continuous(law, cfg, r),
    };
    let replicas: Vec<ReplicaOutcome> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(run)
        .collect::<Result<_>>()?;
    Ok(aggregate(law.lambda(), cfg, replicas))
}

pub fn aggregate(lambda: f64, cfg: &SimConfig, replicas: Vec<ReplicaOutcome>) -> SimOutcome {
    let n = replicas.len();
    let survivors = replicas.iter().filter(|r| r.global_alive).count();
    let local_survivors = replicas.iter().filter(|r| r.local).count();
    let censored_cap = replicas.iter().filter(|r| r.censored == Some(Censor::Cap)).count();
    let censored_horizon = replicas.iter().filter(|r| r.censored == Some(Censor::Horizon)).count();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    SimOutcome {
        config: cfg.clone(),
        lambda,
        survivors,
        p_hat: frac(survivors),
        ci95: wilson(survivors, n, Z95),
        local_survivors,
        local_p_hat: frac(local_survivors),
        local_ci95: wilson(local_survivors, n, Z95),
        censored_cap,
        censored_horizon,
        local_proxy: format!(
            "at least {} births at site {} before the run stops",
            cfg.local_threshold, cfg.start
        ),
        replicas,
    }
}
