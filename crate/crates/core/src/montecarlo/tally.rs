use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use libm::sqrt;

use super::{SimConfig, Statistic, TreeObservation};
use crate::exact::{generation_table, local_table};
use crate::global::global_law;
use crate::{Error, OffspringDistribution, Result};

/// A (sub)critical run censoring more than this fraction of trials is misconfigured.
pub const MAX_CENSORING_RATE: f64 = 0.01;
/// Cells with fewer expected hits or misses than this are not well populated.
pub const MIN_EXPECTED_COUNT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Outcome {
    /// The generation is empty.
    Empty,
    Value(u64),
    /// Censored with this much already observed.
    AtLeast(u64),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatTally {
    pub empty: u64,
    pub values: BTreeMap<u64, u64>,
    pub lower_bounds: BTreeMap<u64, u64>,
}

impl StatTally {
    fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Empty => self.empty += 1,
            Outcome::Value(v) => *self.values.entry(v).or_default() += 1,
            Outcome::AtLeast(v) => *self.lower_bounds.entry(v).or_default() += 1,
        }
    }

    fn merge(&mut self, other: &StatTally) {
        self.empty += other.empty;
        for (k, v) in &other.values {
            *self.values.entry(*k).or_default() += v;
        }
        for (k, v) in &other.lower_bounds {
            *self.lower_bounds.entry(*k).or_default() += v;
        }
    }

    pub fn censored(&self) -> u64 {
        self.lower_bounds.values().sum()
    }

    /// Trials whose value is known to be at most `r`.
    pub fn at_most(&self, r: u64) -> u64 {
        self.empty + self.values.range(..=r).map(|(_, c)| c).sum::<u64>()
    }

    pub fn at(&self, r: u64) -> u64 {
        self.values.get(&r).copied().unwrap_or(0)
    }

    /// Censored trials that cannot be placed on either side of `r`.
    pub fn unresolved(&self, r: u64) -> u64 {
        self.lower_bounds.range(..=r).map(|(_, c)| c).sum()
    }
}

/// Integer counts from a set of trials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tally {
    pub trials: u64,
    pub extinct: u64,
    pub censored: u64,
    pub statistics: Vec<(Statistic, StatTally)>,
    /// Trials with `W >= r` for each grid point `r`; censored trials count as wide.
    pub width_grid: Vec<u64>,
    pub width_at_least: Vec<u64>,
    support_max: Option<u64>,
}

impl Tally {
    pub fn new(config: &SimConfig, support_max: Option<u64>) -> Self {
        Self {
            trials: 0,
            extinct: 0,
            censored: 0,
            statistics: config
                .statistics
                .iter()
                .map(|&s| (s, StatTally::default()))
                .collect(),
            width_grid: config.width_grid.clone(),
            width_at_least: alloc::vec![0; config.width_grid.len()],
            support_max,
        }
    }

    fn outcome(&self, statistic: Statistic, obs: &TreeObservation) -> Outcome {
        // A censored maximum that already reached the support bound is final.
        let settled = |m: u64| {
            if Some(m) == self.support_max {
                Outcome::Value(m)
            } else {
                Outcome::AtLeast(m)
            }
        };
        match statistic {
            Statistic::Generation(n) => match obs.generation_max.get(n as usize) {
                Some(&m) => Outcome::Value(m),
                None if obs.extinct => Outcome::Empty,
                None => Outcome::AtLeast(0),
            },
            Statistic::Local(n) => {
                let seen = obs
                    .generation_max
                    .iter()
                    .take(n as usize + 1)
                    .copied()
                    .max()
                    .unwrap_or(0);
                if obs.depth() > n as usize || obs.extinct {
                    Outcome::Value(seen)
                } else {
                    settled(seen)
                }
            }
            Statistic::Global if obs.censored => settled(obs.global_max),
            Statistic::Global => Outcome::Value(obs.global_max),
        }
    }

    pub fn record(&mut self, obs: &TreeObservation) {
        self.trials += 1;
        self.extinct += u64::from(obs.extinct);
        self.censored += u64::from(obs.censored);
        for i in 0..self.statistics.len() {
            let outcome = self.outcome(self.statistics[i].0, obs);
            self.statistics[i].1.record(outcome);
        }
        for (count, &r) in self.width_at_least.iter_mut().zip(&self.width_grid) {
            *count += u64::from(obs.censored || obs.width >= r);
        }
    }

    /// Adds the counts of another tally built from the same configuration.
    pub fn merge(&mut self, other: &Tally) {
        self.trials += other.trials;
        self.extinct += other.extinct;
        self.censored += other.censored;
        for ((_, mine), (_, theirs)) in self.statistics.iter_mut().zip(&other.statistics) {
            mine.merge(theirs);
        }
        for (mine, theirs) in self.width_at_least.iter_mut().zip(&other.width_at_least) {
            *mine += theirs;
        }
    }

    pub fn censoring_rate(&self) -> f64 {
        self.censored as f64 / self.trials as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    /// `P[X <= r]`.
    Cdf,
    /// `P[X = r]`.
    Pmf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub statistic: Statistic,
    pub kind: CellKind,
    pub r: u64,
    pub count: u64,
    /// Trials that settle the event, excluding censored ones that do not.
    pub resolved: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub expected: Option<f64>,
    pub z: Option<f64>,
    pub well_populated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimSummary {
    pub trials: u64,
    pub extinct: u64,
    pub censored: u64,
    pub censoring_rate: f64,
    /// Global cells are compared with the law of `M` given extinction.
    pub conditional_on_extinction: bool,
    pub cells: Vec<Cell>,
}

impl SimSummary {
    /// Largest `|z|` over well-populated cells.
    pub fn max_abs_z(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.well_populated)
            .filter_map(|c| c.z)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn failing_cells(&self, threshold: f64) -> impl Iterator<Item = &Cell> {
        self.cells
            .iter()
            .filter(move |c| c.well_populated && c.z.is_some_and(|z| !(z.abs() < threshold)))
    }
}

/// `(cdf, pmf)` for `r = 0..=r_max`.
fn exact_law(
    dist: &OffspringDistribution,
    statistic: Statistic,
    r_max: u64,
    conditional: bool,
) -> Result<Vec<(f64, f64)>> {
    Ok(match statistic {
        Statistic::Generation(n) => generation_table(dist, n, r_max)
            .rows
            .iter()
            .map(|x| (x.cdf, x.pmf))
            .collect(),
        Statistic::Local(n) => local_table(dist, n, r_max)
            .rows
            .iter()
            .map(|x| (x.cdf, x.pmf))
            .collect(),
        Statistic::Global => {
            let scale = if conditional {
                dist.extinction_probability()?
            } else {
                1.0
            };
            global_law(dist, r_max)?
                .rows
                .iter()
                .map(|x| (x.cdf / scale, x.pmf / scale))
                .collect()
        }
    })
}

fn cell(
    statistic: Statistic,
    kind: CellKind,
    r: u64,
    count: u64,
    resolved: u64,
    expected: Option<f64>,
) -> Cell {
    let n = resolved as f64;
    let estimate = count as f64 / n;
    let stderr = sqrt(estimate * (1.0 - estimate) / n);
    let z = expected.map(|p| {
        let sd = sqrt(p * (1.0 - p) / n);
        if sd > 0.0 {
            (estimate - p) / sd
        } else if estimate == p {
            0.0
        } else {
            f64::INFINITY
        }
    });
    let well_populated = expected
        .is_some_and(|p| n * p >= MIN_EXPECTED_COUNT && n * (1.0 - p) >= MIN_EXPECTED_COUNT);
    Cell {
        statistic,
        kind,
        r,
        count,
        resolved,
        estimate,
        stderr,
        expected,
        z,
        well_populated,
    }
}

/// Empirical cdf and pmf cells for `r = 0..=r_max`, with z-scores against the
/// exact laws of `dist` when it is given.
///
/// Censored trials are excluded from every cell they cannot settle. For
/// unbounded supercritical laws the global cells use only extinct trees and
/// are compared with `P[M <= r] / q`.
pub fn summarize(
    tally: &Tally,
    r_max: u64,
    dist: Option<&OffspringDistribution>,
) -> Result<SimSummary> {
    if tally.trials == 0 {
        return Err(Error::InvalidConfig("no trials"));
    }
    let supercritical = dist.is_some_and(|d| d.criticality().is_supercritical());
    if dist.is_some() && !supercritical && tally.censoring_rate() > MAX_CENSORING_RATE {
        return Err(Error::ExcessiveCensoring {
            rate: tally.censoring_rate(),
        });
    }
    let conditional = supercritical && dist.is_some_and(|d| !d.is_bounded() && d.pmf(0) > 0.0);
    let mut cells = Vec::new();
    for (statistic, counts) in &tally.statistics {
        let exact = match dist {
            Some(d) => Some(exact_law(
                d,
                *statistic,
                r_max,
                conditional && *statistic == Statistic::Global,
            )?),
            None => None,
        };
        for r in 0..=r_max {
            let resolved = if conditional && *statistic == Statistic::Global {
                tally.trials - counts.censored()
            } else {
                tally.trials - counts.unresolved(r)
            };
            if resolved == 0 {
                continue;
            }
            let (cdf, pmf) = exact.as_ref().map_or((None, None), |e| {
                (Some(e[r as usize].0), Some(e[r as usize].1))
            });
            cells.push(cell(
                *statistic,
                CellKind::Cdf,
                r,
                counts.at_most(r),
                resolved,
                cdf,
            ));
            cells.push(cell(
                *statistic,
                CellKind::Pmf,
                r,
                counts.at(r),
                resolved,
                pmf,
            ));
        }
    }
    Ok(SimSummary {
        trials: tally.trials,
        extinct: tally.extinct,
        censored: tally.censored,
        censoring_rate: tally.censoring_rate(),
        conditional_on_extinction: conditional,
        cells,
    })
}
