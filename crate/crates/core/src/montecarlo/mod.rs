//! Monte Carlo sampling of Galton-Watson trees.
//!
//! Trial `i` draws from its own ChaCha8 stream `i` under the master seed, and
//! tallies hold integer counts only, so merging the tallies of any partition
//! of the trials gives the same result in any order.

mod sampler;
mod tally;
mod tree;
mod width;

use alloc::vec::Vec;
use core::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, OffspringDistribution, Result};

pub use sampler::OffspringSampler;
pub use tally::{summarize, Cell, CellKind, SimSummary, StatTally, Tally};
pub use tree::{sample_tree, SampleLimits, TreeObservation};
pub use width::{width_bound_check, width_report, WidthReport, WidthRow};

/// Generation cap for laws that may survive forever.
pub const SUPERCRITICAL_MAX_GENERATIONS: u32 = 200;
/// Generation cap for laws that die out almost surely.
pub const FINITE_MAX_GENERATIONS: u32 = 10_000;
pub const DEFAULT_MAX_POPULATION: u64 = 1_000_000;
pub const DEFAULT_WIDTH_GRID: [u64; 6] = [1, 2, 5, 10, 20, 50];

/// A statistic tallied per trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistic {
    /// `M_n`.
    Generation(u32),
    /// `M_[0,n]`.
    Local(u32),
    /// `M`.
    Global,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// `None` picks a cap from the criticality of the law.
    pub max_generations: Option<u32>,
    pub max_population: u64,
    pub statistics: Vec<Statistic>,
    /// Cells `r = 0..=r_max` are summarized.
    pub r_max: u64,
    pub width_grid: Vec<u64>,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            max_generations: None,
            max_population: DEFAULT_MAX_POPULATION,
            statistics: Vec::new(),
            r_max: 20,
            width_grid: DEFAULT_WIDTH_GRID.to_vec(),
        }
    }

    pub fn with_statistics(mut self, statistics: impl Into<Vec<Statistic>>) -> Self {
        self.statistics = statistics.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be positive"));
        }
        if self.max_generations == Some(0) || self.max_population == 0 {
            return Err(Error::InvalidConfig("caps must be positive"));
        }
        if self.width_grid.contains(&0) {
            return Err(Error::InvalidConfig("width grid points must be positive"));
        }
        Ok(())
    }

    pub fn limits(&self, dist: &OffspringDistribution) -> SampleLimits {
        let default = if dist.criticality().is_supercritical() {
            SUPERCRITICAL_MAX_GENERATIONS
        } else {
            FINITE_MAX_GENERATIONS
        };
        SampleLimits {
            max_generations: self.max_generations.unwrap_or(default),
            max_population: self.max_population,
        }
    }
}

/// The random stream of one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs the trials with indices in `trials` and tallies them.
pub fn run_trials(dist: &OffspringDistribution, config: &SimConfig, trials: Range<u64>) -> Tally {
    let sampler = OffspringSampler::new(dist);
    let limits = config.limits(dist);
    let mut tally = Tally::new(config, dist.support_max());
    for trial in trials {
        let obs = sample_tree(&sampler, &mut trial_rng(config.seed, trial), limits);
        tally.record(&obs);
    }
    tally
}

/// Runs every trial of `config` sequentially.
pub fn estimate(dist: &OffspringDistribution, config: &SimConfig) -> Result<Tally> {
    config.validate()?;
    Ok(run_trials(dist, config, 0..config.trials))
}
