use alloc::vec::Vec;

use libm::sqrt;

use super::{estimate, SimConfig, Tally};
use crate::{Error, OffspringDistribution, Result};

/// Standard errors of slack allowed above the bound `1/r`.
pub const WIDTH_SLACK: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WidthRow {
    pub r: u64,
    /// Trials with `W >= r`, censored trials included.
    pub count: u64,
    pub trials: u64,
    pub estimate: f64,
    /// Larger of the empirical standard error and the one at `P[W >= r] = 1/r`.
    pub stderr: f64,
    pub bound: f64,
    pub violated: bool,
    /// Fewer than ten trials are expected on one side of the bound.
    pub underpowered: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WidthReport {
    pub rows: Vec<WidthRow>,
}

impl WidthReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }
}

/// Checks `P[W >= r] <= 1/r` on the tally's width grid.
pub fn width_report(tally: &Tally) -> WidthReport {
    let n = tally.trials as f64;
    let rows = tally
        .width_grid
        .iter()
        .zip(&tally.width_at_least)
        .map(|(&r, &count)| {
            let estimate = count as f64 / n;
            let bound = 1.0 / r as f64;
            let variance = (estimate * (1.0 - estimate)).max(bound * (1.0 - bound));
            let stderr = sqrt(variance / n);
            WidthRow {
                r,
                count,
                trials: tally.trials,
                estimate,
                stderr,
                bound,
                violated: estimate - WIDTH_SLACK * stderr > bound,
                underpowered: r > 1 && (n * bound < 10.0 || n * (1.0 - bound) < 10.0),
            }
        })
        .collect();
    WidthReport { rows }
}

/// Simulates `config.trials` trees of a (sub)critical law and checks the width bound.
pub fn width_bound_check(dist: &OffspringDistribution, config: &SimConfig) -> Result<WidthReport> {
    if dist.criticality().is_supercritical() {
        return Err(Error::RegimeMismatch(
            "width bound needs a (sub)critical law",
        ));
    }
    Ok(width_report(&estimate(dist, config)?))
}
