use gwmaxdeg_core::montecarlo::{run_trials, SimConfig, Tally};
use gwmaxdeg_core::OffspringDistribution;
use rayon::prelude::*;

use crate::CliError;

/// Trials per work unit. Fixed, so the partition never depends on the pool.
const CHUNK: u64 = 1024;

pub const THREADS_VAR: &str = "GWMAXDEG_THREADS";

/// Thread cap from `GWMAXDEG_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_VAR)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// Runs all trials of `config` on up to `threads` threads (all cores when
/// `None`). The tally is identical for every thread count.
pub fn estimate(
    dist: &OffspringDistribution,
    config: &SimConfig,
    threads: Option<usize>,
) -> Result<Tally, CliError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Numeric(format!("thread pool: {e}")))?;
    let chunks = config.trials.div_ceil(CHUNK);
    Ok(pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                run_trials(
                    dist,
                    config,
                    c * CHUNK..((c + 1) * CHUNK).min(config.trials),
                )
            })
            .reduce(
                || Tally::new(config, dist.support_max()),
                |mut a, b| {
                    a.merge(&b);
                    a
                },
            )
    }))
}
