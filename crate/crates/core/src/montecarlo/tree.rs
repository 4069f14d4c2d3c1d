use alloc::vec::Vec;

use rand::Rng;

use super::OffspringSampler;

/// Caps that turn runaway growth into censoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleLimits {
    /// Generations whose offspring are drawn before the tree is censored.
    pub max_generations: u32,
    /// A generation larger than this is not expanded.
    pub max_population: u64,
}

/// What one simulated tree revealed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeObservation {
    /// `M_0, M_1, ...` for every generation that was expanded.
    pub generation_max: Vec<u64>,
    /// Maximum of `generation_max`; a lower bound for `M` when censored.
    pub global_max: u64,
    /// Largest generation size seen.
    pub width: u64,
    pub extinct: bool,
    pub censored: bool,
}

impl TreeObservation {
    /// Number of generations expanded.
    pub fn depth(&self) -> usize {
        self.generation_max.len()
    }
}

/// Simulates one tree generation by generation, keeping only the current
/// population and running maxima.
pub fn sample_tree<R: Rng + ?Sized>(
    sampler: &OffspringSampler<'_>,
    rng: &mut R,
    limits: SampleLimits,
) -> TreeObservation {
    let mut population = 1u64;
    let mut obs = TreeObservation {
        generation_max: Vec::new(),
        global_max: 0,
        width: 1,
        extinct: false,
        censored: false,
    };
    loop {
        if obs.depth() >= limits.max_generations as usize || population > limits.max_population {
            obs.censored = true;
            return obs;
        }
        let (max, total) = sampler.sample_generation(rng, population);
        obs.generation_max.push(max);
        obs.global_max = obs.global_max.max(max);
        if total == 0 {
            obs.extinct = true;
            return obs;
        }
        population = total;
        obs.width = obs.width.max(population);
    }
}
