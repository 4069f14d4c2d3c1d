use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::sum::CompensatedSum;
use crate::{Error, OffspringDistribution, Result};

/// Populations up to this size draw each individual separately; larger ones
/// draw bucket counts from a multinomial.
const DIRECT_DRAWS: u64 = 48;

/// Walker/Vose alias table.
#[derive(Clone, Debug)]
struct AliasTable {
    accept: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut accept = alloc::vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, &w) in scaled.iter().enumerate() {
            if w < 1.0 {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            accept[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        Self { accept, alias }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.accept.len());
        if rng.random::<f64>() < self.accept[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Exact sampler for an offspring law.
///
/// The materialized prefix `p_0..=p_K` and the residual mass `F̄(K)` form the
/// buckets of an alias table; a draw landing in the residual bucket is
/// resolved by sequential inversion over `K+1, K+2, ...`.
#[derive(Clone, Debug)]
pub struct OffspringSampler<'a> {
    prefix: Vec<f64>,
    /// Mass of bucket `k` and every bucket after it.
    remaining: Vec<f64>,
    table: AliasTable,
    tail: Option<(&'a OffspringDistribution, f64)>,
}

impl<'a> OffspringSampler<'a> {
    pub fn new(dist: &'a OffspringDistribution) -> Self {
        let prefix = dist.prefix().to_vec();
        let k = prefix.len() as u64 - 1;
        let residual = if dist.is_bounded() { 0.0 } else { dist.tail(k) };
        let tail = (residual > 0.0).then_some((dist, residual));
        Self::assemble(prefix, tail)
    }

    /// Sampler for a finite pmf given directly, including laws the exact
    /// engine rejects such as `p_0 = 1`.
    pub fn from_weights(weights: &[f64]) -> Result<OffspringSampler<'static>> {
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPmf("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
        if total <= 0.0 {
            return Err(Error::InvalidPmf("weights must not all be zero"));
        }
        Ok(OffspringSampler::assemble(
            weights.iter().map(|w| w / total).collect(),
            None,
        ))
    }

    fn assemble(prefix: Vec<f64>, tail: Option<(&'a OffspringDistribution, f64)>) -> Self {
        let mut weights = prefix.clone();
        if let Some((_, mass)) = tail {
            weights.push(mass);
        }
        let table = AliasTable::new(&weights);
        let mut remaining = alloc::vec![0.0; weights.len()];
        let mut acc = CompensatedSum::new();
        for i in (0..weights.len()).rev() {
            acc.add(weights[i]);
            remaining[i] = acc.value();
        }
        Self {
            prefix,
            remaining,
            table,
            tail,
        }
    }

    fn sample_tail<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let (dist, mass) = self.tail.expect("tail bucket without a tail");
        let mut u = rng.random::<f64>() * mass;
        let mut k = self.prefix.len() as u64;
        loop {
            let p = dist.pmf(k);
            if u < p || p == 0.0 {
                return k;
            }
            u -= p;
            k += 1;
        }
    }

    /// One offspring count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let i = self.table.sample(rng);
        if i < self.prefix.len() {
            i as u64
        } else {
            self.sample_tail(rng)
        }
    }

    /// Maximum and sum of `n` independent offspring counts.
    pub fn sample_generation<R: Rng + ?Sized>(&self, rng: &mut R, n: u64) -> (u64, u64) {
        let mut max = 0u64;
        let mut total = 0u64;
        let mut record = |k: u64, count: u64| {
            if count > 0 {
                max = max.max(k);
                total = total.saturating_add(k.saturating_mul(count));
            }
        };
        if n <= DIRECT_DRAWS {
            for _ in 0..n {
                record(self.sample(rng), 1);
            }
            return (max, total);
        }
        let mut left = n;
        for (k, &p) in self.prefix.iter().enumerate() {
            if left == 0 {
                break;
            }
            let share = (p / self.remaining[k]).min(1.0);
            let count = if share >= 1.0 {
                left
            } else {
                Binomial::new(left, share).map_or(0, |b| b.sample(rng))
            };
            record(k as u64, count);
            left -= count;
        }
        if self.tail.is_some() {
            for _ in 0..left {
                record(self.sample_tail(rng), 1);
            }
        }
        (max, total)
    }
}
