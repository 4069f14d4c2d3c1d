//! Offspring distributions and their generating functions.
//!
//! Every evaluation is offered in two flavours: on the `cdf` side (`G(t)`)
//! and on the tail side (`1 - G(1 - s)`). The tail side is what keeps the
//! asymptotic ratio tables meaningful once probabilities drop far below
//! machine epsilon.

use alloc::vec::Vec;

use libm::{exp, expm1, lgamma, log, log1p, pow};

use crate::special::{hurwitz_zeta, power_complement_sum, zeta};
use crate::sum::{compensated_sum, CompensatedSum};
use crate::{CdfPoint, Error, Result};

/// Default mass below which an infinite support is cut for sampling.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-14;

/// Absolute tolerance on the normalization of explicit probabilities.
pub const PMF_SUM_TOLERANCE: f64 = 1e-12;

/// Half-width of the band around `mu = 1` classified as critical.
pub const CRITICALITY_TOLERANCE: f64 = 1e-12;

/// Longest pmf prefix kept in memory.
const MAX_PREFIX: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq)]
pub enum OffspringFamily {
    /// `p_k` listed explicitly, `p_0` first.
    Explicit(Vec<f64>),
    /// `p_k = (1 - a) a^k` with `0 < a < 1`.
    Geometric { ratio: f64 },
    /// `p_k = e^-rate rate^k / k!`.
    Poisson { rate: f64 },
    /// `p_k = k^-exponent / zeta(exponent - 1)` for `k >= 1`, which forces
    /// `mu = 1`; `p_0` takes the remaining mass.
    CriticalPowerLaw { exponent: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OffspringSpec {
    pub family: OffspringFamily,
    /// Mass below which an infinite support is truncated for sampling.
    pub tail_tolerance: f64,
}

impl OffspringSpec {
    pub fn new(family: OffspringFamily) -> Self {
        Self {
            family,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
        }
    }

    pub fn explicit(pmf: impl Into<Vec<f64>>) -> Self {
        Self::new(OffspringFamily::Explicit(pmf.into()))
    }

    pub fn geometric(ratio: f64) -> Self {
        Self::new(OffspringFamily::Geometric { ratio })
    }

    pub fn poisson(rate: f64) -> Self {
        Self::new(OffspringFamily::Poisson { rate })
    }

    pub fn critical_power_law(exponent: f64) -> Self {
        Self::new(OffspringFamily::CriticalPowerLaw { exponent })
    }

    pub fn with_tail_tolerance(mut self, tail_tolerance: f64) -> Self {
        self.tail_tolerance = tail_tolerance;
        self
    }

    pub fn build(self) -> Result<OffspringDistribution> {
        OffspringDistribution::build(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl Criticality {
    pub fn is_supercritical(self) -> bool {
        self == Criticality::Supercritical
    }
}

/// Truncation degree of a generating function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    At(u64),
    Unbounded,
}

#[derive(Clone, Debug)]
enum Law {
    Explicit {
        pmf: Vec<f64>,
        /// `tails[r] = sum_{k > r} p_k`
        tails: Vec<f64>,
        /// `tail_moments[r] = sum_{k > r} k p_k`
        tail_moments: Vec<f64>,
    },
    Geometric {
        ratio: f64,
    },
    Poisson {
        rate: f64,
    },
    PowerLaw {
        exponent: f64,
        norm: f64,
        p0: f64,
    },
}

/// A validated offspring law with its generating-function machinery.
///
/// Immutable after [`build`](Self::build); the pmf prefix used by samplers is
/// materialized eagerly so the value can be shared freely across threads.
#[derive(Clone, Debug)]
pub struct OffspringDistribution {
    spec: OffspringSpec,
    law: Law,
    prefix: Vec<f64>,
    mean: f64,
    second_factorial: f64,
    criticality: Criticality,
    support_max: Option<u64>,
}

impl OffspringDistribution {
    pub fn build(spec: OffspringSpec) -> Result<Self> {
        let tol = spec.tail_tolerance;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidParameter("tail_tolerance", tol));
        }
        let law = match &spec.family {
            OffspringFamily::Explicit(raw) => explicit_law(raw)?,
            &OffspringFamily::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidParameter("geometric ratio", ratio));
                }
                Law::Geometric { ratio }
            }
            &OffspringFamily::Poisson { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidParameter("poisson rate", rate));
                }
                Law::Poisson { rate }
            }
            &OffspringFamily::CriticalPowerLaw { exponent } => {
                if !(exponent > 2.0 && exponent.is_finite()) {
                    return Err(Error::InvalidParameter("power-law exponent", exponent));
                }
                let norm = 1.0 / zeta(exponent - 1.0);
                let p0 = 1.0 - norm * zeta(exponent);
                Law::PowerLaw { exponent, norm, p0 }
            }
        };
        let (mean, second_factorial) = moments(&law);
        let support_max = match &law {
            Law::Explicit { pmf, .. } => Some(pmf.len() as u64 - 1),
            _ => None,
        };
        let criticality = if (mean - 1.0).abs() <= CRITICALITY_TOLERANCE {
            Criticality::Critical
        } else if mean < 1.0 {
            Criticality::Subcritical
        } else {
            Criticality::Supercritical
        };
        let mut dist = Self {
            spec,
            law,
            prefix: Vec::new(),
            mean,
            second_factorial,
            criticality,
            support_max,
        };
        if dist.pmf(0) >= 1.0 || mean <= 0.0 {
            return Err(Error::ZeroMean);
        }
        if dist.pmf(1) >= 1.0 {
            return Err(Error::Degenerate);
        }
        dist.prefix = dist.materialize_prefix(tol);
        Ok(dist)
    }

    fn materialize_prefix(&self, tol: f64) -> Vec<f64> {
        let mut prefix = Vec::new();
        match &self.law {
            Law::Explicit { pmf, .. } => prefix.extend_from_slice(pmf),
            Law::Poisson { rate } => {
                let mut p = exp(-rate);
                let mut k = 0u64;
                while prefix.len() < MAX_PREFIX {
                    prefix.push(p);
                    if (k as f64) > *rate && self.tail(k) < tol {
                        break;
                    }
                    k += 1;
                    p *= rate / k as f64;
                }
            }
            _ => {
                let mut k = 0u64;
                while prefix.len() < MAX_PREFIX {
                    prefix.push(self.pmf_closed(k));
                    if self.tail(k) < tol {
                        break;
                    }
                    k += 1;
                }
            }
        }
        prefix
    }

    pub fn spec(&self) -> &OffspringSpec {
        &self.spec
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.spec.tail_tolerance
    }

    /// Materialized pmf prefix; beyond it the support carries less than
    /// `tail_tolerance` mass (or the prefix hit its length cap).
    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match self.prefix.get(k as usize) {
            Some(&p) => p,
            None => self.pmf_closed(k),
        }
    }

    fn pmf_closed(&self, k: u64) -> f64 {
        match &self.law {
            Law::Explicit { pmf, .. } => pmf.get(k as usize).copied().unwrap_or(0.0),
            Law::Geometric { ratio } => (1.0 - ratio) * pow(*ratio, k as f64),
            Law::Poisson { rate } => {
                let kf = k as f64;
                exp(kf * log(*rate) - rate - lgamma(kf + 1.0))
            }
            Law::PowerLaw { exponent, norm, p0 } => {
                if k == 0 {
                    *p0
                } else {
                    norm * pow(k as f64, -exponent)
                }
            }
        }
    }

    /// `F(r) = p_0 + ... + p_r`.
    pub fn cdf(&self, r: u64) -> f64 {
        let tail = self.tail(r);
        if tail <= 0.5 {
            1.0 - tail
        } else {
            compensated_sum((0..=r).map(|k| self.pmf(k)))
        }
    }

    /// `F̄(r) = sum_{k > r} p_k`, with relative precision.
    pub fn tail(&self, r: u64) -> f64 {
        match &self.law {
            Law::Explicit { tails, .. } => tails.get(r as usize).copied().unwrap_or(0.0),
            Law::Geometric { ratio } => pow(*ratio, (r + 1) as f64),
            Law::Poisson { rate } => {
                if (r + 1) as f64 > *rate {
                    let mut k = r + 1;
                    let mut term = self.pmf(k);
                    let mut acc = CompensatedSum::new();
                    while term > 0.0 {
                        acc.add(term);
                        if term <= acc.value() * 1e-18 {
                            break;
                        }
                        k += 1;
                        term *= rate / k as f64;
                    }
                    acc.value()
                } else {
                    1.0 - compensated_sum((0..=r).map(|k| self.pmf(k)))
                }
            }
            Law::PowerLaw { exponent, norm, .. } => norm * hurwitz_zeta(*exponent, r + 1),
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `sum k (k - 1) p_k`; `+inf` when the second moment diverges.
    pub fn second_factorial_moment(&self) -> f64 {
        self.second_factorial
    }

    /// `sigma^2`, possibly `+inf`.
    pub fn variance(&self) -> f64 {
        if self.second_factorial.is_infinite() {
            f64::INFINITY
        } else {
            self.second_factorial + self.mean - self.mean * self.mean
        }
    }

    pub fn criticality(&self) -> Criticality {
        self.criticality
    }

    pub fn is_bounded(&self) -> bool {
        self.support_max.is_some()
    }

    pub fn support_max(&self) -> Option<u64> {
        self.support_max
    }

    /// Whether `sum_{i > r} i p_i` has a closed form for this family.
    pub fn has_analytic_tail(&self) -> bool {
        !matches!(self.law, Law::Explicit { .. })
    }

    /// `sum_{i > r} i p_i`, equal to `mu - G_r'(1)`.
    pub fn tail_first_moment(&self, r: u64) -> f64 {
        match &self.law {
            Law::Explicit { tail_moments, .. } => {
                tail_moments.get(r as usize).copied().unwrap_or(0.0)
            }
            Law::Geometric { ratio } => {
                let a = *ratio;
                pow(a, (r + 1) as f64) * ((r + 1) as f64 + a / (1.0 - a))
            }
            Law::Poisson { rate } => {
                let below = if r == 0 { 1.0 } else { self.tail(r - 1) };
                rate * below
            }
            Law::PowerLaw { exponent, norm, .. } => norm * hurwitz_zeta(exponent - 1.0, r + 1),
        }
    }

    /// `G(x)` for `x` in `[0, 1]`.
    pub fn pgf(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.apply(CdfPoint::from_cdf(x)).cdf)
    }

    /// `1 - G(1 - s)` for `s` in `[0, 1]`.
    pub fn pgf_complement(&self, s: f64) -> Result<f64> {
        check_unit(s)?;
        Ok(self.apply(CdfPoint::from_tail(s)).tail)
    }

    /// `G_r(x) = p_0 + p_1 x + ... + p_r x^r`.
    pub fn pgf_truncated(&self, r: u64, x: f64) -> Result<f64> {
        check_unit(x)?;
        Ok(self.apply_truncated(Some(r), CdfPoint::from_cdf(x)).cdf)
    }

    /// First or second derivative of `G` or `G_r` at `x`.
    ///
    /// With `Truncation::Unbounded` and `x = 1` the second derivative is
    /// `+inf` whenever the variance is.
    pub fn pgf_derivative(&self, truncation: Truncation, x: f64, order: u32) -> Result<f64> {
        check_unit(x)?;
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let r = match (truncation, self.support_max) {
            (Truncation::At(r), Some(m)) => Some(r.min(m)),
            (Truncation::At(r), None) => Some(r),
            (Truncation::Unbounded, Some(m)) => Some(m),
            (Truncation::Unbounded, None) => None,
        };
        if let Some(r) = r {
            return Ok(self.finite_derivative(r, x, order));
        }
        if x == 1.0 {
            return Ok(if order == 1 {
                self.mean
            } else {
                self.second_factorial
            });
        }
        Ok(match &self.law {
            Law::Geometric { ratio } => {
                let a = *ratio;
                let d = 1.0 - a * x;
                if order == 1 {
                    (1.0 - a) * a / (d * d)
                } else {
                    2.0 * (1.0 - a) * a * a / (d * d * d)
                }
            }
            Law::Poisson { rate } => pow(*rate, order as f64) * exp(rate * (x - 1.0)),
            Law::PowerLaw { .. } => self.series_derivative(x, order),
            Law::Explicit { .. } => unreachable!("explicit laws are bounded"),
        })
    }

    fn finite_derivative(&self, r: u64, x: f64, order: u32) -> f64 {
        let mut acc = CompensatedSum::new();
        let mut power = 1.0;
        let start = order as u64;
        for k in start..=r {
            let kf = k as f64;
            let coeff = if order == 1 { kf } else { kf * (kf - 1.0) };
            acc.add(coeff * self.pmf(k) * power);
            power *= x;
        }
        acc.value()
    }

    fn series_derivative(&self, x: f64, order: u32) -> f64 {
        const MAX_TERMS: u64 = 50_000_000;
        let mut acc = CompensatedSum::new();
        let mut power = 1.0;
        let mut k = order as u64;
        while k < MAX_TERMS {
            let kf = k as f64;
            let coeff = if order == 1 { kf } else { kf * (kf - 1.0) };
            let term = coeff * self.pmf(k) * power;
            acc.add(term);
            if k > 16 && term <= acc.value() * 1e-18 {
                break;
            }
            power *= x;
            k += 1;
        }
        acc.value()
    }

    /// Extinction probability: the smallest root of `G(t) = t` in `[0, 1]`.
    ///
    /// Newton's method from `t = 0` increases monotonically to the root because
    /// `G(t) - t` is convex and decreasing below it.
    pub fn extinction_probability(&self) -> Result<f64> {
        if !self.criticality.is_supercritical() {
            return Ok(1.0);
        }
        if self.pmf(0) == 0.0 {
            return Ok(0.0);
        }
        const MAX_ITERATIONS: u32 = 200;
        let mut t = 0.0f64;
        for iteration in 1..=MAX_ITERATIONS {
            let g = self.pgf(t)?;
            let slope = self.pgf_derivative(Truncation::Unbounded, t, 1)? - 1.0;
            let next = (t - (g - t) / slope).clamp(0.0, 1.0);
            let step = (next - t).abs();
            t = next;
            if step <= 2.0 * f64::EPSILON * t {
                let residual = (self.pgf(t)? - t).abs();
                if residual < 1e-12 {
                    return Ok(t);
                }
                return Err(Error::NoConvergence {
                    iterations: iteration,
                    iterate: t,
                    residual,
                });
            }
        }
        let residual = (self.pgf(t)? - t).abs();
        Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            iterate: t,
            residual,
        })
    }

    /// `G` applied to a point, both sides evaluated with relative precision.
    pub(crate) fn apply(&self, x: CdfPoint) -> CdfPoint {
        match &self.law {
            Law::Explicit { .. } => self.apply_truncated(self.support_max, x),
            Law::Geometric { ratio } => {
                let a = *ratio;
                let d = if x.cdf < 0.5 {
                    1.0 - a * x.cdf
                } else {
                    (1.0 - a) + a * x.tail
                };
                CdfPoint {
                    cdf: (1.0 - a) / d,
                    tail: a * x.tail / d,
                }
            }
            Law::Poisson { rate } => CdfPoint {
                cdf: exp(-rate * x.tail),
                tail: -expm1(-rate * x.tail),
            },
            Law::PowerLaw { exponent, norm, p0 } => {
                let tail = norm * power_complement_sum(*exponent, 1, x.tail);
                let cdf = if x.cdf <= 0.9 {
                    let mut acc = CompensatedSum::new();
                    acc.add(*p0);
                    let mut power = x.cdf;
                    let mut k = 1u64;
                    while power > 0.0 {
                        let term = self.pmf(k) * power;
                        acc.add(term);
                        if term <= acc.value() * 1e-18 {
                            break;
                        }
                        k += 1;
                        power *= x.cdf;
                    }
                    acc.value()
                } else {
                    1.0 - tail
                };
                CdfPoint { cdf, tail }
            }
        }
    }

    /// `G_r` applied to a point. `None` stands for the cap `r = -1`, whose
    /// truncated generating function is identically zero.
    pub(crate) fn apply_truncated(&self, cap: Option<u64>, x: CdfPoint) -> CdfPoint {
        let Some(mut r) = cap else {
            return CdfPoint::ZERO;
        };
        if let Some(m) = self.support_max {
            r = r.min(m);
        }
        let mut cdf = CompensatedSum::new();
        let mut tail = CompensatedSum::new();
        tail.add(self.tail(r));
        let log_keep = log1p(-x.tail);
        let mut power = 1.0;
        for k in 0..=r {
            let p = self.pmf(k);
            cdf.add(p * power);
            if k > 0 && x.tail > 0.0 {
                tail.add(p * -expm1(k as f64 * log_keep));
            }
            power *= x.cdf;
        }
        CdfPoint {
            cdf: cdf.value(),
            tail: tail.value(),
        }
    }

    /// `Ḡ_r(s) - s` and its derivative, written as
    /// `F̄(r)(1 - s) + s D_r - sum_{2 <= k <= r} p_k φ_k(s)` with
    /// `D_r = sum_{k <= r} (k - 1) p_k` and `φ_k(s) = (1 - s)^k - 1 + ks`.
    ///
    /// Every term keeps its relative precision, so roots near a double root
    /// (critical laws, large `r`) are resolved to full accuracy.
    pub(crate) fn tail_excess(&self, r: u64, s: f64) -> (f64, f64) {
        let r = self.support_max.map_or(r, |m| r.min(m));
        let tail = self.tail(r);
        let drift = if self.criticality == Criticality::Critical {
            tail - self.tail_first_moment(r)
        } else {
            compensated_sum((0..=r).map(|k| (k as f64 - 1.0) * self.pmf(k)))
        };
        let log_keep = log1p(-s);
        let mut curvature = CompensatedSum::new();
        let mut curvature_slope = CompensatedSum::new();
        for k in 2..=r {
            let p = self.pmf(k);
            if p == 0.0 {
                continue;
            }
            curvature.add(p * convexity_gap(k, s, log_keep));
            curvature_slope.add(p * k as f64 * -expm1((k - 1) as f64 * log_keep));
        }
        let mut value = CompensatedSum::new();
        value.add(tail);
        value.add(-tail * s);
        value.add(s * drift);
        value.add(-curvature.value());
        (value.value(), drift - tail - curvature_slope.value())
    }

    /// `G_r'(t)` for the cap `r`.
    pub(crate) fn truncated_slope(&self, r: u64, t: f64) -> f64 {
        let r = self.support_max.map_or(r, |m| r.min(m));
        if r == 0 {
            return 0.0;
        }
        self.finite_derivative(r, t, 1)
    }
}

/// `(1 - s)^k - 1 + ks`, by its binomial series when `ks` is small.
fn convexity_gap(k: u64, s: f64, log_keep: f64) -> f64 {
    let kf = k as f64;
    if kf * s >= 0.25 {
        return expm1(kf * log_keep) + kf * s;
    }
    let mut term = 0.5 * kf * (kf - 1.0) * s * s;
    let mut acc = term;
    let mut j = 2.0;
    while j < kf && term.abs() > 1e-18 * acc {
        term *= -s * (kf - j) / (j + 1.0);
        acc += term;
        j += 1.0;
    }
    acc
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(x))
    }
}

fn explicit_law(raw: &[f64]) -> Result<Law> {
    if raw.is_empty() {
        return Err(Error::InvalidPmf("empty probability list"));
    }
    if raw.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidPmf(
            "probabilities must be finite and nonnegative",
        ));
    }
    let total = compensated_sum(raw.iter().copied());
    if (total - 1.0).abs() > PMF_SUM_TOLERANCE {
        return Err(Error::InvalidPmf("probabilities must sum to 1"));
    }
    let mut pmf: Vec<f64> = raw.iter().map(|p| p / total).collect();
    while pmf.len() > 1 && pmf[pmf.len() - 1] == 0.0 {
        pmf.pop();
    }
    let n = pmf.len();
    let mut tails = alloc::vec![0.0; n];
    let mut tail_moments = alloc::vec![0.0; n];
    let mut mass = CompensatedSum::new();
    let mut moment = CompensatedSum::new();
    for r in (0..n).rev() {
        tails[r] = mass.value();
        tail_moments[r] = moment.value();
        mass.add(pmf[r]);
        moment.add(r as f64 * pmf[r]);
    }
    Ok(Law::Explicit {
        pmf,
        tails,
        tail_moments,
    })
}

fn moments(law: &Law) -> (f64, f64) {
    match law {
        Law::Explicit { pmf, .. } => {
            let mean = compensated_sum(pmf.iter().enumerate().map(|(k, p)| k as f64 * p));
            let second = compensated_sum(
                pmf.iter()
                    .enumerate()
                    .map(|(k, p)| k as f64 * (k as f64 - 1.0) * p),
            );
            (mean, second)
        }
        Law::Geometric { ratio } => {
            let a = *ratio;
            (a / (1.0 - a), 2.0 * a * a / ((1.0 - a) * (1.0 - a)))
        }
        Law::Poisson { rate } => (*rate, rate * rate),
        Law::PowerLaw { exponent, norm, .. } => {
            let second = if *exponent <= 3.0 {
                f64::INFINITY
            } else {
                norm * (zeta(exponent - 2.0) - zeta(exponent - 1.0))
            };
            (1.0, second)
        }
    }
}
