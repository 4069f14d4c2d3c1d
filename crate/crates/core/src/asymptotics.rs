//! Exact ratio tables for the tail laws of `M_n`, `M_[0,n]` and `M`.
//!
//! Each report holds one or more [`RatioSeries`]: a quantity tabulated over a
//! trusted window of `r` together with the asymptotic claim it should obey
//! and an optional pointwise bound. Rows beyond the precision floor, and pmf
//! rows where `p_r = 0`, are left out.

use alloc::vec::Vec;
use core::ops::RangeInclusive;

use libm::pow;

use crate::exact::{generation_table, local_table, DistTable};
use crate::global::{global_law, GlobalLaw};
use crate::offspring::{Criticality, OffspringDistribution, OffspringSpec, Truncation};
use crate::{Error, Result};

/// A bound row fails only when it is violated by more than this, absolutely.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Generation(u32),
    Local(u32),
    SubcriticalGlobal,
    CriticalGlobal,
    SupercriticalGlobal,
}

/// Asymptotic behaviour claimed for a series of ratios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Claim {
    /// The ratio converges to the constant.
    Limit(f64),
    /// The ratio tends to infinity.
    Diverges,
    LimsupAtMost(f64),
    LiminfAtLeast(f64),
    /// Only the pointwise bound is claimed.
    BoundOnly,
}

/// A pointwise inequality on `numerator / denominator`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    /// How far `numerator` lies on the wrong side of `c * denominator`.
    pub fn violation(&self, numerator: f64, denominator: f64) -> f64 {
        match *self {
            Bound::AtMost(c) => numerator - c * denominator,
            Bound::AtLeast(c) => c * denominator - numerator,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioRow {
    pub r: u64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    pub bound_ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub start: f64,
    pub end: f64,
    /// For limit claims, `|ratio / c - 1|` at the window start, end and its
    /// maximum over the window. Zero for other claims.
    pub start_deviation: f64,
    pub end_deviation: f64,
    pub max_deviation: f64,
    /// Largest ratio over the last half of the window.
    pub last_half_max: f64,
    pub violations: usize,
    pub worst_violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioSeries {
    pub name: &'static str,
    pub claim: Claim,
    pub bound: Option<Bound>,
    pub rows: Vec<RatioRow>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioReport {
    pub regime: Regime,
    pub spec: OffspringSpec,
    pub constant_claimed: f64,
    pub series: Vec<RatioSeries>,
    /// Last `r` at which pmf differences are resolved, if reached in range.
    pub precision_floor_r: Option<u64>,
}

impl RatioReport {
    pub fn series(&self, name: &str) -> Option<&RatioSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn passed(&self) -> bool {
        self.series.iter().all(|s| s.verdict.passed)
    }

    pub fn bound_violations(&self) -> usize {
        self.series.iter().map(|s| s.verdict.violations).sum()
    }
}

fn verdict(claim: Claim, rows: &[RatioRow], bound: Option<Bound>) -> Verdict {
    let start = rows[0].ratio;
    let end = rows[rows.len() - 1].ratio;
    let deviation = |v: f64| match claim {
        Claim::Limit(c) => (v / c - 1.0).abs(),
        _ => 0.0,
    };
    let last_half_max = rows[rows.len() / 2..]
        .iter()
        .map(|x| x.ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    let (violations, worst_violation) = match bound {
        Some(b) => rows.iter().fold((0, f64::NEG_INFINITY), |(n, w), x| {
            let v = b.violation(x.numerator, x.denominator);
            (n + usize::from(!x.bound_ok), w.max(v))
        }),
        None => (0, 0.0),
    };
    let claim_ok = match claim {
        Claim::Limit(_) => deviation(end) <= deviation(start),
        Claim::Diverges => end >= 10.0 * start && end > 5.0,
        Claim::LimsupAtMost(c) => last_half_max <= if c == 0.0 { 0.01 } else { 1.05 * c },
        Claim::LiminfAtLeast(c) => end >= c,
        Claim::BoundOnly => true,
    };
    Verdict {
        start,
        end,
        start_deviation: deviation(start),
        end_deviation: deviation(end),
        max_deviation: rows.iter().map(|x| deviation(x.ratio)).fold(0.0, f64::max),
        last_half_max,
        violations,
        worst_violation,
        passed: claim_ok && violations == 0,
    }
}

fn series<I>(
    name: &'static str,
    claim: Claim,
    bound: Option<Bound>,
    cells: I,
) -> Result<RatioSeries>
where
    I: IntoIterator<Item = (u64, f64, f64)>,
{
    let rows: Vec<RatioRow> = cells
        .into_iter()
        .filter(|&(_, num, den)| num > 1e-290 && den > 0.0)
        .map(|(r, numerator, denominator)| RatioRow {
            r,
            numerator,
            denominator,
            ratio: numerator / denominator,
            bound_ok: bound.is_none_or(|b| b.violation(numerator, denominator) <= BOUND_SLACK),
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let verdict = verdict(claim, &rows, bound);
    Ok(RatioSeries {
        name,
        claim,
        bound,
        rows,
        verdict,
    })
}

/// `r` values of the range that lie at or below the precision floor.
fn window(range: &RangeInclusive<u64>, floor: Option<u64>) -> Result<RangeInclusive<u64>> {
    let end = floor.map_or(*range.end(), |f| f.min(*range.end()));
    if end < *range.start() {
        return Err(Error::EmptyWindow);
    }
    Ok(*range.start()..=end)
}

fn exact_report(
    dist: &OffspringDistribution,
    regime: Regime,
    constant: f64,
    table: DistTable,
    range: &RangeInclusive<u64>,
) -> Result<RatioReport> {
    let window = window(range, table.precision_floor)?;
    let claim = if dist.is_bounded() {
        Claim::BoundOnly
    } else {
        Claim::Limit(1.0)
    };
    let rows = &table.rows;
    let pmf = series(
        "pmf",
        claim,
        Some(Bound::AtMost(1.0)),
        window
            .clone()
            .filter(|&r| dist.pmf(r) > 0.0)
            .map(|r| (r, rows[r as usize].pmf, constant * dist.pmf(r))),
    )?;
    let tail = series(
        "tail",
        claim,
        Some(Bound::AtMost(1.0)),
        window.map(|r| (r, rows[r as usize].tail, constant * dist.tail(r))),
    );
    let mut out = Vec::from([pmf]);
    match tail {
        Ok(t) => out.push(t),
        Err(Error::EmptyWindow) => {}
        Err(e) => return Err(e),
    }
    Ok(RatioReport {
        regime,
        spec: dist.spec().clone(),
        constant_claimed: constant,
        series: out,
        precision_floor_r: table.precision_floor,
    })
}

/// `P[M_n = r] / (μ^n p_r)` and `P[M_n > r] / (μ^n F̄(r))`: at most one, and
/// tending to one for unbounded laws.
pub fn generation_ratio_table(
    dist: &OffspringDistribution,
    n: u32,
    r_range: RangeInclusive<u64>,
) -> Result<RatioReport> {
    let constant = pow(dist.mean(), n as f64);
    let table = generation_table(dist, n, *r_range.end());
    exact_report(dist, Regime::Generation(n), constant, table, &r_range)
}

/// `P[M_[0,n] = r] / ((1 + μ + ... + μ^n) p_r)` and the tail analogue.
pub fn local_ratio_table(
    dist: &OffspringDistribution,
    n: u32,
    r_range: RangeInclusive<u64>,
) -> Result<RatioReport> {
    let mu = dist.mean();
    let constant = (0..=n).map(|i| pow(mu, i as f64)).sum();
    let table = local_table(dist, n, *r_range.end());
    exact_report(dist, Regime::Local(n), constant, table, &r_range)
}

fn law_rows(law: &GlobalLaw, r: u64) -> (f64, f64) {
    let row = &law.rows[r as usize];
    (row.pmf, row.tail)
}

/// `p_r / q_r` and `F̄(r) / H̄(r)` against `1 - μ` for subcritical unbounded laws.
pub fn subcritical_global_ratio_table(
    dist: &OffspringDistribution,
    r_range: RangeInclusive<u64>,
) -> Result<RatioReport> {
    if dist.criticality() != Criticality::Subcritical || dist.is_bounded() {
        return Err(Error::RegimeMismatch(
            "needs a subcritical law with unbounded support",
        ));
    }
    let law = global_law(dist, *r_range.end())?;
    let window = window(&r_range, law.precision_floor)?;
    let c = 1.0 - dist.mean();
    let pmf = series(
        "p_r/q_r",
        Claim::Limit(c),
        Some(Bound::AtLeast(c)),
        window
            .clone()
            .filter(|&r| dist.pmf(r) > 0.0)
            .map(|r| (r, dist.pmf(r), law_rows(&law, r).0)),
    )?;
    let tail = series(
        "F/H",
        Claim::Limit(c),
        Some(Bound::AtLeast(c)),
        window.map(|r| (r, dist.tail(r), law_rows(&law, r).1)),
    )?;
    Ok(RatioReport {
        regime: Regime::SubcriticalGlobal,
        spec: dist.spec().clone(),
        constant_claimed: c,
        series: Vec::from([pmf, tail]),
        precision_floor_r: law.precision_floor,
    })
}

/// Growth, bounds and limsup laws of `q_r` and `H̄(r)` for critical unbounded laws.
///
/// Series: `q_r/p_r` (diverges), `q_r T(r)/p_r` and `H T(r)/F` (at most one,
/// with `T(r) = sum_{i>r} i p_i`), `q_r^2/p_r` and `H^2/F` (limsup at most
/// `2/σ²`), and `H/F` (eventually at least 4).
pub fn critical_bounds_report(
    dist: &OffspringDistribution,
    r_range: RangeInclusive<u64>,
) -> Result<RatioReport> {
    if dist.criticality() != Criticality::Critical || dist.is_bounded() {
        return Err(Error::RegimeMismatch(
            "needs a critical law with unbounded support",
        ));
    }
    let law = global_law(dist, *r_range.end())?;
    let window = window(&r_range, law.precision_floor)?;
    let variance = dist.variance();
    let target = if variance.is_finite() {
        2.0 / variance
    } else {
        0.0
    };
    let charged = || window.clone().filter(|&r| dist.pmf(r) > 0.0);
    let q = |r| law_rows(&law, r).0;
    let h = |r| law_rows(&law, r).1;
    let moment = |r| truncated_first_moment(dist, r);
    let out = Vec::from([
        series(
            "q_r/p_r",
            Claim::Diverges,
            None,
            charged().map(|r| (r, q(r), dist.pmf(r))),
        )?,
        series(
            "q_r*T/p_r",
            Claim::BoundOnly,
            Some(Bound::AtMost(1.0)),
            charged().map(|r| (r, q(r) * moment(r), dist.pmf(r))),
        )?,
        series(
            "H*T/F",
            Claim::BoundOnly,
            Some(Bound::AtMost(1.0)),
            window.clone().map(|r| (r, h(r) * moment(r), dist.tail(r))),
        )?,
        series(
            "q_r^2/p_r",
            Claim::LimsupAtMost(target),
            None,
            charged().map(|r| (r, q(r) * q(r), dist.pmf(r))),
        )?,
        series(
            "H^2/F",
            Claim::LimsupAtMost(target),
            None,
            window.clone().map(|r| (r, h(r) * h(r), dist.tail(r))),
        )?,
        series(
            "H/F",
            Claim::LiminfAtLeast(4.0),
            None,
            window.clone().map(|r| (r, h(r), dist.tail(r))),
        )?,
    ]);
    Ok(RatioReport {
        regime: Regime::CriticalGlobal,
        spec: dist.spec().clone(),
        constant_claimed: target,
        series: out,
        precision_floor_r: law.precision_floor,
    })
}

/// `H̄(r)` against `1 - q`, and `p_r q^(r-1) / q_r` against `1 - G'(q)`, for
/// supercritical unbounded laws with `p_0 > 0`. The series `p_r q^r / q_r`
/// is tabulated alongside against the same constant.
pub fn supercritical_limits_report(
    dist: &OffspringDistribution,
    r_range: RangeInclusive<u64>,
) -> Result<RatioReport> {
    if !dist.criticality().is_supercritical() {
        return Err(Error::RegimeMismatch("needs a supercritical law"));
    }
    if dist.is_bounded() {
        return Err(Error::RegimeMismatch("needs unbounded support"));
    }
    if dist.pmf(0) == 0.0 {
        return Err(Error::RegimeMismatch("needs p_0 > 0"));
    }
    let q = dist.extinction_probability()?;
    let slope = dist.pgf_derivative(Truncation::Unbounded, q, 1)?;
    let c = 1.0 - slope;
    let law = global_law(dist, *r_range.end())?;
    let window = window(&r_range, law.precision_floor)?;
    let charged = || window.clone().filter(|&r| dist.pmf(r) > 0.0);
    let qr = |r| law_rows(&law, r).0;
    let out = Vec::from([
        series(
            "H",
            Claim::Limit(1.0 - q),
            None,
            window.clone().map(|r| (r, law_rows(&law, r).1, 1.0)),
        )?,
        series(
            "p_r*q^(r-1)/q_r",
            Claim::Limit(c),
            None,
            charged().map(|r| (r, dist.pmf(r) * pow(q, r as f64 - 1.0), qr(r))),
        )?,
        series(
            "p_r*q^r/q_r",
            Claim::Limit(c),
            None,
            charged().map(|r| (r, dist.pmf(r) * pow(q, r as f64), qr(r))),
        )?,
    ]);
    Ok(RatioReport {
        regime: Regime::SupercriticalGlobal,
        spec: dist.spec().clone(),
        constant_claimed: 1.0 - q,
        series: out,
        precision_floor_r: law.precision_floor,
    })
}

/// `sum_{i>r} i p_i`.
pub fn truncated_first_moment(dist: &OffspringDistribution, r: u64) -> f64 {
    dist.tail_first_moment(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo3() -> OffspringDistribution {
        OffspringSpec::geometric(1.0 / 3.0).build().unwrap()
    }

    #[test]
    fn order_zero_ratios_are_one() {
        let d = geo3();
        let g = generation_ratio_table(&d, 0, 0..=30).unwrap();
        let l = local_ratio_table(&d, 0, 0..=30).unwrap();
        for rep in [g, l] {
            for s in &rep.series {
                assert!(s.rows.iter().all(|x| x.ratio == 1.0), "{}", s.name);
            }
        }
    }

    #[test]
    fn geometric_generation_ratio() {
        let rep = generation_ratio_table(&geo3(), 2, 1..=40).unwrap();
        let pmf = rep.series("pmf").unwrap();
        let last = pmf.rows.iter().find(|x| x.r == 40).unwrap();
        assert!((last.ratio - 1.0).abs() < 0.01);
        assert_eq!(rep.bound_violations(), 0);
    }

    #[test]
    fn bounded_generation_ratio() {
        let d = OffspringSpec::explicit([0.5, 0.0, 0.5]).build().unwrap();
        let rep = generation_ratio_table(&d, 1, 0..=2).unwrap();
        let pmf = rep.series("pmf").unwrap();
        assert_eq!(pmf.claim, Claim::BoundOnly);
        let row = pmf.rows.iter().find(|x| x.r == 2).unwrap();
        assert!((row.ratio - 0.75).abs() < 1e-15);
        assert!(pmf.rows.iter().all(|x| x.r != 1));
    }

    #[test]
    fn local_constant() {
        let rep = local_ratio_table(&geo3(), 3, 1..=60).unwrap();
        assert!((rep.constant_claimed - 1.875).abs() < 1e-15);
        let end = rep.series("pmf").unwrap().verdict.end;
        assert!((end - 1.0).abs() < 0.01);
    }

    #[test]
    fn subcritical_geometric() {
        let rep = subcritical_global_ratio_table(&geo3(), 1..=40).unwrap();
        assert_eq!(rep.constant_claimed, 0.5);
        let row = rep.series("p_r/q_r").unwrap().rows.last().copied().unwrap();
        assert_eq!(row.r, 40);
        assert!((row.ratio - 0.5).abs() < 0.01);
        assert!(rep.passed());
    }

    #[test]
    fn subcritical_poisson() {
        let d = OffspringSpec::poisson(0.8).build().unwrap();
        let rep = subcritical_global_ratio_table(&d, 1..=60).unwrap();
        let v = rep.series("p_r/q_r").unwrap().verdict;
        assert!(v.end_deviation < 0.05, "{v:?}");
    }

    #[test]
    fn regime_checks() {
        assert!(matches!(
            subcritical_global_ratio_table(&OffspringSpec::poisson(1.5).build().unwrap(), 1..=5),
            Err(Error::RegimeMismatch(_))
        ));
        assert!(matches!(
            critical_bounds_report(&geo3(), 1..=5),
            Err(Error::RegimeMismatch(_))
        ));
        assert!(matches!(
            supercritical_limits_report(&geo3(), 1..=5),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn critical_geometric_bounds() {
        let d = OffspringSpec::geometric(0.5).build().unwrap();
        let rep = critical_bounds_report(&d, 2..=200).unwrap();
        assert_eq!(rep.bound_violations(), 0);
        assert!(rep.series("q_r/p_r").unwrap().verdict.passed);
    }

    #[test]
    fn supercritical_constants() {
        let d = OffspringSpec::poisson(1.5).build().unwrap();
        let rep = supercritical_limits_report(&d, 1..=40).unwrap();
        assert!((rep.constant_claimed - 0.5828116438658114).abs() < 1e-12);
        match rep.series("p_r*q^r/q_r").unwrap().claim {
            Claim::Limit(c) => assert!((c - (1.0 - 1.5 * 0.4171883561341886)).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn first_moment_edges() {
        let d = OffspringSpec::explicit([0.5, 0.0, 0.5]).build().unwrap();
        assert_eq!(truncated_first_moment(&d, 0), 1.0);
        assert_eq!(truncated_first_moment(&d, 2), 0.0);
        let g = geo3();
        let direct: f64 = (6..400u64).map(|i| i as f64 * g.pmf(i)).sum();
        assert!((truncated_first_moment(&g, 5) - direct).abs() < 1e-12);
    }
}
