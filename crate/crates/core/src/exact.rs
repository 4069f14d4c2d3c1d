//! Exact laws of `M_n`, `M_[0,n]` and joint per-generation events.
//!
//! Every quantity is a composition of generating functions applied to `1`:
//! constrained generation `i` with cap `r_i` contributes `G_{r_i}`, an
//! unconstrained generation contributes the full `G`. Compositions run on
//! [`CdfPoint`]s, so probability differences far out in the tail are taken
//! between small numbers rather than between numbers close to one.

use alloc::vec::Vec;

use crate::offspring::{OffspringDistribution, OffspringSpec};
use crate::{CdfPoint, Error, Result};

/// Which maximal out-degree a table describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    /// `M_n`.
    Generation(u32),
    /// `M_[0,n]`.
    Local(u32),
    /// `M`.
    Global,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistRow {
    pub r: u64,
    pub cdf: f64,
    pub pmf: f64,
    pub tail: f64,
}

/// Rows `(r, cdf, pmf, tail)` for one target, `r = 0..=r_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistTable {
    pub target: Target,
    pub spec: OffspringSpec,
    pub rows: Vec<DistRow>,
    /// Largest `r` whose pmf is resolved above rounding noise, if the floor
    /// was reached inside the table.
    pub precision_floor: Option<u64>,
}

/// `(generation, cap)` pairs with strictly increasing generations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationCapVector(Vec<(u32, u64)>);

impl GenerationCapVector {
    pub fn new(pairs: Vec<(u32, u64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyCaps);
        }
        if pairs.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::UnorderedGenerations);
        }
        Ok(Self(pairs))
    }

    pub fn pairs(&self) -> &[(u32, u64)] {
        &self.0
    }
}

/// Mass differences below `64 eps` of the operands' scale are rounding noise.
pub const PRECISION_FLOOR_FACTOR: f64 = 64.0 * f64::EPSILON;

/// Whether `mass`, a difference of two points the lower of which is `below`,
/// is resolved above rounding noise. A zero difference from an exact `0` or
/// `1` is exact.
pub fn is_trusted(mass: f64, below: &CdfPoint) -> bool {
    (mass > PRECISION_FLOOR_FACTOR * below.scale() && mass > 1e-290)
        || (mass == 0.0 && below.scale() == 0.0)
}

#[derive(Clone, Copy)]
enum Step {
    Full,
    /// `None` is the cap `-1`.
    Capped(Option<u64>),
}

fn compose<I>(dist: &OffspringDistribution, steps: I) -> CdfPoint
where
    I: DoubleEndedIterator<Item = Step>,
{
    let mut x = CdfPoint::ONE;
    for step in steps.rev() {
        x = match step {
            Step::Full => dist.apply(x),
            Step::Capped(cap) => dist.apply_truncated(cap, x),
        };
    }
    x
}

/// `P[M_i <= r_i, 0 <= i <= n] = G_{r_0} G_{r_1} ... G_{r_n}(1)`.
pub fn finite_dim_point(dist: &OffspringDistribution, caps: &[u64]) -> Result<CdfPoint> {
    if caps.is_empty() {
        return Err(Error::EmptyCaps);
    }
    Ok(compose(dist, caps.iter().map(|&r| Step::Capped(Some(r)))))
}

pub fn finite_dim_cdf(dist: &OffspringDistribution, caps: &[u64]) -> Result<f64> {
    finite_dim_point(dist, caps).map(|p| p.cdf)
}

/// `G^n G_r(1)`; the cap `None` (r = -1) gives `G^n(0)`, the probability
/// that generation `n` is empty.
pub fn generation_point(dist: &OffspringDistribution, n: u32, cap: Option<u64>) -> CdfPoint {
    let steps =
        core::iter::repeat_n(Step::Full, n as usize).chain(core::iter::once(Step::Capped(cap)));
    compose(dist, steps.collect::<Vec<_>>().into_iter())
}

/// `P[M_n <= r]`. Trees extinct before generation `n` count as satisfying the cap.
pub fn generation_cdf(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    generation_point(dist, n, Some(r)).cdf
}

/// `P[M_n > r]`.
pub fn generation_tail(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    generation_point(dist, n, Some(r)).tail
}

/// `P[M_n = r]`; `P[M_n = 0]` excludes trees whose generation `n` is empty.
pub fn generation_pmf(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    if n == 0 {
        return dist.pmf(r);
    }
    let below = generation_point(dist, n, r.checked_sub(1));
    let at = generation_point(dist, n, Some(r));
    at.mass_above(&below).max(0.0)
}

/// `G_r^{n+1}(1)`, the same composition as [`finite_dim_point`] with all caps `r`.
pub fn local_point(dist: &OffspringDistribution, n: u32, cap: Option<u64>) -> CdfPoint {
    let steps = core::iter::repeat_n(Step::Capped(cap), n as usize + 1);
    compose(dist, steps.collect::<Vec<_>>().into_iter())
}

/// `G_r^{n+1}(1)` for `n = 0, 1, 2, ...`, bitwise equal to [`local_point`].
pub fn local_sequence(dist: &OffspringDistribution, r: u64) -> impl Iterator<Item = CdfPoint> + '_ {
    let mut x = CdfPoint::ONE;
    core::iter::repeat_with(move || {
        x = dist.apply_truncated(Some(r), x);
        x
    })
}

/// `P[M_[0,n] <= r]`.
pub fn local_cdf(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    local_point(dist, n, Some(r)).cdf
}

/// `P[M_[0,n] > r]`.
pub fn local_tail(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    local_point(dist, n, Some(r)).tail
}

/// `P[M_[0,n] = r]`.
pub fn local_pmf(dist: &OffspringDistribution, n: u32, r: u64) -> f64 {
    if n == 0 {
        return dist.pmf(r);
    }
    let below = local_point(dist, n, r.checked_sub(1));
    let at = local_point(dist, n, Some(r));
    at.mass_above(&below).max(0.0)
}

fn joint_point(dist: &OffspringDistribution, caps: &[(u32, u64)], shift: u64) -> CdfPoint {
    let last = caps[caps.len() - 1].0;
    let mut steps = Vec::with_capacity(last as usize + 1);
    let mut next = caps.iter().peekable();
    for generation in 0..=last {
        match next.peek() {
            Some(&&(g, r)) if g == generation => {
                steps.push(Step::Capped(Some(r - shift)));
                next.next();
            }
            _ => steps.push(Step::Full),
        }
    }
    compose(dist, steps.into_iter())
}

/// `C(caps) - C(caps - 1)` with
/// `C = G^{n_1} G_{r_1} G^{n_2 - n_1 - 1} G_{r_2} ... G_{r_m}(1)`.
///
/// This is the probability that every constrained generation stays within
/// its cap and at least one reaches it exactly; configurations where several
/// generations hit their caps at once are included.
pub fn joint_union_prob(dist: &OffspringDistribution, caps: &GenerationCapVector) -> Result<f64> {
    let pairs = caps.pairs();
    if pairs.iter().any(|&(_, r)| r == 0) {
        return Err(Error::ZeroCap);
    }
    let upper = joint_point(dist, pairs, 0);
    let lower = joint_point(dist, pairs, 1);
    Ok(upper.mass_above(&lower).max(0.0))
}

fn table<F>(dist: &OffspringDistribution, target: Target, r_max: u64, point: F) -> DistTable
where
    F: Fn(Option<u64>) -> CdfPoint,
{
    let mut rows = Vec::with_capacity(r_max as usize + 1);
    let mut below = point(None);
    let mut precision_floor = None;
    for r in 0..=r_max {
        let at = point(Some(r));
        let pmf = match target {
            Target::Generation(0) | Target::Local(0) => dist.pmf(r),
            _ => at.mass_above(&below).max(0.0),
        };
        if precision_floor.is_none() && r > 0 && dist.pmf(r) > 0.0 && !is_trusted(pmf, &below) {
            precision_floor = Some(r - 1);
        }
        rows.push(DistRow {
            r,
            cdf: at.cdf,
            pmf,
            tail: at.tail,
        });
        below = at;
    }
    DistTable {
        target,
        spec: dist.spec().clone(),
        rows,
        precision_floor,
    }
}

/// Law of `M_n` for `r = 0..=r_max`.
pub fn generation_table(dist: &OffspringDistribution, n: u32, r_max: u64) -> DistTable {
    table(dist, Target::Generation(n), r_max, |cap| {
        generation_point(dist, n, cap)
    })
}

/// Law of `M_[0,n]` for `r = 0..=r_max`.
pub fn local_table(dist: &OffspringDistribution, n: u32, r_max: u64) -> DistTable {
    table(dist, Target::Local(n), r_max, |cap| {
        local_point(dist, n, cap)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::OffspringSpec;
    use approx::assert_relative_eq;

    fn binary() -> OffspringDistribution {
        OffspringSpec::explicit([0.5, 0.0, 0.5]).build().unwrap()
    }

    fn geo3() -> OffspringDistribution {
        OffspringSpec::geometric(1.0 / 3.0).build().unwrap()
    }

    #[test]
    fn finite_dim_examples() {
        let b = binary();
        assert_eq!(finite_dim_cdf(&b, &[1]).unwrap(), 0.5);
        assert_eq!(finite_dim_cdf(&b, &[1, 1]).unwrap(), 0.5);
        // root dies (1/2) or has two childless children (1/2 * 1/4)
        assert_eq!(finite_dim_cdf(&b, &[2, 1]).unwrap(), 0.625);
        assert_eq!(finite_dim_cdf(&b, &[]), Err(Error::EmptyCaps));
    }

    #[test]
    fn generation_cdf_examples() {
        let g = geo3();
        for r in 0..10 {
            assert_relative_eq!(generation_cdf(&g, 0, r), g.cdf(r), max_relative = 1e-15);
        }
        assert_eq!(generation_cdf(&binary(), 1, 1), 0.625);
        let nested = |x: f64| 2.0 / (3.0 - x);
        assert_relative_eq!(
            generation_cdf(&g, 2, 0),
            nested(nested(2.0 / 3.0)),
            max_relative = 1e-15
        );
    }

    #[test]
    fn generation_pmf_examples() {
        let g = geo3();
        for r in 0..20 {
            assert_relative_eq!(generation_pmf(&g, 0, r), g.pmf(r), max_relative = 1e-13);
        }
        // root has two children and at least one of them reproduces
        assert_eq!(generation_pmf(&binary(), 1, 2), 0.375);
        for r in [20, 40, 60] {
            assert!(generation_pmf(&g, 3, r) <= 0.125 * g.pmf(r) + 1e-12);
        }
    }

    #[test]
    fn local_examples() {
        let b = binary();
        assert_eq!(local_cdf(&b, 0, 1), 0.5);
        assert_eq!(local_cdf(&b, 1, 1), 0.5);
        assert_eq!(local_pmf(&b, 1, 2), 0.5);
        let g = geo3();
        for r in 0..30 {
            assert_relative_eq!(local_pmf(&g, 0, r), g.pmf(r), max_relative = 1e-13);
        }
        let ratio = local_pmf(&g, 2, 20) / (1.75 * g.pmf(20));
        assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn joint_union_examples() {
        let b = binary();
        let caps = GenerationCapVector::new(alloc::vec![(0, 2), (1, 2)]).unwrap();
        assert_eq!(joint_union_prob(&b, &caps).unwrap(), 0.5);
        let g = geo3();
        for (n, r) in [(0u32, 3u64), (2, 5), (4, 1)] {
            let single = GenerationCapVector::new(alloc::vec![(n, r)]).unwrap();
            assert_relative_eq!(
                joint_union_prob(&g, &single).unwrap(),
                generation_pmf(&g, n, r),
                max_relative = 1e-14
            );
        }
        let caps = GenerationCapVector::new(alloc::vec![(1, 10), (3, 12)]).unwrap();
        let got = joint_union_prob(&g, &caps).unwrap();
        let want = 0.5 * g.pmf(10) + 0.125 * g.pmf(12);
        assert!((got / want - 1.0).abs() < 0.1, "{got} vs {want}");
        let far = GenerationCapVector::new(alloc::vec![(1, 30), (3, 32)]).unwrap();
        let got_far = joint_union_prob(&g, &far).unwrap();
        let want_far = 0.5 * g.pmf(30) + 0.125 * g.pmf(32);
        assert!((got_far / want_far - 1.0).abs() < (got / want - 1.0).abs());
    }

    #[test]
    fn cap_vector_validation() {
        assert_eq!(
            GenerationCapVector::new(alloc::vec![]),
            Err(Error::EmptyCaps)
        );
        assert_eq!(
            GenerationCapVector::new(alloc::vec![(2, 1), (2, 3)]),
            Err(Error::UnorderedGenerations)
        );
        let caps = GenerationCapVector::new(alloc::vec![(0, 0)]).unwrap();
        assert_eq!(joint_union_prob(&binary(), &caps), Err(Error::ZeroCap));
    }

    #[test]
    fn finite_dim_equals_local_bitwise() {
        let g = OffspringSpec::poisson(1.5).build().unwrap();
        for n in 0..5u32 {
            for r in 0..12 {
                let caps = alloc::vec![r; n as usize + 1];
                assert_eq!(
                    finite_dim_point(&g, &caps).unwrap(),
                    local_point(&g, n, Some(r))
                );
            }
        }
    }

    #[test]
    fn local_sequence_matches_points() {
        let g = geo3();
        for (n, x) in local_sequence(&g, 4).take(8).enumerate() {
            assert_eq!(x, local_point(&g, n as u32, Some(4)));
        }
    }

    #[test]
    fn table_rows_are_consistent() {
        let g = geo3();
        let t = local_table(&g, 3, 60);
        assert_eq!(t.rows.len(), 61);
        let mut prev = 0.0;
        for row in &t.rows {
            assert!(row.cdf >= prev);
            assert!((row.cdf + row.tail - 1.0).abs() < 1e-12);
            prev = row.cdf;
        }
        assert_eq!(t.precision_floor, None);
    }
}
