//! Law of the global maximal out-degree `M`.
//!
//! `P[M <= r]` is the fixed point of `G_r(t) = t` reached by decreasing
//! iteration from `t = 1`. For `F̄(r) > 0` that fixed point is the unique
//! root in `[0, 1)` except when `p_0 = 0`, where it is `0`.
//!
//! The root is found with a safeguarded Newton iteration that keeps a sign
//! bracket. When the root lies above `1/2` the solve runs in the tail
//! variable `s = 1 - t` on `s = Ḡ_r(s)`, whose evaluation keeps full relative
//! precision for tails far below machine epsilon.

use alloc::vec::Vec;

use crate::exact::is_trusted;
use crate::offspring::{OffspringDistribution, OffspringSpec};
use crate::{CdfPoint, Error, Result};

pub const MAX_ITERATIONS: u32 = 200;
/// Largest accepted `|G_r(t) - t|` at a returned fixed point.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Negative pmf values above this are rounding noise and are clipped to zero.
pub const PMF_CLIP: f64 = -1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverDiagnostics {
    pub iterations: u32,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalRow {
    pub r: u64,
    /// `q_[0,r]`.
    pub cdf: f64,
    /// `q_r`.
    pub pmf: f64,
    /// `H̄(r)`.
    pub tail: f64,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalLaw {
    pub spec: OffspringSpec,
    pub rows: Vec<GlobalRow>,
    /// `P[M = ∞]`.
    pub limit_mass_at_infinity: f64,
    /// Largest `r` whose `q_r` is resolved above rounding noise, if the floor
    /// was reached inside the table.
    pub precision_floor: Option<u64>,
}

/// `|G_r(x) - x|`, measured on the side of `x` that is small.
pub fn fixed_point_residual(dist: &OffspringDistribution, r: u64, x: CdfPoint) -> f64 {
    let image = dist.apply_truncated(Some(r), x);
    if x.tail < 0.5 {
        (image.tail - x.tail).abs()
    } else {
        (image.cdf - x.cdf).abs()
    }
}

/// Newton iteration on a function positive left of its root and negative
/// right of it. `eval` returns the value and slope at a point.
///
/// Stops on a negligible step, a collapsed bracket, or once steps near the
/// root stop reducing `|value|`; the iterate with the smallest `|value|` wins.
fn bracketed_newton<F>(mut lo: f64, mut hi: f64, start: f64, eval: F) -> (f64, u32, bool)
where
    F: Fn(f64) -> (f64, f64),
{
    let mut x = start;
    let (mut best, mut best_value) = (start, f64::INFINITY);
    let mut last_step = f64::INFINITY;
    for iteration in 1..=MAX_ITERATIONS {
        let (value, slope) = eval(x);
        if value.abs() < best_value {
            (best, best_value) = (x, value.abs());
        } else if last_step <= 1e-8 * x.abs() {
            return (best, iteration, true);
        }
        if value == 0.0 {
            return (x, iteration, true);
        }
        if value > 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = x - value / slope;
        if !next.is_finite() || next < lo || next > hi {
            next = 0.5 * (lo + hi);
        }
        last_step = (next - x).abs();
        if next == x
            || last_step <= 4.0 * f64::EPSILON * x.abs()
            || hi - lo <= 4.0 * f64::EPSILON * hi
        {
            return (next, iteration, true);
        }
        x = next;
    }
    (best, MAX_ITERATIONS, false)
}

fn solve(dist: &OffspringDistribution, r: u64) -> Result<(CdfPoint, SolverDiagnostics)> {
    if dist.tail(r) == 0.0 {
        return Ok((
            CdfPoint::ONE,
            SolverDiagnostics {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    if dist.pmf(0) == 0.0 {
        return Ok((
            CdfPoint::ZERO,
            SolverDiagnostics {
                iterations: 0,
                residual: 0.0,
            },
        ));
    }
    let half = dist.apply_truncated(Some(r), CdfPoint::from_tail(0.5));
    let (point, iterations, converged) = if half.tail >= 0.5 {
        // Root at t <= 1/2: G_r(t) - t is convex, Newton from t = 0 climbs to it.
        let (t, it, ok) = bracketed_newton(0.0, 1.0, 0.0, |t| {
            let image = dist.apply_truncated(Some(r), CdfPoint::from_cdf(t));
            (image.cdf - t, dist.truncated_slope(r, t) - 1.0)
        });
        (CdfPoint::from_cdf(t), it, ok)
    } else {
        // Root at s < 1/2, and s >= F̄(r) because Ḡ_r >= F̄(r). Newton alone
        // only halves s while far from a tiny root, so the bracket is first
        // narrowed to a factor of two by bisecting log s.
        let excess = |s: f64| dist.tail_excess(r, s).0;
        let (mut lo, mut hi) = (dist.tail(r), 0.5);
        let mut narrowing = 0;
        while hi > 2.0 * lo && narrowing < MAX_ITERATIONS {
            let mid = libm::sqrt(lo) * libm::sqrt(hi);
            if excess(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            narrowing += 1;
        }
        // Ḡ_r(s) - s is concave, so Newton from the right descends to the root.
        let (s, it, ok) = bracketed_newton(lo, hi, hi, |s| dist.tail_excess(r, s));
        (CdfPoint::from_tail(s), narrowing + it, ok)
    };
    let residual = fixed_point_residual(dist, r, point);
    if !converged || !(residual < RESIDUAL_TOLERANCE) {
        return Err(Error::NoConvergence {
            iterations,
            iterate: point.cdf,
            residual,
        });
    }
    Ok((
        point,
        SolverDiagnostics {
            iterations,
            residual,
        },
    ))
}

/// `q_[0,r]` and `H̄(r)` together with solver diagnostics.
pub fn global_point(dist: &OffspringDistribution, r: u64) -> Result<(CdfPoint, SolverDiagnostics)> {
    solve(dist, r)
}

/// `q_[0,r] = P[M <= r]`.
pub fn global_cdf(dist: &OffspringDistribution, r: u64) -> Result<f64> {
    solve(dist, r).map(|(p, _)| p.cdf)
}

/// `H̄(r) = P[M > r]`, with relative precision for tiny tails.
pub fn global_tail(dist: &OffspringDistribution, r: u64) -> Result<f64> {
    solve(dist, r).map(|(p, _)| p.tail)
}

fn clip(pmf: f64) -> f64 {
    if (PMF_CLIP..0.0).contains(&pmf) {
        0.0
    } else {
        pmf
    }
}

/// `q_r = q_[0,r] - q_[0,r-1]`, with `q_0 = q_[0,0]`.
pub fn global_pmf(dist: &OffspringDistribution, r: u64) -> Result<f64> {
    let below = match r.checked_sub(1) {
        Some(prev) => solve(dist, prev)?.0,
        None => CdfPoint::ZERO,
    };
    let at = solve(dist, r)?.0;
    Ok(clip(at.mass_above(&below)))
}

/// `P[M = ∞]`: `1 - q` for unbounded supercritical laws, zero otherwise.
pub fn infinite_mass(dist: &OffspringDistribution) -> Result<f64> {
    if !dist.criticality().is_supercritical() || dist.is_bounded() {
        return Ok(0.0);
    }
    Ok(1.0 - dist.extinction_probability()?)
}

/// Law of `M` for `r = 0..=r_max`.
pub fn global_law(dist: &OffspringDistribution, r_max: u64) -> Result<GlobalLaw> {
    let mut rows = Vec::with_capacity(r_max as usize + 1);
    let mut below = CdfPoint::ZERO;
    let mut precision_floor = None;
    for r in 0..=r_max {
        let (at, diagnostics) = solve(dist, r)?;
        let pmf = clip(at.mass_above(&below));
        if precision_floor.is_none() && r > 0 && dist.pmf(r) > 0.0 && !is_trusted(pmf, &below) {
            precision_floor = Some(r - 1);
        }
        rows.push(GlobalRow {
            r,
            cdf: at.cdf,
            pmf,
            tail: at.tail,
            diagnostics,
        });
        below = at;
    }
    Ok(GlobalLaw {
        spec: dist.spec().clone(),
        rows,
        limit_mass_at_infinity: infinite_mass(dist)?,
        precision_floor,
    })
}
