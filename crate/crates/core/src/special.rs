//! Special functions used by the heavy-tailed offspring families.

use crate::sum::CompensatedSum;
use core::f64::consts::FRAC_PI_2;
use libm::{cosh, exp, expm1, log1p, pow, sinh};

/// `B_{2j} / (2j)!` for `j = 1..=6`.
const EULER_MACLAURIN: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// Terms below this index are summed directly; Euler-Maclaurin handles the rest.
const DIRECT_TERMS: u64 = 32;

/// Hurwitz zeta `sum_{k >= n} k^-s` for `s > 1` and integer `n >= 1`.
pub fn hurwitz_zeta(s: f64, n: u64) -> f64 {
    debug_assert!(s > 1.0);
    let start = n.max(1);
    let shift = start.max(DIRECT_TERMS);
    let mut acc = CompensatedSum::new();
    for k in start..shift {
        acc.add(pow(k as f64, -s));
    }
    let x = shift as f64;
    let xs = pow(x, -s);
    acc.add(x * xs / (s - 1.0));
    acc.add(0.5 * xs);
    // g^(2j-1)(x) = -(s)_{2j-1} x^{-s-2j+1}
    let mut rising = s;
    let mut xp = xs / x;
    for (j, b) in EULER_MACLAURIN.iter().enumerate() {
        acc.add(b * rising * xp);
        let m = (2 * j) as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        xp /= x * x;
    }
    acc.value()
}

/// Riemann zeta for `s > 1`.
pub fn zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1)
}

/// Double-exponential (tanh-sinh) quadrature of `f` over `[a, b]`.
///
/// Tolerates integrable endpoint singularities; `f` is never evaluated at
/// the endpoints themselves.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    const MAX_LEVEL: u32 = 9;
    const T_MAX: f64 = 6.0;
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = a + half;
    let mut sum = FRAC_PI_2 * f(mid);
    let mut h = 1.0;
    let mut estimate = 0.0;
    for level in 0..=MAX_LEVEL {
        let (first, stride) = if level == 0 { (1u32, 1u32) } else { (1, 2) };
        let mut k = first;
        loop {
            let t = k as f64 * h;
            if t > T_MAX {
                break;
            }
            let u = FRAC_PI_2 * sinh(t);
            let c = cosh(u);
            let w = FRAC_PI_2 * cosh(t) / (c * c);
            // distance from each endpoint, computed without cancellation
            let d = (b - a) / (exp(2.0 * u) + 1.0);
            if w == 0.0 || d == 0.0 {
                break;
            }
            sum += w * (f(a + d) + f(b - d));
            k += stride;
        }
        let next = h * sum * half;
        if level >= 3 && (next - estimate).abs() <= 1e-15 * next.abs() {
            return next;
        }
        estimate = next;
        h *= 0.5;
    }
    estimate
}

/// `sum_{k >= n} k^-alpha (1 - (1 - s)^k)` for `alpha > 2`, `n >= 1`, `s` in `[0, 1]`.
///
/// Terms are positive, so the result keeps full relative precision even when
/// `s` is far below machine epsilon.
pub fn power_complement_sum(alpha: f64, n: u64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let start = n.max(1);
    if s >= 1.0 {
        return hurwitz_zeta(alpha, start);
    }
    let log_keep = log1p(-s);
    let shift = start.max(2 * DIRECT_TERMS);
    let mut acc = CompensatedSum::new();
    for k in start..shift {
        acc.add(pow(k as f64, -alpha) * -expm1(k as f64 * log_keep));
    }
    let beta = -log_keep;
    let x = shift as f64;
    acc.add(complement_integral(alpha, beta, x));
    acc.add(0.5 * complement_derivative(alpha, beta, x, 0));
    for (j, b) in EULER_MACLAURIN.iter().enumerate() {
        acc.add(-b * complement_derivative(alpha, beta, x, 2 * j as u32 + 1));
    }
    acc.value()
}

/// `int_x^inf y^-alpha (1 - e^{-beta y}) dy`, via `y = x / t`.
fn complement_integral(alpha: f64, beta: f64, x: f64) -> f64 {
    let scale = pow(x, 1.0 - alpha);
    let bx = beta * x;
    let integrand = |t: f64| pow(t, alpha - 2.0) * -expm1(-bx / t);
    let body = if bx < 1.0 {
        tanh_sinh(integrand, 0.0, bx) + tanh_sinh(integrand, bx, 1.0)
    } else {
        tanh_sinh(integrand, 0.0, 1.0)
    };
    scale * body
}

/// m-th derivative of `y^-alpha (1 - e^{-beta y})` at `x` (Leibniz rule).
fn complement_derivative(alpha: f64, beta: f64, x: f64, m: u32) -> f64 {
    let decay = exp(-beta * x);
    let mut total = 0.0;
    let mut binom = 1.0;
    for i in 0..=m {
        let j = m - i;
        // (y^-alpha)^(j) = (-1)^j (alpha)_j x^{-alpha-j}
        let mut rising = 1.0;
        for l in 0..j {
            rising *= alpha + l as f64;
        }
        let power =
            if j.is_multiple_of(2) { 1.0 } else { -1.0 } * rising * pow(x, -alpha - j as f64);
        let other = if i == 0 {
            -expm1(-beta * x)
        } else {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            sign * pow(beta, i as f64) * decay
        };
        total += binom * power * other;
        binom = binom * (m - i) as f64 / (i + 1) as f64;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values: 40-digit mpmath (zeta, polylog).
    #[test]
    fn hurwitz_matches_reference() {
        assert!(rel(zeta(3.0), 1.202056903159594285399738161511449990765) < 1e-15);
        assert!(
            rel(
                hurwitz_zeta(2.0, 11),
                0.09516633568168574612220100690805592744016
            ) < 1e-15
        );
        assert!(
            rel(
                hurwitz_zeta(3.5, 100),
                4.050291654636812869212309571367145663495e-6
            ) < 1e-14
        );
        assert!(rel(zeta(2.2), 1.490543256506893395607972977055346372324) < 1e-14);
        assert!(
            rel(
                hurwitz_zeta(1.5, 7),
                0.7838877675183705690610265112132465931847
            ) < 1e-14
        );
    }

    #[test]
    fn quadrature_handles_endpoint_singularity() {
        // int_0^1 t^-1/2 dt = 2
        assert!(rel(tanh_sinh(|t| 1.0 / libm::sqrt(t), 0.0, 1.0), 2.0) < 1e-13);
        assert!(rel(tanh_sinh(|t| libm::sin(t), 0.0, core::f64::consts::PI), 2.0) < 1e-14);
    }

    #[test]
    fn complement_sum_matches_polylog_reference() {
        let cases = [
            (3.0, 64, 0.5, 0.0001239925610816426747490701720006360866596),
            (3.0, 64, 1e-3, 0.0000139037336422998730703555535592800335031),
            (3.0, 64, 1e-9, 1.574769732471279749200839894038688964146e-11),
            (3.0, 1, 0.25, 0.357631094297389836895393284162937104061),
            (2.5, 64, 1e-6, 2.486251976391334599371094382324238655302e-7),
            (4.0, 64, 0.02, 1.066487213144371131251013347825730528548e-6),
        ];
        for (a, n, s, want) in cases {
            let got = power_complement_sum(a, n, s);
            assert!(
                rel(got, want) < 1e-13,
                "alpha {a} n {n} s {s}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn complement_sum_endpoints() {
        assert_eq!(power_complement_sum(3.0, 1, 0.0), 0.0);
        assert!(rel(power_complement_sum(3.0, 1, 1.0), zeta(3.0)) < 1e-15);
    }
}
