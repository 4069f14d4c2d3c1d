//! Exact laws of `M_n` and `M_[0,n]` recomputed by forward convolution over
//! generation sizes, independently of generating-function composition.

use gwmaxdeg_core::exact::{generation_cdf, local_cdf, local_pmf};
use gwmaxdeg_core::global::global_cdf;
use gwmaxdeg_core::OffspringSpec;

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Law of the sum of `z` draws from `p`.
fn power(p: &[f64], z: usize) -> Vec<f64> {
    (0..z).fold(vec![1.0], |acc, _| convolve(&acc, p))
}

/// `v(z) = P[Z_n = z, caps respected in generations 0..n]`, where generation
/// `i` draws from `p` restricted to `0..=caps[i]` (sub-probability).
fn constrained_sizes(p: &[f64], caps: &[Option<usize>]) -> Vec<f64> {
    let mut sizes = vec![0.0, 1.0];
    for cap in caps {
        let step: Vec<f64> = p
            .iter()
            .enumerate()
            .map(|(k, &x)| if cap.is_none_or(|c| k <= c) { x } else { 0.0 })
            .collect();
        let mut next = vec![0.0];
        for (z, &w) in sizes.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let law = power(&step, z);
            if next.len() < law.len() {
                next.resize(law.len(), 0.0);
            }
            for (y, &m) in law.iter().enumerate() {
                next[y] += w * m;
            }
        }
        sizes = next;
    }
    sizes
}

fn cdf_within(p: &[f64], r: usize) -> f64 {
    p.iter().take(r + 1).sum()
}

fn oracle_generation(p: &[f64], n: usize, r: usize) -> f64 {
    let sizes = constrained_sizes(p, &vec![None; n]);
    let f = cdf_within(p, r);
    sizes
        .iter()
        .enumerate()
        .map(|(z, &w)| w * f.powi(z as i32))
        .sum()
}

fn oracle_local(p: &[f64], n: usize, r: usize) -> f64 {
    let sizes = constrained_sizes(p, &vec![Some(r); n]);
    let f = cdf_within(p, r);
    sizes
        .iter()
        .enumerate()
        .map(|(z, &w)| w * f.powi(z as i32))
        .sum()
}

const LAWS: [&[f64]; 4] = [
    &[0.5, 0.0, 0.5],
    &[0.2, 0.3, 0.4, 0.1],
    &[0.25, 0.0, 0.75],
    &[0.6, 0.25, 0.1, 0.05],
];

#[test]
fn generation_law_matches_convolution() {
    for p in LAWS {
        let d = OffspringSpec::explicit(p).build().unwrap();
        for n in 0..=4u32 {
            for r in 0..p.len() as u64 {
                let want = oracle_generation(p, n as usize, r as usize);
                let got = generation_cdf(&d, n, r);
                assert!(
                    (got - want).abs() < 1e-13,
                    "{p:?} n {n} r {r}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn local_law_matches_convolution() {
    for p in LAWS {
        let d = OffspringSpec::explicit(p).build().unwrap();
        for n in 0..=4u32 {
            for r in 0..p.len() as u64 {
                let want = oracle_local(p, n as usize, r as usize);
                let got = local_cdf(&d, n, r);
                assert!(
                    (got - want).abs() < 1e-13,
                    "{p:?} n {n} r {r}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn local_pmf_matches_convolution_differences() {
    let p = LAWS[1];
    let d = OffspringSpec::explicit(p).build().unwrap();
    for r in 1..p.len() as u64 {
        let want = oracle_local(p, 3, r as usize) - oracle_local(p, 3, r as usize - 1);
        assert!((local_pmf(&d, 3, r) - want).abs() < 1e-13);
    }
}

#[test]
fn subcritical_global_is_limit_of_convolution() {
    let p = LAWS[3];
    let d = OffspringSpec::explicit(p).build().unwrap();
    for r in 0..3 {
        let deep = oracle_local(p, 9, r);
        let got = global_cdf(&d, r as u64).unwrap();
        assert!(got <= deep + 1e-15);
        assert!(deep - got < 1e-4, "r {r}: {deep} vs {got}");
    }
}
