//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed. Criteria listed
//! in `KNOWN_FAILURES` cannot be met as stated; they are still evaluated in
//! full, and the run fails if one of them starts passing or any other
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use gwmaxdeg::family::{parse_family, BUILTIN};
use gwmaxdeg::parallel;
use gwmaxdeg_core::asymptotics::{
    critical_bounds_report, subcritical_global_ratio_table, supercritical_limits_report,
    RatioReport,
};
use gwmaxdeg_core::exact::{finite_dim_cdf, generation_pmf, local_cdf, local_pmf, local_sequence};
use gwmaxdeg_core::global::{
    fixed_point_residual, global_cdf, global_law, global_point, global_tail,
};
use gwmaxdeg_core::montecarlo::{summarize, width_report, SimConfig, Statistic};
use gwmaxdeg_core::{CdfPoint, OffspringDistribution, OffspringSpec, Truncation};

const KNOWN_FAILURES: [u32; 2] = [6, 8];

struct Outcome {
    passed: bool,
    detail: String,
}

fn law(text: &str) -> OffspringDistribution {
    parse_family(text).unwrap().build().unwrap()
}

fn builtins() -> Vec<(&'static str, OffspringDistribution)> {
    BUILTIN
        .iter()
        .map(|(name, text)| (*name, law(text)))
        .collect()
}

fn series_end(report: &RatioReport, name: &str) -> (f64, f64, usize) {
    let s = report
        .series(name)
        .unwrap_or_else(|| panic!("missing series {name}"));
    (
        s.rows.first().unwrap().ratio,
        s.rows.last().unwrap().ratio,
        s.verdict.violations,
    )
}

fn closed_form_fixed_points() -> Outcome {
    let binary = law("binary");
    let got: Vec<f64> = (0..=2).map(|r| global_cdf(&binary, r).unwrap()).collect();
    let want = [0.5, 0.5, 1.0];
    let binary_ok = got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12);
    let q = OffspringSpec::explicit([0.25, 0.0, 0.75])
        .build()
        .unwrap()
        .extinction_probability()
        .unwrap();
    let q_ok = (q - 1.0 / 3.0).abs() < 1e-12;
    Outcome {
        passed: binary_ok && q_ok,
        detail: format!("binary H = {got:?}, extinction of [1/4,0,3/4] = {q:.17}"),
    }
}

fn fixed_point_residuals() -> Outcome {
    let mut worst = 0.0f64;
    let mut spans = Vec::new();
    for (name, d) in builtins() {
        let law = global_law(&d, 1000).unwrap();
        let end = law.precision_floor.unwrap_or(1000);
        for row in &law.rows[..=end as usize] {
            let x = if row.tail < 0.5 {
                CdfPoint::from_tail(row.tail)
            } else {
                CdfPoint::from_cdf(row.cdf)
            };
            worst = worst.max(fixed_point_residual(&d, row.r, x));
        }
        spans.push(format!("{name}<={end}"));
    }
    Outcome {
        passed: worst < 1e-10,
        detail: format!("max residual {worst:.2e} over {}", spans.join(" ")),
    }
}

fn cap_consistency() -> Outcome {
    let mut bitwise = true;
    let mut worst_gap = 0.0f64;
    let mut increasing = 0usize;
    for (_, d) in builtins() {
        for n in 0..=6u32 {
            for r in 0..=20u64 {
                let caps = vec![r; n as usize + 1];
                bitwise &=
                    finite_dim_cdf(&d, &caps).unwrap().to_bits() == local_cdf(&d, n, r).to_bits();
            }
        }
        for r in 0..=20u64 {
            let (h, _) = global_point(&d, r).unwrap();
            let mut previous = f64::INFINITY;
            let mut gap = f64::INFINITY;
            for x in local_sequence(&d, r).take(2_000_000) {
                if x.cdf > previous {
                    increasing += 1;
                }
                previous = x.cdf;
                gap = (x.cdf - h.cdf).abs();
                if gap < 1e-9 {
                    break;
                }
            }
            worst_gap = worst_gap.max(gap);
        }
    }
    Outcome {
        passed: bitwise && increasing == 0 && worst_gap < 1e-8,
        detail: format!(
            "equal caps bitwise {bitwise}, increases {increasing}, terminal gap {worst_gap:.2e}"
        ),
    }
}

fn inequality_suite() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut cells = 0usize;
    for (_, d) in builtins() {
        let mu = d.mean();
        for n in 0..=6u32 {
            let sum: f64 = (0..=n).map(|i| mu.powi(i as i32)).sum();
            for r in 0..=100u64 {
                let p = d.pmf(r);
                worst = worst.max(generation_pmf(&d, n, r) - mu.powi(n as i32) * p);
                worst = worst.max(local_pmf(&d, n, r) - sum * p);
                cells += 2;
            }
        }
    }
    Outcome {
        passed: worst < 1e-12,
        detail: format!("{cells} cells, worst excess {worst:.2e}"),
    }
}

fn subcritical_law() -> Outcome {
    let d = law("geometric:0.3333333333333333");
    let report = subcritical_global_ratio_table(&d, 1..=1000).unwrap();
    let (_, pq, _) = series_end(&report, "p_r/q_r");
    let (_, fh, _) = series_end(&report, "F/H");
    Outcome {
        passed: (pq - 0.5).abs() < 0.01 && (fh - 0.5).abs() < 0.01,
        detail: format!(
            "window end r={}: p_r/q_r = {pq:.6}, F/H = {fh:.6}",
            report.series("F/H").unwrap().rows.last().unwrap().r
        ),
    }
}

fn critical_bounds() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for (text, r_max, infinite_variance) in [
        ("critical-power-law:3", 400, true),
        ("geometric:0.5", 1000, false),
    ] {
        let d = law(text);
        let report = critical_bounds_report(&d, 1..=r_max).unwrap();
        let (_, _, v1) = series_end(&report, "q_r*T/p_r");
        let (_, _, v2) = series_end(&report, "H*T/F");
        let (g0, g1, _) = series_end(&report, "q_r/p_r");
        let bounds = v1 == 0 && v2 == 0;
        let growth = g1 >= 10.0 * g0;
        passed &= bounds && growth;
        parts.push(format!(
            "{text}: bound violations {}, q_r/p_r {g0:.3e} -> {g1:.3e}",
            v1 + v2
        ));
        if infinite_variance {
            for name in ["q_r^2/p_r", "H^2/F"] {
                let (a, b, _) = series_end(&report, name);
                let ok = b < a && b < 0.01;
                passed &= ok;
                parts.push(format!("{name} {a:.4e} -> {b:.4e}"));
            }
        }
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn closing_remark_trend() -> Outcome {
    let d = law("critical-power-law:3");
    let at100 = 100.0 * global_tail(&d, 100).unwrap();
    let at400 = 400.0 * global_tail(&d, 400).unwrap();
    Outcome {
        passed: at400 < at100,
        detail: format!("r H(r): {at100:.6} at 100, {at400:.6} at 400"),
    }
}

fn supercritical_limits() -> Outcome {
    let d = law("poisson:1.5");
    let q = d.extinction_probability().unwrap();
    let constant = 1.0 - d.pgf_derivative(Truncation::Unbounded, q, 1).unwrap();
    let report = supercritical_limits_report(&d, 1..=60).unwrap();
    let end = report
        .series("p_r*q^(r-1)/q_r")
        .unwrap()
        .rows
        .last()
        .unwrap()
        .r;
    let gap = (global_cdf(&d, end).unwrap() - q).abs();
    let (_, ratio, _) = series_end(&report, "p_r*q^(r-1)/q_r");
    let (_, shifted, _) = series_end(&report, "p_r*q^r/q_r");
    let rel = (ratio / constant - 1.0).abs();
    Outcome {
        passed: gap < 1e-6 && rel < 0.02,
        detail: format!(
            "r={end}: |H - q| = {gap:.2e}, p_r q^(r-1)/q_r = {ratio:.5} vs 1 - G'(q) = {constant:.5} (off {:.1}%), p_r q^r/q_r = {shifted:.5}",
            100.0 * rel
        ),
    }
}

fn monte_carlo_oracle() -> Outcome {
    let mut statistics: Vec<Statistic> = (0..=4).map(Statistic::Generation).collect();
    statistics.extend((0..=4).map(Statistic::Local));
    statistics.push(Statistic::Global);
    let mut passed = true;
    let mut parts = Vec::new();
    for text in ["binary", "geometric:0.3333333333333333", "poisson:0.8"] {
        let d = law(text);
        let config = SimConfig::new(100_000, 42).with_statistics(statistics.clone());
        let tally = parallel::estimate(&d, &config, None).unwrap();
        let summary = summarize(&tally, config.r_max, Some(&d)).unwrap();
        let cells = summary.cells.iter().filter(|c| c.well_populated).count();
        let failing = summary.failing_cells(4.0).count();
        passed &= failing == 0 && cells > 0;
        parts.push(format!(
            "{text}: {cells} cells, max |z| {:.2}",
            summary.max_abs_z()
        ));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn width_bound() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for text in ["binary", "geometric:0.3333333333333333"] {
        let d = law(text);
        let mut config = SimConfig::new(1_000_000, 42);
        config.width_grid = vec![1, 2, 5, 10, 20, 50];
        let report = width_report(&parallel::estimate(&d, &config, None).unwrap());
        let worst = report
            .rows
            .iter()
            .map(|w| w.estimate - 3.0 * w.stderr - w.bound)
            .fold(f64::NEG_INFINITY, f64::max);
        passed &= report.violations() == 0;
        parts.push(format!("{text}: max(P - 3SE - 1/r) = {worst:.3e}"));
    }
    Outcome {
        passed,
        detail: parts.join("; "),
    }
}

fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let run = |threads: &str, dir: &tempfile::TempDir| {
        let path = dir.path().join("sim.json");
        let status = Command::new(env!("CARGO_BIN_EXE_gwmaxdeg"))
            .current_dir(dir.path())
            .args([
                "--threads",
                threads,
                "simulate",
                "--family",
                "poisson:0.8",
                "--trials",
                "50000",
                "--seed",
                "7",
            ])
            .args([
                "--target",
                "generation",
                "--target",
                "local",
                "--target",
                "global",
                "--target",
                "width",
            ])
            .args([
                "--horizon",
                "3",
                "--compare",
                "--format",
                "json",
                "--out",
                "sim.json",
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&path).unwrap()
    };
    let one = run("1", &dirs[0]);
    let many = run("4", &dirs[1]);
    let again = run("4", &dirs[2]);
    Outcome {
        passed: one == many && many == again,
        detail: format!(
            "{} bytes; 1 vs 4 threads identical {}, rerun identical {}",
            one.len(),
            one == many,
            many == again
        ),
    }
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (
            1,
            "closed-form fixed points",
            Duration::from_secs(1),
            closed_form_fixed_points,
        ),
        (
            2,
            "fixed-point residuals",
            Duration::from_secs(10),
            fixed_point_residuals,
        ),
        (
            3,
            "finite-dimensional and local consistency",
            Duration::from_secs(30),
            cap_consistency,
        ),
        (
            4,
            "pmf inequality suite",
            Duration::from_secs(30),
            inequality_suite,
        ),
        (
            5,
            "subcritical limit",
            Duration::from_secs(10),
            subcritical_law,
        ),
        (
            6,
            "critical bounds",
            Duration::from_secs(60),
            critical_bounds,
        ),
        (
            7,
            "tail trend for power law 3",
            Duration::from_secs(60),
            closing_remark_trend,
        ),
        (
            8,
            "supercritical limits",
            Duration::from_secs(10),
            supercritical_limits,
        ),
        (
            9,
            "Monte Carlo oracle",
            Duration::from_secs(120),
            monte_carlo_oracle,
        ),
        (10, "width bound", Duration::from_secs(120), width_bound),
        (11, "determinism", Duration::from_secs(60), determinism),
    ];
    let mut unexpected = Vec::new();
    for (id, name, budget, check) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let passed = outcome.passed && elapsed < budget;
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (passed, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id:>2} {tag:<12} {name}: {} [{:.2}s of {}s]",
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if passed == known {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
