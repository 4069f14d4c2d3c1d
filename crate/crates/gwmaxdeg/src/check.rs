//! The invariant suite run by `gwmaxdeg check`.

use std::fmt;

use gwmaxdeg_core::asymptotics;
use gwmaxdeg_core::exact::{finite_dim_cdf, generation_pmf, local_cdf, local_pmf};
use gwmaxdeg_core::global::{fixed_point_residual, global_law, GlobalLaw};
use gwmaxdeg_core::montecarlo::{summarize, width_report, SimConfig, Statistic};
use gwmaxdeg_core::{CdfPoint, Criticality, OffspringDistribution, OffspringSpec};

use crate::family::{parse_family, BUILTIN};
use crate::{parallel, CliError};

const RESIDUAL_LIMIT: f64 = 1e-10;
const INEQUALITY_SLACK: f64 = 1e-12;
/// Trials below this count as a low-power run: the z threshold is widened
/// and passing results are reported as UNDERPOWERED.
const FULL_POWER_TRIALS: u64 = 10_000;
const GLOBAL_R_MAX: u64 = 100;
const SIM_R_MAX: u64 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Underpowered,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Underpowered => "UNDERPOWERED",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheckLine {
    pub family: String,
    pub invariant: &'static str,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<12} {:<22} {:<26} {}",
            self.status, self.family, self.invariant, self.detail
        )
    }
}

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub families: Vec<(String, OffspringSpec)>,
    pub trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Flips the sign of the linear term of `G_r` in the residual check.
    pub inject_fault: bool,
}

impl CheckOptions {
    pub fn builtin() -> Self {
        Self {
            families: BUILTIN
                .iter()
                .map(|(name, text)| {
                    (
                        name.to_string(),
                        parse_family(text).expect("builtin family"),
                    )
                })
                .collect(),
            trials: FULL_POWER_TRIALS,
            seed: 42,
            threads: None,
            inject_fault: false,
        }
    }
}

fn verdict(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn point(cdf: f64, tail: f64) -> CdfPoint {
    if tail < 0.5 {
        CdfPoint::from_tail(tail)
    } else {
        CdfPoint::from_cdf(cdf)
    }
}

fn trusted_end(law: &GlobalLaw) -> u64 {
    law.precision_floor.unwrap_or(law.rows.len() as u64 - 1)
}

struct Suite<'a> {
    family: &'a str,
    dist: &'a OffspringDistribution,
    options: &'a CheckOptions,
    lines: Vec<CheckLine>,
}

impl Suite<'_> {
    fn push(&mut self, invariant: &'static str, status: Status, detail: String) {
        self.lines.push(CheckLine {
            family: self.family.to_string(),
            invariant,
            status,
            detail,
        });
    }

    fn run(&mut self) {
        let d = self.dist;
        let k = d.prefix().len() as u64 - 1;
        let err = (d.cdf(k) + d.tail(k) - 1.0).abs();
        self.push(
            "pmf normalization",
            verdict(err < 1e-12),
            format!("|F + F̄ - 1| = {err:.1e}"),
        );

        let law = match global_law(d, GLOBAL_R_MAX) {
            Ok(law) => law,
            Err(e) => {
                self.push("global solver", Status::Fail, e.to_string());
                return;
            }
        };
        let end = trusted_end(&law);
        self.residuals(&law, end);
        self.inequalities();
        self.cap_consistency(&law);
        self.global_shape(&law, end);
        self.ratio_bounds(end);
        self.monte_carlo();
    }

    fn residuals(&mut self, law: &GlobalLaw, end: u64) {
        let d = self.dist;
        let p1 = d.pmf(1);
        let worst = law.rows[..=end as usize]
            .iter()
            .map(|row| {
                let x = point(row.cdf, row.tail);
                if self.options.inject_fault {
                    let image =
                        d.pgf_truncated(row.r, x.cdf).unwrap_or(f64::NAN) - 2.0 * p1 * x.cdf;
                    (image - x.cdf).abs()
                } else {
                    fixed_point_residual(d, row.r, x)
                }
            })
            .fold(
                0.0,
                |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) },
            );
        self.push(
            "fixed-point residual",
            verdict(worst < RESIDUAL_LIMIT),
            format!("max {worst:.2e} over r <= {end}"),
        );
    }

    fn inequalities(&mut self) {
        let d = self.dist;
        let mu = d.mean();
        let mut generation = 0.0f64;
        let mut local = 0.0f64;
        for n in 0..=6u32 {
            let geometric_sum: f64 = (0..=n).map(|i| mu.powi(i as i32)).sum();
            for r in 0..=30u64 {
                let p = d.pmf(r);
                generation = generation.max(generation_pmf(d, n, r) - mu.powi(n as i32) * p);
                local = local.max(local_pmf(d, n, r) - geometric_sum * p);
            }
        }
        self.push(
            "generation pmf bound",
            verdict(generation < INEQUALITY_SLACK),
            format!("worst excess {generation:.2e}"),
        );
        self.push(
            "local pmf bound",
            verdict(local < INEQUALITY_SLACK),
            format!("worst excess {local:.2e}"),
        );
        if d.criticality() == Criticality::Subcritical {
            let k = d.prefix().len() as u64;
            let lhs: f64 = (1..k).map(|r| r as f64 * d.pmf(r)).sum::<f64>() / (1.0 - mu);
            let rhs: f64 = match global_law(d, k) {
                Ok(law) => law.rows.iter().map(|x| x.r as f64 * x.pmf).sum(),
                Err(_) => f64::NAN,
            };
            self.push(
                "expectation bound",
                verdict(rhs <= lhs + INEQUALITY_SLACK),
                format!("{rhs:.6e} <= {lhs:.6e}"),
            );
        }
    }

    fn cap_consistency(&mut self, law: &GlobalLaw) {
        let d = self.dist;
        let mut equal = true;
        for n in 0..=4u32 {
            for r in 0..=10u64 {
                let caps = vec![r; n as usize + 1];
                equal &= finite_dim_cdf(d, &caps)
                    .is_ok_and(|x| x.to_bits() == local_cdf(d, n, r).to_bits());
            }
        }
        self.push(
            "equal caps give local",
            verdict(equal),
            "n <= 4, r <= 10, bitwise".into(),
        );

        let mut worst = 0.0f64;
        for row in law.rows.iter().take(21) {
            let mut previous = f64::INFINITY;
            for n in 0..=40u32 {
                let x = local_cdf(d, n, row.r);
                worst = worst.max(x - previous).max(row.cdf - x);
                previous = x;
            }
        }
        self.push(
            "local decreases to global",
            verdict(worst < INEQUALITY_SLACK),
            format!("worst reversal {worst:.2e}"),
        );
    }

    fn global_shape(&mut self, law: &GlobalLaw, end: u64) {
        let d = self.dist;
        let rows = &law.rows[..=end as usize];
        let monotone =
            rows.windows(2).all(|w| w[1].cdf >= w[0].cdf) && rows.iter().all(|x| x.pmf >= 0.0);
        self.push("global monotone", verdict(monotone), format!("r <= {end}"));
        if d.criticality().is_supercritical() {
            let q = d.extinction_probability().unwrap_or(f64::NAN);
            let expected = if d.is_bounded() { 0.0 } else { 1.0 - q };
            let mass_err = (law.limit_mass_at_infinity - expected).abs();
            let gap = match d.support_max() {
                Some(m) if m <= end => (rows[m as usize].cdf - 1.0).abs(),
                _ => (rows.last().expect("nonempty law").cdf - q).abs(),
            };
            self.push(
                "global completeness",
                verdict(mass_err < 1e-12 && gap < 1e-6),
                format!(
                    "mass at infinity {:.6e}, terminal gap {gap:.2e}",
                    law.limit_mass_at_infinity
                ),
            );
        } else {
            let worst = rows
                .iter()
                .skip(1)
                .map(|x| x.tail * x.r as f64)
                .fold(0.0, f64::max);
            self.push(
                "global completeness",
                verdict(worst <= 1.0 + INEQUALITY_SLACK),
                format!("max r·H̄(r) = {worst:.6}"),
            );
        }
    }

    fn ratio_bounds(&mut self, end: u64) {
        let d = self.dist;
        let mut violations = 0;
        let mut errors = Vec::new();
        for report in [
            asymptotics::generation_ratio_table(d, 2, 0..=30),
            asymptotics::local_ratio_table(d, 2, 0..=30),
        ] {
            match report {
                Ok(rep) => violations += rep.bound_violations(),
                Err(e) => errors.push(e.to_string()),
            }
        }
        if !d.is_bounded() && end >= 2 {
            let range = 1..=end;
            let report = match d.criticality() {
                Criticality::Subcritical => asymptotics::subcritical_global_ratio_table(d, range),
                Criticality::Critical => asymptotics::critical_bounds_report(d, range),
                Criticality::Supercritical => asymptotics::supercritical_limits_report(d, range),
            };
            match report {
                Ok(rep) => violations += rep.bound_violations(),
                Err(e) => errors.push(e.to_string()),
            }
        }
        let detail = if errors.is_empty() {
            format!("{violations} violated row(s)")
        } else {
            errors.join("; ")
        };
        self.push(
            "ratio bounds",
            verdict(violations == 0 && errors.is_empty()),
            detail,
        );
    }

    fn monte_carlo(&mut self) {
        let d = self.dist;
        let trials = self.options.trials;
        let full_power = trials >= FULL_POWER_TRIALS;
        let threshold = if full_power { 4.0 } else { 5.0 };
        let mut statistics: Vec<Statistic> = (0..=3).map(Statistic::Generation).collect();
        statistics.extend((0..=3).map(Statistic::Local));
        statistics.push(Statistic::Global);
        let mut config = SimConfig::new(trials, self.options.seed).with_statistics(statistics);
        config.r_max = SIM_R_MAX;
        let supercritical = d.criticality().is_supercritical();
        if supercritical {
            config.width_grid.clear();
        }
        let tally = match parallel::estimate(d, &config, self.options.threads) {
            Ok(t) => t,
            Err(e) => {
                self.push("monte carlo oracle", Status::Fail, e.to_string());
                return;
            }
        };
        match summarize(&tally, SIM_R_MAX, Some(d)) {
            Ok(summary) => {
                let failing = summary.failing_cells(threshold).count();
                let populated = summary.cells.iter().filter(|c| c.well_populated).count();
                let status = match (failing, populated, full_power) {
                    (0, 0, _) | (0, _, false) => Status::Underpowered,
                    (0, _, true) => Status::Pass,
                    _ => Status::Fail,
                };
                self.push(
                    "monte carlo oracle",
                    status,
                    format!(
                        "{trials} trials, {populated} cells, max |z| {:.2} (limit {threshold}), censoring {:.4}",
                        summary.max_abs_z(),
                        summary.censoring_rate
                    ),
                );
            }
            Err(e) => self.push("monte carlo oracle", Status::Fail, e.to_string()),
        }
        if !supercritical {
            let report = width_report(&tally);
            let violations = report.violations();
            let underpowered = report.rows.iter().any(|r| r.underpowered);
            let status = match (violations, underpowered) {
                (0, false) => Status::Pass,
                (0, true) => Status::Underpowered,
                _ => Status::Fail,
            };
            let detail = report
                .rows
                .iter()
                .map(|r| format!("P[W>={}]={:.4}", r.r, r.estimate))
                .collect::<Vec<_>>()
                .join(" ");
            self.push("width bound", status, detail);
        }
    }
}

/// Runs the suite over every family in `options`.
pub fn run(options: &CheckOptions) -> Vec<CheckLine> {
    let mut lines = Vec::new();
    for (name, spec) in &options.families {
        match spec.clone().build() {
            Ok(dist) => {
                let mut suite = Suite {
                    family: name,
                    dist: &dist,
                    options,
                    lines: Vec::new(),
                };
                suite.run();
                lines.extend(suite.lines);
            }
            Err(e) => lines.push(CheckLine {
                family: name.clone(),
                invariant: "valid law",
                status: Status::Fail,
                detail: e.to_string(),
            }),
        }
    }
    lines
}

/// The text printed by `check` and its exit status.
pub fn report(lines: &[CheckLine]) -> (String, Result<(), CliError>) {
    let mut out = String::new();
    for line in lines {
        out.push_str(&line.to_string());
        out.push('\n');
    }
    let failed = lines.iter().filter(|l| l.status == Status::Fail).count();
    if failed > 0 {
        out.push_str("failed invariants:\n");
        for line in lines.iter().filter(|l| l.status == Status::Fail) {
            out.push_str(&format!("  {}: {}\n", line.family, line.invariant));
        }
    }
    (
        out,
        if failed == 0 {
            Ok(())
        } else {
            Err(CliError::ChecksFailed(failed))
        },
    )
}
