//! Command bodies. Each turns a manifest into the exact bytes of its output.

use std::fmt::Write as _;

use gwmaxdeg_core::asymptotics::{self, Bound, Claim, RatioReport};
use gwmaxdeg_core::exact::{generation_table, local_table, DistTable};
use gwmaxdeg_core::global::global_law;
use gwmaxdeg_core::montecarlo::{
    summarize, width_report, Cell, CellKind, SimConfig, SimSummary, Statistic, WidthReport,
};
use gwmaxdeg_core::OffspringDistribution;
use serde::Serialize;

use crate::manifest::{csv_header, Format, Regime, Request, RunManifest, SimTarget, TableTarget};
use crate::output::{num, opt};
use crate::{parallel, CliError};

/// |z| at or above this on a well-populated cell fails a comparison.
pub const Z_THRESHOLD: f64 = 4.0;

/// A command's output together with the error it should exit with after the
/// output has been written.
#[derive(Debug)]
pub struct Rendered {
    pub content: String,
    pub status: Option<CliError>,
}

impl Rendered {
    fn ok(content: String) -> Self {
        Self {
            content,
            status: None,
        }
    }
}

/// Runs the request recorded in `manifest`. `threads` only affects speed.
pub fn render(manifest: &RunManifest, threads: Option<usize>) -> Result<Rendered, CliError> {
    let dist = manifest.request.spec().resolve()?.build()?;
    match &manifest.request {
        Request::Dist {
            target,
            horizon,
            r_max,
            ..
        } => {
            let table = match target {
                TableTarget::Generation => generation_table(&dist, *horizon, *r_max),
                TableTarget::Local => local_table(&dist, *horizon, *r_max),
            };
            Ok(Rendered::ok(dist_output(
                manifest, *target, *horizon, &table,
            )))
        }
        Request::Global { r_max, .. } => global_output(manifest, &dist, *r_max).map(Rendered::ok),
        Request::Ratios {
            regime,
            horizon,
            r_min,
            r_max,
            ..
        } => {
            if r_min > r_max {
                return Err(CliError::Spec("--rmin exceeds --rmax".into()));
            }
            let range = *r_min..=*r_max;
            let report = match regime {
                Regime::Generation => asymptotics::generation_ratio_table(&dist, *horizon, range),
                Regime::Local => asymptotics::local_ratio_table(&dist, *horizon, range),
                Regime::Subcritical => asymptotics::subcritical_global_ratio_table(&dist, range),
                Regime::Critical => asymptotics::critical_bounds_report(&dist, range),
                Regime::Supercritical => asymptotics::supercritical_limits_report(&dist, range),
            }?;
            let violations = report.bound_violations();
            Ok(Rendered {
                content: ratios_output(manifest, &report),
                status: (violations > 0).then_some(CliError::BoundViolation(violations)),
            })
        }
        Request::Simulate { .. } => simulate(manifest, &dist, threads),
    }
}

fn finish_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct TableRow {
    r: u64,
    cdf: f64,
    pmf: f64,
    tail: f64,
}

fn dist_output(
    manifest: &RunManifest,
    target: TableTarget,
    horizon: u32,
    table: &DistTable,
) -> String {
    match manifest.format {
        Format::Csv => {
            let mut s = csv_header(manifest);
            s.push_str("r,cdf,pmf,tail\n");
            for row in &table.rows {
                writeln!(
                    s,
                    "{},{},{},{}",
                    row.r,
                    num(row.cdf),
                    num(row.pmf),
                    num(row.tail)
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                manifest: &'a RunManifest,
                target: TableTarget,
                horizon: u32,
                precision_floor: Option<u64>,
                rows: Vec<TableRow>,
            }
            finish_json(&Out {
                manifest,
                target,
                horizon,
                precision_floor: table.precision_floor,
                rows: table
                    .rows
                    .iter()
                    .map(|x| TableRow {
                        r: x.r,
                        cdf: x.cdf,
                        pmf: x.pmf,
                        tail: x.tail,
                    })
                    .collect(),
            })
        }
    }
}

fn global_output(
    manifest: &RunManifest,
    dist: &OffspringDistribution,
    r_max: u64,
) -> Result<String, CliError> {
    let law = global_law(dist, r_max)?;
    Ok(match manifest.format {
        Format::Csv => {
            let mut s = csv_header(manifest);
            s.push_str("r,cdf,pmf,tail,iterations,residual,limit_mass_at_infinity\n");
            for row in &law.rows {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    row.r,
                    num(row.cdf),
                    num(row.pmf),
                    num(row.tail),
                    row.diagnostics.iterations,
                    num(row.diagnostics.residual),
                    num(law.limit_mass_at_infinity)
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                r: u64,
                cdf: f64,
                pmf: f64,
                tail: f64,
                iterations: u32,
                residual: f64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                manifest: &'a RunManifest,
                limit_mass_at_infinity: f64,
                precision_floor: Option<u64>,
                rows: Vec<Row>,
            }
            finish_json(&Out {
                manifest,
                limit_mass_at_infinity: law.limit_mass_at_infinity,
                precision_floor: law.precision_floor,
                rows: law
                    .rows
                    .iter()
                    .map(|x| Row {
                        r: x.r,
                        cdf: x.cdf,
                        pmf: x.pmf,
                        tail: x.tail,
                        iterations: x.diagnostics.iterations,
                        residual: x.diagnostics.residual,
                    })
                    .collect(),
            })
        }
    })
}

fn claim_parts(claim: Claim) -> (&'static str, Option<f64>) {
    match claim {
        Claim::Limit(c) => ("limit", Some(c)),
        Claim::Diverges => ("diverges", None),
        Claim::LimsupAtMost(c) => ("limsup_at_most", Some(c)),
        Claim::LiminfAtLeast(c) => ("liminf_at_least", Some(c)),
        Claim::BoundOnly => ("bound_only", None),
    }
}

fn bound_parts(bound: Option<Bound>) -> (Option<&'static str>, Option<f64>) {
    match bound {
        Some(Bound::AtMost(c)) => (Some("at_most"), Some(c)),
        Some(Bound::AtLeast(c)) => (Some("at_least"), Some(c)),
        None => (None, None),
    }
}

#[derive(Serialize)]
struct VerdictJson {
    series: &'static str,
    claim: &'static str,
    constant: Option<f64>,
    bound: Option<&'static str>,
    bound_constant: Option<f64>,
    start: f64,
    end: f64,
    start_deviation: f64,
    end_deviation: f64,
    max_deviation: f64,
    last_half_max: f64,
    violations: usize,
    worst_violation: f64,
    passed: bool,
}

fn verdicts(report: &RatioReport) -> Vec<VerdictJson> {
    report
        .series
        .iter()
        .map(|s| {
            let (claim, constant) = claim_parts(s.claim);
            let (bound, bound_constant) = bound_parts(s.bound);
            let v = &s.verdict;
            VerdictJson {
                series: s.name,
                claim,
                constant,
                bound,
                bound_constant,
                start: v.start,
                end: v.end,
                start_deviation: v.start_deviation,
                end_deviation: v.end_deviation,
                max_deviation: v.max_deviation,
                last_half_max: v.last_half_max,
                violations: v.violations,
                worst_violation: v.worst_violation,
                passed: v.passed,
            }
        })
        .collect()
}

fn regime_name(report: &RatioReport) -> String {
    use asymptotics::Regime as R;
    match report.regime {
        R::Generation(n) => format!("generation:{n}"),
        R::Local(n) => format!("local:{n}"),
        R::SubcriticalGlobal => "subcritical".into(),
        R::CriticalGlobal => "critical".into(),
        R::SupercriticalGlobal => "supercritical".into(),
    }
}

fn ratios_output(manifest: &RunManifest, report: &RatioReport) -> String {
    match manifest.format {
        Format::Csv => {
            let mut s = csv_header(manifest);
            s.push_str("series,r,numerator,denominator,ratio,bound_ok,constant\n");
            for series in &report.series {
                let constant = opt(claim_parts(series.claim).1);
                for row in &series.rows {
                    writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        series.name,
                        row.r,
                        num(row.numerator),
                        num(row.denominator),
                        num(row.ratio),
                        row.bound_ok,
                        constant
                    )
                    .unwrap();
                }
            }
            for v in verdicts(report) {
                writeln!(
                    s,
                    "# verdict: {}",
                    serde_json::to_string(&v).expect("verdict serializes")
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Row {
                r: u64,
                numerator: f64,
                denominator: f64,
                ratio: f64,
                bound_ok: bool,
            }
            #[derive(Serialize)]
            struct Series {
                verdict: VerdictJson,
                rows: Vec<Row>,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                manifest: &'a RunManifest,
                regime: String,
                constant_claimed: f64,
                precision_floor_r: Option<u64>,
                bound_violations: usize,
                series: Vec<Series>,
            }
            let series = report
                .series
                .iter()
                .zip(verdicts(report))
                .map(|(s, verdict)| Series {
                    verdict,
                    rows: s
                        .rows
                        .iter()
                        .map(|x| Row {
                            r: x.r,
                            numerator: x.numerator,
                            denominator: x.denominator,
                            ratio: x.ratio,
                            bound_ok: x.bound_ok,
                        })
                        .collect(),
                })
                .collect();
            finish_json(&Out {
                manifest,
                regime: regime_name(report),
                constant_claimed: report.constant_claimed,
                precision_floor_r: report.precision_floor_r,
                bound_violations: report.bound_violations(),
                series,
            })
        }
    }
}

/// The simulation config a `simulate` request describes.
pub fn sim_config(request: &Request) -> Option<SimConfig> {
    let Request::Simulate {
        trials,
        seed,
        targets,
        horizon,
        r_max,
        max_generations,
        max_population,
        width_grid,
        ..
    } = request
    else {
        return None;
    };
    let mut statistics = Vec::new();
    for target in targets {
        match target {
            SimTarget::Generation => statistics.extend((0..=*horizon).map(Statistic::Generation)),
            SimTarget::Local => statistics.extend((0..=*horizon).map(Statistic::Local)),
            SimTarget::Global => statistics.push(Statistic::Global),
            SimTarget::Width => {}
        }
    }
    statistics.sort();
    statistics.dedup();
    let mut config = SimConfig::new(*trials, *seed).with_statistics(statistics);
    config.r_max = *r_max;
    config.max_generations = *max_generations;
    config.max_population = *max_population;
    config.width_grid = if targets.contains(&SimTarget::Width) {
        width_grid.clone()
    } else {
        Vec::new()
    };
    Some(config)
}

fn statistic_name(statistic: Statistic) -> String {
    match statistic {
        Statistic::Generation(n) => format!("generation:{n}"),
        Statistic::Local(n) => format!("local:{n}"),
        Statistic::Global => "global".into(),
    }
}

fn kind_name(kind: CellKind) -> &'static str {
    match kind {
        CellKind::Cdf => "cdf",
        CellKind::Pmf => "pmf",
    }
}

#[derive(Serialize)]
struct SummaryJson {
    trials: u64,
    extinct: u64,
    censored: u64,
    censoring_rate: f64,
    conditional_on_extinction: bool,
    max_abs_z: Option<f64>,
    failing_cells: Option<usize>,
    width_violations: Option<usize>,
}

fn simulate(
    manifest: &RunManifest,
    dist: &OffspringDistribution,
    threads: Option<usize>,
) -> Result<Rendered, CliError> {
    let Request::Simulate {
        targets,
        compare,
        r_max,
        ..
    } = &manifest.request
    else {
        unreachable!("simulate called with another request");
    };
    if targets.is_empty() {
        return Err(CliError::Spec(
            "simulate needs at least one --target".into(),
        ));
    }
    let wants_width = targets.contains(&SimTarget::Width);
    if wants_width && dist.criticality().is_supercritical() {
        return Err(
            gwmaxdeg_core::Error::RegimeMismatch("width bound needs a (sub)critical law").into(),
        );
    }
    let config = sim_config(&manifest.request).expect("simulate request");
    let tally = parallel::estimate(dist, &config, threads)?;
    let summary = summarize(&tally, *r_max, compare.then_some(dist))?;
    let width = wants_width.then(|| width_report(&tally));

    let failing = compare.then(|| summary.failing_cells(Z_THRESHOLD).count());
    let width_violations = width.as_ref().map(WidthReport::violations);
    let info = SummaryJson {
        trials: summary.trials,
        extinct: summary.extinct,
        censored: summary.censored,
        censoring_rate: summary.censoring_rate,
        conditional_on_extinction: summary.conditional_on_extinction,
        max_abs_z: compare.then(|| summary.max_abs_z()),
        failing_cells: failing,
        width_violations,
    };
    let content = simulate_output(manifest, &summary, width.as_ref(), &info);
    let status = match (width_violations, failing) {
        (Some(w), _) if w > 0 => Some(CliError::BoundViolation(w)),
        (_, Some(f)) if f > 0 => Some(CliError::OracleDisagreement {
            count: f,
            threshold: Z_THRESHOLD,
        }),
        _ => None,
    };
    Ok(Rendered { content, status })
}

fn simulate_output(
    manifest: &RunManifest,
    summary: &SimSummary,
    width: Option<&WidthReport>,
    info: &SummaryJson,
) -> String {
    match manifest.format {
        Format::Csv => {
            let mut s = csv_header(manifest);
            writeln!(
                s,
                "# summary: {}",
                serde_json::to_string(info).expect("summary serializes")
            )
            .unwrap();
            s.push_str("target,kind,r,count,resolved,estimate,stderr,expected,z\n");
            for c in &summary.cells {
                writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    statistic_name(c.statistic),
                    kind_name(c.kind),
                    c.r,
                    c.count,
                    c.resolved,
                    num(c.estimate),
                    num(c.stderr),
                    opt(c.expected),
                    opt(c.z)
                )
                .unwrap();
            }
            for w in width.map(|w| w.rows.as_slice()).unwrap_or_default() {
                writeln!(
                    s,
                    "width,at_least,{},{},{},{},{},{},",
                    w.r,
                    w.count,
                    w.trials,
                    num(w.estimate),
                    num(w.stderr),
                    num(w.bound)
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            #[derive(Serialize)]
            struct CellJson {
                target: String,
                kind: &'static str,
                r: u64,
                count: u64,
                resolved: u64,
                estimate: f64,
                stderr: f64,
                expected: Option<f64>,
                z: Option<f64>,
                well_populated: bool,
            }
            #[derive(Serialize)]
            struct WidthJson {
                r: u64,
                count: u64,
                trials: u64,
                estimate: f64,
                stderr: f64,
                bound: f64,
                violated: bool,
                underpowered: bool,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                manifest: &'a RunManifest,
                summary: &'a SummaryJson,
                cells: Vec<CellJson>,
                width: Option<Vec<WidthJson>>,
            }
            let cell = |c: &Cell| CellJson {
                target: statistic_name(c.statistic),
                kind: kind_name(c.kind),
                r: c.r,
                count: c.count,
                resolved: c.resolved,
                estimate: c.estimate,
                stderr: c.stderr,
                expected: c.expected,
                z: c.z.filter(|z| z.is_finite()),
                well_populated: c.well_populated,
            };
            finish_json(&Out {
                manifest,
                summary: info,
                cells: summary.cells.iter().map(cell).collect(),
                width: width.map(|w| {
                    w.rows
                        .iter()
                        .map(|x| WidthJson {
                            r: x.r,
                            count: x.count,
                            trials: x.trials,
                            estimate: x.estimate,
                            stderr: x.stderr,
                            bound: x.bound,
                            violated: x.violated,
                            underpowered: x.underpowered,
                        })
                        .collect()
                }),
            })
        }
    }
}
