use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gwmaxdeg::check::{self, CheckOptions};
use gwmaxdeg::commands::render;
use gwmaxdeg::family::{self, parse_family, SpecRecord};
use gwmaxdeg::manifest::{extract, Format, Regime, Request, RunManifest, SimTarget, TableTarget};
use gwmaxdeg::{output, parallel, CliError};
use gwmaxdeg_core::montecarlo::{DEFAULT_MAX_POPULATION, DEFAULT_WIDTH_GRID};

#[derive(Parser)]
#[command(
    name = "gwmaxdeg",
    version,
    about = "Maximal out-degree laws of Galton-Watson trees"
)]
struct Cli {
    /// Worker threads for simulations (default: GWMAXDEG_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LawArgs {
    /// Offspring law, e.g. geometric:0.5, poisson:1.5, critical-power-law:3, explicit:0.5,0,0.5.
    #[arg(long)]
    family: Option<String>,
    /// JSON file {"p": [...], "tail_tolerance": x}.
    #[arg(long)]
    pmf_file: Option<PathBuf>,
    #[arg(long)]
    tail_tolerance: Option<f64>,
}

impl LawArgs {
    fn record(&self) -> Result<SpecRecord, CliError> {
        let spec = family::resolve(
            self.family.as_deref(),
            self.pmf_file.as_deref(),
            self.tail_tolerance,
        )?;
        spec.clone().build()?;
        Ok(SpecRecord::new(&spec))
    }
}

#[derive(Args)]
struct OutArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Law of M_n or M_[0,n] for r = 0..=rmax.
    Dist {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_enum)]
        target: TableTarget,
        #[arg(long)]
        horizon: u32,
        #[arg(long)]
        rmax: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Law of the global maximum M with solver diagnostics.
    Global {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long)]
        rmax: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Asymptotic ratio tables and bound checks.
    Ratios {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_enum)]
        regime: Regime,
        /// Generation index for the generation and local regimes.
        #[arg(long, default_value_t = 1)]
        horizon: u32,
        #[arg(long, default_value_t = 1)]
        rmin: u64,
        #[arg(long)]
        rmax: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Monte Carlo estimates, optionally compared with the exact laws.
    Simulate {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Statistic to tally; repeatable. generation and local cover n = 0..=horizon.
        #[arg(long, value_enum, required = true)]
        target: Vec<SimTarget>,
        #[arg(long, default_value_t = 4)]
        horizon: u32,
        #[arg(long, default_value_t = 20)]
        rmax: u64,
        #[arg(long)]
        max_generations: Option<u32>,
        #[arg(long, default_value_t = DEFAULT_MAX_POPULATION)]
        max_population: u64,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_WIDTH_GRID)]
        width_grid: Vec<u64>,
        /// Compute z-scores against the exact laws; exit 5 if any |z| >= 4.
        #[arg(long)]
        compare: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the invariant suite over the builtin families or the given ones.
    Check {
        /// Family to check instead of the builtin set; repeatable.
        #[arg(long)]
        family: Vec<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Recompute an output file from its embedded manifest.
    Replay {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(
    manifest: &RunManifest,
    out: Option<&Path>,
    threads: Option<usize>,
) -> Result<(), CliError> {
    let rendered = render(manifest, threads)?;
    output::emit(out, &rendered.content)?;
    rendered.status.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.or_else(parallel::threads_from_env);
    let (request, out) = match cli.command {
        Command::Dist {
            law,
            target,
            horizon,
            rmax,
            out,
        } => (
            Request::Dist {
                spec: law.record()?,
                target,
                horizon,
                r_max: rmax,
            },
            out,
        ),
        Command::Global { law, rmax, out } => (
            Request::Global {
                spec: law.record()?,
                r_max: rmax,
            },
            out,
        ),
        Command::Ratios {
            law,
            regime,
            horizon,
            rmin,
            rmax,
            out,
        } => (
            Request::Ratios {
                spec: law.record()?,
                regime,
                horizon,
                r_min: rmin,
                r_max: rmax,
            },
            out,
        ),
        Command::Simulate {
            law,
            trials,
            seed,
            mut target,
            horizon,
            rmax,
            max_generations,
            max_population,
            width_grid,
            compare,
            out,
        } => {
            target.sort();
            target.dedup();
            let request = Request::Simulate {
                spec: law.record()?,
                trials,
                seed,
                targets: target,
                horizon,
                r_max: rmax,
                max_generations,
                max_population,
                width_grid,
                compare,
            };
            (request, out)
        }
        Command::Check {
            family,
            trials,
            seed,
            inject_fault,
        } => {
            let mut options = CheckOptions::builtin();
            if !family.is_empty() {
                options.families = family
                    .iter()
                    .map(|f| Ok((f.clone(), parse_family(f)?)))
                    .collect::<Result<_, CliError>>()?;
            }
            options.trials = trials;
            options.seed = seed;
            options.threads = threads;
            options.inject_fault = inject_fault;
            let (text, status) = check::report(&check::run(&options));
            output::emit(None, &text)?;
            return status;
        }
        Command::Replay { file, out } => {
            let content = std::fs::read_to_string(&file)?;
            let manifest = extract(&content)?;
            return emit(&manifest, out.as_deref(), threads);
        }
    };
    let manifest = RunManifest::new(request, out.format, out.out.as_deref());
    emit(&manifest, out.out.as_deref(), threads)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gwmaxdeg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
