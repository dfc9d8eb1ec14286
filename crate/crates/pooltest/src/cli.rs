//! Command-line front end: `design`, `estimate`, `sweep`, and
//! `compare-individual`. Data goes to the output file (or stdout for
//! `estimate`), diagnostics to stderr; a `<output>.manifest.json` sidecar
//! records how each file was produced.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::design::{self, LogDesignSpec, RangeSpec};
use crate::estimator::{estimate_variable_pool, OutcomeVector, PoolDesign, DEFAULT_TOLERANCE};
use crate::io::{self, FileFormat, RunManifest};
use crate::montecarlo::{self, SweepConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pooltest",
    version,
    about = "Design variable-size pool-testing batches, estimate prevalence from pool outcomes, \
             and evaluate estimator accuracy with seeded Monte Carlo sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Construct a geometric pool design from a spacing or a sample budget
    Design(DesignArgs),
    /// Maximum-likelihood prevalence estimate from recorded pool outcomes
    Estimate(EstimateArgs),
    /// Monte Carlo accuracy sweep over a prevalence grid
    Sweep(SweepArgs),
    /// Accuracy sweep for conventional individual testing (size-1 pools)
    CompareIndividual(CompareIndividualArgs),
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Smallest pool size
    #[arg(long, default_value_t = 1)]
    n0: u32,
    /// Geometric spacing between consecutive pool sizes (>= 1)
    #[arg(long, conflicts_with = "budget")]
    q: Option<f64>,
    /// Total sample budget; picks the largest spacing whose design fits
    #[arg(long)]
    budget: Option<u64>,
    /// Number of tests (pools) in the batch
    #[arg(long)]
    tests: usize,
    /// Lower end of the target prevalence range (enables range validation)
    #[arg(long)]
    p_min: Option<f64>,
    /// Upper end of the target prevalence range
    #[arg(long)]
    p_max: Option<f64>,
    /// Treat range-validation violations as errors instead of warnings
    #[arg(long)]
    strict: bool,
    /// Output file for the design
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: FileFormat,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Design file written by `design` (CSV or JSON)
    #[arg(long)]
    design: PathBuf,
    /// Outcome file with header `index,result` (results 0/1)
    #[arg(long, conflicts_with = "bits")]
    outcomes: Option<PathBuf>,
    /// Inline outcome bitstring, e.g. 0110 (1 = positive pool)
    #[arg(long)]
    bits: Option<String>,
    /// Bisection bracket-width tolerance
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Design file written by `design` (CSV or JSON)
    #[arg(long)]
    design: Option<PathBuf>,
    /// Individual-testing mode: a design of this many size-1 pools
    #[arg(long)]
    samples: Option<u32>,
    /// Smallest pool size of an inline geometric design
    #[arg(long)]
    n0: Option<u32>,
    /// Spacing of an inline geometric design
    #[arg(long)]
    q: Option<f64>,
    /// Number of tests of an inline geometric design
    #[arg(long)]
    tests: Option<usize>,
    #[command(flatten)]
    opts: SweepOpts,
}

#[derive(Debug, Args)]
struct CompareIndividualArgs {
    /// Number of individually tested samples
    #[arg(long)]
    samples: u32,
    #[command(flatten)]
    opts: SweepOpts,
}

#[derive(Debug, Args)]
struct SweepOpts {
    /// Lower end of the prevalence grid
    #[arg(long)]
    p_min: f64,
    /// Upper end of the prevalence grid
    #[arg(long)]
    p_max: f64,
    /// Exact number of log-spaced grid points (overrides --points-per-decade)
    #[arg(long)]
    points: Option<usize>,
    /// Grid density used when --points is not given
    #[arg(long, default_value_t = 30.0)]
    points_per_decade: f64,
    /// Monte Carlo repetitions per grid point
    #[arg(long, default_value_t = 10_000)]
    reps: u32,
    /// Seed for the reproducible generator
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Level of the empirical confidence interval
    #[arg(long, default_value_t = 0.95)]
    ci_level: f64,
    /// Output file for the report
    #[arg(long, short = 'o')]
    output: PathBuf,
    /// Output format: csv or json
    #[arg(long, default_value = "csv")]
    format: FileFormat,
    /// Worker threads for the sweep; defaults to rayon's choice, which
    /// honors RAYON_NUM_THREADS. The value never changes results.
    #[arg(long)]
    threads: Option<usize>,
}

impl std::fmt::Display for FileFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FileFormat::Csv => write!(f, "csv"),
            FileFormat::Json => write!(f, "json"),
        }
    }
}

/// Runs a parsed invocation to completion.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Design(args) => cmd_design(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::CompareIndividual(args) => cmd_compare_individual(args),
    }
}

fn cmd_design(args: DesignArgs) -> anyhow::Result<()> {
    let (q, design) = match (args.q, args.budget) {
        (Some(q), None) => {
            let spec = LogDesignSpec::new(args.n0, q, args.tests)?;
            (q, design::logarithmic_design(&spec)?)
        }
        (None, Some(budget)) => {
            let solution = design::solve_budget_q(args.n0, args.tests, budget)?;
            (solution.q, solution.design)
        }
        _ => bail!("specify exactly one of --q or --budget"),
    };

    let range = match (args.p_min, args.p_max) {
        (Some(p_min), Some(p_max)) => {
            Some(design::validate_range(&design, &RangeSpec::new(p_min, p_max)?))
        }
        (None, None) => None,
        _ => bail!("--p-min and --p-max must be given together"),
    };
    if let Some(report) = &range {
        if !report.is_ok() {
            for violation in report.violations() {
                eprintln!("warning: {violation}");
            }
            if args.strict {
                bail!("design fails range validation (--strict)");
            }
        }
    }

    io::write_design_file(&args.output, &design, Some(q), range.as_ref(), args.format)
        .with_context(|| format!("writing {}", args.output.display()))?;

    let mut manifest = RunManifest::new("design")
        .param("n0", args.n0)
        .param("tests", args.tests)
        .param("format", args.format)
        .param("strict", args.strict)
        .param("output", args.output.display());
    manifest = match (args.q, args.budget) {
        (Some(q), _) => manifest.param("q", q),
        (_, Some(budget)) => manifest.param("budget", budget).param("solved_q", q),
        _ => unreachable!(),
    };
    if let (Some(p_min), Some(p_max)) = (args.p_min, args.p_max) {
        manifest = manifest.param("p_min", p_min).param("p_max", p_max);
    }
    io::write_manifest(&args.output, &manifest)?;

    eprintln!(
        "wrote {} pools ({} samples, q = {}) to {}",
        design.tests(),
        design.total_samples(),
        io::format_sig(q, 9),
        args.output.display()
    );
    Ok(())
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<()> {
    let design = io::read_design_file(&args.design)
        .with_context(|| format!("reading design {}", args.design.display()))?;
    let (outcomes, source) = match (&args.outcomes, &args.bits) {
        (Some(path), None) => {
            let outcomes = io::read_outcomes_file(path)
                .with_context(|| format!("reading outcomes {}", path.display()))?;
            (outcomes, ("outcomes_file", path.display().to_string()))
        }
        (None, Some(bits)) => (
            OutcomeVector::from_bits(bits)?,
            ("bits", bits.clone()),
        ),
        _ => bail!("provide exactly one of --outcomes FILE or --bits STRING"),
    };

    let estimate = estimate_variable_pool(&design, &outcomes, args.tol)?;
    let manifest = RunManifest::new("estimate")
        .param("design_file", args.design.display())
        .param(source.0, source.1)
        .param("tol", args.tol);
    let record = serde_json::json!({
        "p_hat": io::round_sig(estimate.p_hat, 9),
        "at_boundary": estimate.at_boundary,
        "solver_iterations": estimate.solver_iterations,
        "residual": io::round_sig(estimate.residual, 9),
        "manifest": manifest,
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> anyhow::Result<()> {
    let inline = (args.n0, args.q, args.tests);
    let (design, source): (PoolDesign, Vec<(&str, String)>) =
        match (&args.design, args.samples, inline) {
            (Some(path), None, (None, None, None)) => {
                let design = io::read_design_file(path)
                    .with_context(|| format!("reading design {}", path.display()))?;
                (design, vec![("design_file", path.display().to_string())])
            }
            (None, Some(samples), (None, None, None)) => (
                PoolDesign::constant(1, samples as usize)?,
                vec![("samples", samples.to_string())],
            ),
            (None, None, (Some(n0), Some(q), Some(tests))) => {
                let design = design::logarithmic_design(&LogDesignSpec::new(n0, q, tests)?)?;
                (
                    design,
                    vec![
                        ("n0", n0.to_string()),
                        ("q", q.to_string()),
                        ("tests", tests.to_string()),
                    ],
                )
            }
            _ => bail!(
                "specify the design as --design FILE, --samples N, or all of --n0/--q/--tests"
            ),
        };
    run_accuracy("sweep", design, source, &args.opts)
}

fn cmd_compare_individual(args: CompareIndividualArgs) -> anyhow::Result<()> {
    let design = PoolDesign::constant(1, args.samples as usize)?;
    run_accuracy(
        "compare-individual",
        design,
        vec![("samples", args.samples.to_string())],
        &args.opts,
    )
}

fn run_accuracy(
    subcommand: &str,
    design: PoolDesign,
    source: Vec<(&str, String)>,
    opts: &SweepOpts,
) -> anyhow::Result<()> {
    let points = match opts.points {
        Some(points) => points,
        None => montecarlo::points_for_decades(opts.p_min, opts.p_max, opts.points_per_decade)?,
    };
    let grid = montecarlo::log_spaced_grid(opts.p_min, opts.p_max, points)?;
    let config = SweepConfig::new(design, grid, opts.reps, opts.seed)?
        .with_ci_level(opts.ci_level)?;

    let report = match opts.threads {
        None => montecarlo::run_sweep(&config)?,
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building thread pool")?
            .install(|| montecarlo::run_sweep(&config))?,
    };

    io::write_report_file(&opts.output, &report, opts.format)
        .with_context(|| format!("writing {}", opts.output.display()))?;

    let mut manifest = RunManifest::new(subcommand)
        .param("p_min", opts.p_min)
        .param("p_max", opts.p_max)
        .param("points", points)
        .param("reps", opts.reps)
        .param("ci_level", opts.ci_level)
        .param("format", opts.format)
        .param("output", opts.output.display())
        .seeded(opts.seed);
    for (key, value) in source {
        manifest = manifest.param(key, value);
    }
    if let Some(threads) = opts.threads {
        manifest = manifest.param("threads", threads);
    }
    io::write_manifest(&opts.output, &manifest)?;

    eprintln!(
        "wrote {} grid points x {} repetitions to {}",
        report.points.len(),
        opts.reps,
        opts.output.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_design_invocation() {
        let cli = Cli::try_parse_from([
            "pooltest", "design", "--n0", "1", "--q", "1.085", "--tests", "100", "-o",
            "design.csv",
        ])
        .unwrap();
        match cli.command {
            Command::Design(args) => {
                assert_eq!(args.n0, 1);
                assert_eq!(args.q, Some(1.085));
                assert_eq!(args.tests, 100);
                assert_eq!(args.format, FileFormat::Csv);
            }
            other => panic!("unexpected command {other:?}"),
        }
    }

    #[test]
    fn q_and_budget_conflict() {
        let result = Cli::try_parse_from([
            "pooltest", "design", "--q", "1.1", "--budget", "1000", "--tests", "50", "-o", "d.csv",
        ]);
        assert!(result.is_err());
    }

    #[test]
    fn sweep_accepts_json_format() {
        let cli = Cli::try_parse_from([
            "pooltest",
            "sweep",
            "--samples",
            "1000",
            "--p-min",
            "0.001",
            "--p-max",
            "0.5",
            "--reps",
            "10",
            "--seed",
            "7",
            "-o",
            "report.json",
            "--format",
            "json",
        ])
        .unwrap();
        match cli.command {
            Command::Sweep(args) => {
                assert_eq!(args.samples, Some(1000));
                assert_eq!(args.opts.format, FileFormat::Json);
                assert_eq!(args.opts.seed, 7);
            }
            other => panic!("unexpected command {other:?}"),
        }
    }
}
