use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use eucfpp::commands::{geodesic_report, sample_snapshot};
use eucfpp::plot::emit_plots;
use eucfpp::results::write_file;
use eucfpp::{run_animals, run_experiment, verify_suite, HarnessError, Mutation, RunConfig, RunOptions, VerifySizes};
use eucfpp_core::estimators::{Estimator, Target};
use eucfpp_core::rng::MasterSeed;

#[derive(Parser, Debug)]
#[command(name = "eucfpp", version, about = "Euclidean first-passage percolation experiments")]
struct Cli {
    /// key = value configuration file; defaults apply to unset keys
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed, overriding the configuration
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads (default: available cores)
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR", default_value = "eucfpp-out")]
    out: PathBuf,
    /// Skip replicates already recorded in the output directory
    #[arg(long, global = true)]
    resume: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TargetArg {
    T,
    TPrime,
    TPp,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::T => Target::T,
            TargetArg::TPrime => Target::TPrime,
            TargetArg::TPp => Target::TPP,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MutationArg {
    PhiSign,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write an environment snapshot of one replicate
    Sample {
        /// Scale n (default: first configured n)
        #[arg(long)]
        n: Option<f64>,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        /// Snapshot the thinned process instead of the raw one
        #[arg(long)]
        thinned: bool,
    },
    /// Compute one geodesic and print its path and box statistics
    Geodesic {
        #[arg(long)]
        n: Option<f64>,
        #[arg(long, default_value_t = 0)]
        replicate: u64,
        #[arg(long, value_enum, default_value = "t-pp")]
        target: TargetArg,
    },
    /// Variance, equality-rate and tail estimators of the configuration
    Variance,
    /// Box influences and derivative sums
    Influence,
    /// Every configured estimator
    Run,
    /// Greedy and exact lattice animals under Poisson weights
    Animals,
    /// Deterministic and oracle-backed checks; exits nonzero on failure
    Verify {
        /// Reduced instance counts
        #[arg(long)]
        quick: bool,
        /// Inject a known defect (the suite must then fail)
        #[arg(long, value_enum, hide = true)]
        mutate: Option<MutationArg>,
    },
    /// SVG plots of a results CSV
    Plot {
        /// Results file (default: OUT/results.csv)
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.experiment.seed = MasterSeed(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Keeps the configured estimators of one family, or `fallback` when none are configured.
fn restrict(cfg: &mut RunConfig, family: &[Estimator], fallback: Estimator) {
    let kept: Vec<Estimator> = cfg.experiment.estimators.iter().copied().filter(|e| family.contains(e)).collect();
    cfg.experiment.estimators = if kept.is_empty() { vec![fallback] } else { kept };
}

fn options(cli: &Cli, command: &str) -> RunOptions {
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    RunOptions { workers, out: cli.out.clone(), resume: cli.resume, command: command.into() }
}

fn create_out(cli: &Cli) -> Result<(), HarnessError> {
    std::fs::create_dir_all(&cli.out).map_err(|e| HarnessError::io(&cli.out, e))
}

fn print_rows(outcome: &eucfpp::RunOutcome, out: &std::path::Path) {
    for r in &outcome.rows {
        if r.statistic == "tail_survival" {
            continue;
        }
        let se = r.stderr.map_or(String::new(), |s| format!(" +- {s:.4e}"));
        println!("n = {:<6} {:<22} {:.6e}{se}  {}", r.n, r.statistic, r.value, r.tags);
    }
    eprintln!("{} replicates computed, results in {}", outcome.computed, out.display());
}

fn run(cli: &Cli) -> Result<ExitCode, HarnessError> {
    match &cli.command {
        Command::Sample { n, replicate, thinned } => {
            let cfg = load_config(cli)?;
            let n = n.unwrap_or(cfg.experiment.n_values[0]);
            let text = sample_snapshot(&cfg, n, *replicate, *thinned)?;
            create_out(cli)?;
            let kind = if *thinned { "thinned" } else { "raw" };
            let path = cli.out.join(format!("snapshot_n{n}_r{replicate}_{kind}.txt"));
            write_file(&path, text.as_bytes())?;
            println!("{}", path.display());
        }
        Command::Geodesic { n, replicate, target } => {
            let cfg = load_config(cli)?;
            let n = n.unwrap_or(cfg.experiment.n_values[0]);
            let report = geodesic_report(&cfg, n, *replicate, (*target).into())?;
            print!("{}", report.text());
            create_out(cli)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_file(&cli.out.join("geodesic.json"), json.as_bytes())?;
        }
        Command::Variance | Command::Influence | Command::Run => {
            let mut cfg = load_config(cli)?;
            let name = match &cli.command {
                Command::Variance => {
                    restrict(&mut cfg, &[Estimator::Variance, Estimator::Equality, Estimator::Tails], Estimator::Variance);
                    "variance"
                }
                Command::Influence => {
                    restrict(&mut cfg, &[Estimator::Influence, Estimator::Derivatives], Estimator::Influence);
                    "influence"
                }
                _ => "run",
            };
            let outcome = run_experiment(&cfg, &options(cli, name))?;
            print_rows(&outcome, &cli.out);
        }
        Command::Animals => {
            let cfg = load_config(cli)?;
            let outcome = run_animals(&cfg, &options(cli, "animals"))?;
            print_rows(&outcome, &cli.out);
        }
        Command::Verify { quick, mutate } => {
            let seed = cli.seed.unwrap_or(1);
            let sizes = if *quick { VerifySizes::quick() } else { VerifySizes::full() };
            let mutation = mutate.map(|MutationArg::PhiSign| Mutation::PhiDerivativeSign);
            let report = verify_suite(&sizes, seed, mutation);
            for c in &report.checks {
                println!("{}", c.line());
            }
            let failed = report.checks.iter().filter(|c| !c.ok).count();
            println!("{} checks, {failed} failed, {:.1}s", report.checks.len(), report.seconds);
            if failed > 0 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Plot { csv } => {
            let csv = csv.clone().unwrap_or_else(|| cli.out.join("results.csv"));
            let written = emit_plots(&csv, &cli.out)?;
            if written.is_empty() {
                eprintln!("warning: {} holds no rows, no plots written", csv.display());
            }
            for p in written {
                println!("{}", p.display());
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
