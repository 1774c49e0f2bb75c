use std::path::PathBuf;
use std::process::ExitCode;

use bo_lab::benchmarks::BenchmarkId;
use bo_lab::bo::RunRecord;
use bo_lab::harness::{
    analyze, gen_designs, run_case_study, write_regret_csv, CaseStudyConfig, DesignSet, RunOptions,
    RunStore,
};
use bo_lab::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bo-inner-lab", version, about = "Compare inner acquisition solvers in Bayesian optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one Latin hypercube initial design per experiment.
    GenDesigns {
        #[arg(long)]
        benchmark: BenchmarkId,
        /// Points per design.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        experiments: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a case study, resuming an existing store.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        designs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides `seed` from the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `n-experiments` from the configuration.
        #[arg(long)]
        n_experiments: Option<usize>,
        /// Overrides `runs-per-experiment` from the configuration.
        #[arg(long)]
        runs_per_experiment: Option<usize>,
        /// Suppress per-run progress lines.
        #[arg(long)]
        quiet: bool,
    },
    /// Write the analysis report of a store.
    Analyze {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        regret_csv: Option<PathBuf>,
    },
    /// Write simple-regret curves of a store as CSV.
    Regret {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn progress(r: &RunRecord) {
    let outcome = match (&r.aborted, r.success) {
        (Some(reason), _) => format!("aborted: {reason}"),
        (None, true) => "success".to_string(),
        (None, false) => "failure".to_string(),
    };
    let copy = if r.replicated { " (copy)" } else { "" };
    eprintln!(
        "experiment {} {} run {}{copy}: {} iterations, best {:.6}, {outcome}",
        r.experiment, r.solver, r.run, r.iterations_to_termination, r.best_value
    );
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::GenDesigns {
            benchmark,
            n,
            experiments,
            seed,
            out,
        } => gen_designs(benchmark, n, experiments, seed)?.write(&out),
        Command::Run {
            config,
            designs,
            out,
            workers,
            seed,
            n_experiments,
            runs_per_experiment,
            quiet,
        } => {
            let mut cfg = CaseStudyConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = n_experiments {
                cfg.n_experiments = n;
            }
            if let Some(r) = runs_per_experiment {
                cfg.runs_per_experiment = r;
            }
            cfg.validate()?;
            let designs = DesignSet::read(&designs)?;
            let opts = RunOptions {
                workers,
                stop_after_jobs: None,
                progress: (!quiet).then_some(&progress as &(dyn Fn(&RunRecord) + Sync)),
            };
            let summary = run_case_study(&cfg, &designs, &out, &opts)?;
            eprintln!(
                "{} records written, {} already present, {} in the grid",
                summary.written, summary.existing, summary.total
            );
            Ok(())
        }
        Command::Analyze {
            store,
            out,
            regret_csv,
        } => {
            let store = RunStore::read(&store)?;
            analyze(&store)?.write(&out)?;
            if let Some(path) = regret_csv {
                write_regret_csv(&store, &path)?;
            }
            Ok(())
        }
        Command::Regret { store, out } => write_regret_csv(&RunStore::read(&store)?, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config { .. } | Error::Format { .. }) {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
