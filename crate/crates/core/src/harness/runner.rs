//! Execution of the solver × experiment × run grid on a worker pool.
//!
//! Workers pull jobs in grid order and send results to the calling thread,
//! which holds them in a reorder buffer and appends them to the store in
//! grid order. A store left behind by an interrupted run is resumed by
//! skipping the keys it already holds, so the final file does not depend on
//! the number of workers or on interruptions.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::CaseStudyConfig;
use super::designs::{Design, DesignSet};
use super::format::write_json_line;
use super::seed::{fnv1a, run_seed};
use super::store::{RecordKey, RunStore, StoreMeta};
use crate::bo::{run_bo, BenchmarkHandle, RunRecord, SolverKind, SolverSettings};
use crate::error::{Error, Result};

pub type ProgressFn<'a> = dyn Fn(&RunRecord) + Sync + 'a;

#[derive(Default)]
pub struct RunOptions<'a> {
    /// Worker threads; 0 means one.
    pub workers: usize,
    /// Stop after appending this many jobs (simulates an interruption).
    pub stop_after_jobs: Option<usize>,
    pub progress: Option<&'a ProgressFn<'a>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    /// Records appended by this call.
    pub written: usize,
    /// Records already present in the store.
    pub existing: usize,
    /// Records in the complete grid.
    pub total: usize,
    pub complete: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Job {
    experiment: usize,
    solver: SolverKind,
    run: usize,
}

/// Keys of one job's output: the executed run plus its bookkeeping copies.
fn job_keys(config: &CaseStudyConfig, job: &Job) -> Vec<RecordKey> {
    let key = |run| RecordKey {
        case_study: config.case_study().to_string(),
        experiment: job.experiment,
        solver: job.solver,
        run,
    };
    if config.executed_runs(job.solver) < config.runs_per_experiment {
        (0..config.runs_per_experiment).map(key).collect()
    } else {
        vec![key(job.run)]
    }
}

fn grid(config: &CaseStudyConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for experiment in 0..config.n_experiments {
        for &solver in &config.solvers {
            for run in 0..config.executed_runs(solver) {
                jobs.push(Job {
                    experiment,
                    solver,
                    run,
                });
            }
        }
    }
    jobs
}

fn designs_digest(designs: &[Design]) -> Result<u64> {
    let mut buf = Vec::new();
    for d in designs {
        write_json_line(&mut buf, d)?;
    }
    Ok(fnv1a(&buf))
}

struct Ctx<'a> {
    config: &'a CaseStudyConfig,
    bench: &'a BenchmarkHandle,
    designs: &'a [Design],
    settings: SolverSettings,
}

fn execute(ctx: &Ctx<'_>, job: &Job) -> Result<Vec<RunRecord>> {
    let c = ctx.config;
    let seed = run_seed(c.seed, c.case_study(), job.experiment, job.solver, job.run);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rec = run_bo(
        ctx.bench,
        &ctx.designs[job.experiment].points,
        job.solver,
        &c.kappa,
        &c.tc,
        &mut rng,
        &ctx.settings,
    )?;
    rec.case_study = c.case_study().to_string();
    rec.experiment = job.experiment;
    rec.run = job.run;
    let mut out = vec![rec];
    if c.executed_runs(job.solver) < c.runs_per_experiment {
        for run in 1..c.runs_per_experiment {
            let mut copy = out[0].clone();
            copy.run = run;
            copy.replicated = true;
            out.push(copy);
        }
    }
    Ok(out)
}

/// Runs the case study into `store_path`, resuming an existing store.
pub fn run_case_study(
    config: &CaseStudyConfig,
    designs: &DesignSet,
    store_path: &Path,
    opts: &RunOptions<'_>,
) -> Result<RunSummary> {
    config.validate()?;
    if designs.meta.benchmark != config.benchmark {
        return Err(Error::config(
            "benchmark",
            format!(
                "designs were generated for {}, configuration uses {}",
                designs.meta.benchmark, config.benchmark
            ),
        ));
    }
    if designs.meta.n != config.n_init {
        return Err(Error::config(
            "n-init",
            format!("designs have {} points, configuration expects {}", designs.meta.n, config.n_init),
        ));
    }
    if designs.designs.len() < config.n_experiments {
        return Err(Error::config(
            "n-experiments",
            format!(
                "configuration needs {} designs, file holds {}",
                config.n_experiments,
                designs.designs.len()
            ),
        ));
    }
    let used = &designs.designs[..config.n_experiments];
    let meta = StoreMeta {
        case_study: config.case_study().to_string(),
        config: config.clone(),
        designs_digest: designs_digest(used)?,
    };
    let bench = config.handle()?;

    let existing: BTreeSet<RecordKey> = match std::fs::read_to_string(store_path) {
        Ok(text) => {
            let store = RunStore::parse(&text, true)?;
            if store.meta != meta {
                return Err(Error::config(
                    "store",
                    format!(
                        "{} was produced by a different configuration or design set",
                        store_path.display()
                    ),
                ));
            }
            let valid = text.rfind('\n').map_or(0, |i| i + 1);
            if valid < text.len() {
                OpenOptions::new()
                    .write(true)
                    .open(store_path)?
                    .set_len(valid as u64)?;
            }
            store.keys()
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            std::fs::write(store_path, RunStore::preamble(&meta)?)?;
            BTreeSet::new()
        }
        Err(e) => return Err(e.into()),
    };

    let all_jobs = grid(config);
    let total: usize = all_jobs.iter().map(|j| job_keys(config, j).len()).sum();
    let jobs: Vec<Job> = all_jobs
        .into_iter()
        .filter(|j| job_keys(config, j).iter().any(|k| !existing.contains(k)))
        .collect();

    let ctx = Ctx {
        config,
        bench: &bench,
        designs: used,
        settings: config.solver_settings(),
    };
    let mut file = OpenOptions::new().append(true).open(store_path)?;
    let next = AtomicUsize::new(0);
    let cancel = AtomicBool::new(false);
    let workers = opts.workers.max(1);
    let mut written = 0;
    let mut jobs_done = 0;
    let mut failure: Option<Error> = None;

    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, Result<Vec<RunRecord>>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (ctx, jobs, next, cancel) = (&ctx, &jobs, &next, &cancel);
            scope.spawn(move || loop {
                if cancel.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                if tx.send((i, execute(ctx, job))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut to_write = 0;
        'recv: for (i, out) in rx {
            pending.insert(i, out);
            while let Some(out) = pending.remove(&to_write) {
                let result = out.and_then(|recs| {
                    let mut buf = Vec::new();
                    let mut n = 0;
                    for r in recs.iter().filter(|r| !existing.contains(&RecordKey::of(r))) {
                        write_json_line(&mut buf, r)?;
                        if let Some(p) = opts.progress {
                            p(r);
                        }
                        n += 1;
                    }
                    file.write_all(&buf)?;
                    file.flush()?;
                    Ok(n)
                });
                match result {
                    Ok(n) => written += n,
                    Err(e) => {
                        failure = Some(e);
                        cancel.store(true, Ordering::Relaxed);
                        break 'recv;
                    }
                }
                to_write += 1;
                jobs_done += 1;
                if opts.stop_after_jobs.is_some_and(|k| jobs_done >= k) {
                    cancel.store(true, Ordering::Relaxed);
                    break 'recv;
                }
            }
        }
    });

    if let Some(e) = failure {
        return Err(e);
    }
    Ok(RunSummary {
        written,
        existing: existing.len(),
        total,
        complete: existing.len() + written == total,
    })
}
