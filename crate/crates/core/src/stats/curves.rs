//! Iteration statistics, success-versus-cap curves and simple-regret curves.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ttest::{paired_t_one_sided, TTest};
use super::{effective_records, mean, std_dev, StatsError};
use crate::bo::{RunRecord, SolverKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub solver: SolverKind,
    pub count: usize,
    pub mean: Option<f64>,
    /// Lower median for even counts.
    pub median: Option<f64>,
    /// Sample standard deviation.
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedIterationTest {
    pub a: SolverKind,
    pub b: SolverKind,
    /// Experiments where every compared solver succeeded at least once.
    pub experiments: Vec<usize>,
    pub mean_a: Vec<f64>,
    pub mean_b: Vec<f64>,
    pub test: TTest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapPoint {
    pub cap: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapCurve {
    pub solver: SolverKind,
    pub points: Vec<CapPoint>,
}

/// One row of the regret CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub solver: SolverKind,
    pub iteration: usize,
    pub mean_regret: f64,
    pub std_regret: f64,
}

fn solvers_in<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Vec<SolverKind> {
    let set: BTreeSet<SolverKind> = records.into_iter().map(|r| r.solver).collect();
    set.into_iter().collect()
}

/// Experiments in which each of `solvers` has at least one successful run.
pub fn joint_success_experiments(records: &[RunRecord], solvers: &[SolverKind]) -> Vec<usize> {
    let all: BTreeSet<usize> = records.iter().map(|r| r.experiment).collect();
    all.into_iter()
        .filter(|&e| {
            solvers.iter().all(|&s| {
                records
                    .iter()
                    .any(|r| r.experiment == e && r.solver == s && r.success)
            })
        })
        .collect()
}

fn lower_median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    Some(s[(s.len() - 1) / 2])
}

/// Iterations to termination per solver. With the filter on, only
/// successful runs from experiments where all of `solvers` succeeded at
/// least once are counted; with it off, every run is.
pub fn iteration_stats(
    records: &[RunRecord],
    solvers: &[SolverKind],
    joint_success_filter: bool,
) -> Vec<IterationStats> {
    let eff: Vec<RunRecord> = effective_records(records).cloned().collect();
    let keep: Option<BTreeSet<usize>> =
        joint_success_filter.then(|| joint_success_experiments(&eff, solvers).into_iter().collect());
    solvers
        .iter()
        .map(|&solver| {
            let v: Vec<f64> = eff
                .iter()
                .filter(|r| r.solver == solver)
                .filter(|r| match &keep {
                    Some(k) => r.success && k.contains(&r.experiment),
                    None => true,
                })
                .map(|r| r.iterations_to_termination as f64)
                .collect();
            IterationStats {
                solver,
                count: v.len(),
                mean: mean(&v),
                median: lower_median(&v),
                std: std_dev(&v, 1),
            }
        })
        .collect()
}

/// One-sided paired t-test that `a` needs more iterations than `b`, paired
/// by experiment over the joint-success experiments of `solvers`.
pub fn paired_iteration_test(
    records: &[RunRecord],
    a: SolverKind,
    b: SolverKind,
    solvers: &[SolverKind],
) -> Result<PairedIterationTest, StatsError> {
    let eff: Vec<RunRecord> = effective_records(records).cloned().collect();
    let experiments = joint_success_experiments(&eff, solvers);
    let per_exp = |s: SolverKind, e: usize| {
        let v: Vec<f64> = eff
            .iter()
            .filter(|r| r.solver == s && r.experiment == e && r.success)
            .map(|r| r.iterations_to_termination as f64)
            .collect();
        mean(&v).ok_or(StatsError::MissingCell {
            solver: s,
            experiment: e,
        })
    };
    let mean_a = experiments
        .iter()
        .map(|&e| per_exp(a, e))
        .collect::<Result<Vec<_>, _>>()?;
    let mean_b = experiments
        .iter()
        .map(|&e| per_exp(b, e))
        .collect::<Result<Vec<_>, _>>()?;
    let test = paired_t_one_sided(&mean_a, &mean_b)?;
    Ok(PairedIterationTest {
        a,
        b,
        experiments,
        mean_a,
        mean_b,
        test,
    })
}

/// Fraction of runs that succeeded within each iteration cap. Use
/// `usize::MAX` for an unlimited cap.
pub fn success_probability_vs_cap(records: &[RunRecord], caps: &[usize]) -> Vec<CapCurve> {
    let eff: Vec<&RunRecord> = effective_records(records).collect();
    solvers_in(eff.iter().copied())
        .into_iter()
        .map(|solver| {
            let runs: Vec<&&RunRecord> = eff.iter().filter(|r| r.solver == solver).collect();
            let points = caps
                .iter()
                .map(|&cap| {
                    let hits = runs
                        .iter()
                        .filter(|r| r.success && r.iterations_to_termination <= cap)
                        .count();
                    CapPoint {
                        cap,
                        probability: hits as f64 / runs.len() as f64,
                    }
                })
                .collect();
            CapCurve { solver, points }
        })
        .collect()
}

/// Mean and population standard deviation of the best-so-far regret per
/// iteration; iteration 0 is the initial design and shorter runs carry
/// their final value forward.
pub fn regret_curves(records: &[RunRecord], f_star: f64) -> Vec<RegretRow> {
    let eff: Vec<&RunRecord> = effective_records(records).collect();
    let mut rows = Vec::new();
    for solver in solvers_in(eff.iter().copied()) {
        let curves: Vec<Vec<f64>> = eff
            .iter()
            .filter(|r| r.solver == solver)
            .map(|r| r.best_so_far().into_iter().map(|b| b - f_star).collect())
            .collect();
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        for t in 0..len {
            let v: Vec<f64> = curves
                .iter()
                .map(|c| c[t.min(c.len() - 1)])
                .collect();
            rows.push(RegretRow {
                solver,
                iteration: t,
                mean_regret: mean(&v).expect("non-empty"),
                std_regret: std_dev(&v, 0).expect("non-empty"),
            });
        }
    }
    rows
}
