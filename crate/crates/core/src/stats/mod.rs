//! Statistics over stores of BO runs: success tables, conditional MLE of
//! common log-odds ratios, minimax subset tests, paired t-tests and curve
//! summaries.
//!
//! Records flagged `replicated` are bookkeeping copies of a deterministic
//! solver's single execution and are ignored everywhere, so a deterministic
//! solver contributes one effective run per dataset.

pub mod cmle;
pub mod curves;
pub mod minimax;
pub mod ttest;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bo::{RunRecord, SolverKind};

pub use cmle::{cmle_fit, conditional_pmf, joint_lrt, CmleFit, JointLrt};
pub use curves::{
    iteration_stats, paired_iteration_test, regret_curves, success_probability_vs_cap, CapCurve,
    IterationStats, PairedIterationTest, RegretRow,
};
pub use minimax::{minimax_q1, minimax_q2, Q1Report, Q2Report};
pub use ttest::{paired_t_one_sided, TTest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no records to analyze")]
    EmptyInput,

    #[error("records mix case studies `{first}` and `{other}`")]
    MixedCaseStudies { first: String, other: String },

    #[error("deterministic solver {solver} has mixed outcomes on experiment {experiment}")]
    NondeterministicOutcome {
        solver: SolverKind,
        experiment: usize,
    },

    #[error("every dataset is concordant; the conditional likelihood carries no information")]
    AllDegenerate,

    #[error("solver {solver} has unequal run counts across datasets")]
    UnequalRunCounts { solver: SolverKind },

    #[error("solver {solver} has no runs on experiment {experiment}")]
    MissingCell {
        solver: SolverKind,
        experiment: usize,
    },

    #[error("paired samples differ in length ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },

    #[error("need at least 2 pairs, got {n}")]
    TooFewPairs { n: usize },

    #[error("subset size {half} is invalid for {n} datasets")]
    InvalidSubsetSize { half: usize, n: usize },
}

/// Success counts for one (dataset, solver) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessCell {
    pub n_runs: usize,
    pub n_success: usize,
}

impl SuccessCell {
    pub fn proportion(&self) -> f64 {
        self.n_success as f64 / self.n_runs as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub experiment: usize,
    pub solver: SolverKind,
    pub n_runs: usize,
    pub n_success: usize,
}

/// Success counts grouped by (experiment, solver), sorted by experiment and
/// then solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessTable {
    pub case_study: String,
    pub rows: Vec<SuccessRow>,
}

impl SuccessTable {
    /// Experiments with at least one run, ascending.
    pub fn experiments(&self) -> Vec<usize> {
        let mut e: Vec<usize> = self.rows.iter().map(|r| r.experiment).collect();
        e.dedup();
        e
    }

    /// Solvers with at least one run, in canonical order.
    pub fn solvers(&self) -> Vec<SolverKind> {
        let mut s: Vec<SolverKind> = self.rows.iter().map(|r| r.solver).collect();
        s.sort();
        s.dedup();
        s
    }

    pub fn cell(&self, experiment: usize, solver: SolverKind) -> Option<SuccessCell> {
        self.rows
            .iter()
            .find(|r| r.experiment == experiment && r.solver == solver)
            .map(|r| SuccessCell {
                n_runs: r.n_runs,
                n_success: r.n_success,
            })
    }

    /// Pooled success proportion of `solver` over all its runs.
    pub fn overall(&self, solver: SolverKind) -> Option<f64> {
        let (n, k) = self
            .rows
            .iter()
            .filter(|r| r.solver == solver)
            .fold((0, 0), |(n, k), r| (n + r.n_runs, k + r.n_success));
        (n > 0).then(|| k as f64 / n as f64)
    }

    /// Per-experiment cells of `solver` in experiment order; every
    /// experiment in the table must have one.
    pub fn cells_for(&self, solver: SolverKind) -> Result<Vec<SuccessCell>, StatsError> {
        self.experiments()
            .into_iter()
            .map(|e| {
                self.cell(e, solver).ok_or(StatsError::MissingCell {
                    solver,
                    experiment: e,
                })
            })
            .collect()
    }

    /// Per-experiment proportions of `solver`, requiring equal run counts.
    pub fn balanced_proportions(&self, solver: SolverKind) -> Result<Vec<f64>, StatsError> {
        let cells = self.cells_for(solver)?;
        if cells.windows(2).any(|w| w[0].n_runs != w[1].n_runs) {
            return Err(StatsError::UnequalRunCounts { solver });
        }
        Ok(cells.iter().map(SuccessCell::proportion).collect())
    }
}

/// Records that represent actual executions.
pub fn effective_records<'a>(
    records: impl IntoIterator<Item = &'a RunRecord>,
) -> impl Iterator<Item = &'a RunRecord> {
    records.into_iter().filter(|r| !r.replicated)
}

pub fn build_success_table<'a>(
    records: impl IntoIterator<Item = &'a RunRecord>,
) -> Result<SuccessTable, StatsError> {
    let mut case_study: Option<&str> = None;
    let mut rows: Vec<SuccessRow> = Vec::new();
    for r in records {
        match case_study {
            None => case_study = Some(&r.case_study),
            Some(c) if c != r.case_study => {
                return Err(StatsError::MixedCaseStudies {
                    first: c.to_string(),
                    other: r.case_study.clone(),
                })
            }
            _ => {}
        }
        if r.replicated {
            continue;
        }
        let hit = usize::from(r.success);
        match rows
            .iter_mut()
            .find(|row| row.experiment == r.experiment && row.solver == r.solver)
        {
            Some(row) => {
                row.n_runs += 1;
                row.n_success += hit;
            }
            None => rows.push(SuccessRow {
                experiment: r.experiment,
                solver: r.solver,
                n_runs: 1,
                n_success: hit,
            }),
        }
    }
    let case_study = case_study.ok_or(StatsError::EmptyInput)?.to_string();
    rows.sort_by_key(|r| (r.experiment, r.solver));
    for row in &rows {
        if row.solver.is_deterministic() && row.n_success != 0 && row.n_success != row.n_runs {
            return Err(StatsError::NondeterministicOutcome {
                solver: row.solver,
                experiment: row.experiment,
            });
        }
    }
    Ok(SuccessTable { case_study, rows })
}

/// Arithmetic mean; `None` for an empty slice.
pub(crate) fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Standard deviation with `ddof` degrees of freedom removed.
pub(crate) fn std_dev(v: &[f64], ddof: usize) -> Option<f64> {
    if v.len() <= ddof {
        return None;
    }
    let m = mean(v)?;
    let ss: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (v.len() - ddof) as f64).sqrt())
}


#[cfg(test)]
mod tests {
    use super::test_support::record;
    use super::*;

    #[test]
    fn two_successful_runs_count_both() {
        let recs = [
            record(0, 0, SolverKind::Ils, true, 5),
            record(0, 1, SolverKind::Ils, true, 7),
        ];
        let t = build_success_table(&recs).unwrap();
        assert_eq!(
            t.cell(0, SolverKind::Ils),
            Some(SuccessCell {
                n_runs: 2,
                n_success: 2
            })
        );
    }

    #[test]
    fn grouping_yields_one_row_per_cell() {
        let mut recs = Vec::new();
        for e in 0..4 {
            for s in SolverKind::ALL {
                for r in 0..3 {
                    recs.push(record(e, r, s, (e + r) % 2 == 0 || s.is_deterministic(), 4));
                }
            }
        }
        let t = build_success_table(&recs).unwrap();
        assert_eq!(t.rows.len(), 12);
        assert_eq!(t.experiments(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn deterministic_rows_are_checked() {
        let mut recs: Vec<RunRecord> = (0..5)
            .map(|r| record(0, r, SolverKind::Bnb, true, 3))
            .collect();
        let t = build_success_table(&recs).unwrap();
        assert_eq!(t.cell(0, SolverKind::Bnb).unwrap().proportion(), 1.0);
        recs[2].success = false;
        assert!(matches!(
            build_success_table(&recs),
            Err(StatsError::NondeterministicOutcome { .. })
        ));
    }

    #[test]
    fn replicated_copies_are_ignored() {
        let mut recs: Vec<RunRecord> = (0..3)
            .map(|r| record(0, r, SolverKind::Bnb, true, 3))
            .collect();
        recs[1].replicated = true;
        recs[2].replicated = true;
        let t = build_success_table(&recs).unwrap();
        assert_eq!(t.cell(0, SolverKind::Bnb).unwrap().n_runs, 1);
    }

    #[test]
    fn mixed_case_studies_rejected() {
        let mut b = record(0, 0, SolverKind::Ils, true, 1);
        b.case_study = "other".into();
        let recs = [record(0, 0, SolverKind::Ils, true, 1), b];
        assert!(matches!(
            build_success_table(&recs),
            Err(StatsError::MixedCaseStudies { .. })
        ));
        assert_eq!(
            build_success_table(std::iter::empty()),
            Err(StatsError::EmptyInput)
        );
    }
}
