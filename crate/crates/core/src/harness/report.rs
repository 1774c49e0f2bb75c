//! Analysis report and plot-ready exports of a run store.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::format::header;
use super::store::RunStore;
use crate::bo::{RunRecord, SolverKind};
use crate::error::{Error, Result};
use crate::stats::curves::CapCurve;
use crate::stats::{
    build_success_table, cmle_fit, iteration_stats, joint_lrt, minimax_q1, minimax_q2,
    paired_iteration_test, regret_curves, success_probability_vs_cap, CmleFit, IterationStats,
    JointLrt, PairedIterationTest, Q1Report, Q2Report, StatsError, SuccessTable,
};

pub const KIND: &str = "report";
pub const REGRET_CSV_HEADER: &str = "solver,iteration,mean_regret,std_regret";

/// A report section, or the reason it could not be computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Section<T> {
    Present { value: T },
    Absent { reason: String },
}

impl<T> Section<T> {
    fn absent(reason: impl Into<String>) -> Self {
        Section::Absent {
            reason: reason.into(),
        }
    }

    pub fn value(&self) -> Option<&T> {
        match self {
            Section::Present { value } => Some(value),
            Section::Absent { .. } => None,
        }
    }
}

impl<T> From<std::result::Result<T, StatsError>> for Section<T> {
    fn from(r: std::result::Result<T, StatsError>) -> Self {
        match r {
            Ok(value) => Section::Present { value },
            Err(e) => Section::absent(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverSuccess {
    pub solver: SolverKind,
    /// Executed runs; bookkeeping copies are not counted.
    pub runs: usize,
    pub successes: usize,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessSection {
    pub per_solver: Vec<SolverSuccess>,
    pub table: SuccessTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmleSection {
    pub reference: SolverKind,
    pub pairwise: Vec<Section<CmleFit>>,
    /// Likelihood-ratio test of equal success probability for all three
    /// solvers.
    pub joint: Section<JointLrt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSection {
    pub q1: Section<Q1Report>,
    pub q2: Section<Q2Report>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub case_study: String,
    pub f_star: f64,
    pub success_tol: f64,
    pub experiments: usize,
    pub solvers: Vec<SolverKind>,
    pub success: Section<SuccessSection>,
    /// Successful runs on experiments where every solver succeeded at least
    /// once.
    pub iterations_joint_success: Section<Vec<IterationStats>>,
    /// One-sided paired t-tests that the first solver of each pair needs
    /// more iterations than the second.
    pub iteration_t_tests: Section<Vec<Section<PairedIterationTest>>>,
    /// Every run regardless of where it terminated.
    pub iterations_all_runs: Section<Vec<IterationStats>>,
    pub cmle: Section<CmleSection>,
    pub minimax: Section<MinimaxSection>,
    pub cap_curves: Section<Vec<CapCurve>>,
}

fn present<T>(value: T) -> Section<T> {
    Section::Present { value }
}

fn success_section(table: &SuccessTable, solvers: &[SolverKind]) -> SuccessSection {
    let per_solver = solvers
        .iter()
        .map(|&solver| {
            let (runs, successes) = table
                .rows
                .iter()
                .filter(|r| r.solver == solver)
                .fold((0, 0), |(n, k), r| (n + r.n_runs, k + r.n_success));
            SolverSuccess {
                solver,
                runs,
                successes,
                probability: table.overall(solver).unwrap_or(0.0),
            }
        })
        .collect();
    SuccessSection {
        per_solver,
        table: table.clone(),
    }
}

fn cmle_section(table: &SuccessTable, solvers: &[SolverKind]) -> Section<CmleSection> {
    if solvers.len() < 2 {
        return Section::absent("needs at least two solvers");
    }
    let reference = if solvers.contains(&SolverKind::Bnb) {
        SolverKind::Bnb
    } else {
        *solvers.last().expect("non-empty")
    };
    let others: Vec<SolverKind> = solvers.iter().copied().filter(|&s| s != reference).collect();
    let pairwise = others
        .iter()
        .map(|&s| cmle_fit(table, s, reference).into())
        .collect();
    let joint = if others.len() == 2 {
        joint_lrt(table, [others[0], others[1]], reference).into()
    } else {
        Section::absent("joint test needs exactly three solvers")
    };
    present(CmleSection {
        reference,
        pairwise,
        joint,
    })
}

pub fn analyze(store: &RunStore) -> Result<Report> {
    let config = &store.meta.config;
    let bench = config.handle()?;
    let records = &store.records;
    let solvers: Vec<SolverKind> = config
        .solvers
        .iter()
        .copied()
        .filter(|s| records.iter().any(|r| r.solver == *s))
        .collect();
    let mut experiments: Vec<usize> = records.iter().map(|r| r.experiment).collect();
    experiments.sort_unstable();
    experiments.dedup();

    let mut report = Report {
        case_study: store.meta.case_study.clone(),
        f_star: bench.f_star(),
        success_tol: bench.success_tol,
        experiments: experiments.len(),
        solvers: solvers.clone(),
        success: Section::absent("no records"),
        iterations_joint_success: Section::absent("no records"),
        iteration_t_tests: Section::absent("no records"),
        iterations_all_runs: Section::absent("no records"),
        cmle: Section::absent("no records"),
        minimax: Section::absent("no records"),
        cap_curves: Section::absent("no records"),
    };
    if solvers.is_empty() {
        return Ok(report);
    }
    let table = build_success_table(records)?;
    report.success = present(success_section(&table, &solvers));
    report.iterations_joint_success = present(iteration_stats(records, &solvers, true));
    report.iterations_all_runs = present(iteration_stats(records, &solvers, false));
    report.iteration_t_tests = if solvers.len() < 2 {
        Section::absent("needs at least two solvers")
    } else {
        let mut tests = Vec::new();
        for (i, &a) in solvers.iter().enumerate() {
            for &b in &solvers[i + 1..] {
                tests.push(paired_iteration_test(records, a, b, &solvers).into());
            }
        }
        present(tests)
    };
    report.cmle = cmle_section(&table, &solvers);
    let half = experiments.len() / 2;
    report.minimax = present(MinimaxSection {
        q1: minimax_q1(&table, &solvers, half).into(),
        q2: minimax_q2(&table, &solvers, half).into(),
    });
    let caps: Vec<usize> = (1..=config.tc.max_iter).collect();
    report.cap_curves = present(success_probability_vs_cap(records, &caps));
    Ok(report)
}

impl Report {
    /// Header line followed by the pretty-printed document.
    pub fn to_text(&self) -> Result<String> {
        let body =
            serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(format!("{}\n{body}\n", header(KIND)))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }
}

/// Regret curves of all solvers as CSV.
pub fn regret_csv(records: &[RunRecord], f_star: f64) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in regret_curves(records, f_star) {
        w.serialize(row).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let text = String::from_utf8(bytes).expect("CSV is UTF-8");
    if text.is_empty() {
        return Ok(format!("{REGRET_CSV_HEADER}\n"));
    }
    Ok(text)
}

pub fn write_regret_csv(store: &RunStore, path: &Path) -> Result<()> {
    let bench = store.meta.config.handle()?;
    std::fs::write(path, regret_csv(&store.records, bench.f_star())?)?;
    Ok(())
}
