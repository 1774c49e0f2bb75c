//! Max-min tests over solvers and half-size subsets of datasets.
//!
//! Q1 fixes a solver and asks for the worst subset; Q2 fixes a subset and
//! asks for the worst solver. Both work on per-dataset proportions, which
//! requires each solver to have the same number of runs on every dataset so
//! that the pooled proportion over a subset equals the mean of its
//! per-dataset proportions.

use itertools::Itertools;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{StatsError, SuccessTable};
use crate::bo::SolverKind;

/// Largest number of subsets enumerated exactly by [`minimax_q2`].
pub const EXACT_LIMIT: u128 = 10_000_000;
const SEARCH_RESTARTS: usize = 64;
const SEARCH_SEED: u64 = 0x6d69_6e69_6d61_78;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverValue {
    pub solver: SolverKind,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Q1Report {
    pub half_size: usize,
    /// Worst-subset proportion for each solver.
    pub per_solver: Vec<SolverValue>,
    /// Solver with the largest worst-subset proportion (first on ties).
    pub best_solver: SolverKind,
    pub best_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Q2Report {
    pub half_size: usize,
    /// Experiments of the maximizing subset, ascending.
    pub subset: Vec<usize>,
    /// Minimum over solvers of the subset proportion at `subset`.
    pub value: f64,
    /// Solver attaining that minimum.
    pub worst_solver: SolverKind,
    /// Smallest min-over-solvers value over all subsets.
    pub range_low: f64,
    /// False when the subset came from local search rather than
    /// enumeration.
    pub exact: bool,
}

fn proportions(
    table: &SuccessTable,
    solvers: &[SolverKind],
    half: usize,
) -> Result<Vec<Vec<f64>>, StatsError> {
    let n = table.experiments().len();
    if half == 0 || half > n || solvers.is_empty() {
        return Err(StatsError::InvalidSubsetSize { half, n });
    }
    solvers
        .iter()
        .map(|&s| table.balanced_proportions(s))
        .collect()
}

/// Mean of the `half` smallest values: the minimum subset mean.
fn smallest_mean(p: &[f64], half: usize) -> f64 {
    let mut v = p.to_vec();
    v.sort_by(f64::total_cmp);
    v[..half].iter().sum::<f64>() / half as f64
}

pub fn minimax_q1(
    table: &SuccessTable,
    solvers: &[SolverKind],
    half: usize,
) -> Result<Q1Report, StatsError> {
    let props = proportions(table, solvers, half)?;
    let per_solver: Vec<SolverValue> = solvers
        .iter()
        .zip(&props)
        .map(|(&solver, p)| SolverValue {
            solver,
            value: smallest_mean(p, half),
        })
        .collect();
    let best = per_solver
        .iter()
        .fold(&per_solver[0], |b, s| if s.value > b.value { s } else { b });
    Ok(Q1Report {
        half_size: half,
        best_solver: best.solver,
        best_value: best.value,
        per_solver,
    })
}

fn n_choose_k(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i + 1) as u128)
}

/// Index of the worst solver and its mean over `subset`.
fn worst(props: &[Vec<f64>], subset: &[usize]) -> (usize, f64) {
    let k = subset.len() as f64;
    props
        .iter()
        .map(|p| subset.iter().map(|&i| p[i]).sum::<f64>() / k)
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, v)| if v < b.1 { (i, v) } else { b })
}

pub fn minimax_q2(
    table: &SuccessTable,
    solvers: &[SolverKind],
    half: usize,
) -> Result<Q2Report, StatsError> {
    let props = proportions(table, solvers, half)?;
    let experiments = table.experiments();
    let n = experiments.len();
    let exact = n_choose_k(n, half) <= EXACT_LIMIT;
    let subset = if exact {
        let mut best: Option<(Vec<usize>, f64)> = None;
        for c in (0..n).combinations(half) {
            let v = worst(&props, &c).1;
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((c, v));
            }
        }
        best.expect("at least one subset").0
    } else {
        swap_search(&props, n, half)
    };
    let (wi, value) = worst(&props, &subset);
    let range_low = props
        .iter()
        .map(|p| smallest_mean(p, half))
        .fold(f64::INFINITY, f64::min);
    Ok(Q2Report {
        half_size: half,
        subset: subset.iter().map(|&i| experiments[i]).collect(),
        value,
        worst_solver: solvers[wi],
        range_low,
        exact,
    })
}

/// Best-improvement swap local search from seeded random subsets.
fn swap_search(props: &[Vec<f64>], n: usize, half: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEARCH_SEED);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for restart in 0..SEARCH_RESTARTS {
        let mut inside = vec![false; n];
        let start: Vec<usize> = if restart == 0 {
            // Greedy start: datasets ranked by their worst solver.
            let mut order: Vec<usize> = (0..n).collect();
            let key = |i: usize| props.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            order.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
            order.truncate(half);
            order
        } else {
            sample(&mut rng, n, half).into_vec()
        };
        for &i in &start {
            inside[i] = true;
        }
        let mut cur: Vec<usize> = start;
        let mut val = worst(props, &cur).1;
        loop {
            let mut improved: Option<(usize, usize, f64)> = None;
            for pos in 0..cur.len() {
                for cand in (0..n).filter(|&j| !inside[j]) {
                    let mut trial = cur.clone();
                    trial[pos] = cand;
                    let v = worst(props, &trial).1;
                    if v > improved.map_or(val, |b| b.2) + 1e-15 {
                        improved = Some((pos, cand, v));
                    }
                }
            }
            let Some((pos, cand, v)) = improved else { break };
            inside[cur[pos]] = false;
            inside[cand] = true;
            cur[pos] = cand;
            val = v;
        }
        cur.sort_unstable();
        if best.as_ref().is_none_or(|b| val > b.1) {
            best = Some((cur, val));
        }
    }
    best.expect("at least one restart").0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::SuccessRow;
    use rand::Rng;

    fn table(per_solver: &[(SolverKind, Vec<(usize, usize)>)]) -> SuccessTable {
        let mut rows = Vec::new();
        for (s, per) in per_solver {
            for (e, &(n_runs, n_success)) in per.iter().enumerate() {
                rows.push(SuccessRow {
                    experiment: e,
                    solver: *s,
                    n_runs,
                    n_success,
                });
            }
        }
        rows.sort_by_key(|r| (r.experiment, r.solver));
        SuccessTable {
            case_study: "toy".into(),
            rows,
        }
    }

    #[test]
    fn q1_worked_example() {
        let t = table(&[(SolverKind::Ils, vec![(2, 2), (2, 0), (2, 1), (2, 1)])]);
        let r = minimax_q1(&t, &[SolverKind::Ils], 2).unwrap();
        assert_eq!(r.per_solver[0].value, 0.25);
    }

    #[test]
    fn q1_constant_proportions() {
        let t = table(&[(SolverKind::Ims, vec![(4, 3); 6])]);
        let r = minimax_q1(&t, &[SolverKind::Ims], 3).unwrap();
        assert_eq!(r.per_solver[0].value, 0.75);
    }

    #[test]
    fn q2_single_solver_takes_largest() {
        let t = table(&[(SolverKind::Ils, vec![(4, 1), (4, 4), (4, 2), (4, 3)])]);
        let r = minimax_q2(&t, &[SolverKind::Ils], 2).unwrap();
        assert_eq!(r.subset, vec![1, 3]);
        assert_eq!(r.value, 0.875);
        assert!(r.exact);
    }

    #[test]
    fn unequal_runs_rejected() {
        let t = table(&[(SolverKind::Ils, vec![(4, 1), (3, 2)])]);
        assert_eq!(
            minimax_q1(&t, &[SolverKind::Ils], 1),
            Err(StatsError::UnequalRunCounts {
                solver: SolverKind::Ils
            })
        );
        assert!(minimax_q2(&t, &[SolverKind::Ils], 1).is_err());
    }

    #[test]
    fn invalid_half_size_rejected() {
        let t = table(&[(SolverKind::Ils, vec![(4, 1), (4, 2)])]);
        assert!(matches!(
            minimax_q1(&t, &[SolverKind::Ils], 3),
            Err(StatsError::InvalidSubsetSize { .. })
        ));
    }

    #[test]
    fn swap_search_matches_enumeration_on_small_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.random_range(4..=9);
            let props: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(0..=4) as f64 / 4.0).collect())
                .collect();
            let half = n / 2;
            let found = worst(&props, &swap_search(&props, n, half)).1;
            let exact = (0..n)
                .combinations(half)
                .map(|c| worst(&props, &c).1)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((found - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(n_choose_k(10, 5), 252);
        assert!(n_choose_k(56, 28) > EXACT_LIMIT);
    }
}
