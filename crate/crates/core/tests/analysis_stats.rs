use bo_lab::bo::{InnerInfo, IterationRecord, RunRecord, SolverKind};
use bo_lab::stats::ttest::student_t_upper;
use bo_lab::stats::{
    build_success_table, cmle_fit, conditional_pmf, iteration_stats, minimax_q1, minimax_q2,
    paired_t_one_sided, regret_curves, success_probability_vs_cap, StatsError, SuccessRow,
    SuccessTable,
};
use itertools::Itertools;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SOLVERS: [SolverKind; 3] = [SolverKind::Ils, SolverKind::Ims, SolverKind::Bnb];

fn record(experiment: usize, run: usize, solver: SolverKind, success: bool, iters: usize) -> RunRecord {
    RunRecord {
        case_study: "toy".into(),
        experiment,
        run,
        solver,
        replicated: false,
        initial_x: vec![vec![0.0]],
        initial_f: vec![1.0],
        iterations: Vec::new(),
        termination: None,
        iterations_to_termination: iters,
        best_x: vec![0.0],
        best_value: 1.0,
        success,
        aborted: None,
    }
}

fn with_values(mut r: RunRecord, initial: f64, fs: &[f64]) -> RunRecord {
    r.initial_f = vec![initial];
    r.iterations = fs
        .iter()
        .enumerate()
        .map(|(i, &f)| IterationRecord {
            t: i + 1,
            x: vec![0.0],
            f,
            kappa: 0.0,
            inner: InnerInfo {
                value: 0.0,
                converged: true,
                n_evals: 1,
                bnb: None,
            },
        })
        .collect();
    r.iterations_to_termination = fs.len();
    r.best_value = fs.iter().copied().fold(initial, f64::min);
    r
}

/// Table with equal run counts per solver from per-experiment success counts.
fn table(solvers: &[SolverKind], runs: &[usize], successes: &[Vec<usize>]) -> SuccessTable {
    let n_exp = successes[0].len();
    let mut rows = Vec::new();
    for e in 0..n_exp {
        let mut order: Vec<usize> = (0..solvers.len()).collect();
        order.sort_by_key(|&i| solvers[i]);
        for i in order {
            rows.push(SuccessRow {
                experiment: e,
                solver: solvers[i],
                n_runs: runs[i],
                n_success: successes[i][e],
            });
        }
    }
    SuccessTable {
        case_study: "toy".into(),
        rows,
    }
}

#[test]
fn success_table_grouping() {
    let recs = vec![record(0, 0, SolverKind::Ils, true, 5), record(0, 1, SolverKind::Ils, true, 6)];
    let t = build_success_table(&recs).unwrap();
    let c = t.cell(0, SolverKind::Ils).unwrap();
    assert_eq!((c.n_runs, c.n_success), (2, 2));

    let mut recs = Vec::new();
    for e in 0..4 {
        for s in SOLVERS {
            for r in 0..2 {
                let ok = if s == SolverKind::Bnb { e % 2 == 0 } else { (e + r) % 2 == 0 };
                recs.push(record(e, r, s, ok, 10));
            }
        }
    }
    assert_eq!(build_success_table(&recs).unwrap().rows.len(), 12);

    let det: Vec<_> = (0..5).map(|r| record(0, r, SolverKind::Bnb, true, 4)).collect();
    let p = build_success_table(&det).unwrap().cell(0, SolverKind::Bnb).unwrap().proportion();
    assert!(p == 0.0 || p == 1.0);
}

#[test]
fn single_run_likelihood_is_the_closed_form_q() {
    for alpha in [-2.0, -0.3, 0.0, 3f64.ln(), 1.7] {
        for t in 1..=31usize {
            let pmf = conditional_pmf(1, 31, t, alpha);
            let p1 = pmf.iter().find(|(k, _)| *k == 1).map_or(0.0, |e| e.1);
            let tf = t as f64;
            let q = alpha.exp() * tf / (alpha.exp() * tf + (32.0 - tf));
            assert!((p1 - q).abs() < 1e-12, "alpha {alpha} T {t}: {p1} vs {q}");
        }
    }
    let p = |alpha: f64, t| conditional_pmf(1, 31, t, alpha)[1].1;
    assert!((p(0.0, 16) - 0.5).abs() < 1e-12);
    assert!((p(3f64.ln(), 8) - 0.5).abs() < 1e-12);
}

#[test]
fn cmle_centres_on_zero_under_equal_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (sims, datasets, m) = (500, 56, 31);
    let mut alphas = Vec::new();
    for _ in 0..sims {
        // Per-dataset odds differ between the solvers; the marginal
        // probabilities over datasets are equal.
        let pa: Vec<f64> = (0..datasets).map(|_| rng.random_range(0.05..0.95)).collect();
        let pr: Vec<f64> = (0..datasets).map(|_| rng.random_range(0.05..0.95)).collect();
        let a: Vec<usize> = pa.iter().map(|&q| (0..m).filter(|_| rng.random_bool(q)).count()).collect();
        let r: Vec<usize> = pr.iter().map(|&q| rng.random_bool(q) as usize).collect();
        let t = table(&[SolverKind::Ils, SolverKind::Bnb], &[m, 1], &[a, r]);
        let fit = cmle_fit(&t, SolverKind::Ils, SolverKind::Bnb).unwrap();
        if fit.converged {
            alphas.push(fit.alpha_hat);
        }
    }
    assert!(alphas.len() >= 490);
    let n = alphas.len() as f64;
    let mean = alphas.iter().sum::<f64>() / n;
    let sd = (alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / n.sqrt(), "mean {mean}, se {}", sd / n.sqrt());
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Conditional log-likelihood written out term by term.
fn oracle_loglik(alpha: f64, m: usize, n: usize, a: &[usize], r: &[usize]) -> f64 {
    a.iter()
        .zip(r)
        .map(|(&ka, &kr)| {
            let t = ka + kr;
            let norm: f64 = (t.saturating_sub(n)..=t.min(m))
                .map(|k| binom(m, k) * binom(n, t - k) * (alpha * k as f64).exp())
                .sum();
            (binom(m, ka) * binom(n, kr) * (alpha * ka as f64).exp() / norm).ln()
        })
        .sum()
}

#[test]
fn cmle_maximizes_the_conditional_likelihood() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let (m, n) = (rng.random_range(1..8), rng.random_range(1..8));
        let datasets = rng.random_range(3..15);
        let a: Vec<usize> = (0..datasets).map(|_| rng.random_range(0..=m)).collect();
        let r: Vec<usize> = (0..datasets).map(|_| rng.random_range(0..=n)).collect();
        let t = table(&[SolverKind::Ils, SolverKind::Bnb], &[m, n], &[a.clone(), r.clone()]);
        let Ok(fit) = cmle_fit(&t, SolverKind::Ils, SolverKind::Bnb) else {
            continue;
        };
        if !fit.converged {
            continue;
        }
        // Golden-section search on the concave log-likelihood.
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-20.0f64, 20.0f64);
        while hi - lo > 1e-10 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if oracle_loglik(x1, m, n, &a, &r) < oracle_loglik(x2, m, n, &a, &r) {
                lo = x1;
            } else {
                hi = x2;
            }
        }
        assert!((fit.alpha_hat - 0.5 * (lo + hi)).abs() < 1e-6, "{} vs {lo}", fit.alpha_hat);
    }
}

#[test]
fn concordant_tables_carry_no_information() {
    let t = table(&[SolverKind::Ils, SolverKind::Bnb], &[3, 1], &[vec![0, 3], vec![0, 1]]);
    assert_eq!(
        cmle_fit(&t, SolverKind::Ils, SolverKind::Bnb).unwrap_err(),
        StatsError::AllDegenerate
    );
}

fn brute_min(p: &[f64], k: usize) -> f64 {
    (0..p.len())
        .combinations(k)
        .map(|c| c.iter().map(|&i| p[i]).sum::<f64>() / k as f64)
        .fold(f64::INFINITY, f64::min)
}

fn brute_q2(props: &[Vec<f64>], k: usize) -> f64 {
    (0..props[0].len())
        .combinations(k)
        .map(|c| {
            props
                .iter()
                .map(|p| c.iter().map(|&i| p[i]).sum::<f64>() / k as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_table<R: Rng>(rng: &mut R, n_exp: usize) -> (Vec<SolverKind>, Vec<usize>, Vec<Vec<usize>>) {
    let n_solvers = rng.random_range(1..=3);
    let solvers = SOLVERS[..n_solvers].to_vec();
    let runs: Vec<usize> = (0..n_solvers).map(|_| rng.random_range(1..=6)).collect();
    let succ = runs
        .iter()
        .map(|&r| (0..n_exp).map(|_| rng.random_range(0..=r)).collect())
        .collect();
    (solvers, runs, succ)
}

#[test]
fn q1_sorting_identity_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tables = 0;
    for n_exp in 2..=12 {
        for _ in 0..100 {
            let (solvers, runs, succ) = random_table(&mut rng, n_exp);
            let t = table(&solvers, &runs, &succ);
            let half = rng.random_range(1..=n_exp);
            let q1 = minimax_q1(&t, &solvers, half).unwrap();
            for (i, sv) in q1.per_solver.iter().enumerate() {
                let p: Vec<f64> = succ[i].iter().map(|&s| s as f64 / runs[i] as f64).collect();
                assert!((sv.value - brute_min(&p, half)).abs() < 1e-12);
                assert!(sv.value <= t.overall(sv.solver).unwrap() + 1e-12);
            }
            tables += 1;
        }
    }
    assert!(tables >= 1000);
}

#[test]
fn q2_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n_exp in 4..=8 {
        for _ in 0..100 {
            let (solvers, runs, succ) = random_table(&mut rng, n_exp);
            let t = table(&solvers, &runs, &succ);
            let half = rng.random_range(1..n_exp);
            let props: Vec<Vec<f64>> = succ
                .iter()
                .zip(&runs)
                .map(|(s, &r)| s.iter().map(|&k| k as f64 / r as f64).collect())
                .collect();
            let q2 = minimax_q2(&t, &solvers, half).unwrap();
            let q1 = minimax_q1(&t, &solvers, half).unwrap();
            assert!(q2.exact);
            assert!((q2.value - brute_q2(&props, half)).abs() < 1e-12);
            assert_eq!(q2.subset.len(), half);
            let low = q1.per_solver.iter().map(|s| s.value).fold(f64::INFINITY, f64::min);
            assert!(q2.value >= low - 1e-12);
            assert_eq!(q2.range_low, low);
        }
    }
}

#[test]
fn minimax_examples() {
    let t = table(&[SolverKind::Ils], &[2], &[vec![2, 0, 1, 1]]);
    assert_eq!(minimax_q1(&t, &[SolverKind::Ils], 2).unwrap().best_value, 0.25);
    let q2 = minimax_q2(&t, &[SolverKind::Ils], 2).unwrap();
    assert_eq!(q2.value, 0.75);
    let flat = table(&[SolverKind::Ims], &[4], &[vec![3; 6]]);
    assert_eq!(minimax_q1(&flat, &[SolverKind::Ims], 3).unwrap().best_value, 0.75);
    let uneven = SuccessTable {
        case_study: "toy".into(),
        rows: vec![
            SuccessRow { experiment: 0, solver: SolverKind::Ils, n_runs: 2, n_success: 1 },
            SuccessRow { experiment: 1, solver: SolverKind::Ils, n_runs: 3, n_success: 1 },
        ],
    };
    assert!(matches!(
        minimax_q1(&uneven, &[SolverKind::Ils], 1),
        Err(StatsError::UnequalRunCounts { .. })
    ));
}

#[test]
fn t_test_closed_form_and_example() {
    for i in -400..=400 {
        let t = i as f64 * 0.05;
        let closed = 0.5 - t / (2.0 * (t * t + 2.0).sqrt());
        assert!((student_t_upper(t, 2.0) - closed).abs() < 1e-10, "t={t}");
    }
    let r = paired_t_one_sided(&[2.0, 0.0, 1.0], &[0.0; 3]).unwrap();
    assert!((r.t - 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(r.df, 2);
    assert!((r.p - 0.1127).abs() < 1e-4);
    let same = paired_t_one_sided(&[4.0, 7.0, 1.0], &[4.0, 7.0, 1.0]).unwrap();
    assert_eq!((same.t, same.p), (0.0, 0.5));
    let zero = paired_t_one_sided(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(zero.zero_variance);
}

#[test]
fn t_test_matches_monte_carlo_null() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n_sim = 1_000_000;
    for df in [2usize, 5, 10] {
        let n = df + 1;
        let thresholds = [0.5, 1.5, 2.5];
        let mut hits = [0usize; 3];
        let mut d = vec![0.0; n];
        for _ in 0..n_sim {
            for v in d.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let mean = d.iter().sum::<f64>() / n as f64;
            let sd = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / df as f64).sqrt();
            let t = mean / (sd / (n as f64).sqrt());
            for (h, &c) in hits.iter_mut().zip(&thresholds) {
                *h += (t > c) as usize;
            }
        }
        for (h, &c) in hits.iter().zip(&thresholds) {
            let p = student_t_upper(c, df as f64);
            let emp = *h as f64 / n_sim as f64;
            let se = (p * (1.0 - p) / n_sim as f64).sqrt();
            assert!((emp - p).abs() <= 3.0 * se, "df {df} t {c}: {emp} vs {p}");
        }
    }
}

#[test]
fn iteration_stats_by_hand() {
    use SolverKind::{Bnb, Ils};
    let recs = vec![
        record(0, 0, Ils, true, 10),
        record(0, 1, Ils, true, 14),
        record(0, 2, Ils, false, 30),
        record(0, 0, Bnb, true, 8),
        record(1, 0, Ils, true, 20),
        record(1, 1, Ils, true, 22),
        record(1, 2, Ils, true, 24),
        record(1, 0, Bnb, false, 40),
    ];
    let joint = iteration_stats(&recs, &[Ils, Bnb], true);
    assert_eq!(joint[0].count, 2);
    assert_eq!(joint[0].mean, Some(12.0));
    assert_eq!(joint[0].median, Some(10.0));
    assert_eq!(joint[1].count, 1);
    assert_eq!(joint[1].mean, Some(8.0));
    assert_eq!(joint[1].std, None);
    let all = iteration_stats(&recs, &[Ils, Bnb], false);
    assert_eq!(all[0].count, 6);
    assert_eq!(all[0].mean, Some(20.0));
    assert_eq!(all[0].median, Some(20.0));
    assert_eq!(all[1].mean, Some(24.0));
}

#[test]
fn regret_by_hand() {
    let a = with_values(record(0, 0, SolverKind::Ils, true, 0), 5.0, &[3.0, 1.0]);
    let b = with_values(record(0, 1, SolverKind::Ils, true, 0), 4.0, &[4.5]);
    let rows = regret_curves(&[a, b], 1.0);
    let got: Vec<(usize, f64, f64)> =
        rows.iter().map(|r| (r.iteration, r.mean_regret, r.std_regret)).collect();
    assert_eq!(got, vec![(0, 3.5, 0.5), (1, 2.5, 0.5), (2, 1.5, 1.5)]);
}

fn arb_records() -> impl Strategy<Value = Vec<RunRecord>> {
    proptest::collection::vec((0usize..5, 0usize..3, any::<bool>(), 1usize..40), 1..60).prop_map(
        |v| {
            v.into_iter()
                .enumerate()
                .map(|(i, (e, s, ok, it))| record(e, i, SOLVERS[s.min(1)], ok, it))
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cap_curves_are_monotone_and_bounded(recs in arb_records()) {
        let caps: Vec<usize> = (0..45).chain([usize::MAX]).collect();
        for curve in success_probability_vs_cap(&recs, &caps) {
            let runs: Vec<&RunRecord> = recs.iter().filter(|r| r.solver == curve.solver).collect();
            let overall = runs.iter().filter(|r| r.success).count() as f64 / runs.len() as f64;
            prop_assert!(curve.points.windows(2).all(|w| w[1].probability >= w[0].probability));
            prop_assert!(curve.points.iter().all(|p| p.probability <= overall + 1e-12));
            prop_assert_eq!(curve.points[0].probability, 0.0);
            prop_assert!((curve.points.last().unwrap().probability - overall).abs() < 1e-12);
        }
    }

    #[test]
    fn regret_means_never_increase(
        runs in proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, 0..12), 1..6),
    ) {
        let recs: Vec<RunRecord> = runs
            .iter()
            .enumerate()
            .map(|(i, fs)| with_values(record(0, i, SolverKind::Ims, true, 0), 5.0, fs))
            .collect();
        let rows = regret_curves(&recs, -5.0);
        prop_assert!(rows.windows(2).all(|w| w[1].mean_regret <= w[0].mean_regret + 1e-12));
        prop_assert!(rows.iter().all(|r| r.mean_regret >= 0.0 && r.std_regret >= 0.0));
    }

    #[test]
    fn identical_samples_give_the_null_statistic(v in proptest::collection::vec(-50.0f64..50.0, 2..20)) {
        let r = paired_t_one_sided(&v, &v).unwrap();
        prop_assert_eq!((r.t, r.p), (0.0, 0.5));
    }
}
