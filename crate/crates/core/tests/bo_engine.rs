use std::sync::Arc;

use bo_lab::acquisition::KappaPolicy;
use bo_lab::benchmarks::{handle, latin_hypercube, BenchmarkId, CAMELBACK_MINIMIZER};
use bo_lab::bo::{
    check_termination, classify_success, run_bo, BenchmarkHandle, ReferenceOptimum, RunRecord,
    SolverKind, SolverSettings, TcClause, TerminationConfig,
};
use bo_lab::SearchBox;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mb_tc() -> TerminationConfig {
    BenchmarkId::MuellerBrown.case_defaults().tc
}

fn design(id: BenchmarkId, n: usize, seed: u64) -> Vec<Vec<f64>> {
    latin_hypercube(n, &id.search_box(), &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn mueller_brown_thresholds_are_the_defaults() {
    let tc = mb_tc();
    assert_eq!((tc.eps_x1, tc.eps_x2, tc.eps_f_rel, tc.eps_f_abs), (0.001, 0.05, 0.01, 0.5));
}

#[test]
fn termination_clauses_on_mueller_brown() {
    let bx = BenchmarkId::MuellerBrown.search_box();
    let tc = mb_tc();
    let hx = vec![vec![-1.0, 0.0], vec![0.5, 1.0]];
    let hf = vec![-20.0, -30.0];
    assert_eq!(check_termination(&hx, &hf, &[0.5, 1.0], -5.0, &tc, &bx), Some(TcClause::Tc1));
    // 0.03 in scaled units along the first axis (width 2.5).
    let near = [0.5 + 0.03 * 2.5, 1.0];
    assert_eq!(check_termination(&hx, &hf, &near, -30.2, &tc, &bx), Some(TcClause::Tc2));
    assert_eq!(check_termination(&hx, &hf, &near, -25.0, &tc, &bx), None);
    assert_eq!(check_termination(&[], &[], &near, -25.0, &tc, &bx), None);
}

#[test]
fn bnb_runs_are_reproducible() {
    let bench = handle(BenchmarkId::MuellerBrown, None).unwrap();
    let d = design(BenchmarkId::MuellerBrown, 3, 1);
    let tc = TerminationConfig {
        max_iter: 8,
        ..mb_tc()
    };
    let run = |seed| {
        run_bo(
            &bench,
            &d,
            SolverKind::Bnb,
            &KappaPolicy::Fixed { kappa: 2.0 },
            &tc,
            &mut ChaCha8Rng::seed_from_u64(seed),
            &SolverSettings::default(),
        )
        .unwrap()
    };
    let a = run(1);
    let b = run(2);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn ils_runs_with_different_seeds_are_both_valid() {
    let bench = handle(BenchmarkId::Camelback2d, None).unwrap();
    let d = design(BenchmarkId::Camelback2d, 3, 2);
    let tc = TerminationConfig {
        max_iter: 10,
        ..BenchmarkId::Camelback2d.case_defaults().tc
    };
    for seed in [1, 2] {
        let r = run_bo(
            &bench,
            &d,
            SolverKind::Ils,
            &KappaPolicy::Fixed { kappa: 2.0 },
            &tc,
            &mut ChaCha8Rng::seed_from_u64(seed),
            &SolverSettings::default(),
        )
        .unwrap();
        assert!(r.aborted.is_none());
        assert!(r.iterations_to_termination >= 1);
    }
}

fn quadratic_1d() -> BenchmarkHandle {
    BenchmarkHandle::new(
        "quadratic",
        Arc::new(|x: &[f64]| (x[0] - 0.3).powi(2) - 1.0),
        SearchBox::cube(1, -1.0, 1.0),
        vec![ReferenceOptimum::new(vec![0.3], -1.0)],
        1e-2,
    )
    .unwrap()
}

#[test]
fn quadratic_reaches_its_minimum() {
    let bench = quadratic_1d();
    let tc = TerminationConfig {
        eps_x1: 0.001,
        eps_x2: 0.05,
        eps_f_rel: 1e-4,
        eps_f_abs: 1e-4,
        max_iter: 40,
    };
    let d = vec![vec![-0.8], vec![0.1], vec![0.9]];
    for solver in [SolverKind::Ils, SolverKind::Ims, SolverKind::Bnb] {
        let r = run_bo(
            &bench,
            &d,
            solver,
            &KappaPolicy::Fixed { kappa: 0.5 },
            &tc,
            &mut ChaCha8Rng::seed_from_u64(3),
            &SolverSettings::default(),
        )
        .unwrap();
        assert!(r.best_value <= -1.0 + 1e-2, "{solver:?}: {}", r.best_value);
        assert!(r.termination.is_some());
        assert!(r.success);
    }
}

fn finished(bench: &BenchmarkHandle, best_x: Vec<f64>) -> RunRecord {
    let f = bench.eval(&best_x);
    RunRecord {
        case_study: bench.name.clone(),
        experiment: 0,
        run: 0,
        solver: SolverKind::Ils,
        replicated: false,
        initial_x: vec![best_x.clone()],
        initial_f: vec![f],
        iterations: vec![],
        termination: Some(TcClause::Tc1),
        iterations_to_termination: 1,
        best_x,
        best_value: f,
        success: false,
        aborted: None,
    }
}

#[test]
fn success_classification_examples() {
    let mb = handle(BenchmarkId::MuellerBrown, None).unwrap();
    let at_star = finished(&mb, mb.reference_optima[0].x.clone());
    assert!(classify_success(&at_star, &mb));
    let stuck = finished(&mb, vec![0.6235, 0.0280]);
    assert!((stuck.best_value + 108.17).abs() < 0.01);
    assert!(!classify_success(&stuck, &mb));
    let mut capped = at_star.clone();
    capped.termination = None;
    assert!(!classify_success(&capped, &mb));

    let cb = handle(BenchmarkId::Camelback2d, None).unwrap();
    let [a, b] = CAMELBACK_MINIMIZER;
    for x in [vec![a, b], vec![-a, -b], vec![0.0898, -0.7126], vec![-0.0898, 0.7126]] {
        assert!(classify_success(&finished(&cb, x), &cb));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn run_invariants(seed in any::<u64>(), ims in any::<bool>(), max_iter in 1usize..12) {
        let id = BenchmarkId::Camelback2d;
        let bench = handle(id, None).unwrap();
        let d = design(id, 3, seed);
        let tc = TerminationConfig { max_iter, ..id.case_defaults().tc };
        let solver = if ims { SolverKind::Ims } else { SolverKind::Ils };
        let r = run_bo(
            &bench,
            &d,
            solver,
            &KappaPolicy::Fixed { kappa: 2.0 },
            &tc,
            &mut ChaCha8Rng::seed_from_u64(seed),
            &SolverSettings::default(),
        )
        .unwrap();
        prop_assert!(r.iterations_to_termination <= max_iter);
        prop_assert_eq!(r.iterations_to_termination, r.iterations.len());
        prop_assert!(r.iterations.iter().all(|it| bench.bounds.contains(&it.x)));
        let best = r.best_so_far();
        prop_assert!(best.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*best.last().unwrap(), r.best_value);
        if r.termination.is_none() {
            prop_assert!(r.iterations_to_termination == max_iter || r.aborted.is_some());
            prop_assert!(!r.success);
        }
        prop_assert_eq!(r.success, classify_success(&r, &bench));
    }
}
