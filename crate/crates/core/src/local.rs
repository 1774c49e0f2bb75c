//! Informed local (ILS) and informed multi-start (IMS) inner solvers.

use rand::Rng;

use crate::acquisition::AcquisitionContext;
use crate::qn::{bounded_qn_minimize, QnOptions};
use crate::sobol::sobol_points;

pub use crate::qn::LocalSolveResult;

/// Sobol candidates screened by the initializer.
pub const N_INIT_CANDIDATES: usize = 20;

/// Standardized scores `(mean - v_i) / std` of LCB values, so lower LCB gets
/// a higher score. `None` when the sample standard deviation is below 1e-12.
pub fn standardized_scores(lcb: &[f64]) -> Option<Vec<f64>> {
    let n = lcb.len();
    if n < 2 {
        return None;
    }
    let mean = lcb.iter().sum::<f64>() / n as f64;
    let var = lcb.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    if !(std >= 1e-12) {
        return None;
    }
    Some(lcb.iter().map(|v| (mean - v) / std).collect())
}

/// Softmax with temperature 1.
pub fn softmax_weights(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|v| v / total).collect()
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Picks a starting point among the Sobol candidates, favouring low LCB.
pub fn informed_initial_point<R: Rng + ?Sized>(
    ctx: &AcquisitionContext<'_>,
    rng: &mut R,
) -> Vec<f64> {
    let candidates = sobol_points(N_INIT_CANDIDATES, ctx.dim())
        .expect("inner problems are limited to Sobol-supported dimensions");
    let lcb: Vec<f64> = candidates.iter().map(|c| ctx.value(c)).collect();
    let idx = match standardized_scores(&lcb) {
        Some(scores) => sample_index(&softmax_weights(&scores), rng),
        None => rng.random_range(0..candidates.len()),
    };
    candidates[idx].clone()
}

pub fn ils_minimize<R: Rng + ?Sized>(
    ctx: &AcquisitionContext<'_>,
    rng: &mut R,
    opts: &QnOptions,
) -> LocalSolveResult {
    let x0 = informed_initial_point(ctx, rng);
    bounded_qn_minimize(|x| ctx.value_grad(x), &x0, opts)
}

/// Best of `restarts` independent ILS solves; ties go to the earliest.
pub fn ims_minimize<R: Rng + ?Sized>(
    ctx: &AcquisitionContext<'_>,
    rng: &mut R,
    restarts: usize,
    opts: &QnOptions,
) -> LocalSolveResult {
    let mut best: Option<LocalSolveResult> = None;
    let mut evals = 0;
    for _ in 0..restarts.max(1) {
        let r = ils_minimize(ctx, rng, opts);
        evals += r.n_evals;
        let better = match &best {
            None => true,
            Some(b) => r.value < b.value || (!b.value.is_finite() && r.value.is_finite()),
        };
        if better {
            best = Some(r);
        }
    }
    let mut best = best.expect("at least one restart");
    best.n_evals = evals;
    best
}
