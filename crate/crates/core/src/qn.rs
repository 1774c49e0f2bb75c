//! Limited-memory quasi-Newton minimization under box constraints.
//!
//! Search directions come from the usual two-loop recursion restricted to
//! the free variables; variables sitting on a bound with the gradient pushing
//! outwards are held fixed. Steps follow the projected path
//! `P(x + αd)` with Armijo backtracking, so every iterate is feasible by
//! construction and the objective never increases.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnOptions {
    pub max_iter: usize,
    /// Infinity-norm tolerance on the projected gradient.
    pub pg_tol: f64,
    /// Relative objective decrease below which the run counts as converged.
    pub f_rel_tol: f64,
    pub memory: usize,
    pub c1: f64,
    pub max_backtracks: usize,
}

impl Default for QnOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            pg_tol: 1e-8,
            f_rel_tol: 1e-13,
            memory: 10,
            c1: 1e-4,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSolveResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub n_evals: usize,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient_norm(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
        .fold(0.0, f64::max)
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0`.
///
/// `f` returns the value and gradient. Non-finite values are treated as
/// infeasible trial points and trigger backtracking. When no acceptable
/// step can be found the best iterate is returned with `converged = false`.
pub fn minimize_bounded<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &QnOptions,
) -> LocalSolveResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let (mut fx, mut g) = f(&x);
    let mut n_evals = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return LocalSolveResult {
            x,
            value: fx,
            n_evals,
            iterations: 0,
            converged: false,
        };
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        if projected_gradient_norm(&x, &g, lower, upper) <= opts.pg_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let mask = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(&free)
                .map(|(&a, &keep)| if keep { a } else { 0.0 })
                .collect()
        };

        // Two-loop recursion on the free subspace.
        let mut q = mask(&g);
        let mut alphas = Vec::with_capacity(memory.len());
        for (s, y, rho) in memory.iter().rev() {
            let a = rho * dot(&mask(s), &q);
            for (qi, yi) in q.iter_mut().zip(mask(y)) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let gamma = memory
            .back()
            .map(|(s, y, _)| {
                let (sm, ym) = (mask(s), mask(y));
                let yy = dot(&ym, &ym);
                if yy > 0.0 {
                    dot(&sm, &ym) / yy
                } else {
                    1.0
                }
            })
            .filter(|v| v.is_finite() && *v > 0.0)
            .unwrap_or(1.0);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
        for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(&mask(y), &q);
            for (qi, si) in q.iter_mut().zip(mask(s)) {
                *qi += (a - b) * si;
            }
        }
        let mut d: Vec<f64> = mask(&q).iter().map(|v| -v).collect();
        if !(dot(&d, &g) < 0.0) {
            memory.clear();
            d = mask(&g).iter().map(|v| -v).collect();
        }
        let mut alpha = if memory.is_empty() {
            let dn = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if dn > 0.0 {
                (1.0 / dn).min(1.0)
            } else {
                1.0
            }
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            project(&mut xt, lower, upper);
            let step: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
            if step.iter().all(|v| *v == 0.0) {
                break;
            }
            let (ft, gt) = f(&xt);
            n_evals += 1;
            if ft.is_finite()
                && gt.iter().all(|v| v.is_finite())
                && ft <= fx + opts.c1 * dot(&g, &step)
                && ft <= fx
            {
                accepted = Some((xt, ft, gt, step));
                break;
            }
            alpha *= 0.5;
        }

        let Some((xt, ft, gt, s)) = accepted else {
            break;
        };
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == opts.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - ft;
        x = xt;
        g = gt;
        let scale = fx.abs().max(ft.abs()).max(1.0);
        fx = ft;
        if decrease <= opts.f_rel_tol * scale {
            converged = true;
            break;
        }
    }

    if !converged && projected_gradient_norm(&x, &g, lower, upper) <= opts.pg_tol {
        converged = true;
    }

    LocalSolveResult {
        x,
        value: fx,
        n_evals,
        iterations,
        converged,
    }
}

/// [`minimize_bounded`] on the unit box `[0,1]^D`.
pub fn bounded_qn_minimize<F>(f: F, x0: &[f64], opts: &QnOptions) -> LocalSolveResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let lower = vec![0.0; x0.len()];
    let upper = vec![1.0; x0.len()];
    minimize_bounded(f, x0, &lower, &upper, opts)
}
