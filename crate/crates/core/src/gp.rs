//! Exact noiseless Gaussian-process regression with a Matérn-5/2 kernel.
//!
//! Inputs are mapped affinely onto `[0,1]^D` from the search box and outputs
//! are standardized before fitting; everything in this module works in those
//! scaled units unless a function name says otherwise. The prior mean is zero
//! in scaled space.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qn::{minimize_bounded, QnOptions};
use crate::space::SearchBox;

pub const SQRT5: f64 = 2.236_067_977_499_79;

/// Diagonal jitter tried in order when the Cholesky factorization fails.
pub const JITTER_LADDER: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];

/// Matérn-5/2 covariance at lengthscale-weighted distance `r`.
pub fn matern52(r: f64, signal_variance: f64) -> f64 {
    let sr = SQRT5 * r;
    signal_variance * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}

/// `(5/3)(1 + √5 r) exp(-√5 r)`, the common factor of the kernel's
/// derivatives: `∂k/∂x_d = -σ² φ(r) Δ_d / ℓ_d²`. Nonincreasing in `r`.
pub fn matern52_slope_factor(r: f64) -> f64 {
    let sr = SQRT5 * r;
    (5.0 / 3.0) * (1.0 + sr) * (-sr).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelHyper {
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
}

impl KernelHyper {
    /// Starting point used when no warm start is available.
    pub fn initial(dim: usize) -> Self {
        Self {
            lengthscales: vec![0.5; dim],
            signal_variance: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn scaled_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.lengthscales)
            .map(|((x, y), l)| {
                let d = (x - y) / l;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        matern52(self.scaled_distance(a, b), self.signal_variance)
    }

    fn to_log_params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(self.signal_variance.ln());
        p
    }

    fn from_log_params(p: &[f64]) -> Self {
        let d = p.len() - 1;
        Self {
            lengthscales: p[..d].iter().map(|v| v.exp()).collect(),
            signal_variance: p[d].exp(),
        }
    }
}

/// Box for the hyperparameter search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            lengthscale: (1e-2, 1e2),
            signal_variance: (1e-3, 1e3),
        }
    }
}

impl HyperBounds {
    pub fn clamp(&self, h: &KernelHyper) -> KernelHyper {
        KernelHyper {
            lengthscales: h
                .lengthscales
                .iter()
                .map(|l| l.clamp(self.lengthscale.0, self.lengthscale.1))
                .collect(),
            signal_variance: h
                .signal_variance
                .clamp(self.signal_variance.0, self.signal_variance.1),
        }
    }

    fn log_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![self.lengthscale.0.ln(); dim];
        let mut hi = vec![self.lengthscale.1.ln(); dim];
        lo.push(self.signal_variance.0.ln());
        hi.push(self.signal_variance.1.ln());
        (lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bounds: HyperBounds,
    pub qn: QnOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bounds: HyperBounds::default(),
            qn: QnOptions {
                max_iter: 100,
                pg_tol: 1e-6,
                f_rel_tol: 1e-12,
                ..QnOptions::default()
            },
        }
    }
}

/// Training data in scaled units together with the transforms that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledDataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    pub bounds: SearchBox,
}

impl ScaledDataset {
    pub fn new(raw_x: &[Vec<f64>], raw_y: &[f64], bounds: &SearchBox) -> Result<Self> {
        if raw_x.is_empty() || raw_x.len() != raw_y.len() {
            return Err(Error::InvalidInput(format!(
                "dataset needs matching non-empty inputs/outputs, got {} and {}",
                raw_x.len(),
                raw_y.len()
            )));
        }
        if let Some(p) = raw_x.iter().find(|p| !bounds.contains(p)) {
            return Err(Error::InvalidInput(format!("training input {p:?} lies outside the search box")));
        }
        if raw_y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite training output".into()));
        }
        let n = raw_y.len() as f64;
        let y_mean = raw_y.iter().sum::<f64>() / n;
        let var = raw_y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_std = if var.sqrt() < 1e-12 { 1.0 } else { var.sqrt() };
        Ok(Self {
            x: raw_x.iter().map(|p| bounds.to_scaled(p)).collect(),
            y: raw_y.iter().map(|v| (v - y_mean) / y_std).collect(),
            y_mean,
            y_std,
            bounds: bounds.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn unscale_output(&self, v: f64) -> f64 {
        v * self.y_std + self.y_mean
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub std: f64,
    pub grad_mean: Vec<f64>,
    pub grad_std: Vec<f64>,
}

fn kernel_matrix(hyper: &KernelHyper, x: &[Vec<f64>]) -> DMatrix<f64> {
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hyper.signal_variance;
        for j in 0..i {
            let v = hyper.kernel(&x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn factorize(k: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    for &jitter in &JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(kj) {
            return Ok((c, jitter));
        }
    }
    Err(Error::NotPositiveDefinite {
        jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(y);
    let n = y.len() as f64;
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - log_det_half - 0.5 * n * (2.0 * std::f64::consts::PI).ln();
    (lml, alpha)
}

/// Log marginal likelihood `-½ yᵀK⁻¹y - ½ log|K| - (n/2) log 2π` of the
/// standardized outputs, with `K` including the first jitter that factorizes.
pub fn log_marginal_likelihood(hyper: &KernelHyper, data: &ScaledDataset) -> Result<f64> {
    let k = kernel_matrix(hyper, &data.x);
    let (chol, _) = factorize(&k)?;
    Ok(lml_from_factor(&chol, &DVector::from_column_slice(&data.y)).0)
}

/// Negative log marginal likelihood and its gradient in log-parameter space.
fn neg_lml_and_grad(log_params: &[f64], data: &ScaledDataset) -> (f64, Vec<f64>) {
    let hyper = KernelHyper::from_log_params(log_params);
    let dim = hyper.dim();
    let n = data.len();
    let k = kernel_matrix(&hyper, &data.x);
    let Ok((chol, _)) = factorize(&k) else {
        return (f64::INFINITY, vec![0.0; dim + 1]);
    };
    let y = DVector::from_column_slice(&data.y);
    let (lml, alpha) = lml_from_factor(&chol, &y);
    let k_inv = chol.inverse();

    // ∂lml/∂θ = ½ tr((ααᵀ - K⁻¹) ∂K/∂θ)
    let mut grad = vec![0.0; dim + 1];
    for i in 0..n {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let factor = if i == j { 0.5 } else { 1.0 };
            let kij = k[(i, j)];
            grad[dim] += factor * w * kij;
            if i != j {
                let r = hyper.scaled_distance(&data.x[i], &data.x[j]);
                let phi = hyper.signal_variance * matern52_slope_factor(r);
                for d in 0..dim {
                    let l = hyper.lengthscales[d];
                    let delta = data.x[i][d] - data.x[j][d];
                    grad[d] += factor * w * phi * delta * delta / (l * l);
                }
            }
        }
    }
    (-lml, grad.into_iter().map(|g| -g).collect())
}

/// Trained GP. Immutable once built.
#[derive(Clone, Debug)]
pub struct GpModel {
    pub hyper: KernelHyper,
    pub data: ScaledDataset,
    pub jitter: f64,
    chol: Cholesky<f64, Dyn>,
    gram: DMatrix<f64>,
    weights: DVector<f64>,
    k_inv: DMatrix<f64>,
}

impl GpModel {
    pub fn new(hyper: KernelHyper, data: ScaledDataset) -> Result<Self> {
        if hyper.dim() != data.dim() {
            return Err(Error::InvalidInput(format!(
                "hyperparameters have {} lengthscales for {}-dimensional data",
                hyper.dim(),
                data.dim()
            )));
        }
        let mut gram = kernel_matrix(&hyper, &data.x);
        let (chol, jitter) = factorize(&gram)?;
        for i in 0..gram.nrows() {
            gram[(i, i)] += jitter;
        }
        let weights = chol.solve(&DVector::from_column_slice(&data.y));
        let k_inv = chol.inverse();
        Ok(Self {
            hyper,
            data,
            jitter,
            chol,
            gram,
            weights,
            k_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn signal_std(&self) -> f64 {
        self.hyper.signal_variance.sqrt()
    }

    /// Lower Cholesky factor of `K + jitter·I`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// Solution of `(K + jitter·I) w = y`.
    pub fn weights(&self) -> &[f64] {
        self.weights.as_slice()
    }

    /// `K + jitter·I`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Solves `(K + jitter·I) u = rhs` with the stored factor.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut v = DVector::from_column_slice(rhs);
        self.chol.solve_mut(&mut v);
        v.as_slice().to_vec()
    }

    /// Precomputed `(K + jitter·I)⁻¹`.
    pub fn k_inv(&self) -> &DMatrix<f64> {
        &self.k_inv
    }

    fn cross_covariance(&self, x: &[f64]) -> (DVector<f64>, Vec<f64>) {
        let n = self.data.len();
        let mut k = DVector::zeros(n);
        let mut r = Vec::with_capacity(n);
        for (i, xi) in self.data.x.iter().enumerate() {
            let ri = self.hyper.scaled_distance(x, xi);
            k[i] = matern52(ri, self.hyper.signal_variance);
            r.push(ri);
        }
        (k, r)
    }

    /// Posterior mean and standard deviation without gradients.
    pub fn mean_std(&self, x: &[f64]) -> (f64, f64) {
        let (mean, qf) = self.mean_and_quad_form(x);
        let var = (self.hyper.signal_variance - qf).max(0.0);
        (mean, var.sqrt())
    }

    /// Posterior mean and the unclamped quadratic form `k_*ᵀ(K + jitter·I)⁻¹k_*`.
    pub fn mean_and_quad_form(&self, x: &[f64]) -> (f64, f64) {
        let (mut k, _) = self.cross_covariance(x);
        let mean = k.dot(&self.weights);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut k);
        (mean, k.norm_squared())
    }

    pub fn posterior(&self, x: &[f64]) -> Posterior {
        let dim = self.dim();
        let (k, r) = self.cross_covariance(x);
        let mean = k.dot(&self.weights);
        // Same quadratic form as `mean_and_quad_form`, so both paths agree.
        let mut v = k.clone();
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let var = (self.hyper.signal_variance - v.norm_squared()).max(0.0);
        let mut beta = v;
        self.chol.l_dirty().tr_solve_lower_triangular_mut(&mut beta);
        let std = var.sqrt();

        let mut grad_mean = vec![0.0; dim];
        let mut grad_var = vec![0.0; dim];
        for (i, xi) in self.data.x.iter().enumerate() {
            let phi = self.hyper.signal_variance * matern52_slope_factor(r[i]);
            for d in 0..dim {
                let l = self.hyper.lengthscales[d];
                let dk = -phi * (x[d] - xi[d]) / (l * l);
                grad_mean[d] += self.weights[i] * dk;
                grad_var[d] -= 2.0 * beta[i] * dk;
            }
        }
        let grad_std = if std > 1e-150 {
            grad_var.iter().map(|g| g / (2.0 * std)).collect()
        } else {
            vec![0.0; dim]
        };
        Posterior {
            mean,
            std,
            grad_mean,
            grad_std,
        }
    }

    /// Posterior mean and standard deviation in raw output units at a
    /// scaled input.
    pub fn predict_raw(&self, x_scaled: &[f64]) -> (f64, f64) {
        let (m, s) = self.mean_std(x_scaled);
        (self.data.unscale_output(m), s * self.data.y_std)
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        lml_from_factor(&self.chol, &DVector::from_column_slice(&self.data.y)).0
    }
}

/// Fits the GP to raw observations by one bounded quasi-Newton ascent of
/// the marginal likelihood in log-parameter space.
pub fn fit(
    raw_x: &[Vec<f64>],
    raw_y: &[f64],
    bounds: &SearchBox,
    warm_start: Option<&KernelHyper>,
    opts: &FitOptions,
) -> Result<GpModel> {
    let data = ScaledDataset::new(raw_x, raw_y, bounds)?;
    let dim = data.dim();
    let start = match warm_start {
        Some(h) if h.dim() == dim => opts.bounds.clamp(h),
        _ => opts.bounds.clamp(&KernelHyper::initial(dim)),
    };
    let (lo, hi) = opts.bounds.log_box(dim);
    let mut x0 = start.to_log_params();
    if !neg_lml_and_grad(&x0, &data).0.is_finite() {
        x0 = opts.bounds.clamp(&KernelHyper::initial(dim)).to_log_params();
    }
    let res = minimize_bounded(|p| neg_lml_and_grad(p, &data), &x0, &lo, &hi, &opts.qn);
    let hyper = if res.value.is_finite() {
        KernelHyper::from_log_params(&res.x)
    } else {
        KernelHyper::from_log_params(&x0)
    };
    GpModel::new(hyper, data)
}
