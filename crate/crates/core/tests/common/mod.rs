#![allow(dead_code)]

use bo_lab::gp::{fit, FitOptions, GpModel, KernelHyper, ScaledDataset};
use bo_lab::SearchBox;
use rand::Rng;

/// 1D model whose mean has a deep basin near 0.2 and a shallower one near
/// 0.8.
pub fn bimodal_model() -> GpModel {
    let xs: Vec<Vec<f64>> = [0.0, 0.2, 0.5, 0.8, 1.0].iter().map(|&v| vec![v]).collect();
    let ys = [1.0, -1.0, 1.0, -0.9, 1.0];
    let data = ScaledDataset::new(&xs, &ys, &SearchBox::cube(1, 0.0, 1.0)).unwrap();
    let hyper = KernelHyper {
        lengthscales: vec![0.15],
        signal_variance: 1.0,
    };
    GpModel::new(hyper, data).unwrap()
}

/// Model fitted to `n` uniform points of a random smooth function.
pub fn random_model<R: Rng>(rng: &mut R, dim: usize, n: usize) -> GpModel {
    let freq: Vec<f64> = (0..dim).map(|_| rng.random_range(2.0..8.0)).collect();
    let phase: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..6.0)).collect();
    let xs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            x.iter()
                .enumerate()
                .map(|(d, v)| (freq[d] * v + phase[d]).sin() + 0.5 * v * v)
                .sum()
        })
        .collect();
    fit(&xs, &ys, &SearchBox::cube(dim, 0.0, 1.0), None, &FitOptions::default()).unwrap()
}

/// Grid minimum of `f` over `n + 1` equispaced points of `[lo, hi]`, with
/// the largest jump between neighbours as a crude grid-error estimate.
pub fn grid_min_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64, f64) {
    let mut best = (lo, f64::INFINITY);
    let mut jump: f64 = 0.0;
    let mut prev = f64::NAN;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let v = f(x);
        if i > 0 {
            jump = jump.max((v - prev).abs());
        }
        prev = v;
        if v < best.1 {
            best = (x, v);
        }
    }
    (best.0, best.1, jump)
}

/// Local maximum of the bimodal mean between its two basins.
pub fn basin_boundary(model: &GpModel) -> f64 {
    let (x, _, _) = grid_min_1d(|x| -model.mean_std(&[x]).0, 0.3, 0.7, 40_000);
    x
}
