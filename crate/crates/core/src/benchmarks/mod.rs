//! Test functions, their reference optima, per-benchmark case-study defaults
//! and Latin hypercube initial designs.

pub mod gkls;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::KappaPolicy;
use crate::bo::{BenchmarkHandle, ReferenceOptimum, TerminationConfig};
use crate::error::{Error, Result};
use crate::space::SearchBox;

pub use gkls::{gkls_generate, GklsInstance, GklsParams};

/// Coefficients of the four-term Müller-Brown potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuellerBrownCoefficients {
    pub amp: [f64; 4],
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [f64; 4],
    pub w1: [f64; 4],
    pub w2: [f64; 4],
}

pub const MUELLER_BROWN: MuellerBrownCoefficients = MuellerBrownCoefficients {
    amp: [-200.0, -100.0, -170.0, 15.0],
    a: [-1.0, -1.0, -6.5, 0.7],
    b: [0.0, 0.0, 11.0, 0.6],
    c: [-10.0, -10.0, -6.5, 0.7],
    w1: [1.0, 0.0, -0.5, -1.0],
    w2: [0.0, 0.5, 1.5, 1.0],
};

/// The three minima of the Müller-Brown potential on `[-1.5,1]×[-0.5,2]`,
/// global first.
pub const MUELLER_BROWN_MINIMA: [([f64; 2], f64); 3] = [
    ([-0.558223638547391, 1.4417258401342812], -146.69951720995402),
    ([0.623499408907467, 0.02803775790407825], -108.1667241168524),
    ([-0.05001081937449356, 0.4666941055274827], -80.76781812965905),
];

pub const CAMELBACK_MINIMIZER: [f64; 2] = [0.08984201368301331, -0.7126564032704135];
pub const CAMELBACK_MIN: f64 = -1.031628453489877;

/// Global minimizer of [`hartmann4`] with the coefficients below.
pub const HARTMANN4_MINIMIZER: [f64; 4] = [
    0.1873952729734667,
    0.1941515293024407,
    0.557917780062569,
    0.26477962417039713,
];
pub const HARTMANN4_MIN: f64 = -3.7298405844855935;

const HARTMANN4_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN4_A: [[f64; 4]; 4] = [
    [10.0, 3.0, 17.0, 3.5],
    [0.05, 10.0, 17.0, 0.1],
    [3.0, 3.5, 1.7, 10.0],
    [17.0, 8.0, 0.05, 10.0],
];
const HARTMANN4_P: [[f64; 4]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124],
    [0.2329, 0.4135, 0.8307, 0.3736],
    [0.2348, 0.1451, 0.3522, 0.2883],
    [0.4047, 0.8828, 0.8732, 0.5743],
];

pub fn mueller_brown(x: &[f64]) -> f64 {
    let k = &MUELLER_BROWN;
    (0..4)
        .map(|i| {
            let dx = x[0] - k.w1[i];
            let dy = x[1] - k.w2[i];
            k.amp[i] * (k.a[i] * dx * dx + k.b[i] * dx * dy + k.c[i] * dy * dy).exp()
        })
        .sum()
}

/// Six-hump camelback.
pub fn camelback(x: &[f64]) -> f64 {
    let (x1, x2) = (x[0], x[1]);
    let x1s = x1 * x1;
    (4.0 - 2.1 * x1s + x1s * x1s / 3.0) * x1s + x1 * x2 + (-4.0 + 4.0 * x2 * x2) * x2 * x2
}

/// Ackley function in `x.len()` dimensions, arranged so the origin gives
/// exactly zero.
pub fn ackley3(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean_cos = x
        .iter()
        .map(|v| (2.0 * std::f64::consts::PI * v).cos())
        .sum::<f64>()
        / n;
    20.0 * (1.0 - (-0.2 * rms).exp()) + std::f64::consts::E * (1.0 - (mean_cos - 1.0).exp())
}

pub fn hartmann4(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..4)
                .map(|j| HARTMANN4_A[i][j] * (x[j] - HARTMANN4_P[i][j]).powi(2))
                .sum();
            HARTMANN4_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BenchmarkId {
    #[serde(rename = "mueller-brown")]
    MuellerBrown,
    #[serde(rename = "camelback-2d")]
    Camelback2d,
    #[serde(rename = "ackley-3d")]
    Ackley3d,
    #[serde(rename = "hartmann-4d")]
    Hartmann4d,
    #[serde(rename = "gkls-2d")]
    Gkls2d,
    #[serde(rename = "gkls-3d")]
    Gkls3d,
    #[serde(rename = "gkls-4d")]
    Gkls4d,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 7] = [
        BenchmarkId::MuellerBrown,
        BenchmarkId::Camelback2d,
        BenchmarkId::Ackley3d,
        BenchmarkId::Hartmann4d,
        BenchmarkId::Gkls2d,
        BenchmarkId::Gkls3d,
        BenchmarkId::Gkls4d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkId::MuellerBrown => "mueller-brown",
            BenchmarkId::Camelback2d => "camelback-2d",
            BenchmarkId::Ackley3d => "ackley-3d",
            BenchmarkId::Hartmann4d => "hartmann-4d",
            BenchmarkId::Gkls2d => "gkls-2d",
            BenchmarkId::Gkls3d => "gkls-3d",
            BenchmarkId::Gkls4d => "gkls-4d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            BenchmarkId::MuellerBrown | BenchmarkId::Camelback2d | BenchmarkId::Gkls2d => 2,
            BenchmarkId::Ackley3d | BenchmarkId::Gkls3d => 3,
            BenchmarkId::Hartmann4d | BenchmarkId::Gkls4d => 4,
        }
    }

    pub fn search_box(self) -> SearchBox {
        match self {
            BenchmarkId::MuellerBrown => SearchBox {
                lower: vec![-1.5, -0.5],
                upper: vec![1.0, 2.0],
            },
            BenchmarkId::Camelback2d => SearchBox {
                lower: vec![-3.0, -2.0],
                upper: vec![3.0, 2.0],
            },
            BenchmarkId::Ackley3d => SearchBox::cube(3, -5.0, 5.0),
            BenchmarkId::Hartmann4d => SearchBox::cube(4, 0.0, 1.0),
            BenchmarkId::Gkls2d | BenchmarkId::Gkls3d | BenchmarkId::Gkls4d => {
                SearchBox::cube(self.dim(), -1.0, 1.0)
            }
        }
    }

    /// Generator parameters for the GKLS entries.
    pub fn gkls_params(self) -> Option<GklsParams> {
        match self {
            BenchmarkId::Gkls2d => Some(GklsParams::new(2, 0.90, 0.40, 10, 12)),
            BenchmarkId::Gkls3d => Some(GklsParams::new(3, 0.66, 0.30, 10, 12)),
            BenchmarkId::Gkls4d => Some(GklsParams::new(4, 0.66, 0.20, 10, 12)),
            _ => None,
        }
    }

    /// Default case-study settings for this benchmark.
    pub fn case_defaults(self) -> CaseDefaults {
        let (n_init, kappa, experiments, runs, eps_x2, eps_f_rel, eps_f_abs) = match self {
            BenchmarkId::MuellerBrown => (3, 2.0, 56, 31, 0.05, 0.01, 0.5),
            BenchmarkId::Camelback2d => (3, 2.0, 41, 31, 0.05, 0.02, 0.05),
            BenchmarkId::Gkls2d => (3, 3.0, 25, 25, 0.05, 0.02, 0.05),
            BenchmarkId::Ackley3d => (4, 2.0, 31, 15, 0.05, 0.02, 0.05),
            BenchmarkId::Gkls3d => (4, 3.0, 25, 25, 0.05, 0.01, 0.02),
            BenchmarkId::Hartmann4d => (5, 2.0, 30, 16, 0.02, 0.02, 0.01),
            BenchmarkId::Gkls4d => (5, 3.0, 25, 25, 0.02, 0.005, 0.01),
        };
        CaseDefaults {
            n_init,
            kappa: KappaPolicy::Fixed { kappa },
            experiments,
            runs_per_experiment: runs,
            tc: TerminationConfig {
                eps_x1: 0.001,
                eps_x2,
                eps_f_rel,
                eps_f_abs,
                max_iter: TerminationConfig::DEFAULT_MAX_ITER,
            },
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = BenchmarkId::ALL.iter().map(|b| b.name()).collect();
                Error::InvalidInput(format!(
                    "unknown benchmark `{s}` (expected one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// Per-benchmark case-study settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseDefaults {
    pub n_init: usize,
    pub kappa: KappaPolicy,
    pub experiments: usize,
    pub runs_per_experiment: usize,
    pub tc: TerminationConfig,
}

/// Global minimizers, global minimum value and success tolerance. GKLS
/// entries are generated from `gkls` (or the registry defaults).
pub fn reference_optimum(
    id: BenchmarkId,
    gkls: Option<&GklsParams>,
) -> Result<(Vec<Vec<f64>>, f64, f64)> {
    let h = handle(id, gkls)?;
    let xs = h.reference_optima.iter().map(|o| o.x.clone()).collect();
    Ok((xs, h.f_star(), h.success_tol))
}

/// Builds the evaluable benchmark. `gkls` overrides the registry's generator
/// parameters and is ignored for analytic functions.
pub fn handle(id: BenchmarkId, gkls: Option<&GklsParams>) -> Result<BenchmarkHandle> {
    let bounds = id.search_box();
    let success_tol = id.case_defaults().tc.eps_f_abs;
    let (objective, optima): (Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>, Vec<ReferenceOptimum>) =
        match id {
            BenchmarkId::MuellerBrown => {
                let (x, f) = MUELLER_BROWN_MINIMA[0];
                (Arc::new(mueller_brown), vec![ReferenceOptimum::new(x.to_vec(), f)])
            }
            BenchmarkId::Camelback2d => {
                let [a, b] = CAMELBACK_MINIMIZER;
                (
                    Arc::new(camelback),
                    vec![
                        ReferenceOptimum::new(vec![a, b], CAMELBACK_MIN),
                        ReferenceOptimum::new(vec![-a, -b], CAMELBACK_MIN),
                    ],
                )
            }
            BenchmarkId::Ackley3d => (
                Arc::new(ackley3),
                vec![ReferenceOptimum::new(vec![0.0; 3], 0.0)],
            ),
            BenchmarkId::Hartmann4d => (
                Arc::new(hartmann4),
                vec![ReferenceOptimum::new(HARTMANN4_MINIMIZER.to_vec(), HARTMANN4_MIN)],
            ),
            BenchmarkId::Gkls2d | BenchmarkId::Gkls3d | BenchmarkId::Gkls4d => {
                let params = match gkls {
                    Some(p) => p.clone(),
                    None => id.gkls_params().expect("GKLS entry"),
                };
                if params.dim != id.dim() {
                    return Err(Error::InvalidInput(format!(
                        "{id} needs GKLS dimension {}, got {}",
                        id.dim(),
                        params.dim
                    )));
                }
                let inst = Arc::new(gkls_generate(&params)?);
                let x = inst.global_minimizer().to_vec();
                let f = inst.eval(&x);
                (
                    Arc::new(move |p: &[f64]| inst.eval(p)),
                    vec![ReferenceOptimum::new(x, f)],
                )
            }
        };
    BenchmarkHandle::new(id.name(), objective, bounds, optima, success_tol)
}

/// Latin hypercube design: one point per stratum in every dimension, strata
/// matched across dimensions by independent random permutations.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, bounds: &SearchBox, rng: &mut R) -> Vec<Vec<f64>> {
    let d = bounds.dim();
    let mut pts = vec![vec![0.0; d]; n];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(rng);
        let (lo, hi) = (bounds.lower[j], bounds.upper[j]);
        for (p, &k) in pts.iter_mut().zip(&strata) {
            let u = (k as f64 + rng.random::<f64>()) / n as f64;
            p[j] = (lo + u * (hi - lo)).clamp(lo, hi);
        }
    }
    pts
}
