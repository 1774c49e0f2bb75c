//! GKLS-style generator of twice continuously differentiable multimodal
//! functions on `[-1, 1]^D`.
//!
//! A paraboloid `‖x - T‖² + t_v` is perturbed inside disjoint balls. Inside
//! the ball around minimizer `M` with radius `ρ`, the function along the ray
//! `x = M + s·u` is a quintic in `s` that equals the prescribed minimum value
//! at `s = 0`, has zero slope there, and matches the paraboloid's value, slope
//! and curvature at `s = ρ`. The vertex `T` counts as one of the `h` minima,
//! the global minimizer (value −1) sits at distance `d` from it and the rest
//! are drawn at random.
//!
//! Every ball is certified on a fine radial grid before the instance is
//! accepted: the perturbation stays above the minimum value, increases
//! monotonically on the ray pointing away from the vertex and has a single
//! hump on the ray pointing at it. Because the quintic is affine in
//! `c = ⟨u, M - T⟩`, those two rays bound every other direction, so no
//! spurious minima appear.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_ATTEMPTS: usize = 2000;
const CERT_GRID: usize = 2000;
/// Candidate ratios `b2 / A` for the quadratic coefficient, tried in order.
const CURVATURE_LADDER: [f64; 5] = [1.0, 0.5, 2.0, 0.25, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GklsParams {
    pub dim: usize,
    /// Distance from the global minimizer to the paraboloid vertex.
    pub d_dist: f64,
    /// Radius of the global minimizer's attraction region.
    pub r_attr: f64,
    /// Number of local minima, the vertex and the global one included.
    pub h: usize,
    pub seed: u64,
    #[serde(default)]
    pub vertex_value: f64,
}

impl GklsParams {
    pub fn new(dim: usize, d_dist: f64, r_attr: f64, h: usize, seed: u64) -> Self {
        Self {
            dim,
            d_dist,
            r_attr,
            h,
            seed,
            vertex_value: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.dim) {
            return Err(Error::InvalidInput(format!(
                "GKLS dimension must be in 2..=8, got {}",
                self.dim
            )));
        }
        if !(self.r_attr > 0.0 && self.r_attr < self.d_dist) {
            return Err(Error::InvalidInput(format!(
                "GKLS needs 0 < r_attr < d_dist, got r_attr={} d_dist={}",
                self.r_attr, self.d_dist
            )));
        }
        if self.h < 2 {
            return Err(Error::InvalidInput("GKLS needs h >= 2".into()));
        }
        if !self.vertex_value.is_finite() || self.vertex_value <= -1.0 {
            return Err(Error::InvalidInput(
                "GKLS vertex value must be finite and above -1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GklsMinimizer {
    pub center: Vec<f64>,
    pub value: f64,
    pub radius: f64,
    /// Quadratic coefficient of the radial quintic, in units of `s/ρ`.
    pub b2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GklsInstance {
    pub params: GklsParams,
    pub vertex: Vec<f64>,
    /// Index 0 is the global minimizer.
    pub minimizers: Vec<GklsMinimizer>,
}

/// Radial quintic coefficients `(b2, b3, b4, b5)` in `z = s/ρ` along a ray
/// with `c = ⟨u, M - T⟩`, where `a = ‖M - T‖² + t_v - f_M`.
fn quintic(rho: f64, c: f64, a: f64, b2: f64) -> [f64; 4] {
    let q0 = rho * rho + 2.0 * c * rho + a;
    let q1 = rho * (2.0 * rho + 2.0 * c);
    let q2 = 2.0 * rho * rho;
    let r0 = q0 - b2;
    let r1 = q1 - 2.0 * b2;
    let r2 = q2 - 2.0 * b2;
    [
        b2,
        10.0 * r0 - 4.0 * r1 + 0.5 * r2,
        -15.0 * r0 + 7.0 * r1 - r2,
        6.0 * r0 - 3.0 * r1 + 0.5 * r2,
    ]
}

fn poly(b: &[f64; 4], z: f64) -> f64 {
    z * z * (b[0] + z * (b[1] + z * (b[2] + z * b[3])))
}

fn poly_slope(b: &[f64; 4], z: f64) -> f64 {
    z * (2.0 * b[0] + z * (3.0 * b[1] + z * (4.0 * b[2] + z * 5.0 * b[3])))
}

/// Grid certificate described in the module docs.
fn certify(rho: f64, l: f64, a: f64, b2: f64) -> bool {
    let away = quintic(rho, l, a, b2);
    let toward = quintic(rho, -l, a, b2);
    let mut sign_changes = 0;
    let mut prev_sign = 1.0;
    for i in 1..=CERT_GRID {
        let z = i as f64 / CERT_GRID as f64;
        if poly(&away, z) <= 0.0 || poly(&toward, z) <= 0.0 {
            return false;
        }
        if poly_slope(&away, z) <= 0.0 {
            return false;
        }
        let s = poly_slope(&toward, z);
        let sign = if s > 0.0 { 1.0 } else { -1.0 };
        if sign != prev_sign {
            sign_changes += 1;
            prev_sign = sign;
        }
    }
    sign_changes <= 1
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn face_distance(x: &[f64]) -> f64 {
    x.iter().map(|v| 1.0 - v.abs()).fold(f64::INFINITY, f64::min)
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl GklsInstance {
    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn global_minimizer(&self) -> &[f64] {
        &self.minimizers[0].center
    }

    /// All `h` local minimizers: the vertex followed by the ball centres.
    pub fn local_minimizers(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.vertex.clone()];
        out.extend(self.minimizers.iter().map(|m| m.center.clone()));
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let tv = self.params.vertex_value;
        for m in &self.minimizers {
            let s = dist(x, &m.center);
            if s >= m.radius {
                continue;
            }
            if s == 0.0 {
                return m.value;
            }
            let mt: Vec<f64> = m.center.iter().zip(&self.vertex).map(|(a, b)| a - b).collect();
            let c = x
                .iter()
                .zip(&m.center)
                .zip(&mt)
                .map(|((xi, mi), di)| (xi - mi) * di)
                .sum::<f64>()
                / s;
            let a = mt.iter().map(|v| v * v).sum::<f64>() + tv - m.value;
            let b = quintic(m.radius, c, a, m.b2);
            return m.value + poly(&b, s / m.radius);
        }
        x.iter()
            .zip(&self.vertex)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            + tv
    }
}

/// Finds a certified quadratic coefficient for a ball, if any rung works.
fn certified_b2(rho: f64, l: f64, a: f64) -> Option<f64> {
    CURVATURE_LADDER
        .iter()
        .map(|theta| theta * a)
        .find(|&b2| certify(rho, l, a, b2))
}

pub fn gkls_generate(params: &GklsParams) -> Result<GklsInstance> {
    params.validate()?;
    let dim = params.dim;
    let r = params.r_attr;
    let tv = params.vertex_value;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    // Instances of different dimension with a shared seed stay independent.
    rng.set_stream(dim as u64);

    for _ in 0..MAX_ATTEMPTS {
        let Some(inst) = try_generate(params, dim, r, tv, &mut rng) else {
            continue;
        };
        return Ok(inst);
    }
    Err(Error::InfeasibleGeometry {
        attempts: MAX_ATTEMPTS,
        reason: format!(
            "could not place {} disjoint certified regions in [-1,1]^{} with d={} r={}",
            params.h - 1,
            dim,
            params.d_dist,
            r
        ),
    })
}

fn try_generate(
    params: &GklsParams,
    dim: usize,
    r: f64,
    tv: f64,
    rng: &mut ChaCha8Rng,
) -> Option<GklsInstance> {
    let vertex: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let u = random_direction(rng, dim);
    let global: Vec<f64> = vertex
        .iter()
        .zip(&u)
        .map(|(t, ui)| t + params.d_dist * ui)
        .collect();
    if face_distance(&global) <= r {
        return None;
    }
    let a = params.d_dist * params.d_dist + tv + 1.0;
    let b2 = certified_b2(r, params.d_dist, a)?;
    let mut minimizers = vec![GklsMinimizer {
        center: global,
        value: -1.0,
        radius: r,
        b2,
    }];

    let mut tries = 0;
    while minimizers.len() < params.h - 1 {
        tries += 1;
        if tries > 500 * params.h {
            return None;
        }
        let center: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l = dist(&center, &vertex);
        let gap = minimizers
            .iter()
            .map(|m| dist(&center, &m.center) - m.radius)
            .fold(f64::INFINITY, f64::min);
        let rho = r.min(0.99 * face_distance(&center)).min(0.5 * l).min(0.99 * gap);
        if rho < 0.25 * r {
            continue;
        }
        // Stay strictly below the paraboloid on the ball's boundary sphere.
        let boundary_min = (l - rho).powi(2) + tv;
        let value = -1.0 + (boundary_min + 1.0) * rng.random_range(0.1..0.9);
        let a = l * l + tv - value;
        let Some(b2) = certified_b2(rho, l, a) else {
            continue;
        };
        minimizers.push(GklsMinimizer {
            center,
            value,
            radius: rho,
            b2,
        });
    }
    Some(GklsInstance {
        params: params.clone(),
        vertex,
        minimizers,
    })
}
