//! Interval enclosures of the kernel and the GP posterior over boxes.
//!
//! Every operation rounds outwards by at least one ulp. The posterior
//! enclosures intersect a natural interval extension with a mean-value form
//! around the box centre; both are valid, and the mean-value form shrinks
//! quadratically with the box width.

use std::ops::{Add, Mul, Sub};

use crate::gp::{matern52, matern52_slope_factor, GpModel, KernelHyper};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Widens by `slack` on both sides plus one ulp.
    pub fn inflate(self, slack: f64) -> Self {
        Self {
            lo: (self.lo - slack).next_down(),
            hi: (self.hi + slack).next_up(),
        }
    }

    fn outward(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.next_down(),
            hi: hi.next_up(),
        }
    }

    /// Intersection of two enclosures of the same quantity. Rounding can make
    /// tight enclosures miss each other by an ulp; the hull is kept then.
    pub fn intersect(self, other: Self) -> Self {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Self { lo, hi }
        } else {
            Self {
                lo: self.lo.min(other.lo),
                hi: self.hi.max(other.hi),
            }
        }
    }

    pub fn scale(self, c: f64) -> Self {
        if c >= 0.0 {
            Self::outward(self.lo * c, self.hi * c)
        } else {
            Self::outward(self.hi * c, self.lo * c)
        }
    }

    /// Lower endpoint of `c · self` for a scalar `c`.
    fn scaled_lo(&self, c: f64) -> f64 {
        if c >= 0.0 {
            c * self.lo
        } else {
            c * self.hi
        }
    }

    fn scaled_hi(&self, c: f64) -> f64 {
        if c >= 0.0 {
            c * self.hi
        } else {
            c * self.lo
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::outward(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::outward(lo, hi)
    }
}

const REL_SLACK: f64 = 8.0 * f64::EPSILON;

/// Range of the lengthscale-weighted distance from any point of `bx` to `p`.
pub fn distance_over_box(bx: &[Interval], p: &[f64], hyper: &KernelHyper) -> Interval {
    let mut near = 0.0;
    let mut far = 0.0;
    for ((iv, &pi), &l) in bx.iter().zip(p).zip(&hyper.lengthscales) {
        let a = (iv.lo - pi).abs();
        let b = (iv.hi - pi).abs();
        let dmin = if iv.contains(pi) { 0.0 } else { a.min(b) };
        let dmax = a.max(b);
        near += (dmin / l) * (dmin / l);
        far += (dmax / l) * (dmax / l);
    }
    Interval {
        lo: (near.sqrt() * (1.0 - REL_SLACK)).max(0.0),
        hi: far.sqrt() * (1.0 + REL_SLACK),
    }
}

/// Enclosure of `k(x, p)` for `x` in `bx`, using monotonicity in distance.
pub fn interval_kernel_over_box(bx: &[Interval], p: &[f64], hyper: &KernelHyper) -> Interval {
    let r = distance_over_box(bx, p, hyper);
    kernel_over_distance(r, hyper.signal_variance)
}

fn kernel_over_distance(r: Interval, signal_variance: f64) -> Interval {
    Interval {
        lo: matern52(r.hi, signal_variance) * (1.0 - REL_SLACK),
        hi: (matern52(r.lo, signal_variance) * (1.0 + REL_SLACK)).min(signal_variance.next_up()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorEnclosure {
    pub mean: Interval,
    pub var: Interval,
    pub std: Interval,
}

/// Reusable scratch space for repeated enclosure evaluations.
#[derive(Default)]
pub struct EnclosureWorkspace {
    k: Vec<Interval>,
    dk: Vec<Interval>,
    v: Vec<Interval>,
    kc: Vec<f64>,
    a: Vec<f64>,
    centre: Vec<f64>,
    radius: Vec<Interval>,
}

/// Kernel and kernel-gradient enclosures for every training point, plus the
/// box centre, its kernel vector and the centred radius intervals.
fn prepare(model: &GpModel, bx: &[Interval], ws: &mut EnclosureWorkspace) {
    let hyper = &model.hyper;
    let dim = model.dim();
    let sf2 = hyper.signal_variance;
    ws.k.clear();
    ws.dk.clear();
    ws.kc.clear();
    ws.centre.clear();
    ws.radius.clear();
    ws.centre.extend(bx.iter().map(Interval::mid));
    ws.radius.extend(
        bx.iter()
            .zip(&ws.centre)
            .map(|(iv, c)| Interval::outward(iv.lo - c, iv.hi - c)),
    );
    for xi in &model.data.x {
        let r = distance_over_box(bx, xi, hyper);
        ws.k.push(kernel_over_distance(r, sf2));
        ws.kc
            .push(matern52(hyper.scaled_distance(&ws.centre, xi), sf2));
        let phi = Interval {
            lo: sf2 * matern52_slope_factor(r.hi) * (1.0 - REL_SLACK),
            hi: sf2 * matern52_slope_factor(r.lo) * (1.0 + REL_SLACK),
        };
        for d in 0..dim {
            let l2 = hyper.lengthscales[d] * hyper.lengthscales[d];
            let delta = Interval::outward(bx[d].lo - xi[d], bx[d].hi - xi[d]);
            ws.dk.push((phi * delta).scale(-1.0 / l2));
        }
    }
}

/// Enclosure of `Σ aᵢ k(x, xᵢ)` over the box: the sign-split natural bound
/// intersected with the mean-value form around the centre.
fn weighted_kernel_sum(a: &[f64], ws: &EnclosureWorkspace, sf2: f64) -> Interval {
    let dim = ws.centre.len();
    let mut nat_lo = 0.0;
    let mut nat_hi = 0.0;
    let mut at_c = 0.0;
    let mut abs_a = 0.0;
    for ((ki, &kc), &ai) in ws.k.iter().zip(&ws.kc).zip(a) {
        nat_lo += ki.scaled_lo(ai);
        nat_hi += ki.scaled_hi(ai);
        at_c += ai * kc;
        abs_a += ai.abs();
    }
    let slack = 1e-13 * (1.0 + abs_a * sf2) + REL_SLACK * (nat_lo.abs() + nat_hi.abs());
    let nat = Interval { lo: nat_lo, hi: nat_hi }.inflate(slack);
    let mut mv = Interval::point(at_c);
    for d in 0..dim {
        let mut g_lo = 0.0;
        let mut g_hi = 0.0;
        for (i, &ai) in a.iter().enumerate() {
            let dk = ws.dk[i * dim + d];
            g_lo += dk.scaled_lo(ai);
            g_hi += dk.scaled_hi(ai);
        }
        mv = mv + Interval::outward(g_lo, g_hi) * ws.radius[d];
    }
    nat.intersect(mv.inflate(slack))
}

/// Lower bound on `q(x) = kᵀ(K + jitter·I)⁻¹k` over the box.
///
/// `q(x) = max_u 2uᵀk(x) - uᵀKu`, so any `u` gives a valid minorant; with
/// `u = K⁻¹k(c)` it is the tangent at the centre and its error shrinks
/// quadratically with the box, independent of how ill-conditioned `K` is.
/// Each single training point (`u ∝ eⱼ`) gives `k_j(x)²/K_jj`, which is
/// tighter on large boxes near data.
fn quad_form_lower(model: &GpModel, ws: &mut EnclosureWorkspace) -> f64 {
    let sf2 = model.hyper.signal_variance;
    let gram = model.gram();
    let n = ws.k.len();
    let u = model.solve(&ws.kc);
    let mut ugu = 0.0;
    let mut ugu_abs = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        let mut row_abs = 0.0;
        for j in 0..n {
            let g = gram[(i, j)];
            row += g * u[j];
            row_abs += (g * u[j]).abs();
        }
        ugu += u[i] * row;
        ugu_abs += (u[i] * row_abs).abs();
    }
    let ugu_hi = ugu + 4.0 * (n as f64 + 2.0) * f64::EPSILON * ugu_abs + 1e-300;
    ws.a.clear();
    ws.a.extend(u.iter().map(|v| 2.0 * v));
    let lin = weighted_kernel_sum(&ws.a, ws, sf2);
    let tangent = lin.lo - ugu_hi;

    let single = ws
        .k
        .iter()
        .enumerate()
        .map(|(j, kj)| kj.lo * kj.lo / gram[(j, j)] * (1.0 - REL_SLACK))
        .fold(0.0, f64::max);
    tangent.max(single).max(0.0)
}

/// Sound enclosures of the posterior mean, variance and standard deviation
/// over the scaled box `bx`.
pub fn interval_posterior(model: &GpModel, bx: &[Interval]) -> PosteriorEnclosure {
    interval_posterior_with(model, bx, &mut EnclosureWorkspace::default())
}

pub fn interval_posterior_with(
    model: &GpModel,
    bx: &[Interval],
    ws: &mut EnclosureWorkspace,
) -> PosteriorEnclosure {
    let dim = model.dim();
    let n = model.data.len();
    let sf2 = model.hyper.signal_variance;
    let k_inv = model.k_inv();
    prepare(model, bx, ws);
    let mean = weighted_kernel_sum(model.weights(), ws, sf2);

    // Upper side of the quadratic form through v = K⁻¹k as intervals.
    ws.v.clear();
    let mut kinv_max = 0.0f64;
    for i in 0..n {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for j in 0..n {
            let a = k_inv[(i, j)];
            kinv_max = kinv_max.max(a.abs());
            lo += ws.k[j].scaled_lo(a);
            hi += ws.k[j].scaled_hi(a);
        }
        let s = REL_SLACK * (lo.abs() + hi.abs());
        ws.v.push(Interval::outward(lo - s, hi + s));
    }
    let mut qf_nat = Interval::point(0.0);
    for (ki, vi) in ws.k.iter().zip(&ws.v) {
        qf_nat = qf_nat + *ki * *vi;
    }
    let (_, qf_c) = model.mean_and_quad_form(&ws.centre);
    let mut qf_mv = Interval::point(qf_c);
    for d in 0..dim {
        let mut g = Interval::point(0.0);
        for i in 0..n {
            g = g + ws.v[i] * ws.dk[i * dim + d];
        }
        qf_mv = qf_mv + g.scale(2.0) * ws.radius[d];
    }
    let qf_slack = 1e-14 * sf2 * (1.0 + n as f64 * kinv_max * sf2) + 1e-15;
    let qf = qf_nat.intersect(qf_mv).inflate(qf_slack);
    let qf_lo = qf.lo.max(quad_form_lower(model, ws));
    let qf_hi = qf.hi.max(qf_lo);

    let var = Interval {
        lo: (sf2 - qf_hi).clamp(0.0, sf2),
        hi: (sf2 - qf_lo).clamp(0.0, sf2),
    };
    let std = Interval {
        lo: var.lo.sqrt(),
        hi: var.hi.sqrt().next_up(),
    };
    PosteriorEnclosure { mean, var, std }
}

/// `mean.lo - κ·std.hi`: a lower bound on the LCB over the box.
pub fn lcb_lower_bound(model: &GpModel, bx: &[Interval], kappa: f64) -> f64 {
    lcb_lower_bound_with(model, bx, kappa, &mut EnclosureWorkspace::default())
}

/// Same bound as [`lcb_lower_bound`], computing only the two endpoints it
/// needs.
pub fn lcb_lower_bound_with(
    model: &GpModel,
    bx: &[Interval],
    kappa: f64,
    ws: &mut EnclosureWorkspace,
) -> f64 {
    let sf2 = model.hyper.signal_variance;
    prepare(model, bx, ws);
    let mean_lo = weighted_kernel_sum(model.weights(), ws, sf2).lo;
    if kappa == 0.0 {
        return mean_lo;
    }
    let qf_lo = quad_form_lower(model, ws);
    let std_hi = (sf2 - qf_lo).clamp(0.0, sf2).sqrt().next_up();
    mean_lo - kappa * std_hi
}
