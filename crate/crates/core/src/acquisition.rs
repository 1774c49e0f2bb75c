//! Lower confidence bound `μ - κσ`, minimized by every inner solver.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KappaPolicy {
    Fixed {
        kappa: f64,
    },
    /// `scale · √(2 ln(M t² π² / (6δ)))`.
    ScheduleS {
        m: f64,
        delta: f64,
        scale: f64,
    },
    /// `√(0.2 D ln(2t))`.
    ScheduleK {
        dim: usize,
    },
}

impl KappaPolicy {
    /// Schedule S with `M = 1e6`, `δ = 0.1` and the `1/√5` down-scaling.
    pub fn schedule_s_default() -> Self {
        KappaPolicy::ScheduleS {
            m: 1e6,
            delta: 0.1,
            scale: 1.0 / 5f64.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            KappaPolicy::Fixed { kappa } => kappa.is_finite() && kappa >= 0.0,
            KappaPolicy::ScheduleS { m, delta, scale } => {
                m >= 1.0 && delta > 0.0 && delta < 1.0 && scale > 0.0
            }
            KappaPolicy::ScheduleK { dim } => dim >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid kappa policy {self:?}")))
        }
    }

    /// κ at outer iteration `t` (1-based).
    pub fn kappa_at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            KappaPolicy::Fixed { kappa } => kappa,
            KappaPolicy::ScheduleS { m, delta, scale } => {
                scale * (2.0 * (m * t * t * PI * PI / (6.0 * delta)).ln()).sqrt()
            }
            KappaPolicy::ScheduleK { dim } => (0.2 * dim as f64 * (2.0 * t).ln()).sqrt(),
        }
    }
}

/// A trained model paired with the κ in force at iteration `t`.
#[derive(Clone, Debug)]
pub struct AcquisitionContext<'a> {
    pub model: &'a GpModel,
    pub policy: KappaPolicy,
    pub t: usize,
    kappa: f64,
}

impl<'a> AcquisitionContext<'a> {
    pub fn new(model: &'a GpModel, policy: KappaPolicy, t: usize) -> Self {
        let t = t.max(1);
        let kappa = policy.kappa_at(t);
        Self {
            model,
            policy,
            t,
            kappa,
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let (m, s) = self.model.mean_std(x);
        m - self.kappa * s
    }

    pub fn value_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        lcb_value_grad(self, x)
    }
}

pub fn lcb_value_grad(ctx: &AcquisitionContext<'_>, x: &[f64]) -> (f64, Vec<f64>) {
    let p = ctx.model.posterior(x);
    let k = ctx.kappa;
    let grad = p
        .grad_mean
        .iter()
        .zip(&p.grad_std)
        .map(|(gm, gs)| gm - k * gs)
        .collect();
    (p.mean - k * p.std, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit, FitOptions};
    use crate::space::SearchBox;

    #[test]
    fn schedule_s_anchors() {
        let s = KappaPolicy::schedule_s_default();
        assert!((s.kappa_at(1) - 2.58).abs() < 0.005);
        assert!((s.kappa_at(30) - 3.06).abs() < 0.005);
    }

    #[test]
    fn schedule_k_natural_log() {
        let k = KappaPolicy::ScheduleK { dim: 2 };
        assert!((k.kappa_at(1) - (0.4f64 * 2f64.ln()).sqrt()).abs() < 1e-15);
        assert!((k.kappa_at(1) - 0.527).abs() < 5e-4);
    }

    #[test]
    fn schedules_are_nondecreasing() {
        for p in [KappaPolicy::schedule_s_default(), KappaPolicy::ScheduleK { dim: 3 }] {
            let v: Vec<f64> = (1..200).map(|t| p.kappa_at(t)).collect();
            assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn invalid_policies_rejected() {
        assert!(KappaPolicy::Fixed { kappa: -1.0 }.validate().is_err());
        assert!(KappaPolicy::ScheduleS { m: 1e6, delta: 1.5, scale: 1.0 }.validate().is_err());
        assert!(KappaPolicy::ScheduleK { dim: 0 }.validate().is_err());
    }

    #[test]
    fn lcb_arithmetic_and_kappa_zero() {
        let b = SearchBox::cube(1, 0.0, 1.0);
        let xs = vec![vec![0.1], vec![0.6], vec![0.9]];
        let model = fit(&xs, &[1.0, -0.5, 0.3], &b, None, &FitOptions::default()).unwrap();
        let x = [0.35];
        let (m, s) = model.mean_std(&x);
        let ctx2 = AcquisitionContext::new(&model, KappaPolicy::Fixed { kappa: 2.0 }, 1);
        assert!((ctx2.value(&x) - (m - 2.0 * s)).abs() < 1e-12);
        let ctx0 = AcquisitionContext::new(&model, KappaPolicy::Fixed { kappa: 0.0 }, 1);
        assert_eq!(ctx0.value(&x), m);
    }
}
