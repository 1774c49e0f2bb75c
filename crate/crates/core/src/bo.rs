//! The outer BO loop, its composite termination criterion and the success
//! rule.
//!
//! Every iteration refits the GP (warm-started from the previous
//! hyperparameters), minimizes the LCB with the chosen inner solver in the
//! scaled unit box, evaluates the black box at the raw candidate and then
//! checks the termination criterion against every earlier point.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionContext, KappaPolicy};
use crate::bnb::{bnb_minimize, loosen_policy_update, BnbOptions, BnbStatus, LoosenState};
use crate::error::{Error, Result};
use crate::gp::{fit, FitOptions, KernelHyper};
use crate::local::{ils_minimize, ims_minimize};
use crate::qn::QnOptions;
use crate::space::{dist2, SearchBox};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TerminationConfig {
    pub eps_x1: f64,
    pub eps_x2: f64,
    pub eps_f_rel: f64,
    pub eps_f_abs: f64,
    #[serde(default = "TerminationConfig::default_max_iter")]
    pub max_iter: usize,
}

impl TerminationConfig {
    pub const DEFAULT_MAX_ITER: usize = 150;

    fn default_max_iter() -> usize {
        Self::DEFAULT_MAX_ITER
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::config(format!("tc.{name}"), msg));
        if !(self.eps_x1 > 0.0) {
            return field("eps-x1", "must be positive");
        }
        if !(self.eps_x2 > self.eps_x1) {
            return field("eps-x2", "must exceed eps-x1");
        }
        if !(self.eps_f_rel > 0.0) {
            return field("eps-f-rel", "must be positive");
        }
        if !(self.eps_f_abs > 0.0) {
            return field("eps-f-abs", "must be positive");
        }
        if self.max_iter == 0 {
            return field("max-iter", "must be at least 1");
        }
        Ok(())
    }
}

/// Which clause of the termination criterion fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TcClause {
    /// The candidate nearly repeats an earlier point.
    Tc1,
    /// The candidate is close to an earlier point and barely changes the best
    /// value.
    Tc2,
}

/// Evaluates the termination criterion for candidate `x_t` with value `f_t`
/// against all earlier points. Distances are Euclidean in the scaled unit
/// box, objective tolerances are in raw units. `None` means continue.
pub fn check_termination(
    history_x: &[Vec<f64>],
    history_f: &[f64],
    x_t: &[f64],
    f_t: f64,
    tc: &TerminationConfig,
    bounds: &SearchBox,
) -> Option<TcClause> {
    if history_x.is_empty() {
        return None;
    }
    let u = bounds.to_scaled(x_t);
    let min_dist = history_x
        .iter()
        .map(|p| dist2(&bounds.to_scaled(p), &u))
        .fold(f64::INFINITY, f64::min)
        .sqrt();
    if min_dist < tc.eps_x1 {
        return Some(TcClause::Tc1);
    }
    let best = history_f.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = (f_t - best).abs();
    if min_dist < tc.eps_x2 && (gap < tc.eps_f_rel * best.abs() || gap < tc.eps_f_abs) {
        return Some(TcClause::Tc2);
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub x: Vec<f64>,
    pub f: f64,
}

impl ReferenceOptimum {
    pub fn new(x: Vec<f64>, f: f64) -> Self {
        Self { x, f }
    }
}

pub type Objective = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A black-box objective with its domain and known global optima.
#[derive(Clone)]
pub struct BenchmarkHandle {
    pub name: String,
    pub objective: Objective,
    pub bounds: SearchBox,
    pub reference_optima: Vec<ReferenceOptimum>,
    pub success_tol: f64,
}

impl fmt::Debug for BenchmarkHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkHandle")
            .field("name", &self.name)
            .field("bounds", &self.bounds)
            .field("reference_optima", &self.reference_optima)
            .field("success_tol", &self.success_tol)
            .finish_non_exhaustive()
    }
}

impl BenchmarkHandle {
    /// Checks that every reference optimum lies in the box and that the
    /// objective reproduces its value to 1e-6.
    pub fn new(
        name: impl Into<String>,
        objective: Objective,
        bounds: SearchBox,
        reference_optima: Vec<ReferenceOptimum>,
        success_tol: f64,
    ) -> Result<Self> {
        let name = name.into();
        if reference_optima.is_empty() {
            return Err(Error::InvalidInput(format!("{name}: no reference optimum")));
        }
        for o in &reference_optima {
            if !bounds.contains(&o.x) {
                return Err(Error::InvalidInput(format!(
                    "{name}: reference optimum {:?} outside the box",
                    o.x
                )));
            }
            let v = objective(&o.x);
            if !((v - o.f).abs() <= 1e-6) {
                return Err(Error::InvalidInput(format!(
                    "{name}: f(x*) = {v} but reference value is {}",
                    o.f
                )));
            }
        }
        if !(success_tol >= 0.0) {
            return Err(Error::InvalidInput(format!("{name}: negative success tolerance")));
        }
        Ok(Self {
            name,
            objective,
            bounds,
            reference_optima,
            success_tol,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.objective)(x)
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// Smallest reference value.
    pub fn f_star(&self) -> f64 {
        self.reference_optima
            .iter()
            .map(|o| o.f)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ils,
    Ims,
    Bnb,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Ils, SolverKind::Ims, SolverKind::Bnb];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Ils => "ils",
            SolverKind::Ims => "ims",
            SolverKind::Bnb => "bnb",
        }
    }

    pub fn is_deterministic(self) -> bool {
        self == SolverKind::Bnb
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown solver `{s}`")))
    }
}

/// Numerical settings shared by all inner solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSettings {
    pub fit: FitOptions,
    pub qn: QnOptions,
    pub ims_restarts: usize,
    pub bnb: BnbOptions,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            qn: QnOptions::default(),
            ims_restarts: 5,
            bnb: BnbOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BnbInfo {
    pub status: BnbStatus,
    pub eps_r: f64,
    #[serde(with = "crate::serde_f64")]
    pub gap_rel: f64,
    #[serde(with = "crate::serde_f64")]
    pub lb: f64,
    pub nodes: usize,
    pub node_cap_hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerInfo {
    /// LCB at the returned point (scaled output units).
    #[serde(with = "crate::serde_f64")]
    pub value: f64,
    pub converged: bool,
    pub n_evals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bnb: Option<BnbInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub kappa: f64,
    pub inner: InnerInfo,
}

/// One complete BO run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub case_study: String,
    pub experiment: usize,
    pub run: usize,
    pub solver: SolverKind,
    /// Copy of another run of a deterministic solver rather than a fresh
    /// execution.
    #[serde(default)]
    pub replicated: bool,
    pub initial_x: Vec<Vec<f64>>,
    pub initial_f: Vec<f64>,
    pub iterations: Vec<IterationRecord>,
    pub termination: Option<TcClause>,
    pub iterations_to_termination: usize,
    pub best_x: Vec<f64>,
    pub best_value: f64,
    pub success: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
}

impl RunRecord {
    /// Best value after the initial design and after each iteration;
    /// entry 0 is the initial design.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = self.initial_f.iter().copied().fold(f64::INFINITY, f64::min);
        let mut out = vec![best];
        for it in &self.iterations {
            best = best.min(it.f);
            out.push(best);
        }
        out
    }
}

/// A run succeeds when it terminated through the criterion (not the
/// iteration cap, not an abort) with best value within `success_tol` of the
/// global minimum.
pub fn classify_success(record: &RunRecord, bench: &BenchmarkHandle) -> bool {
    record.termination.is_some()
        && record.aborted.is_none()
        && record.best_value <= bench.f_star() + bench.success_tol
}

/// Runs the BO loop from `initial_design` until the termination criterion
/// fires or `tc.max_iter` candidates have been evaluated. The returned record
/// has empty case-study bookkeeping fields for the caller to fill in.
pub fn run_bo<R: Rng + ?Sized>(
    bench: &BenchmarkHandle,
    initial_design: &[Vec<f64>],
    solver: SolverKind,
    policy: &KappaPolicy,
    tc: &TerminationConfig,
    rng: &mut R,
    settings: &SolverSettings,
) -> Result<RunRecord> {
    tc.validate()?;
    policy.validate()?;
    if initial_design.is_empty() {
        return Err(Error::InvalidInput("initial design is empty".into()));
    }
    if let Some(p) = initial_design.iter().find(|p| !bench.bounds.contains(p)) {
        return Err(Error::InvalidInput(format!(
            "initial design point {p:?} outside the box"
        )));
    }
    let initial_f: Vec<f64> = initial_design.iter().map(|p| bench.eval(p)).collect();
    if let Some(v) = initial_f.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("objective returned {v} on the initial design")));
    }

    let mut xs = initial_design.to_vec();
    let mut fs = initial_f.clone();
    let mut iterations = Vec::new();
    let mut termination = None;
    let mut aborted = None;
    let mut hyper: Option<KernelHyper> = None;
    let mut loosen = LoosenState::new(settings.bnb.eps_r);

    for t in 1..=tc.max_iter {
        let model = match fit(&xs, &fs, &bench.bounds, hyper.as_ref(), &settings.fit) {
            Ok(m) => m,
            Err(e) => {
                aborted = Some(format!("surrogate fit failed at t={t}: {e}"));
                break;
            }
        };
        hyper = Some(model.hyper.clone());
        let ctx = AcquisitionContext::new(&model, policy.clone(), t);
        let (u, inner) = match solver {
            SolverKind::Ils | SolverKind::Ims => {
                let r = if solver == SolverKind::Ils {
                    ils_minimize(&ctx, rng, &settings.qn)
                } else {
                    ims_minimize(&ctx, rng, settings.ims_restarts, &settings.qn)
                };
                let info = InnerInfo {
                    value: r.value,
                    converged: r.converged,
                    n_evals: r.n_evals,
                    bnb: None,
                };
                (r.x, info)
            }
            SolverKind::Bnb => {
                let eps_r = loosen.eps_r_current;
                let r = bnb_minimize(&ctx, eps_r, &settings.bnb);
                loosen = loosen_policy_update(loosen, &r);
                let info = InnerInfo {
                    value: r.ub,
                    converged: r.status == BnbStatus::Optimal,
                    n_evals: r.nodes_processed,
                    bnb: Some(BnbInfo {
                        status: r.status,
                        eps_r,
                        gap_rel: r.gap_rel,
                        lb: r.lb,
                        nodes: r.nodes_processed,
                        node_cap_hit: r.node_cap_hit,
                    }),
                };
                (r.x_best, info)
            }
        };
        if !inner.value.is_finite() || u.iter().any(|v| !v.is_finite()) {
            aborted = Some(
                Error::InnerSolverFailure(format!("non-finite result at t={t}")).to_string(),
            );
            break;
        }
        let x = bench.bounds.from_scaled(&u);
        let f = bench.eval(&x);
        if !f.is_finite() {
            aborted = Some(format!("objective returned {f} at t={t}"));
            break;
        }
        let clause = check_termination(&xs, &fs, &x, f, tc, &bench.bounds);
        iterations.push(IterationRecord {
            t,
            x: x.clone(),
            f,
            kappa: ctx.kappa(),
            inner,
        });
        xs.push(x);
        fs.push(f);
        if clause.is_some() {
            termination = clause;
            break;
        }
    }

    let (best_i, &best_value) = fs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty history");
    let mut record = RunRecord {
        case_study: bench.name.clone(),
        experiment: 0,
        run: 0,
        solver,
        replicated: false,
        initial_x: initial_design.to_vec(),
        initial_f,
        iterations_to_termination: iterations.len(),
        iterations,
        termination,
        best_x: xs[best_i].clone(),
        best_value,
        success: false,
        aborted,
    };
    record.success = classify_success(&record, bench);
    Ok(record)
}
