//! Deterministic spatial branch-and-bound minimization of the LCB over the
//! scaled unit box.
//!
//! Nodes are explored best-first by lower bound and split at the midpoint of
//! their widest side. Lower bounds come from [`crate::interval`]; the
//! incumbent is improved by polishing node midpoints with the bounded
//! quasi-Newton solver whenever a midpoint beats it. Nothing here draws
//! random numbers, so identical inputs give bit-identical results as long as
//! the wall-clock limit does not bind.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionContext;
use crate::interval::{lcb_lower_bound_with, EnclosureWorkspace, Interval};
use crate::qn::{bounded_qn_minimize, QnOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct BnbOptions {
    /// Relative gap each BO run starts from.
    pub eps_r: f64,
    pub eps_a: f64,
    #[serde(with = "secs")]
    pub time_limit: Duration,
    pub node_cap: usize,
    #[serde(skip)]
    pub qn: QnOptions,
    #[serde(skip)]
    pub record_trace: bool,
}

impl Default for BnbOptions {
    fn default() -> Self {
        Self {
            eps_r: 0.01,
            eps_a: 1e-6,
            time_limit: Duration::from_secs(10),
            node_cap: 100_000,
            qn: QnOptions::default(),
            record_trace: false,
        }
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BnbStatus {
    Optimal,
    /// Stopped by the wall-clock limit or the node cap before closing the gap.
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnbResult {
    pub x_best: Vec<f64>,
    pub ub: f64,
    pub lb: f64,
    pub gap_rel: f64,
    pub status: BnbStatus,
    pub nodes_processed: usize,
    pub node_cap_hit: bool,
    /// `(global lb, ub)` after every processed node, when requested.
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug)]
struct Node {
    bx: Vec<Interval>,
    lb: f64,
    depth: usize,
    id: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Reversed so the max-heap pops the lowest bound, oldest node first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .lb
            .total_cmp(&self.lb)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gap_tolerance(ub: f64, eps_r: f64, eps_a: f64) -> f64 {
    eps_a.max(eps_r * ub.abs())
}

pub fn relative_gap(ub: f64, lb: f64) -> f64 {
    (ub - lb) / ub.abs().max(1e-12)
}

pub fn bnb_minimize(ctx: &AcquisitionContext<'_>, eps_r: f64, opts: &BnbOptions) -> BnbResult {
    let start = Instant::now();
    let dim = ctx.dim();
    let kappa = ctx.kappa();
    let mut ws = EnclosureWorkspace::default();
    let mut bound = |bx: &[Interval]| lcb_lower_bound_with(ctx.model, bx, kappa, &mut ws);
    let polish = |x0: &[f64]| bounded_qn_minimize(|x| ctx.value_grad(x), x0, &opts.qn);

    let root: Vec<Interval> = vec![Interval::new(0.0, 1.0); dim];
    let centre: Vec<f64> = root.iter().map(Interval::mid).collect();
    let mut x_best = centre.clone();
    let mut ub = ctx.value(&centre);
    let r = polish(&centre);
    if r.value < ub {
        ub = r.value;
        x_best = r.x;
    }

    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    let root_lb = bound(&root).min(ub);
    heap.push(Node {
        bx: root,
        lb: root_lb,
        depth: 0,
        id: next_id,
    });
    next_id += 1;

    let mut fathomed_min = f64::INFINITY;
    let mut nodes_processed = 0usize;
    let mut node_cap_hit = false;
    let mut trace = Vec::new();
    let status;

    loop {
        let open_min = heap.peek().map_or(f64::INFINITY, |n| n.lb);
        let global_lb = open_min.min(fathomed_min).min(ub);
        let tol = gap_tolerance(ub, eps_r, opts.eps_a);
        if heap.is_empty() || ub - global_lb <= tol {
            status = BnbStatus::Optimal;
            break;
        }
        if nodes_processed >= opts.node_cap {
            node_cap_hit = true;
            status = BnbStatus::TimeLimit;
            break;
        }
        if start.elapsed() >= opts.time_limit {
            status = BnbStatus::TimeLimit;
            break;
        }

        let node = heap.pop().expect("heap checked non-empty");
        nodes_processed += 1;
        if node.lb >= ub - tol {
            fathomed_min = fathomed_min.min(node.lb);
            if opts.record_trace {
                trace.push((global_lb, ub));
            }
            continue;
        }

        let split = (0..dim)
            .max_by(|&a, &b| {
                node.bx[a]
                    .width()
                    .total_cmp(&node.bx[b].width())
                    .then_with(|| b.cmp(&a))
            })
            .expect("dim >= 1");
        let m = node.bx[split].mid();
        let halves = [
            Interval::new(node.bx[split].lo, m),
            Interval::new(m, node.bx[split].hi),
        ];
        for half in halves {
            let mut child = node.bx.clone();
            child[split] = half;
            let lb = bound(&child).max(node.lb);
            let mid: Vec<f64> = child.iter().map(Interval::mid).collect();
            let v = ctx.value(&mid);
            if v < ub {
                let r = polish(&mid);
                if r.value < v {
                    ub = r.value;
                    x_best = r.x;
                } else {
                    ub = v;
                    x_best = mid;
                }
            }
            let tol = gap_tolerance(ub, eps_r, opts.eps_a);
            if lb < ub - tol {
                heap.push(Node {
                    bx: child,
                    lb,
                    depth: node.depth + 1,
                    id: next_id,
                });
                next_id += 1;
            } else {
                fathomed_min = fathomed_min.min(lb);
            }
        }
        if opts.record_trace {
            let open_min = heap.peek().map_or(f64::INFINITY, |n| n.lb);
            trace.push((open_min.min(fathomed_min).min(ub), ub));
        }
    }

    let open_min = heap.peek().map_or(f64::INFINITY, |n| n.lb);
    let lb = open_min.min(fathomed_min).min(ub);
    BnbResult {
        x_best,
        ub,
        lb,
        gap_rel: relative_gap(ub, lb),
        status,
        nodes_processed,
        node_cap_hit,
        trace,
    }
}

/// Per-run relative-gap tolerance, loosened by a decade whenever an iterate
/// stops early with a gap at least ten times the current tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoosenState {
    pub eps_r_current: f64,
}

impl LoosenState {
    pub fn new(eps_r_init: f64) -> Self {
        Self {
            eps_r_current: eps_r_init,
        }
    }
}

impl Default for LoosenState {
    fn default() -> Self {
        Self::new(0.01)
    }
}

pub fn loosen_policy_update(state: LoosenState, result: &BnbResult) -> LoosenState {
    if result.status == BnbStatus::TimeLimit && result.gap_rel >= 10.0 * state.eps_r_current {
        LoosenState {
            eps_r_current: state.eps_r_current * 10.0,
        }
    } else {
        state
    }
}
