//! Bayesian-optimization laboratory for comparing inner acquisition solvers.
//!
//! The crate bundles everything needed to study how the choice of solver for
//! the acquisition sub-problem changes the behaviour of the outer BO loop:
//!
//! - [`gp`]: noiseless Matérn-5/2 Gaussian-process surrogate.
//! - [`acquisition`]: lower confidence bound with fixed or scheduled κ.
//! - [`sobol`], [`qn`], [`local`]: Sobol points, a bounded limited-memory
//!   quasi-Newton minimizer and the informed single/multi-start solvers.
//! - [`interval`], [`bnb`]: interval enclosures of the posterior and a
//!   deterministic branch-and-bound minimizer of the LCB.
//! - [`bo`]: the outer loop, termination criterion and success rule.
//! - [`benchmarks`]: test functions, the GKLS generator and LHS designs.
//! - [`stats`]: success tables, conditional MLE, minimax tests, t-tests and
//!   curve summaries.
//! - [`harness`]: case-study configuration, run store and report generation.

pub mod acquisition;
pub mod benchmarks;
pub mod bnb;
pub mod bo;
pub mod error;
pub mod gp;
pub mod harness;
pub mod interval;
pub mod local;
pub mod qn;
pub mod serde_f64;
pub mod sobol;
pub mod space;
pub mod stats;

pub use error::{Error, Result};
pub use space::SearchBox;
