//! Frank-Wolfe solvers for optimization over probability measures.
//!
//! The decision variable is a probability measure supported on a compact box
//! in low dimension, represented as a finite atomic mixture. The first-order
//! object driving every recursion is the influence function of the objective:
//! the derivative of J at mu towards a Dirac perturbation. Each iteration
//! minimizes the (exact or sample-average) influence function globally over
//! the box and mixes a Dirac at the minimizer into the incumbent.
//!
//! Crate layout:
//! - [`measure`]: atomic measures and their operations (mixing, total
//!   variation, ball mass, expectations, consolidation);
//! - [`subsolver`]: deterministic global minimization over the box;
//! - [`oracle`]: problem instances, Monte Carlo estimators, finite
//!   differences, von Mises derivatives, Frank-Wolfe gaps;
//! - [`instances`]: the worked problem families and shipped presets;
//! - [`solver`]: the deterministic, stochastic, fixed-step, and
//!   fully-corrective recursions with per-iteration traces.

pub mod domain;
pub mod error;
pub mod instances;
pub mod measure;
pub mod oracle;
pub mod rng;
pub mod solver;
pub mod subsolver;

pub use domain::{BoxDomain, Point};
pub use error::{FwError, Result};
pub use measure::{AtomicMeasure, DEFAULT_ATOM_TOL};
pub use oracle::{Convexity, InstanceTruth, ProblemInstance};
pub use rng::RngStream;
pub use solver::{
    run_dfw, run_fixed_sfw, run_fully_corrective, run_sfw, simplex_reweight, FcConfig,
    SampleSchedule, SolveResult, SolverConfig, SolverFailure, StepSchedule, Trace, TraceRow,
    Variant,
};
pub use subsolver::{minimize_over_box, SubsolverConfig, SubsolverResult};
