//! Explicit extragradient solver with an adaptive stepsize for
//! pseudomonotone equilibrium problems on flat Hadamard manifolds.
//!
//! The problem is to find `x*` in a geodesically convex set `C` with
//!
//! ```text
//! f(x*, y) >= 0   for all y in C
//! ```
//!
//! Each outer iteration solves two proximal subproblems anchored at the
//! current iterate and updates the stepsize from quantities already computed,
//! so no Lipschitz constant of `f` has to be known in advance.
//!
//! Module map:
//!
//! * [`manifold`]: geometry kernel (Euclidean, log-metric positive orthant, products).
//! * [`feasible`]: coordinate boxes and chart-space projection.
//! * [`bifunction`]: the bifunction trait, built-in families and sampling diagnostics.
//! * [`prox`]: projected-gradient solver for the proximal subproblem.
//! * [`extragradient`]: the outer algorithm, traces and rate analysis.
//! * [`oracle`]: brute-force grid verifiers and finite differences.
//! * [`config`] / [`experiment`]: JSON run configs and the sweep runner used by the CLI.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifunction;
pub mod config;
mod error;
pub mod experiment;
pub mod extragradient;
pub mod feasible;
pub mod manifold;
pub mod oracle;
pub mod prox;
mod rng;

pub use bifunction::{Bifunction, LinearBifunction, NashCournotModel};
pub use error::{Error, Result};
pub use extragradient::{IterationRecord, RateReport, RunOutcome, RunStatus, SolverConfig, Trace};
pub use feasible::BoxSet;
pub use manifold::{ComponentKind, Manifold, Point, Tangent};
pub use prox::{ProxConfig, ProxProblem, ProxSolution};
