//! Inexact Newton's method for nonlinear cone inclusions `F(x) ∈ C`, with
//! minimal-norm steps and a certificate/audit layer for its semi-local
//! convergence theory.
//!
//! The iteration solves, at each point, the linearized inclusion
//! `F(x_k) + F'(x_k) d + r_k ∈ C` for the Euclidean minimal-norm step, where
//! the injected residual `r_k` is controlled by a relative tolerance measured
//! in the inner norm of the start point's inverse convex process. Before a
//! run, [`newton::certify`] measures the initial residual bound and computes
//! the scalar-majorant constants that guarantee convergence; after a run,
//! [`newton::audit`] re-checks every promised bound against the recorded
//! trace.
//!
//! Modules:
//!
//! * [`cone`] — product cones, membership, violation distance;
//! * [`minnorm`] — the min-norm QP (active set + brute-force oracle),
//!   per-vector inner norms, surjectivity check;
//! * [`majorant`] — scalar models, critical points, constants, the inexact
//!   scalar iteration and its invariant region;
//! * [`newton`] — the driver, residual oracle, certification and audit;
//! * [`problems`] — polynomial systems and built-in instances;
//! * [`io`] — JSON problem files and CSV iteration traces.

pub mod cone;
pub mod io;
pub mod majorant;
pub mod minnorm;
pub mod newton;
pub mod problems;

pub use cone::{ConeSpec, ConeTag};
pub use majorant::{
    ConvergenceConstants, CriticalPoints, MajorantModel, MajorantSequence, ScalarMajorant, Variant,
};
pub use minnorm::{LinearInclusion, MinNormOutcome, MinNormSolution};
pub use newton::{
    audit, audit_passed, certify, newton_solve, solve_certified, BoundCheck, Certificate,
    CheckStatus, IterationRecord, ProblemSpec, ResidualMode, RunReport, RunStatus, SolverConfig,
};
pub use problems::{builtin, PolynomialSystem};
