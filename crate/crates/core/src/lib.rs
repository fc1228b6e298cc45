//! Approximate trust-region solver for sparse symmetric problems.
//!
//! Maximizes `xᵀAx + 2bᵀx` subject to `xᵀMx <= 1` for symmetric (possibly
//! indefinite) `A` and positive definite `M`, using only matrix-vector
//! products. The problem is reduced to a sequence of feasibility questions,
//! each answered by a two-constraint SDP whose dual is a one-dimensional
//! bisection over approximate top-eigenvector computations. A rank-two SDP
//! solution is then rotated and rounded back to a vector.
//!
//! Module map:
//! - [`sparsemat`]: symmetric sparse storage, operators, Matrix Market IO.
//! - [`eigsolve`]: Lanczos eigenvalue oracle and spectral bound estimators.
//! - [`sdp`]: the dual-bisection SDP feasibility solver.
//! - [`rounding`]: pairwise rotation of rank-one decompositions and vector extraction.
//! - [`trustregion`]: conditioning estimates, lifting, feasibility and maximization.
//! - [`refsolver`]: dense exact solver used to cross-check results.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod eigsolve;
pub mod error;
pub mod refsolver;
pub mod rounding;
pub mod sdp;
pub mod sparsemat;
pub mod trustregion;

pub use error::{Error, Result};
