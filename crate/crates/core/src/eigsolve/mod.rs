//! Approximate maximum-eigenvector oracle and certified spectral bounds.
//!
//! The oracle runs Lanczos on the shifted operator `M' = M / (2λ) + I / 2`,
//! which is positive semidefinite with `‖M'‖₂ ≤ 1` whenever `‖M‖₂ ≤ λ`, for a
//! fixed iteration budget
//!
//! ```text
//! k = ceil(C0 * sqrt(λ / eps) * ln(4 n / delta)),   C0 = 2,
//! ```
//!
//! capped at `n` since the Krylov space cannot grow beyond it. A Ritz vector
//! with `x' M' x >= λ_max(M') - eps / (2λ)` maps back to
//! `x' M x >= λ_max(M) - eps`.

mod tridiag;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::sparsemat::vecops::{axpy, dot, norm, scale};
use crate::sparsemat::{Negated, ShiftedNegation, SparseSymMatrix, SymOperator, Telemetry};

/// Constant in the Lanczos iteration budget.
pub const LANCZOS_C0: f64 = 2.0;

/// Lanczos stops early once the next residual norm drops below this value;
/// the Krylov space is then invariant and the Ritz pair is exact.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// Seeded random state; equal seeds give identical oracle outputs.
#[derive(Debug, Clone)]
pub struct RngState {
    rng: ChaCha8Rng,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        RngState {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform point on the unit sphere in `R^n`.
    pub fn unit_sphere(&mut self, n: usize) -> Vec<f64> {
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut self.rng)).collect();
            let nv = norm(&v);
            if nv > 0.0 {
                scale(1.0 / nv, &mut v);
                return v;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// `vectorᵀ M vector`.
    pub rayleigh: f64,
    /// Unit-norm vector.
    pub vector: Vec<f64>,
    /// Operator applications spent.
    pub matvecs: usize,
}

/// An approximate eigenvalue oracle: with probability at least `1 - delta`
/// returns a unit vector whose Rayleigh quotient is within `eps` of the
/// largest eigenvalue of `op`, given `‖op‖₂ <= norm_bound`.
pub trait EigenOracle {
    fn max_eigvec(
        &self,
        op: &dyn SymOperator,
        norm_bound: f64,
        eps: f64,
        delta: f64,
        rng: &mut RngState,
    ) -> Result<OracleResult>;
}

/// Lanczos with full reorthogonalization.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lanczos;

impl Lanczos {
    /// Iteration budget `ceil(C0 * sqrt(norm_bound / eps) * ln(4n / delta))`.
    pub fn iteration_budget(n: usize, norm_bound: f64, eps: f64, delta: f64) -> f64 {
        (LANCZOS_C0 * (norm_bound / eps).sqrt() * (4.0 * n as f64 / delta).ln()).ceil()
    }
}

impl EigenOracle for Lanczos {
    fn max_eigvec(
        &self,
        op: &dyn SymOperator,
        norm_bound: f64,
        eps: f64,
        delta: f64,
        rng: &mut RngState,
    ) -> Result<OracleResult> {
        approx_max_eigvec(op, norm_bound, eps, delta, rng)
    }
}

/// Oracle wrapper that records each call in a [`Telemetry`].
pub struct CountingOracle<'a> {
    pub inner: &'a dyn EigenOracle,
    pub telemetry: &'a Telemetry,
}

impl EigenOracle for CountingOracle<'_> {
    fn max_eigvec(
        &self,
        op: &dyn SymOperator,
        norm_bound: f64,
        eps: f64,
        delta: f64,
        rng: &mut RngState,
    ) -> Result<OracleResult> {
        self.telemetry.record_oracle_calls(1);
        self.inner.max_eigvec(op, norm_bound, eps, delta, rng)
    }
}

fn check_oracle_args(n: usize, norm_bound: f64, eps: f64, delta: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("operator has dimension zero".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(norm_bound > 0.0 && norm_bound.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "norm bound must be positive, got {norm_bound}"
        )));
    }
    Ok(())
}

/// Approximate top eigenvector of `m` with `‖m‖₂ <= norm_bound`.
pub fn approx_max_eigvec(
    m: &dyn SymOperator,
    norm_bound: f64,
    eps: f64,
    delta: f64,
    rng: &mut RngState,
) -> Result<OracleResult> {
    let n = m.dim();
    check_oracle_args(n, norm_bound, eps, delta)?;
    let budget = Lanczos::iteration_budget(n, norm_bound, eps, delta);
    let steps = if budget >= n as f64 {
        n
    } else {
        (budget as usize).max(1)
    };

    let half_inv = 0.5 / norm_bound;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    // Raw products m * q_j, kept so the final Rayleigh quotient needs no
    // extra matvec.
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);

    basis.push(rng.unit_sphere(n));
    for j in 0..steps {
        let mq = m.apply(&basis[j]);
        let mut w: Vec<f64> = mq.iter().zip(&basis[j]).map(|(a, q)| half_inv * a + 0.5 * q).collect();
        images.push(mq);

        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        for q in &basis {
            let h = dot(q, &w);
            axpy(-h, q, &mut w);
        }

        if j + 1 == steps {
            break;
        }
        let b = norm(&w);
        if b < BREAKDOWN_TOL {
            break;
        }
        scale(1.0 / b, &mut w);
        beta.push(b);
        basis.push(w);
    }

    let k = alpha.len();
    let (_, s) = tridiag::top_eigenpair(&alpha, &beta[..k - 1]);
    let mut x = vec![0.0; n];
    let mut mx = vec![0.0; n];
    for (i, si) in s.iter().enumerate() {
        axpy(*si, &basis[i], &mut x);
        axpy(*si, &images[i], &mut mx);
    }
    let nx = norm(&x);
    if !(nx > 0.0 && nx.is_finite()) {
        return Err(Error::NumericalDegeneracy("Lanczos produced a zero Ritz vector".into()));
    }
    scale(1.0 / nx, &mut x);
    scale(1.0 / nx, &mut mx);
    Ok(OracleResult {
        rayleigh: dot(&x, &mx),
        vector: x,
        matvecs: k,
    })
}

/// Spectral-norm upper bound for an operator, given a crude bound
/// `crude >= ‖op‖₂` (for a stored matrix, the max absolute row sum).
///
/// Returns `ν` with `‖op‖₂ <= ν <= 2‖op‖₂` with probability `>= 1 - delta`.
/// Rounds run the oracle on `op` and `-op` at accuracy `e`, halving `e`
/// until the observed magnitude `ρ` certifies `e <= ρ / 2`.
pub fn spectral_norm_upper_op(
    op: &dyn SymOperator,
    crude: f64,
    delta: f64,
    rng: &mut RngState,
    oracle: &dyn EigenOracle,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    if crude == 0.0 {
        return Ok(0.0);
    }
    let mut bound = crude;
    let mut e = crude / 4.0;
    let mut rho = 0.0;
    for round in 0..64 {
        // Two calls per round with delta / 2^(round + 2) each; sums to delta.
        let d = delta / 2f64.powi(round + 2);
        let top = oracle.max_eigvec(op, bound, e, d, rng)?;
        let bottom = oracle.max_eigvec(&Negated(op), bound, e, d, rng)?;
        rho = top.rayleigh.abs().max(bottom.rayleigh.abs());
        if rho >= 2.0 * e {
            return Ok(2.0 * rho);
        }
        bound = bound.min(rho + e);
        e /= 2.0;
    }
    Ok(rho + e)
}

/// `ν` with `‖m‖₂ <= ν <= 2‖m‖₂` with probability `>= 1 - delta`.
pub fn spectral_norm_upper(m: &SparseSymMatrix, delta: f64, rng: &mut RngState) -> Result<f64> {
    spectral_norm_upper_op(m, m.max_abs_row_sum(), delta, rng, &Lanczos)
}

/// Lower bound `μ̂` on the smallest eigenvalue of a positive definite
/// operator, with `μ̂ <= λ_min <= 2 μ̂` with probability `>= 1 - delta`.
///
/// With `ν >= ‖op‖₂`, the oracle applied to `νI - op` at accuracy `e` yields
/// `U` with `λ_min <= U <= λ_min + e`; once `U - e >= e` the answer `U / 2`
/// is certified. `U <= 0` proves `op` is not positive definite.
pub fn min_eig_lower_op(
    op: &dyn SymOperator,
    crude: f64,
    delta: f64,
    rng: &mut RngState,
    oracle: &dyn EigenOracle,
) -> Result<f64> {
    let nu = spectral_norm_upper_op(op, crude, delta / 2.0, rng, oracle)?;
    if nu == 0.0 {
        return Err(Error::NotPositiveDefinite { estimate: 0.0 });
    }
    let shifted = ShiftedNegation { op, shift: nu };
    let mut e = nu / 4.0;
    let mut upper = nu;
    for round in 0..60 {
        let d = delta / 2f64.powi(round + 2);
        let r = oracle.max_eigvec(&shifted, 2.0 * nu, e, d, rng)?;
        upper = nu - r.rayleigh;
        if upper <= 0.0 {
            return Err(Error::NotPositiveDefinite { estimate: upper });
        }
        if upper - e >= e {
            return Ok(upper / 2.0);
        }
        e /= 2.0;
    }
    Err(Error::NotPositiveDefinite { estimate: upper })
}

pub fn min_eig_lower(m: &SparseSymMatrix, delta: f64, rng: &mut RngState) -> Result<f64> {
    min_eig_lower_op(m, m.max_abs_row_sum(), delta, rng, &Lanczos)
}
