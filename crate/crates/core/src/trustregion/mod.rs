//! Trust-region maximization
//!
//! ```text
//! maximize xᵀAx + 2bᵀx   subject to   xᵀMx <= 1
//! ```
//!
//! Each level `c` of the objective is turned into a lifted two-constraint SDP
//! (see [`lifted`]), solved by [`crate::sdp`], rotated and rounded by
//! [`crate::rounding`]. [`maximize`] bisects over levels.
//!
//! Scale: `λ̂ >= max(2(‖A‖₂ + ‖b‖), ‖M‖₂, 1)`, `μ̂ <= min(λ_min(M), 1)` and
//! `κ̂ = λ̂ / μ̂`. The optimum `v*` lies in `[0, κ̂]`.

pub mod lifted;

pub use lifted::{LiftedConstraint, LiftedObjective};

use crate::eigsolve::{min_eig_lower_op, spectral_norm_upper_op, CountingOracle, EigenOracle, Lanczos, RngState};
use crate::error::{Error, Result};
use crate::rounding::{extract_solution, sz_rotation};
use crate::sdp::{solve_sdp, SdpInstance, SdpOutcome};
use crate::sparsemat::vecops::{all_finite, dot, norm, scale};
use crate::sparsemat::{check_dim, Counted, Identity, SparseSymMatrix, SymOperator, Telemetry};

#[derive(Debug, Clone)]
pub enum Metric {
    Identity(Identity),
    Matrix(SparseSymMatrix),
}

impl Metric {
    pub fn operator(&self) -> &dyn SymOperator {
        match self {
            Metric::Identity(i) => i,
            Metric::Matrix(m) => m,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrustRegionProblem {
    a: SparseSymMatrix,
    b: Vec<f64>,
    metric: Metric,
}

impl TrustRegionProblem {
    /// `m = None`, or an exact identity matrix, selects the identity metric.
    /// Positive definiteness of `m` is checked lazily during estimation.
    pub fn new(a: SparseSymMatrix, b: Vec<f64>, m: Option<SparseSymMatrix>) -> Result<Self> {
        let n = a.dim();
        if n == 0 {
            return Err(Error::InvalidArgument("problem dimension must be positive".into()));
        }
        check_dim(n, b.len())?;
        if !all_finite(&b) {
            return Err(Error::NonFinite("linear term contains a non-finite entry".into()));
        }
        let metric = match m {
            None => Metric::Identity(Identity(n)),
            Some(m) => {
                check_dim(n, m.dim())?;
                if m.is_identity() {
                    Metric::Identity(Identity(n))
                } else {
                    Metric::Matrix(m)
                }
            }
        };
        Ok(TrustRegionProblem { a, b, metric })
    }

    pub fn a(&self) -> &SparseSymMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn n(&self) -> usize {
        self.a.dim()
    }

    /// `max(nnz(A), nnz(M), n)`
    pub fn big_n(&self) -> usize {
        let m = match &self.metric {
            Metric::Identity(i) => i.0,
            Metric::Matrix(m) => m.nnz(),
        };
        self.a.nnz().max(m).max(self.n())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.iter().all(|v| *v == 0.0)
    }

    /// `xᵀAx + 2bᵀx`
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.a.quad_form(x) + 2.0 * dot(&self.b, x)
    }

    /// `xᵀMx`
    pub fn m_norm_sq(&self, x: &[f64]) -> f64 {
        self.metric.operator().quad_form(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditioningEstimates {
    pub lambda_hat: f64,
    pub mu_hat: f64,
    pub kappa_hat: f64,
    /// Upper estimate of `‖A‖₂`, within a factor 2.
    pub norm_a: f64,
    /// Upper estimate of `‖M‖₂`, within a factor 2.
    pub norm_m: f64,
    pub norm_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibilityOutcome {
    /// `xᵀAx + 2bᵀx >= c` and `xᵀMx <= 1`.
    FoundVector(Vec<f64>),
    /// The level is out of reach with the slack used by the lifted SDP.
    InfeasibleAtLevel(f64),
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub outcome: FeasibilityOutcome,
    pub level: f64,
    pub eps: f64,
    pub kappa_hat: f64,
    /// Accuracy passed to the SDP solver, `eps / (4κ̂)`.
    pub sdp_eps: f64,
    /// Eigenvector-oracle calls made by the SDP solver.
    pub oracle_calls: usize,
    /// Oracle calls made while estimating conditioning, zero when the
    /// estimates were supplied.
    pub estimation_oracle_calls: u64,
    pub rotations: usize,
    pub degraded_weight: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SolveTelemetry {
    pub oracle_calls: u64,
    pub estimation_oracle_calls: u64,
    pub matvecs: u64,
    pub entries_touched: u64,
    pub outer_iterations: usize,
}

/// One feasibility query issued by [`maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub level: f64,
    pub eps: f64,
    pub oracle_calls: usize,
    /// Recomputed objective when a vector was found.
    pub found: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MaximizeResult {
    pub value: f64,
    pub x: Vec<f64>,
    pub telemetry: SolveTelemetry,
    pub estimates: Option<ConditioningEstimates>,
    /// Certified (with the stated probability) upper bound on the optimum.
    pub upper_bound: f64,
    pub levels: Vec<LevelRecord>,
}

/// Runs solves for one problem against one oracle, accumulating matvec and
/// oracle-call counts.
pub struct Solver<'p> {
    prob: &'p TrustRegionProblem,
    oracle: &'p dyn EigenOracle,
    telemetry: Telemetry,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")))
    }
}

impl<'p> Solver<'p> {
    pub fn new(prob: &'p TrustRegionProblem) -> Self {
        Self::with_oracle(prob, &Lanczos)
    }

    pub fn with_oracle(prob: &'p TrustRegionProblem, oracle: &'p dyn EigenOracle) -> Self {
        Solver {
            prob,
            oracle,
            telemetry: Telemetry::new(),
        }
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }

    fn counting(&self) -> CountingOracle<'_> {
        CountingOracle {
            inner: self.oracle,
            telemetry: &self.telemetry,
        }
    }

    pub fn estimate_conditioning(&self, delta: f64, rng: &mut RngState) -> Result<ConditioningEstimates> {
        check_delta(delta)?;
        let oracle = self.counting();
        let a = Counted::new(&self.prob.a, &self.telemetry);
        let norm_b = norm(&self.prob.b);
        let (norm_a, norm_m, mu) = match &self.prob.metric {
            Metric::Identity(_) => {
                let na = spectral_norm_upper_op(&a, self.prob.a.max_abs_row_sum(), delta, rng, &oracle)?;
                (na, 1.0, 1.0)
            }
            Metric::Matrix(m) => {
                let d = delta / 3.0;
                let crude = m.max_abs_row_sum();
                let na = spectral_norm_upper_op(&a, self.prob.a.max_abs_row_sum(), d, rng, &oracle)?;
                let mc = Counted::new(m, &self.telemetry);
                let nm = spectral_norm_upper_op(&mc, crude, d, rng, &oracle)?;
                let mu = min_eig_lower_op(&mc, crude, d, rng, &oracle)?;
                (na, nm, mu)
            }
        };
        let lambda_hat = (2.0 * (norm_a + norm_b)).max(norm_m).max(1.0);
        let mu_hat = mu.min(1.0);
        Ok(ConditioningEstimates {
            lambda_hat,
            mu_hat,
            kappa_hat: lambda_hat / mu_hat,
            norm_a,
            norm_m,
            norm_b,
        })
    }

    /// Feasibility at level `c` with conditioning estimates already in hand.
    ///
    /// Slack `ε′ = eps / (2κ̂)`, SDP accuracy `ε′ / 2`, extraction threshold
    /// `ε′ / (8r)` for the rank `r` of the SDP solution.
    pub fn feasibility_with(
        &self,
        est: &ConditioningEstimates,
        c: f64,
        eps: f64,
        delta: f64,
        rng: &mut RngState,
    ) -> Result<FeasibilityReport> {
        check_delta(delta)?;
        if !(eps > 0.0 && eps < est.lambda_hat) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in (0, {}), got {eps}",
                est.lambda_hat
            )));
        }
        let kappa = est.kappa_hat;
        if !(0.0..=kappa).contains(&c) {
            return Err(Error::InvalidArgument(format!("level {c} outside [0, {kappa}]")));
        }
        let sdp_eps = eps / (4.0 * kappa);

        let a = Counted::new(&self.prob.a, &self.telemetry);
        let m = Counted::new(self.prob.metric.operator(), &self.telemetry);
        let a1 = LiftedObjective::new(&a, &self.prob.b, c, kappa);
        let a2 = LiftedConstraint::new(&m, kappa);
        let inst = SdpInstance {
            a1: &a1,
            a2: &a2,
            eps: sdp_eps,
            delta,
        };
        let sol = solve_sdp(&inst, &self.counting(), rng)?;
        let mut report = FeasibilityReport {
            outcome: FeasibilityOutcome::InfeasibleAtLevel(c),
            level: c,
            eps,
            kappa_hat: kappa,
            sdp_eps,
            oracle_calls: sol.oracle_calls,
            estimation_oracle_calls: 0,
            rotations: 0,
            degraded_weight: false,
        };
        if let SdpOutcome::Feasible { decomp, weight, .. } = sol.outcome {
            let rotated = sz_rotation(&a1, decomp)?;
            let threshold = sdp_eps / (4.0 * rotated.decomp.rank() as f64);
            let x = extract_solution(&rotated.decomp, &a1, &a2, threshold)?;
            report.outcome = FeasibilityOutcome::FoundVector(x);
            report.rotations = rotated.rotations;
            report.degraded_weight = weight.degraded;
        }
        Ok(report)
    }

    /// Estimates conditioning with `delta / 2`, then decides level `c` with
    /// the remaining `delta / 2`.
    pub fn feasibility(&self, c: f64, eps: f64, delta: f64, rng: &mut RngState) -> Result<FeasibilityReport> {
        check_delta(delta)?;
        let before = self.telemetry.oracle_calls();
        let est = self.estimate_conditioning(delta / 2.0, rng)?;
        let estimation_calls = self.telemetry.oracle_calls() - before;
        let mut report = self.feasibility_with(&est, c, eps, delta / 2.0, rng)?;
        report.estimation_oracle_calls = estimation_calls;
        Ok(report)
    }

    /// Bisection over levels in `[0, κ̂]`.
    ///
    /// Each level is queried at accuracy `eps_f = 4 eps / ((1 + κ̂)(1 + 1/μ̂))`.
    /// An infeasible answer at `c` then implies `v* <= c + 2 eps`: shrinking an
    /// optimal `x*` to `s x*` with `s² = 1 - g`, `g = (eps_f / 2)(1 + 1/μ̂)`,
    /// gives a trace-one lift meeting both SDP constraints whenever
    /// `v* > c + g (1 + κ̂) = c + 2 eps`. A found vector raises the lower end
    /// to its recomputed value. The loop stops once the level bracket is at
    /// most `eps`, leaving `value >= v* - 3 eps`.
    ///
    /// `delta / 4` goes to estimation and the rest is split evenly across the
    /// at most `ceil(log₂(κ̂ / eps))` level queries.
    pub fn maximize(&self, eps: f64, delta: f64, rng: &mut RngState) -> Result<MaximizeResult> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        check_delta(delta)?;
        let n = self.prob.n();
        let mut best_x = vec![0.0; n];
        let mut best_value = 0.0;
        let mut levels = Vec::new();
        let mut estimates = None;
        let mut upper_bound = 0.0;
        let mut estimation_calls = 0;

        if !self.prob.is_zero() {
            let est = self.estimate_conditioning(delta / 4.0, rng)?;
            estimation_calls = self.telemetry.oracle_calls();
            estimates = Some(est);
            let kappa = est.kappa_hat;
            let eps_f = 4.0 * eps / ((1.0 + kappa) * (1.0 + 1.0 / est.mu_hat));
            let max_levels = (kappa / eps).log2().ceil().max(1.0);
            let delta_f = 0.75 * delta / max_levels;

            let (mut lo, mut hi) = (0.0f64, kappa);
            while hi - lo > eps {
                let c = 0.5 * (lo + hi);
                let report = self.feasibility_with(&est, c, eps_f, delta_f, rng)?;
                let mut record = LevelRecord {
                    level: c,
                    eps: eps_f,
                    oracle_calls: report.oracle_calls,
                    found: None,
                };
                match report.outcome {
                    FeasibilityOutcome::FoundVector(mut x) => {
                        let r = self.prob.m_norm_sq(&x);
                        if r > 1.0 {
                            scale(1.0 / r.sqrt(), &mut x);
                        }
                        let value = self.prob.objective(&x);
                        record.found = Some(value);
                        if value > best_value {
                            best_value = value;
                            best_x = x;
                        }
                        lo = lo.max(c).max(value);
                    }
                    FeasibilityOutcome::InfeasibleAtLevel(_) => hi = c,
                }
                levels.push(record);
            }
            upper_bound = hi + 2.0 * eps;
        }

        Ok(MaximizeResult {
            value: self.prob.objective(&best_x),
            x: best_x,
            telemetry: SolveTelemetry {
                oracle_calls: self.telemetry.oracle_calls(),
                estimation_oracle_calls: estimation_calls,
                matvecs: self.telemetry.matvecs(),
                entries_touched: self.telemetry.entries_touched(),
                outer_iterations: levels.len(),
            },
            estimates,
            upper_bound,
            levels,
        })
    }
}

pub fn estimate_conditioning(
    prob: &TrustRegionProblem,
    delta: f64,
    rng: &mut RngState,
) -> Result<ConditioningEstimates> {
    Solver::new(prob).estimate_conditioning(delta, rng)
}

/// Lifted views for level `c`. Levels up to `κ̂` are accepted; both views
/// have spectral norm at most one whenever `κ̂` is a valid estimate.
pub fn build_lifted_pair(
    prob: &TrustRegionProblem,
    c: f64,
    kappa_hat: f64,
) -> Result<(LiftedObjective<'_>, LiftedConstraint<'_>)> {
    if !(kappa_hat >= 1.0 && kappa_hat.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kappa_hat must be at least 1, got {kappa_hat}"
        )));
    }
    if !(0.0..=kappa_hat).contains(&c) {
        return Err(Error::InvalidArgument(format!("level {c} outside [0, {kappa_hat}]")));
    }
    Ok((
        LiftedObjective::new(&prob.a, &prob.b, c, kappa_hat),
        LiftedConstraint::new(prob.metric.operator(), kappa_hat),
    ))
}

pub fn solve_feasibility(
    prob: &TrustRegionProblem,
    c: f64,
    eps: f64,
    delta: f64,
    rng: &mut RngState,
) -> Result<FeasibilityReport> {
    Solver::new(prob).feasibility(c, eps, delta, rng)
}

pub fn maximize(prob: &TrustRegionProblem, eps: f64, delta: f64, rng: &mut RngState) -> Result<MaximizeResult> {
    Solver::new(prob).maximize(eps, delta, rng)
}

#[cfg(test)]
mod tests;
