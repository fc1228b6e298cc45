//! Two-constraint SDP feasibility over the spectrahedron
//! `K_n = {X ⪰ 0, tr X <= 1}`:
//!
//! ```text
//! A₁ • X >= eps,  A₂ • X >= eps,  X ∈ K_n      (‖A₁‖₂, ‖A₂‖₂ <= 1)
//! ```
//!
//! The dual is a search over `p ∈ [0, 1]` on `A(p) = p A₁ + (1 - p) A₂`.
//! Each bisection step asks the oracle for an approximate top eigenvector of
//! `A(p)`; a Rayleigh value below `3 eps / 4` certifies infeasibility,
//! otherwise the vector becomes a witness on the side its constraint values
//! point to. Two witnesses mixed by a weight `q` give a rank-two primal
//! solution with `Aᵢ • X >= eps / 2`.

use crate::eigsolve::{EigenOracle, RngState};
use crate::error::{Error, Result};
use crate::rounding::RankOneDecomposition;
use crate::sparsemat::vecops::axpy;
use crate::sparsemat::SymOperator;

pub struct SdpInstance<'a> {
    pub a1: &'a dyn SymOperator,
    pub a2: &'a dyn SymOperator,
    pub eps: f64,
    pub delta: f64,
}

/// `A(p) = p A₁ + (1 - p) A₂`; a zero weight skips that product.
pub struct Pencil<'a> {
    pub a1: &'a dyn SymOperator,
    pub a2: &'a dyn SymOperator,
    pub p: f64,
}

impl SymOperator for Pencil<'_> {
    fn dim(&self) -> usize {
        self.a1.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        if self.p == 1.0 {
            return self.a1.apply_into(x, y);
        }
        if self.p == 0.0 {
            return self.a2.apply_into(x, y);
        }
        self.a1.apply_into(x, y);
        y.iter_mut().for_each(|v| *v *= self.p);
        let second = self.a2.apply(x);
        axpy(1.0 - self.p, &second, y);
    }

    fn cost(&self) -> usize {
        self.a1.cost() + self.a2.cost()
    }
}

/// A unit vector recorded by the bisection with its cached constraint values
/// `(xᵀA₁x, xᵀA₂x)`.
#[derive(Debug, Clone)]
pub struct Witness {
    pub p: f64,
    pub vector: Vec<f64>,
    pub values: [f64; 2],
}

impl Witness {
    /// `xᵀ A(p) x` from the cached values.
    pub fn value_at(&self, p: f64) -> f64 {
        p * self.values[0] + (1.0 - p) * self.values[1]
    }
}

#[derive(Debug, Clone)]
pub struct BisectionState {
    pub p1: f64,
    pub p2: f64,
    pub x1: Option<Witness>,
    pub x2: Option<Witness>,
    pub t: usize,
    pub budget: usize,
}

/// Iteration count `ceil(log₂(8 / eps))`.
pub fn bisection_budget(eps: f64) -> usize {
    (8.0 / eps).log2().ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightChoice {
    pub q: f64,
    /// Set when no `q` satisfies both inequalities exactly and the returned
    /// `q` only keeps the violation within `eps / 8`.
    pub degraded: bool,
}

#[derive(Debug, Clone)]
pub enum SdpOutcome {
    Feasible {
        /// `{√q x₁, √(1-q) x₂}`
        decomp: RankOneDecomposition,
        weight: WeightChoice,
        /// `(A₁ • X, A₂ • X)` from the cached witness values.
        values: [f64; 2],
    },
    Infeasible {
        witness_p: f64,
        witness_rayleigh: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub outcome: SdpOutcome,
    pub oracle_calls: usize,
    pub state: BisectionState,
}

impl SdpSolution {
    pub fn is_feasible(&self) -> bool {
        matches!(self.outcome, SdpOutcome::Feasible { .. })
    }
}

/// Finds `q ∈ [0, 1]` with `q u_i + (1 - q) w_i >= eps / 2` for `i = 1, 2`
/// where `u = (x₁ᵀA₁x₁, x₁ᵀA₂x₁)` and `w = (x₂ᵀA₁x₂, x₂ᵀA₂x₂)`.
///
/// Each inequality is a half-interval in `q`; the midpoint of their
/// intersection is returned. If the intersection is empty the minimax `q` is
/// returned with `degraded` set, provided its violation is at most `eps / 8`.
pub fn combine_cached(u: [f64; 2], w: [f64; 2], eps: f64) -> Result<WeightChoice> {
    let need = eps / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut empty = false;
    for i in 0..2 {
        let slope = u[i] - w[i];
        let bound = (need - w[i]) / slope;
        if slope > 0.0 {
            lo = lo.max(bound);
        } else if slope < 0.0 {
            hi = hi.min(bound);
        } else if w[i] < need {
            empty = true;
        }
    }
    if !empty && lo <= hi {
        return Ok(WeightChoice {
            q: 0.5 * (lo + hi),
            degraded: false,
        });
    }

    let violation = |q: f64| {
        (0..2)
            .map(|i| need - (q * u[i] + (1.0 - q) * w[i]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut candidates = vec![0.0, 1.0];
    let denom = (u[0] - w[0]) - (u[1] - w[1]);
    if denom != 0.0 {
        let q = (w[1] - w[0]) / denom;
        if (0.0..=1.0).contains(&q) {
            candidates.push(q);
        }
    }
    let (q, worst) = candidates
        .into_iter()
        .map(|q| (q, violation(q)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty candidates");
    if worst <= eps / 8.0 {
        Ok(WeightChoice { q, degraded: true })
    } else {
        Err(Error::InternalInconsistency(format!(
            "no mixing weight satisfies both constraints: u = {u:?}, w = {w:?}, eps = {eps:e}, best violation {worst:e} at q = {q}"
        )))
    }
}

/// Weight recovery from the two witness vectors.
pub fn combine_weights(
    x1: &[f64],
    x2: &[f64],
    a1: &dyn SymOperator,
    a2: &dyn SymOperator,
    eps: f64,
) -> Result<WeightChoice> {
    let u = [a1.quad_form(x1), a2.quad_form(x1)];
    let w = [a1.quad_form(x2), a2.quad_form(x2)];
    combine_cached(u, w, eps)
}

struct Bisection<'a> {
    inst: &'a SdpInstance<'a>,
    oracle: &'a dyn EigenOracle,
    call_delta: f64,
    calls: usize,
}

enum Probe {
    Low(f64, f64),
    Witness(Witness),
}

impl Bisection<'_> {
    fn probe(&mut self, p: f64, rng: &mut RngState) -> Result<Probe> {
        let op = Pencil {
            a1: self.inst.a1,
            a2: self.inst.a2,
            p,
        };
        self.calls += 1;
        let res = self
            .oracle
            .max_eigvec(&op, 1.0, self.inst.eps / 4.0, self.call_delta, rng)?;
        if res.rayleigh < 0.75 * self.inst.eps {
            return Ok(Probe::Low(p, res.rayleigh));
        }
        let values = [self.inst.a1.quad_form(&res.vector), self.inst.a2.quad_form(&res.vector)];
        Ok(Probe::Witness(Witness {
            p,
            vector: res.vector,
            values,
        }))
    }
}

/// Solves the feasibility problem with at most `ceil(log₂(8/eps)) + 1`
/// oracle calls, each at accuracy `eps / 4` and failure probability
/// `delta / (T + 1)`.
///
/// The loop bisects `[0, 1]`. A witness whose `A₁` value is below its `A₂`
/// value moves `p₁` up; otherwise (ties included) it moves `p₂` down. After
/// the loop one side may still lack a witness; it is then taken from the
/// untouched endpoint (`p = 0` or `p = 1`), where no monotonicity is needed.
pub fn solve_sdp(inst: &SdpInstance, oracle: &dyn EigenOracle, rng: &mut RngState) -> Result<SdpSolution> {
    let n = inst.a1.dim();
    if inst.a2.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: inst.a2.dim(),
        });
    }
    if !(inst.eps > 0.0 && inst.eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "SDP eps must lie in (0, 1), got {}",
            inst.eps
        )));
    }
    if !(inst.delta > 0.0 && inst.delta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0, 1), got {}",
            inst.delta
        )));
    }

    let budget = bisection_budget(inst.eps);
    let mut bis = Bisection {
        inst,
        oracle,
        call_delta: inst.delta / (budget + 1) as f64,
        calls: 0,
    };
    let mut state = BisectionState {
        p1: 0.0,
        p2: 1.0,
        x1: None,
        x2: None,
        t: 0,
        budget,
    };
    let infeasible = |p, r, calls, state| SdpSolution {
        outcome: SdpOutcome::Infeasible {
            witness_p: p,
            witness_rayleigh: r,
        },
        oracle_calls: calls,
        state,
    };

    while state.t < budget {
        state.t += 1;
        let p = 0.5 * (state.p1 + state.p2);
        match bis.probe(p, rng)? {
            Probe::Low(p, r) => return Ok(infeasible(p, r, bis.calls, state)),
            Probe::Witness(w) => {
                if w.values[0] < w.values[1] {
                    // p ↦ xᵀA(p)x has slope A₁ - A₂ < 0.
                    state.p1 = p;
                    state.x1 = Some(w);
                } else {
                    debug_assert!(w.values[0] >= w.values[1]);
                    state.p2 = p;
                    state.x2 = Some(w);
                }
            }
        }
    }

    for (slot, endpoint) in [(0usize, 0.0), (1, 1.0)] {
        let missing = if slot == 0 {
            state.x1.is_none()
        } else {
            state.x2.is_none()
        };
        if !missing {
            continue;
        }
        match bis.probe(endpoint, rng)? {
            Probe::Low(p, r) => return Ok(infeasible(p, r, bis.calls, state)),
            Probe::Witness(w) => {
                if slot == 0 {
                    state.x1 = Some(w);
                } else {
                    state.x2 = Some(w);
                }
            }
        }
    }

    let (x1, x2) = match (&state.x1, &state.x2) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::InternalInconsistency(
                "bisection ended without both witnesses".into(),
            ))
        }
    };
    let weight = combine_cached(x1.values, x2.values, inst.eps)?;
    let q = weight.q;
    let v1: Vec<f64> = x1.vector.iter().map(|v| v * q.sqrt()).collect();
    let v2: Vec<f64> = x2.vector.iter().map(|v| v * (1.0 - q).sqrt()).collect();
    let values = [
        q * x1.values[0] + (1.0 - q) * x2.values[0],
        q * x1.values[1] + (1.0 - q) * x2.values[1],
    ];
    Ok(SdpSolution {
        outcome: SdpOutcome::Feasible {
            decomp: RankOneDecomposition::new(vec![v1, v2])?,
            weight,
            values,
        },
        oracle_calls: bis.calls,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigsolve::Lanczos;
    use crate::sparsemat::SparseSymMatrix;

    fn diag(v: &[f64]) -> SparseSymMatrix {
        SparseSymMatrix::from_diagonal(v).unwrap()
    }

    fn solve(a1: &SparseSymMatrix, a2: &SparseSymMatrix, eps: f64, seed: u64) -> SdpSolution {
        let inst = SdpInstance {
            a1,
            a2,
            eps,
            delta: 0.1,
        };
        solve_sdp(&inst, &Lanczos, &mut RngState::from_seed(seed)).unwrap()
    }

    /// Brute-force check over 2×2 matrices in K_2: X = [[a, c], [c, d]] on a
    /// grid with a + d <= 1 and c² <= a d. Returns the best min_i Aᵢ • X.
    fn grid_best_2x2(a1: &[[f64; 2]; 2], a2: &[[f64; 2]; 2]) -> f64 {
        let steps = 200;
        let mut best = f64::NEG_INFINITY;
        for ia in 0..=steps {
            let a = ia as f64 / steps as f64;
            for id in 0..=(steps - ia) {
                let d = id as f64 / steps as f64;
                let cmax = (a * d).sqrt();
                for ic in -10..=10 {
                    let c = cmax * ic as f64 / 10.0;
                    let dotp = |m: &[[f64; 2]; 2]| m[0][0] * a + 2.0 * m[0][1] * c + m[1][1] * d;
                    best = best.max(dotp(a1).min(dotp(a2)));
                }
            }
        }
        best
    }

    #[test]
    fn identical_easy_constraints_are_feasible() {
        let a = diag(&[0.5, 0.5]);
        let sol = solve(&a, &a, 0.1, 0);
        let SdpOutcome::Feasible { decomp, values, .. } = &sol.outcome else {
            panic!("expected feasible");
        };
        assert!(values[0] >= 0.05 && values[1] >= 0.05);
        assert!((decomp.inner(&a) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn negative_definite_constraint_is_infeasible() {
        let sol = solve(&diag(&[-1.0, -1.0]), &diag(&[1.0, 1.0]), 0.1, 0);
        let SdpOutcome::Infeasible { witness_rayleigh, .. } = sol.outcome else {
            panic!("expected infeasible");
        };
        assert!(witness_rayleigh < 0.075);
        assert!(sol.oracle_calls <= bisection_budget(0.1) + 2);
    }

    #[test]
    fn opposite_diagonals_are_infeasible() {
        // A₁ + A₂ = 0, so A₁ • X and A₂ • X cannot both be positive.
        let a1 = diag(&[0.5, -0.5]);
        let a2 = diag(&[-0.5, 0.5]);
        let best = grid_best_2x2(&[[0.5, 0.0], [0.0, -0.5]], &[[-0.5, 0.0], [0.0, 0.5]]);
        assert!(best <= 1e-12);
        assert!(!solve(&a1, &a2, 0.05, 1).is_feasible());
    }

    #[test]
    fn crossing_diagonals_mix_two_witnesses() {
        let (m1, m2) = ([[0.5, 0.0], [0.0, -0.25]], [[-0.25, 0.0], [0.0, 0.5]]);
        let best = grid_best_2x2(&m1, &m2);
        // Attained at X = diag(1/2, 1/2).
        assert!((best - 0.125).abs() < 1e-12);
        let a1 = diag(&[0.5, -0.25]);
        let a2 = diag(&[-0.25, 0.5]);
        let eps = 0.05;
        let sol = solve(&a1, &a2, eps, 2);
        let SdpOutcome::Feasible { decomp, .. } = &sol.outcome else {
            panic!("expected feasible");
        };
        assert!(decomp.inner(&a1) >= eps / 2.0 - 1e-10);
        assert!(decomp.inner(&a2) >= eps / 2.0 - 1e-10);
        assert!(decomp.trace() <= 1.0 + 1e-10);
        let p = &sol.state;
        assert!(p.p2 - p.p1 <= eps / 8.0);
    }

    #[test]
    fn weight_examples() {
        let eps = 0.1;
        let all = combine_cached([eps, eps], [eps, eps], eps).unwrap();
        assert_eq!(
            all,
            WeightChoice {
                q: 0.5,
                degraded: false
            }
        );
        let cross = combine_cached([eps, 0.0], [0.0, eps], eps).unwrap();
        assert_eq!(cross.q, 0.5);
        assert!(!cross.degraded);
        let q = cross.q;
        assert_eq!(q * eps, eps / 2.0);
    }

    #[test]
    fn weight_degraded_and_failing() {
        let eps = 0.1;
        // Best mix reaches 0.045 on both, violation 0.005 <= eps / 8.
        let d = combine_cached([0.09, 0.0], [0.0, 0.09], eps).unwrap();
        assert!(d.degraded);
        assert!((d.q - 0.5).abs() < 1e-12);
        assert!(combine_cached([0.0, 0.0], [0.0, 0.0], eps).is_err());
        // Flat constraint below requirement.
        assert!(combine_cached([0.0, 1.0], [0.0, 1.0], eps).is_err());
    }

    fn random_unit_norm(n: usize, seed: u64) -> SparseSymMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in i..n {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
        let m = SparseSymMatrix::from_triplets(n, t).unwrap();
        let s = m.max_abs_row_sum();
        SparseSymMatrix::from_triplets(n, m.upper_entries().map(|(i, j, v)| (i, j, v / s))).unwrap()
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn bisection_invariants(n in 2usize..12, seed in proptest::prelude::any::<u64>(), k in 0usize..3) {
            let eps = [0.1, 0.01, 1e-3][k];
            let a1 = random_unit_norm(n, seed);
            let a2 = random_unit_norm(n, seed.wrapping_add(1));
            let sol = solve(&a1, &a2, eps, seed);
            proptest::prop_assert!(sol.oracle_calls <= bisection_budget(eps) + 2);
            // Witnesses found inside (0, 1) respect the branch slope.
            if let Some(w) = sol.state.x1.as_ref().filter(|w| w.p > 0.0) {
                proptest::prop_assert!(w.value_at(0.0) >= w.value_at(1.0));
            }
            if let Some(w) = sol.state.x2.as_ref().filter(|w| w.p < 1.0) {
                proptest::prop_assert!(w.value_at(1.0) >= w.value_at(0.0));
            }
            if let SdpOutcome::Feasible { decomp, .. } = &sol.outcome {
                proptest::prop_assert!(sol.state.p2 - sol.state.p1 <= eps / 8.0);
                proptest::prop_assert!(decomp.trace() <= 1.0 + 1e-10);
                proptest::prop_assert!(decomp.inner(&a1) >= eps / 2.0 - 1e-10);
                proptest::prop_assert!(decomp.inner(&a2) >= eps / 2.0 - 1e-10);
            }
        }
    }

    #[test]
    fn pencil_skips_zero_weight_products() {
        use crate::sparsemat::{Counted, Telemetry};
        let t = Telemetry::new();
        let a = diag(&[1.0, 2.0]);
        let b = diag(&[3.0, 4.0]);
        let (ca, cb) = (Counted::new(&a, &t), Counted::new(&b, &t));
        let x = [1.0, 1.0];
        assert_eq!(
            Pencil {
                a1: &ca,
                a2: &cb,
                p: 1.0
            }
            .apply(&x),
            vec![1.0, 2.0]
        );
        assert_eq!(t.matvecs(), 1);
        assert_eq!(
            Pencil {
                a1: &ca,
                a2: &cb,
                p: 0.5
            }
            .apply(&x),
            vec![2.0, 3.0]
        );
        assert_eq!(t.matvecs(), 3);
    }
}
