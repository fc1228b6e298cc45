//! Dense exact solver for small trust-region problems, used to cross-check
//! the sparse pipeline. Independent of Lanczos and the SDP machinery.
//!
//! With `M = LLᵀ` and `y = Lᵀx` the problem becomes
//! `max yᵀCy + 2gᵀy, ‖y‖ <= 1` for `C = L⁻¹AL⁻ᵀ`, `g = L⁻¹b`. A global
//! maximizer satisfies `(λI - C) y = g` with `λ >= max(0, θ_max(C))` and
//! `λ (1 - ‖y‖²) = 0`; `λ` is found by bisection on the secular function
//! `‖(λI - C)⁻¹ g‖ = 1`, with the hard case (`g` orthogonal to the top
//! eigenspace) completed along a top eigenvector.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::trustregion::{Metric, TrustRegionProblem};

pub const MAX_DIM: usize = 64;
const SECULAR_ITERATIONS: usize = 200;

#[derive(Debug, Clone)]
pub struct DenseProblem {
    a: DMatrix<f64>,
    m: DMatrix<f64>,
    b: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Lagrange multiplier `λ` with `(λM - A)x = b`.
    pub multiplier: f64,
    pub hard_case: bool,
}

fn symmetric(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rows.len(),
        });
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} contains a non-finite entry")));
    }
    for i in 0..n {
        for j in 0..i {
            if m[(i, j)] != m[(j, i)] {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    value: m[(i, j)],
                    mirror: m[(j, i)],
                });
            }
        }
    }
    Ok(m)
}

impl DenseProblem {
    pub fn new(a: &[Vec<f64>], b: &[f64], m: Option<&[Vec<f64>]>) -> Result<Self> {
        let n = b.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "dense reference needs 1 <= n <= {MAX_DIM}, got {n}"
            )));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear term contains a non-finite entry".into()));
        }
        let a = symmetric(a, n, "A")?;
        let m = match m {
            Some(m) => symmetric(m, n, "M")?,
            None => DMatrix::identity(n, n),
        };
        Ok(DenseProblem {
            a,
            m,
            b: DVector::from_column_slice(b),
        })
    }

    pub fn from_problem(prob: &TrustRegionProblem) -> Result<Self> {
        let m = match prob.metric() {
            Metric::Identity(_) => None,
            Metric::Matrix(m) => Some(m.to_dense()),
        };
        DenseProblem::new(&prob.a().to_dense(), prob.b(), m.as_deref())
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        x.dot(&(&self.a * &x)) + 2.0 * self.b.dot(&x)
    }

    pub fn m_norm_sq(&self, x: &[f64]) -> f64 {
        let x = DVector::from_column_slice(x);
        x.dot(&(&self.m * &x))
    }

    /// `‖(λM - A)x - b‖` scaled by `1 + ‖b‖`, plus complementarity
    /// `|λ (1 - xᵀMx)|`.
    pub fn kkt_residual(&self, x: &[f64], multiplier: f64) -> f64 {
        let xv = DVector::from_column_slice(x);
        let stationarity = (&self.m * &xv * multiplier - &self.a * &xv - &self.b).norm() / (1.0 + self.b.norm());
        let slack = (multiplier * (1.0 - self.m_norm_sq(x))).abs();
        stationarity.max(slack)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }
}

/// Global maximum of `xᵀAx + 2bᵀx` over `xᵀMx <= 1`. `tol` bounds the
/// relative bisection width on the multiplier and the size of the top-space
/// component treated as zero.
pub fn solve_dense_exact(dp: &DenseProblem, tol: f64) -> Result<DenseSolution> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tol must lie in (0, 1), got {tol}")));
    }
    let n = dp.dim();
    let chol = dp.m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite {
        estimate: dp.m.clone().symmetric_eigen().eigenvalues.min(),
    })?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalDegeneracy("Cholesky factor is singular".into()))?;
    let mut c = &l_inv * &dp.a * l_inv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let g = &l_inv * &dp.b;

    let eig = c.clone().symmetric_eigen();
    let theta = eig.eigenvalues.clone();
    let v = eig.eigenvectors.clone();
    let gamma = v.transpose() * &g;
    let top = (0..n).max_by(|&i, &j| theta[i].total_cmp(&theta[j])).unwrap();
    let theta_max = theta[top];
    let spread = theta.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1.0);
    let gnorm = g.norm();

    let cluster_tol = 1e-12 * spread;
    let in_top = |i: usize| theta_max - theta[i] <= cluster_tol;
    let y_norm_sq = |lam: f64, skip_top: bool| -> f64 {
        (0..n)
            .filter(|&i| !(skip_top && in_top(i)))
            .map(|i| (gamma[i] / (lam - theta[i])).powi(2))
            .sum()
    };
    let y_at = |lam: f64, skip_top: bool| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for i in 0..n {
            if skip_top && in_top(i) {
                continue;
            }
            y += v.column(i) * (gamma[i] / (lam - theta[i]));
        }
        y
    };

    let lo = theta_max.max(0.0);
    let top_weight: f64 = (0..n)
        .filter(|&i| in_top(i))
        .map(|i| gamma[i] * gamma[i])
        .sum::<f64>()
        .sqrt();
    let mut hard_case = false;

    let (lam, y) = if theta_max < 0.0 && y_norm_sq(0.0, false) <= 1.0 {
        // Concave with an interior maximizer.
        (0.0, y_at(0.0, false))
    } else if top_weight <= tol * tol * (1.0 + gnorm) && y_norm_sq(theta_max, true) <= 1.0 && theta_max >= 0.0 {
        hard_case = true;
        let mut y = y_at(theta_max, true);
        let tau = (1.0 - y.norm_squared()).max(0.0).sqrt();
        y += v.column(top) * tau;
        (theta_max, y)
    } else {
        // φ(λ) = ‖y(λ)‖² - 1 is decreasing on (lo, ∞) and φ(lo + ‖g‖) <= 0.
        let (mut a, mut b) = (lo, lo + gnorm);
        for _ in 0..SECULAR_ITERATIONS {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if y_norm_sq(mid, false) > 1.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        if b - a > tol * b.abs().max(1.0) {
            return Err(Error::OracleFailure(format!(
                "secular bisection did not converge: bracket [{a:e}, {b:e}]"
            )));
        }
        let mut y = y_at(b, false);
        // Near-hard instances: finish on the boundary along the top direction.
        let deficit = 1.0 - y.norm_squared();
        if deficit > 0.0 && b > 0.0 {
            let dir = v.column(top);
            let along = y.dot(&dir);
            // Pick the root of ‖y + t v‖ = 1 that keeps the objective highest.
            let t1 = -along + (along * along + deficit).sqrt();
            let t2 = -along - (along * along + deficit).sqrt();
            let obj = |t: f64| {
                let z = &y + dir * t;
                z.dot(&(&c * &z)) + 2.0 * g.dot(&z)
            };
            let t = if obj(t1) >= obj(t2) { t1 } else { t2 };
            y += dir * t;
        }
        (b, y)
    };

    let x = l_inv.transpose() * y;
    let xs: Vec<f64> = x.iter().copied().collect();
    Ok(DenseSolution {
        value: dp.objective(&xs),
        x: xs,
        multiplier: lam,
        hard_case,
    })
}
