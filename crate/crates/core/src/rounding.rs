//! Rank-one decompositions, the pairwise rotation that equalizes `A • xᵢxᵢᵀ`
//! across components, and extraction of a trust-region vector from a lifted
//! component.

use crate::error::{Error, Result};
use crate::sparsemat::vecops::{dot, scale};
use crate::sparsemat::SymOperator;

/// Absolute band on Rayleigh values, scaled by `max(1, |A • X|)`, inside which
/// a component counts as already at its share.
pub const QUOTA_TOL: f64 = 1e-9;

/// `X = Σ xᵢ xᵢᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneDecomposition {
    pub vectors: Vec<Vec<f64>>,
}

impl RankOneDecomposition {
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let first = vectors
            .first()
            .ok_or_else(|| Error::InvalidArgument("decomposition needs at least one vector".into()))?;
        let n = first.len();
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        Ok(RankOneDecomposition { vectors })
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    /// `trace(X) = Σ ‖xᵢ‖²`
    pub fn trace(&self) -> f64 {
        self.vectors.iter().map(|v| dot(v, v)).sum()
    }

    /// `A • X = Σ xᵢᵀ A xᵢ`
    pub fn inner(&self, a: &dyn SymOperator) -> f64 {
        self.vectors.iter().map(|v| a.quad_form(v)).sum()
    }

    /// Dense `Σ xᵢxᵢᵀ`, row-major.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        for v in &self.vectors {
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += v[i] * v[j];
                }
            }
        }
        out
    }
}

/// Root of smaller magnitude of `qa t² + qb t + qc = 0`, for `qa > 0 > qc`.
fn small_root(qa: f64, qb: f64, qc: f64) -> Result<f64> {
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < -1e-12 {
        return Err(Error::InternalInconsistency(format!(
            "rotation quadratic has complex roots (a={qa:e}, b={qb:e}, c={qc:e}, disc={disc:e})"
        )));
    }
    let sq = disc.max(0.0).sqrt();
    let q = -0.5 * (qb + if qb >= 0.0 { sq } else { -sq });
    // qa * qc < 0 keeps q away from zero.
    let t1 = q / qa;
    let t2 = qc / q;
    Ok(if t1.abs() <= t2.abs() { t1 } else { t2 })
}

/// Replaces `(xi, xj)` with `((t xi + xj), (xi - t xj)) / sqrt(t² + 1)`;
/// the sum `xi xiᵀ + xj xjᵀ` is unchanged.
pub fn rotate_pair(xi: &mut [f64], xj: &mut [f64], t: f64) {
    let s = 1.0 / (t * t + 1.0).sqrt();
    for (a, b) in xi.iter_mut().zip(xj.iter_mut()) {
        let (u, v) = (*a, *b);
        *a = s * (t * u + v);
        *b = s * (u - t * v);
    }
}

/// Step-wise driver for the rotation procedure. [`sz_rotation`] runs it to
/// completion; tests use [`SzRotation::step`] to inspect intermediate states.
pub struct SzRotation<'a> {
    a: &'a dyn SymOperator,
    vectors: Vec<Vec<f64>>,
    /// `A xᵢ`, updated by linearity so each step costs no matvec.
    images: Vec<Vec<f64>>,
    values: Vec<f64>,
    total: f64,
    tol: f64,
    rotations: usize,
}

impl<'a> SzRotation<'a> {
    pub fn new(a: &'a dyn SymOperator, decomp: RankOneDecomposition) -> Result<Self> {
        if decomp.dim() != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                found: decomp.dim(),
            });
        }
        let images: Vec<Vec<f64>> = decomp.vectors.iter().map(|v| a.apply(v)).collect();
        let values: Vec<f64> = decomp.vectors.iter().zip(&images).map(|(v, av)| dot(v, av)).collect();
        let total: f64 = values.iter().sum();
        Ok(SzRotation {
            a,
            vectors: decomp.vectors,
            images,
            values,
            total,
            tol: QUOTA_TOL * total.abs().max(1.0),
            rotations: 0,
        })
    }

    /// `a' / r`
    pub fn target(&self) -> f64 {
        self.total / self.vectors.len() as f64
    }

    /// `a' = A • X`, measured once at construction.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn rotations(&self) -> usize {
        self.rotations
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn at_quota(&self) -> usize {
        let target = self.target();
        self.values.iter().filter(|v| (**v - target).abs() <= self.tol).count()
    }

    /// Performs one rotation if some component is above and another below
    /// the target. Returns `false` once no such pair exists.
    pub fn step(&mut self) -> Result<bool> {
        let target = self.target();
        let above = self.values.iter().position(|v| *v > target + self.tol);
        let below = self.values.iter().position(|v| *v < target - self.tol);
        let (Some(i), Some(j)) = (above, below) else {
            return Ok(false);
        };
        if self.rotations + 1 >= self.vectors.len() {
            return Err(Error::InternalInconsistency(format!(
                "rotation did not settle within {} steps",
                self.vectors.len() - 1
            )));
        }

        let qa = self.values[i] - target;
        let qb = 2.0 * dot(&self.vectors[i], &self.images[j]);
        let qc = self.values[j] - target;
        let t = small_root(qa, qb, qc)?;

        let (lo, hi) = (i.min(j), i.max(j));
        let (head, tail) = self.vectors.split_at_mut(hi);
        let (vi, vj) = if i < j {
            (&mut head[lo], &mut tail[0])
        } else {
            (&mut tail[0], &mut head[lo])
        };
        rotate_pair(vi, vj, t);
        let (head, tail) = self.images.split_at_mut(hi);
        let (wi, wj) = if i < j {
            (&mut head[lo], &mut tail[0])
        } else {
            (&mut tail[0], &mut head[lo])
        };
        rotate_pair(wi, wj, t);

        self.values[i] = dot(&self.vectors[i], &self.images[i]);
        self.values[j] = dot(&self.vectors[j], &self.images[j]);
        self.rotations += 1;
        Ok(true)
    }

    pub fn finish(self) -> RotationOutcome {
        RotationOutcome {
            decomp: RankOneDecomposition { vectors: self.vectors },
            values: self.values,
            total: self.total,
            rotations: self.rotations,
        }
    }

    pub fn operator(&self) -> &dyn SymOperator {
        self.a
    }
}

#[derive(Debug, Clone)]
pub struct RotationOutcome {
    pub decomp: RankOneDecomposition,
    /// `yᵢᵀ A yᵢ` for the returned vectors.
    pub values: Vec<f64>,
    /// `A • X`
    pub total: f64,
    pub rotations: usize,
}

/// Redistributes `X = Σ xᵢxᵢᵀ` so that every `yᵢᵀ A yᵢ >= (A • X) / r`
/// (up to [`QUOTA_TOL`]) while `Σ yᵢyᵢᵀ = X`. Uses at most `r - 1` rotations
/// and `r` matvecs.
pub fn sz_rotation(a: &dyn SymOperator, decomp: RankOneDecomposition) -> Result<RotationOutcome> {
    let mut rot = SzRotation::new(a, decomp)?;
    while rot.step()? {}
    Ok(rot.finish())
}

/// Picks the first component `y` with `yᵀ a2 y >= threshold` and returns
/// `ỹ / α` where `y = (α, ỹ)`.
///
/// For the lifted pair, `yᵀ a2 y > 0` forces `α² > ‖ỹ‖²_M`, so the result
/// lies strictly inside the ellipsoid, and `yᵀ a1 y >= 0` gives an objective
/// of at least `c`.
pub fn extract_solution(
    decomp: &RankOneDecomposition,
    a1: &dyn SymOperator,
    a2: &dyn SymOperator,
    threshold: f64,
) -> Result<Vec<f64>> {
    for y in &decomp.vectors {
        if y.len() != a2.dim() {
            return Err(Error::DimensionMismatch {
                expected: a2.dim(),
                found: y.len(),
            });
        }
        if a2.quad_form(y) < threshold {
            continue;
        }
        let v1 = a1.quad_form(y);
        if v1 < threshold - QUOTA_TOL * v1.abs().max(1.0) {
            return Err(Error::ContractViolation(format!(
                "selected component has objective share {v1:e} below threshold {threshold:e}"
            )));
        }
        let alpha = y[0];
        if alpha.abs() < 1e-12 {
            return Err(Error::NumericalDegeneracy(format!(
                "leading entry {alpha:e} too small to rescale (constraint share {:e})",
                a2.quad_form(y)
            )));
        }
        let mut x = y[1..].to_vec();
        scale(1.0 / alpha, &mut x);
        return Ok(x);
    }
    Err(Error::ContractViolation(format!(
        "no component reaches the constraint threshold {threshold:e}"
    )))
}
