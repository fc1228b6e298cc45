//! Matrix-free views of the `(n + 1) × (n + 1)` lifted pair
//!
//! ```text
//! A₁ = s · [[-c, bᵀ], [b, A]],   A₂ = s · [[1, 0], [0, -M]],   s = 1 / (2κ̂)
//! ```
//!
//! so that for `y = (1, x)`: `yᵀA₁y = s (xᵀAx + 2bᵀx - c)` and
//! `yᵀA₂y = s (1 - xᵀMx)`.

use crate::sparsemat::vecops::dot;
use crate::sparsemat::SymOperator;

pub struct LiftedObjective<'a> {
    pub(crate) a: &'a dyn SymOperator,
    pub(crate) b: &'a [f64],
    pub(crate) c: f64,
    pub(crate) scale: f64,
}

impl<'a> LiftedObjective<'a> {
    pub fn new(a: &'a dyn SymOperator, b: &'a [f64], c: f64, kappa_hat: f64) -> Self {
        LiftedObjective {
            a,
            b,
            c,
            scale: 0.5 / kappa_hat,
        }
    }

    pub fn level(&self) -> f64 {
        self.c
    }
}

impl SymOperator for LiftedObjective<'_> {
    fn dim(&self) -> usize {
        self.b.len() + 1
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (x0, xr) = (x[0], &x[1..]);
        let (y0, yr) = y.split_at_mut(1);
        self.a.apply_into(xr, yr);
        for (yi, bi) in yr.iter_mut().zip(self.b) {
            *yi = self.scale * (*yi + x0 * bi);
        }
        y0[0] = self.scale * (dot(self.b, xr) - self.c * x0);
    }

    fn cost(&self) -> usize {
        self.a.cost() + 2 * self.b.len() + 1
    }
}

pub struct LiftedConstraint<'a> {
    pub(crate) m: &'a dyn SymOperator,
    pub(crate) scale: f64,
}

impl<'a> LiftedConstraint<'a> {
    pub fn new(m: &'a dyn SymOperator, kappa_hat: f64) -> Self {
        LiftedConstraint {
            m,
            scale: 0.5 / kappa_hat,
        }
    }
}

impl SymOperator for LiftedConstraint<'_> {
    fn dim(&self) -> usize {
        self.m.dim() + 1
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let (y0, yr) = y.split_at_mut(1);
        self.m.apply_into(&x[1..], yr);
        for v in yr.iter_mut() {
            *v *= -self.scale;
        }
        y0[0] = self.scale * x[0];
    }

    fn cost(&self) -> usize {
        self.m.cost() + 1
    }
}
