use std::sync::atomic::{AtomicU64, Ordering};

use super::SparseSymMatrix;

/// A symmetric linear operator on `R^dim`.
pub trait SymOperator {
    fn dim(&self) -> usize;

    /// Writes `self * x` into `y`. Both slices must have length `dim()`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// Stored entries touched by one application; used for cost accounting.
    fn cost(&self) -> usize;

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    fn quad_form(&self, x: &[f64]) -> f64 {
        super::vecops::dot(x, &self.apply(x))
    }
}

impl SymOperator for SparseSymMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.apply_unchecked(x, y)
    }

    fn cost(&self) -> usize {
        self.stored_entries().max(1)
    }
}

impl<T: SymOperator + ?Sized> SymOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }

    fn cost(&self) -> usize {
        (**self).cost()
    }
}

/// The identity on `R^n`, used as the implicit metric when `M = I`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl SymOperator for Identity {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(x);
    }

    fn cost(&self) -> usize {
        self.0
    }
}

/// `-op`
pub struct Negated<O>(pub O);

impl<O: SymOperator> SymOperator for Negated<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.0.apply_into(x, y);
        y.iter_mut().for_each(|v| *v = -*v);
    }

    fn cost(&self) -> usize {
        self.0.cost()
    }
}

/// `shift * I - op`
pub struct ShiftedNegation<O> {
    pub op: O,
    pub shift: f64,
}

impl<O: SymOperator> SymOperator for ShiftedNegation<O> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply_into(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi - *yi;
        }
    }

    fn cost(&self) -> usize {
        self.op.cost()
    }
}

/// Solver telemetry. Counters are atomic so shared operators can be used from
/// several threads.
#[derive(Debug, Default)]
pub struct Telemetry {
    matvecs: AtomicU64,
    entries_touched: AtomicU64,
    oracle_calls: AtomicU64,
}

impl Telemetry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn matvecs(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn entries_touched(&self) -> u64 {
        self.entries_touched.load(Ordering::Relaxed)
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.load(Ordering::Relaxed)
    }

    pub fn record_matvec(&self, entries: usize) {
        self.matvecs.fetch_add(1, Ordering::Relaxed);
        self.entries_touched.fetch_add(entries as u64, Ordering::Relaxed);
    }

    pub fn record_oracle_calls(&self, calls: u64) {
        self.oracle_calls.fetch_add(calls, Ordering::Relaxed);
    }
}

/// Wraps an operator so every application is recorded in a [`Telemetry`].
pub struct Counted<'t, O> {
    inner: O,
    telemetry: &'t Telemetry,
}

impl<'t, O: SymOperator> Counted<'t, O> {
    pub fn new(inner: O, telemetry: &'t Telemetry) -> Self {
        Counted { inner, telemetry }
    }
}

impl<O: SymOperator> SymOperator for Counted<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.telemetry.record_matvec(self.inner.cost());
        self.inner.apply_into(x, y)
    }

    fn cost(&self) -> usize {
        self.inner.cost()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counted_records_every_application() {
        let t = Telemetry::new();
        let m = SparseSymMatrix::from_triplets(3, [(0, 0, 1.0), (0, 2, 2.0)]).unwrap();
        let op = Counted::new(&m, &t);
        op.apply(&[1.0, 0.0, 0.0]);
        op.quad_form(&[1.0, 1.0, 1.0]);
        assert_eq!(t.matvecs(), 2);
        assert_eq!(t.entries_touched(), 4);
    }

    #[test]
    fn counters_are_shared_across_threads() {
        let t = Telemetry::new();
        let m = SparseSymMatrix::identity(8);
        std::thread::scope(|s| {
            for _ in 0..4 {
                s.spawn(|| {
                    let op = Counted::new(&m, &t);
                    for _ in 0..100 {
                        op.apply(&[1.0; 8]);
                    }
                });
            }
        });
        assert_eq!(t.matvecs(), 400);
    }

    #[test]
    fn shifted_negation() {
        let m = SparseSymMatrix::from_diagonal(&[4.0, 0.25]).unwrap();
        let op = ShiftedNegation { op: &m, shift: 5.0 };
        assert_eq!(op.apply(&[1.0, 1.0]), vec![1.0, 4.75]);
        assert_eq!(Negated(&m).apply(&[1.0, 2.0]), vec![-4.0, -0.5]);
    }
}
