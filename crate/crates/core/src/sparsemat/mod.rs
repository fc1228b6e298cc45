//! Sparse symmetric matrices and the operator abstraction used by the solvers.
//!
//! Matrices are stored as the upper triangle in compressed-row form; the
//! lower triangle is implied. Every product in the crate goes through
//! [`SymOperator`], so telemetry can be attached by wrapping an operator in
//! [`Counted`].

mod market;
mod operator;
pub mod vecops;

pub use market::{load_matrix_market, load_vector, write_matrix_market, write_vector};
pub use operator::{Counted, Identity, Negated, ShiftedNegation, SymOperator, Telemetry};

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Dense vectors are plain `Vec<f64>`; slices are accepted wherever possible.
pub type DenseVector = Vec<f64>;

/// Symmetric sparse matrix, upper triangle in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds a matrix from coordinate entries. Each `(i, j, v)` denotes both
    /// `(i, j)` and `(j, i)`; duplicates at the same symmetric position are
    /// summed and exact zeros are dropped.
    pub fn from_triplets<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) out of range for dimension {n}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("entry ({i}, {j}) = {v}")));
            }
            *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        Ok(Self::from_sorted_upper(n, acc))
    }

    fn from_sorted_upper(n: usize, acc: BTreeMap<(usize, usize), f64>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(acc.len());
        let mut values = Vec::with_capacity(acc.len());
        for ((i, j), v) in acc {
            if v == 0.0 {
                continue;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseSymMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a matrix from a dense row-major square array; the array must be
    /// exactly symmetric.
    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut acc = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("entry ({i}, {j}) = {v}")));
                }
                if v != rows[j][i] {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        value: v,
                        mirror: rows[j][i],
                    });
                }
                if j >= i {
                    acc.insert((i, j), v);
                }
            }
        }
        Ok(Self::from_sorted_upper(n, acc))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n]).expect("finite diagonal")
    }

    pub fn zeros(n: usize) -> Self {
        SparseSymMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (upper-triangle) entries.
    pub fn stored_entries(&self) -> usize {
        self.values.len()
    }

    /// Number of nonzeros of the full symmetric matrix.
    pub fn nnz(&self) -> usize {
        self.upper_entries().map(|(i, j, _)| if i == j { 1 } else { 2 }).sum()
    }

    /// Iterates the stored upper-triangle entries `(i, j, v)` with `i <= j`.
    pub fn upper_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// Value at `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = (i.min(j), i.max(j));
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match cols.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn max_abs_row_sum(&self) -> f64 {
        let mut sums = vec![0.0; self.n];
        for (i, j, v) in self.upper_entries() {
            sums[i] += v.abs();
            if i != j {
                sums[j] += v.abs();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    /// True when the matrix is exactly the identity.
    pub fn is_identity(&self) -> bool {
        self.stored_entries() == self.n && self.upper_entries().all(|(i, j, v)| i == j && v == 1.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.upper_entries() {
            out[i][j] = v;
            out[j][i] = v;
        }
        out
    }

    /// `y = self * x` without dimension checks beyond debug assertions.
    pub(crate) fn apply_unchecked(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let xi = x[i];
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let v = self.values[k];
                acc += v * x[j];
                if j != i {
                    y[j] += v * xi;
                }
            }
            y[i] += acc;
        }
    }
}

/// Matrix-vector product `m * v`.
pub fn matvec(m: &SparseSymMatrix, v: &[f64]) -> Result<DenseVector> {
    check_dim(m.dim(), v.len())?;
    let mut out = vec![0.0; m.dim()];
    m.apply_unchecked(v, &mut out);
    Ok(out)
}

/// Quadratic form `vᵀ m v`, computed as `dot(v, matvec(m, v))`.
pub fn quad_form(m: &SparseSymMatrix, v: &[f64]) -> Result<f64> {
    let mv = matvec(m, v)?;
    Ok(vecops::dot(v, &mv))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
