//! Largest eigenpair of a symmetric tridiagonal matrix: Sturm-sequence
//! bisection for the eigenvalue, inverse iteration for the vector. Both are
//! linear in the size, so the Lanczos projection never needs a dense solver.

/// Number of eigenvalues strictly less than `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut d = diag[0] - x;
    for i in 0.. {
        if d == 0.0 {
            d = -tiny;
        }
        if d < 0.0 {
            count += 1;
        }
        if i + 1 == diag.len() {
            break;
        }
        d = diag[i + 1] - x - off[i] * off[i] / d;
    }
    count
}

fn largest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let k = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < k { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    // Invariant: count(lo) <= k - 1 and count(hi) == k.
    let pad = f64::EPSILON * (lo.abs().max(hi.abs()).max(1.0));
    lo -= pad;
    hi += pad;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) == k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift I) z = rhs` in place with partially pivoted LU.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64]) {
    let k = diag.len();
    let scale = diag
        .iter()
        .chain(off)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;

    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut dl = off.to_vec();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; k.saturating_sub(2)];
    let mut swapped = vec![false; k.saturating_sub(1)];

    for i in 0..k.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = floor;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < k {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            swapped[i] = true;
        }
    }
    for v in d.iter_mut() {
        if v.abs() < floor {
            *v = if *v < 0.0 { -floor } else { floor };
        }
    }

    for i in 0..k.saturating_sub(1) {
        if swapped[i] {
            let temp = rhs[i] - dl[i] * rhs[i + 1];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = temp;
        } else {
            rhs[i + 1] -= dl[i] * rhs[i];
        }
    }
    rhs[k - 1] /= d[k - 1];
    if k > 1 {
        rhs[k - 2] = (rhs[k - 2] - du[k - 2] * rhs[k - 1]) / d[k - 2];
    }
    for i in (0..k.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
    }
}

/// Returns `(theta, s)` with `theta` the largest eigenvalue of the tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off`, and `s` a unit
/// eigenvector.
pub(crate) fn top_eigenpair(diag: &[f64], off: &[f64]) -> (f64, Vec<f64>) {
    let k = diag.len();
    assert!(k > 0 && off.len() + 1 == k);
    if k == 1 {
        return (diag[0], vec![1.0]);
    }
    let theta = largest_eigenvalue(diag, off);

    // Deterministic start with no exact symmetry.
    let mut z: Vec<f64> = (0..k)
        .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).fract())
        .collect();
    for _ in 0..3 {
        shifted_solve(diag, off, theta, &mut z);
        let nz = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !nz.is_finite() || nz == 0.0 {
            break;
        }
        z.iter_mut().for_each(|v| *v /= nz);
    }
    (theta, z)
}
