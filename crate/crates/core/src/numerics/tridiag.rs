use crate::error::{Error, Result};

/// Solves `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]` by the Thomas algorithm.
///
/// `sub[0]` and `sup[n-1]` are ignored. No pivoting: the callers only build
/// diagonally dominant (or M-matrix) systems.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(
        sub.len() == n && sup.len() == n && rhs.len() == n,
        "tridiagonal band length mismatch"
    );
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::SolveBreakdown { row: 0 });
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SolveBreakdown { row: i });
        }
        c[i] = if i + 1 < n { sup[i] / pivot } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            location: "tridiagonal solution".into(),
        });
    }
    Ok(d)
}
