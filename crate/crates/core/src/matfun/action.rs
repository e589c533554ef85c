//! Action of the exponential on a block of vectors, without forming `e^{tA}`.
//!
//! `e^{tA} B = (e^{tA/s})^s B`, and each factor is applied as a truncated
//! Taylor sum `B_{i+1} = Σ_{j<=m} (tA/s)^j / j! B_i`. The number of substeps
//! is `s = max(1, ceil(||tA||_1))`, so every substep has `||tA/s||_1 <= 1`;
//! the series stops once two consecutive terms fall below unit roundoff
//! relative to the partial sum.

use super::phi::MAX_PHI_ORDER;
use super::{DenseMatrix, MatfunError};

const ACTION_MAX_TERMS: usize = 40;

/// Highest φ index accepted by [`phipm_action`].
pub const MAX_PHIPM_ORDER: usize = 4;

/// Approximates `e^{tA} B`.
pub fn expm_action(a: &DenseMatrix, b: &DenseMatrix, t: f64) -> Result<DenseMatrix, MatfunError> {
    if !a.is_square() {
        return Err(MatfunError::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != a.rows() {
        return Err(MatfunError::Shape(format!(
            "B has {} rows, A has {}",
            b.rows(),
            a.rows()
        )));
    }
    if !t.is_finite() {
        return Err(MatfunError::Domain(format!("time {t} is not finite")));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(MatfunError::Domain("non-finite input".into()));
    }

    let x = a.scaled(t);
    let norm = x.norm_one();
    let substeps = norm.ceil().max(1.0) as usize;
    let x = x.scaled(1.0 / substeps as f64);
    let tol = f64::EPSILON / 2.0;

    let mut current = b.clone();
    for _ in 0..substeps {
        let mut sum = current.clone();
        let mut term = current;
        let mut prev_small = false;
        for j in 1..=ACTION_MAX_TERMS {
            term = x.matmul(&term).scaled(1.0 / j as f64);
            sum = sum.add(&term);
            let small = term.max_abs() <= tol * sum.max_abs();
            if small && prev_small {
                break;
            }
            prev_small = small;
        }
        if !sum.is_finite() {
            return Err(MatfunError::Overflow("exponential action"));
        }
        current = sum;
    }
    Ok(current)
}

/// `Σ_{k=0}^{p} t^k φ_k(tA) u_k` with `p = vectors.len() - 1 <= 4`.
///
/// One exponential action of the `(n+p) x (n+p)` matrix
///
/// ```text
/// [ A  W ]      W = [u_p | ... | u_1],
/// [ 0  J ]      J = ones on the superdiagonal,
/// ```
///
/// applied to `[u_0; e_p]` carries the whole combination in its first `n`
/// entries.
pub fn phipm_action(
    a: &DenseMatrix,
    vectors: &[Vec<f64>],
    t: f64,
) -> Result<Vec<f64>, MatfunError> {
    let Some(u0) = vectors.first() else {
        return Err(MatfunError::Shape("at least one vector is required".into()));
    };
    let p = vectors.len() - 1;
    if p > MAX_PHIPM_ORDER.min(MAX_PHI_ORDER) {
        return Err(MatfunError::UnsupportedOrder {
            k: p,
            max: MAX_PHIPM_ORDER,
        });
    }
    let n = a.rows();
    if let Some((i, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != n) {
        return Err(MatfunError::Shape(format!(
            "vector u_{i} has length {}, expected {n}",
            v.len()
        )));
    }
    if p == 0 {
        return Ok(expm_action(a, &DenseMatrix::from_column(u0), t)?.column(0));
    }

    let size = n + p;
    let mut aug = DenseMatrix::zeros(size, size);
    aug.set_block(0, 0, a);
    for col in 0..p {
        // Column n + col holds u_{p - col}.
        let u = &vectors[p - col];
        for (i, &x) in u.iter().enumerate() {
            aug[(i, n + col)] = x;
        }
    }
    for i in 0..p - 1 {
        aug[(n + i, n + i + 1)] = 1.0;
    }
    let mut start = vec![0.0; size];
    start[..n].copy_from_slice(u0);
    start[size - 1] = 1.0;

    let out = expm_action(&aug, &DenseMatrix::from_column(&start), t)?;
    Ok(out.column(0)[..n].to_vec())
}
