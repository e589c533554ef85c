//! Dense matrix exponential and matrix φ-functions.
//!
//! `e^A` is computed by scaling and squaring around a fixed-degree Taylor
//! polynomial: `s = max(0, ceil(log2 ||A||_1))`, `X = A / 2^s`, a degree-30
//! Taylor sum of `e^X`, then `s` squarings. With `||X||_1 <= 1` the truncation
//! error is below `1/31!`.
//!
//! φ-functions of a matrix come from one exponential of a block upper
//! triangular matrix: the first block row of
//!
//! ```text
//!       [ A  I  0 ... 0 ]
//!       [ 0  0  I ... 0 ]
//! exp(  [       ...     ] )
//!       [ 0  0  0 ... I ]
//!       [ 0  0  0 ... 0 ]
//! ```
//!
//! is `[φ_0(A), φ_1(A), ..., φ_p(A)]`.

use super::phi::{inv_factorial, MAX_PHI_ORDER};
use super::{DenseMatrix, MatfunError};

/// Degree of the Taylor polynomial used on the scaled matrix.
pub const EXPM_TAYLOR_DEGREE: usize = 30;

/// Highest φ index accepted by [`phi_dense`].
pub const MAX_DENSE_PHI_ORDER: usize = 4;

fn check_square_finite(a: &DenseMatrix) -> Result<(), MatfunError> {
    if !a.is_square() {
        return Err(MatfunError::Shape(format!(
            "expected a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !a.is_finite() {
        return Err(MatfunError::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Number of halvings used for `a`.
pub fn scaling_exponent(a: &DenseMatrix) -> u32 {
    let norm = a.norm_one();
    if norm <= 1.0 {
        0
    } else {
        norm.log2().ceil() as u32
    }
}

/// `e^A` by scaling and squaring.
///
/// Fails with [`MatfunError::NonFinite`] if an intermediate overflows; the
/// error names the squaring stage (0 is the Taylor stage).
pub fn expm_dense(a: &DenseMatrix) -> Result<DenseMatrix, MatfunError> {
    check_square_finite(a)?;
    let n = a.rows();
    let s = scaling_exponent(a);
    let x = a.scaled(0.5_f64.powi(s as i32));

    // Horner: T = I + X/1 (I + X/2 (I + ... (I + X/m))).
    let identity = DenseMatrix::identity(n);
    let mut t = identity.clone();
    for j in (1..=EXPM_TAYLOR_DEGREE).rev() {
        t = identity.add(&x.matmul(&t).scaled(1.0 / j as f64));
    }
    if !t.is_finite() {
        return Err(MatfunError::NonFinite {
            stage: 0,
            total: s as usize,
        });
    }
    for stage in 1..=s as usize {
        t = t.matmul(&t);
        if !t.is_finite() {
            return Err(MatfunError::NonFinite {
                stage,
                total: s as usize,
            });
        }
    }
    Ok(t)
}

/// `[φ_0(A), ..., φ_p(A)]` from a single augmented exponential.
pub fn phi_blocks(a: &DenseMatrix, p: usize) -> Result<Vec<DenseMatrix>, MatfunError> {
    check_square_finite(a)?;
    if p > MAX_PHI_ORDER {
        return Err(MatfunError::UnsupportedOrder {
            k: p,
            max: MAX_PHI_ORDER,
        });
    }
    if p == 0 {
        return Ok(vec![expm_dense(a)?]);
    }
    let n = a.rows();
    let size = n * (p + 1);
    let mut aug = DenseMatrix::zeros(size, size);
    aug.set_block(0, 0, a);
    let identity = DenseMatrix::identity(n);
    for blk in 0..p {
        aug.set_block(blk * n, (blk + 1) * n, &identity);
    }
    let e = expm_dense(&aug)?;
    Ok((0..=p).map(|j| e.block(0, j * n, n, n)).collect())
}

/// `φ_k(A)` for `k <= 4`.
pub fn phi_dense(k: usize, a: &DenseMatrix) -> Result<DenseMatrix, MatfunError> {
    if k > MAX_DENSE_PHI_ORDER {
        return Err(MatfunError::UnsupportedOrder {
            k,
            max: MAX_DENSE_PHI_ORDER,
        });
    }
    let mut blocks = phi_blocks(a, k)?;
    Ok(blocks.pop().expect("phi_blocks returns k+1 blocks"))
}

/// Dense `e^{hA}, φ_1(hA), ..., φ_p(hA)` for one step size.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiTable {
    h: f64,
    mats: Vec<DenseMatrix>,
}

impl PhiTable {
    pub fn new(a: &DenseMatrix, h: f64, order: usize) -> Result<Self, MatfunError> {
        if !h.is_finite() {
            return Err(MatfunError::Domain(format!("step size {h} is not finite")));
        }
        let mats = phi_blocks(&a.scaled(h), order)?;
        Ok(Self { h, mats })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn order(&self) -> usize {
        self.mats.len() - 1
    }

    /// `φ_k(hA)`; index 0 is `e^{hA}`.
    pub fn get(&self, k: usize) -> &DenseMatrix {
        &self.mats[k]
    }

    pub fn mats(&self) -> &[DenseMatrix] {
        &self.mats
    }

    /// Largest entry of `φ_{k+1}(hA) hA + I/k! - φ_k(hA)` over all stored `k`.
    pub fn recursion_residual(&self, a: &DenseMatrix) -> f64 {
        let ha = a.scaled(self.h);
        let identity = DenseMatrix::identity(a.rows());
        self.mats
            .windows(2)
            .enumerate()
            .map(|(k, w)| {
                w[1].matmul(&ha)
                    .add(&identity.scaled(inv_factorial(k)))
                    .sub(&w[0])
                    .max_abs()
            })
            .fold(0.0, f64::max)
    }
}
