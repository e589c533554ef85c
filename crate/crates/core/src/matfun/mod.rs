//! Exponential and φ-function kernels, scalar and dense.
//!
//! Each quantity has at least two independent routes (recursion, series and
//! contour for scalars; scaling-and-squaring, Taylor action and Krylov
//! projection for matrices) so they can be checked against one another.

mod action;
mod dense;
mod expm;
mod krylov;
mod phi;

use thiserror::Error;

pub use action::{expm_action, phipm_action, MAX_PHIPM_ORDER};
pub use dense::{max_norm_relative_diff, DenseMatrix};
pub use expm::{
    expm_dense, phi_blocks, phi_dense, scaling_exponent, PhiTable, EXPM_TAYLOR_DEGREE,
    MAX_DENSE_PHI_ORDER,
};
pub use krylov::{arnoldi, krylov_exp_action, ArnoldiBasis};
pub use phi::{inv_factorial, phi_real, phi_scalar, PhiStrategy, MAX_PHI_ORDER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatfunError {
    #[error("phi order {k} is not supported (maximum {max})")]
    UnsupportedOrder { k: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite result at squaring stage {stage} of {total}")]
    NonFinite { stage: usize, total: usize },
    #[error("overflow in {0}")]
    Overflow(&'static str),
    #[error("singular matrix (condition estimate {cond_estimate:e})")]
    Singular { cond_estimate: f64 },
}
