//! Arnoldi projection and the Krylov approximation of `e^{tA} v`.

use super::{expm_dense, DenseMatrix, MatfunError};

/// `h_{j+1,j}` below this multiple of `||A||_1` counts as breakdown.
const BREAKDOWN_TOL: f64 = 1e-12;

/// Orthonormal Krylov basis and the projected Hessenberg matrix.
#[derive(Clone, Debug)]
pub struct ArnoldiBasis {
    /// `n x m` matrix with orthonormal columns; `m` may be smaller than
    /// requested after a breakdown.
    pub basis: DenseMatrix,
    /// `m x m` upper-Hessenberg projection `V^T A V`.
    pub hessenberg: DenseMatrix,
    /// `||v||_2` of the starting vector.
    pub beta: f64,
    /// `h_{m+1,m}`; zero (to tolerance) when the subspace is invariant.
    pub residual: f64,
    pub breakdown: bool,
}

impl ArnoldiBasis {
    pub fn dim(&self) -> usize {
        self.hessenberg.rows()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Runs `m` Arnoldi steps with modified Gram-Schmidt and one
/// reorthogonalisation pass.
pub fn arnoldi(a: &DenseMatrix, v: &[f64], m: usize) -> Result<ArnoldiBasis, MatfunError> {
    let n = a.rows();
    if !a.is_square() || v.len() != n {
        return Err(MatfunError::Shape(format!(
            "A is {}x{}, v has length {}",
            a.rows(),
            a.cols(),
            v.len()
        )));
    }
    if m == 0 || m > n {
        return Err(MatfunError::Shape(format!(
            "Krylov dimension {m} must lie in 1..={n}"
        )));
    }
    if !a.is_finite() || v.iter().any(|x| !x.is_finite()) {
        return Err(MatfunError::Domain("non-finite input".into()));
    }
    let beta = norm2(v);
    if beta == 0.0 {
        return Err(MatfunError::Domain("starting vector is zero".into()));
    }

    let threshold = BREAKDOWN_TOL * a.norm_one();
    let mut vs: Vec<Vec<f64>> = vec![v.iter().map(|x| x / beta).collect()];
    let mut h = DenseMatrix::zeros(m + 1, m);
    let mut breakdown = false;
    let mut dim = m;

    for j in 0..m {
        let mut w = a.matvec(&vs[j]);
        for _pass in 0..2 {
            for (i, vi) in vs.iter().enumerate() {
                let c = dot(vi, &w);
                h[(i, j)] += c;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= c * vk;
                }
            }
        }
        let next = norm2(&w);
        h[(j + 1, j)] = next;
        if next <= threshold {
            breakdown = true;
            dim = j + 1;
            break;
        }
        if j + 1 < m {
            vs.push(w.iter().map(|x| x / next).collect());
        }
    }

    let residual = h[(dim, dim - 1)];
    Ok(ArnoldiBasis {
        basis: DenseMatrix::from_columns(&vs[..dim]),
        hessenberg: h.block(0, 0, dim, dim),
        beta,
        residual,
        breakdown,
    })
}

/// `||v||_2 V_m e^{t H_m} e_1`.
pub fn krylov_exp_action(
    a: &DenseMatrix,
    v: &[f64],
    t: f64,
    m: usize,
) -> Result<Vec<f64>, MatfunError> {
    if !t.is_finite() {
        return Err(MatfunError::Domain(format!("time {t} is not finite")));
    }
    let k = arnoldi(a, v, m)?;
    let small = expm_dense(&k.hessenberg.scaled(t))?;
    let coeffs: Vec<f64> = small.column(0).iter().map(|c| c * k.beta).collect();
    Ok(k.basis.matvec(&coeffs))
}
