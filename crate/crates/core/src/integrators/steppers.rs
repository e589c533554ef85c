//! Single-step maps. Each returns the state one step of size `h` later.

use super::{GeneralProblem, IntegrateError, SemilinearProblem};
use crate::matfun::{DenseMatrix, MatfunError, PhiTable};

/// `e^{hA}`, `φ_1(hA)`, `φ_2(hA)` for one fixed step size.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecomputedPropagators {
    pub h: f64,
    pub exp_ha: DenseMatrix,
    pub phi1_ha: DenseMatrix,
    pub phi2_ha: DenseMatrix,
}

impl PrecomputedPropagators {
    pub fn new(linear: &DenseMatrix, h: f64) -> Result<Self, MatfunError> {
        let table = PhiTable::new(linear, h, 2)?;
        Ok(Self::from_table(&table))
    }

    pub fn from_table(table: &PhiTable) -> Self {
        assert!(table.order() >= 2, "propagators need φ up to order 2");
        Self {
            h: table.h(),
            exp_ha: table.get(0).clone(),
            phi1_ha: table.get(1).clone(),
            phi2_ha: table.get(2).clone(),
        }
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn shifted(u: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    let mut out = u.to_vec();
    axpy(&mut out, a, x);
    out
}

/// ETD Euler: `e^{hA} u + h φ_1(hA) g(t, u)`.
pub fn step_etd_euler(
    p: &SemilinearProblem,
    pre: &PrecomputedPropagators,
    t: f64,
    u: &[f64],
) -> Vec<f64> {
    let g = p.nonlinear_at(t, u);
    let mut out = pre.exp_ha.matvec(u);
    axpy(&mut out, pre.h, &pre.phi1_ha.matvec(&g));
    out
}

/// Second-order exponential Runge-Kutta:
///
/// ```text
/// a       = e^{hA} u + h φ_1(hA) g(t, u)
/// u_{n+1} = a + h φ_2(hA) (g(t + h, a) - g(t, u))
/// ```
pub fn step_exprk2(
    p: &SemilinearProblem,
    pre: &PrecomputedPropagators,
    t: f64,
    u: &[f64],
) -> Vec<f64> {
    let h = pre.h;
    let g0 = p.nonlinear_at(t, u);
    let mut a = pre.exp_ha.matvec(u);
    axpy(&mut a, h, &pre.phi1_ha.matvec(&g0));
    let mut dg = p.nonlinear_at(t + h, &a);
    for (d, g) in dg.iter_mut().zip(&g0) {
        *d -= g;
    }
    axpy(&mut a, h, &pre.phi2_ha.matvec(&dg));
    a
}

/// Explicit midpoint rule.
pub fn step_rk2(p: &GeneralProblem, t: f64, u: &[f64], h: f64) -> Vec<f64> {
    let k1 = p.rhs_at(t, u);
    let k2 = p.rhs_at(t + 0.5 * h, &shifted(u, 0.5 * h, &k1));
    shifted(u, h, &k2)
}

/// Classical four-stage Runge-Kutta with `K_i = h F(...)`.
pub fn step_rk4(p: &GeneralProblem, t: f64, u: &[f64], h: f64) -> Vec<f64> {
    let scale = |mut v: Vec<f64>| {
        v.iter_mut().for_each(|x| *x *= h);
        v
    };
    let k1 = scale(p.rhs_at(t, u));
    let k2 = scale(p.rhs_at(t + 0.5 * h, &shifted(u, 0.5, &k1)));
    let k3 = scale(p.rhs_at(t + 0.5 * h, &shifted(u, 0.5, &k2)));
    let k4 = scale(p.rhs_at(t + h, &shifted(u, 1.0, &k3)));
    u.iter()
        .enumerate()
        .map(|(i, &ui)| ui + k1[i] / 6.0 + k2[i] / 3.0 + k3[i] / 3.0 + k4[i] / 6.0)
        .collect()
}

/// One-stage linearly implicit Rosenbrock step:
/// `k = (I - γ h J)^{-1} F(t, u)`, `u_{n+1} = u + h k`, with `J = ∂F/∂u` at
/// `(t, u)`. No `∂F/∂t` term is included.
pub fn step_rb2(
    p: &GeneralProblem,
    t: f64,
    u: &[f64],
    h: f64,
    gamma: f64,
) -> Result<Vec<f64>, IntegrateError> {
    let f = p.rhs_at(t, u);
    let j = p.jacobian_at(t, u)?;
    let m = DenseMatrix::identity(u.len()).sub(&j.scaled(gamma * h));
    let k = m.solve(&f).map_err(|e| match e {
        MatfunError::Singular { cond_estimate } => {
            IntegrateError::SingularStep { t, cond_estimate }
        }
        other => IntegrateError::Matfun(other),
    })?;
    Ok(shifted(u, h, &k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::vector_field;

    fn scalar_general(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> GeneralProblem {
        GeneralProblem::new(
            vector_field(move |t, u, out| out[0] = f(t, u[0])),
            vec![1.0],
            0.0,
            1.0,
        )
        .unwrap()
    }

    fn toy() -> SemilinearProblem {
        SemilinearProblem::new(
            DenseMatrix::from_diag(&[-1000.0]),
            vector_field(|_, u, out| out[0] = 2.0 * u[0] / (1.0 + u[0] * u[0])),
            vec![1.0],
            0.0,
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn etd_euler_pure_linear() {
        let mut p = toy();
        p.nonlinear = vector_field(|_, _, out| out[0] = 0.0);
        let pre = PrecomputedPropagators::new(&p.linear, 0.01).unwrap();
        let u1 = step_etd_euler(&p, &pre, 0.0, &[1.0]);
        assert!((u1[0] - 4.539_993e-5).abs() < 1e-11);
    }

    #[test]
    fn etd_euler_toy_step() {
        let p = toy();
        let pre = PrecomputedPropagators::new(&p.linear, 0.01).unwrap();
        let u1 = step_etd_euler(&p, &pre, 0.0, &[1.0]);
        // e^{-10} + 0.01 φ_1(-10), 40-digit reference.
        assert!((u1[0] - 1.045_354_529_832_722_4e-3).abs() < 1e-15);
    }

    #[test]
    fn zero_linear_part_gives_explicit_methods() {
        let g = |t: f64, u: f64| t.cos() - u * u;
        let p = SemilinearProblem::new(
            DenseMatrix::zeros(1, 1),
            vector_field(move |t, u, out| out[0] = g(t, u[0])),
            vec![0.4],
            0.0,
            1.0,
        )
        .unwrap();
        let h = 0.1;
        let pre = PrecomputedPropagators::new(&p.linear, h).unwrap();
        let (t, u) = (0.3, 0.4);
        let euler = u + h * g(t, u);
        assert!((step_etd_euler(&p, &pre, t, &[u])[0] - euler).abs() < 1e-14);
        let heun = u + h * g(t, u) + 0.5 * h * (g(t + h, u + h * g(t, u)) - g(t, u));
        assert!((step_exprk2(&p, &pre, t, &[u])[0] - heun).abs() < 1e-14);
    }

    #[test]
    fn exprk2_without_nonlinearity_is_exact() {
        let a = DenseMatrix::from_rows(&[[0.0, 1.0], [-4.0, -0.1]]);
        let p = SemilinearProblem::new(
            a.clone(),
            vector_field(|_, _, out| out.fill(0.0)),
            vec![1.0, 0.0],
            0.0,
            1.0,
        )
        .unwrap();
        let pre = PrecomputedPropagators::new(&a, 0.25).unwrap();
        assert_eq!(
            step_exprk2(&p, &pre, 0.0, &[1.0, 0.0]),
            pre.exp_ha.matvec(&[1.0, 0.0])
        );
    }

    #[test]
    fn rk2_midpoint_hand_value() {
        let p = scalar_general(|_, u| u);
        assert!((step_rk2(&p, 0.0, &[1.0], 0.1)[0] - 1.105).abs() < 1e-15);
        let zero = scalar_general(|_, _| 0.0);
        assert_eq!(step_rk2(&zero, 0.0, &[2.5], 0.1), vec![2.5]);
        assert_eq!(step_rk4(&zero, 0.0, &[2.5], 0.1), vec![2.5]);
        assert_eq!(step_rb2(&zero, 0.0, &[2.5], 0.1, 0.5).unwrap(), vec![2.5]);
    }

    #[test]
    fn rk4_toy_walkthrough() {
        let p = toy().to_general();
        let big = step_rk4(&p, 0.0, &[1.0], 0.01)[0];
        assert!((big - 290.59).abs() / 290.59 < 0.01, "{big}");
        let small = step_rk4(&p, 0.0, &[1.0], 0.001)[0];
        assert!((small - 0.3755).abs() / 0.3755 < 0.01, "{small}");
    }

    #[test]
    fn rb2_scalar_amplification() {
        let lambda = -10.0;
        let p = scalar_general(move |_, u| lambda * u).with_jacobian(
            crate::integrators::jacobian_field(move |_, _| DenseMatrix::from_diag(&[lambda])),
        );
        // z = hλ = -1, γ = 1/2: (1 + z/2) / (1 - z/2) = 1/3.
        let u1 = step_rb2(&p, 0.0, &[1.0], 0.1, 0.5).unwrap()[0];
        assert!((u1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rb2_singular_system_is_reported() {
        let p =
            scalar_general(|_, u| u).with_jacobian(crate::integrators::jacobian_field(|_, _| {
                DenseMatrix::from_diag(&[1.0])
            }));
        // I - γ h J = 1 - 0.5 * 2 * 1 = 0.
        assert!(matches!(
            step_rb2(&p, 0.0, &[1.0], 2.0, 0.5),
            Err(IntegrateError::SingularStep { .. })
        ));
    }
}
