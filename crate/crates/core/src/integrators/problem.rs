use std::fmt;
use std::sync::Arc;

use super::{finite_difference_jacobian, IntegrateError};
use crate::matfun::DenseMatrix;

/// Right-hand side evaluated in place: `f(t, u, out)`.
pub type Rhs = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
pub type VectorField = Arc<Rhs>;

/// Jacobian `∂F/∂u` at `(t, u)`.
pub type JacobianField = Arc<dyn Fn(f64, &[f64]) -> DenseMatrix + Send + Sync>;

pub fn vector_field<F>(f: F) -> VectorField
where
    F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
{
    Arc::new(f)
}

pub fn jacobian_field<F>(f: F) -> JacobianField
where
    F: Fn(f64, &[f64]) -> DenseMatrix + Send + Sync + 'static,
{
    Arc::new(f)
}

fn check_window(u0: &[f64], t0: f64, tf: f64) -> Result<(), IntegrateError> {
    if u0.is_empty() {
        return Err(IntegrateError::InvalidProblem(
            "state dimension is zero".into(),
        ));
    }
    if !(t0.is_finite() && tf.is_finite() && tf > t0) {
        return Err(IntegrateError::InvalidProblem(format!(
            "time window [{t0}, {tf}] is empty or not finite"
        )));
    }
    if u0.iter().any(|x| !x.is_finite()) {
        return Err(IntegrateError::InvalidProblem(
            "initial state is not finite".into(),
        ));
    }
    Ok(())
}

/// `u' = A u + g(t, u)` with a stiff linear part `A`.
#[derive(Clone)]
pub struct SemilinearProblem {
    pub linear: DenseMatrix,
    pub nonlinear: VectorField,
    pub u0: Vec<f64>,
    pub t0: f64,
    pub tf: f64,
}

impl SemilinearProblem {
    pub fn new(
        linear: DenseMatrix,
        nonlinear: VectorField,
        u0: Vec<f64>,
        t0: f64,
        tf: f64,
    ) -> Result<Self, IntegrateError> {
        let p = Self {
            linear,
            nonlinear,
            u0,
            t0,
            tf,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        check_window(&self.u0, self.t0, self.tf)?;
        let n = self.dim();
        if self.linear.rows() != n || self.linear.cols() != n {
            return Err(IntegrateError::InvalidProblem(format!(
                "linear part is {}x{}, state has dimension {n}",
                self.linear.rows(),
                self.linear.cols()
            )));
        }
        if self
            .nonlinear_at(self.t0, &self.u0)
            .iter()
            .any(|x| !x.is_finite())
        {
            return Err(IntegrateError::InvalidProblem(
                "nonlinearity is not finite at the initial state".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn nonlinear_at(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        (self.nonlinear)(t, u, &mut out);
        out
    }

    /// Full right-hand side `A u + g(t, u)`.
    pub fn rhs_at(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = self.nonlinear_at(t, u);
        let au = self.linear.matvec(u);
        for (o, a) in out.iter_mut().zip(au) {
            *o += a;
        }
        out
    }

    /// General form `F(t, u) = A u + g(t, u)`; the Jacobian falls back to
    /// finite differences.
    pub fn to_general(&self) -> GeneralProblem {
        let linear = self.linear.clone();
        let nonlinear = Arc::clone(&self.nonlinear);
        GeneralProblem {
            rhs: vector_field(move |t, u, out| {
                nonlinear(t, u, out);
                for (i, o) in out.iter_mut().enumerate() {
                    *o += linear.row(i).iter().zip(u).map(|(a, x)| a * x).sum::<f64>();
                }
            }),
            jacobian: None,
            u0: self.u0.clone(),
            t0: self.t0,
            tf: self.tf,
        }
    }
}

impl fmt::Debug for SemilinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SemilinearProblem")
            .field("linear", &self.linear)
            .field("u0", &self.u0)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .finish_non_exhaustive()
    }
}

/// `u' = F(t, u)` with an optional analytic Jacobian.
#[derive(Clone)]
pub struct GeneralProblem {
    pub rhs: VectorField,
    pub jacobian: Option<JacobianField>,
    pub u0: Vec<f64>,
    pub t0: f64,
    pub tf: f64,
}

impl GeneralProblem {
    pub fn new(rhs: VectorField, u0: Vec<f64>, t0: f64, tf: f64) -> Result<Self, IntegrateError> {
        let p = Self {
            rhs,
            jacobian: None,
            u0,
            t0,
            tf,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_jacobian(mut self, jacobian: JacobianField) -> Self {
        self.jacobian = Some(jacobian);
        self
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        check_window(&self.u0, self.t0, self.tf)
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    pub fn rhs_at(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        (self.rhs)(t, u, &mut out);
        out
    }

    /// Analytic Jacobian when registered, central differences otherwise.
    pub fn jacobian_at(&self, t: f64, u: &[f64]) -> Result<DenseMatrix, IntegrateError> {
        match &self.jacobian {
            Some(j) => Ok(j(t, u)),
            None => finite_difference_jacobian(self.rhs.as_ref(), t, u),
        }
    }
}

impl fmt::Debug for GeneralProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralProblem")
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("u0", &self.u0)
            .field("t0", &self.t0)
            .field("tf", &self.tf)
            .finish_non_exhaustive()
    }
}

/// A problem in the forms the steppers need: the general form always, the
/// semilinear split when one is known.
#[derive(Clone, Debug)]
pub struct OdeProblem {
    pub semilinear: Option<SemilinearProblem>,
    pub general: GeneralProblem,
}

impl OdeProblem {
    pub fn from_semilinear(p: SemilinearProblem) -> Self {
        Self {
            general: p.to_general(),
            semilinear: Some(p),
        }
    }

    pub fn from_general(p: GeneralProblem) -> Self {
        Self {
            semilinear: None,
            general: p,
        }
    }

    pub fn dim(&self) -> usize {
        self.general.dim()
    }

    pub fn u0(&self) -> &[f64] {
        &self.general.u0
    }

    pub fn t0(&self) -> f64 {
        self.general.t0
    }

    pub fn tf(&self) -> f64 {
        self.general.tf
    }

    /// Same problem on another time window.
    pub fn with_window(mut self, t0: f64, tf: f64) -> Self {
        self.general.t0 = t0;
        self.general.tf = tf;
        if let Some(s) = self.semilinear.as_mut() {
            s.t0 = t0;
            s.tf = tf;
        }
        self
    }

    /// Same problem from another initial state.
    pub fn with_initial_state(mut self, u0: Vec<f64>) -> Self {
        if let Some(s) = self.semilinear.as_mut() {
            s.u0 = u0.clone();
        }
        self.general.u0 = u0;
        self
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        self.general.validate()?;
        if let Some(s) = &self.semilinear {
            s.validate()?;
            if s.u0 != self.general.u0 || s.t0 != self.general.t0 || s.tf != self.general.tf {
                return Err(IntegrateError::InvalidProblem(
                    "semilinear and general forms disagree on the initial value problem".into(),
                ));
            }
        }
        Ok(())
    }
}
