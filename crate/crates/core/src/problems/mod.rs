//! Benchmark problems: the scalar toy model, the forced linear model `cm1d`
//! and the Duffing oscillator, each with both semilinear and general forms.

mod reference;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::integrators::{
    jacobian_field, vector_field, IntegrateError, OdeProblem, SemilinearProblem,
};
use crate::matfun::DenseMatrix;

pub use reference::{reference_solution, reference_solution_with_step, REFERENCE_STEP};

/// Closed-form solution `t ↦ u(t)`.
pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

pub const PROBLEM_NAMES: [&str; 3] = ["toy", "cm1d", "duffing"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("unknown problem `{0}` (expected toy, cm1d or duffing)")]
    UnknownProblem(String),
    #[error("problem `{problem}` has no parameter `{name}`")]
    UnknownParameter { problem: String, name: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("reference solver failed: {0}")]
    Oracle(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub system: OdeProblem,
    pub exact: Option<ExactSolution>,
    /// Every tunable scalar, including `u0` components and `tf`.
    pub parameters: BTreeMap<String, f64>,
}

impl ProblemSpec {
    pub fn u0(&self) -> &[f64] {
        self.system.u0()
    }

    pub fn t0(&self) -> f64 {
        self.system.t0()
    }

    pub fn tf(&self) -> f64 {
        self.system.tf()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.get(name).copied()
    }

    /// Exact solution at `t` if known, otherwise the cached reference solution.
    pub fn solution_at(&self, t: f64) -> Result<Vec<f64>, ProblemError> {
        match &self.exact {
            Some(exact) => Ok(exact(t)),
            None => reference_solution(self, t),
        }
    }

    /// Key identifying the initial value problem, used by the reference cache.
    pub(crate) fn cache_key(&self) -> String {
        let params: Vec<String> = self
            .parameters
            .iter()
            .map(|(k, v)| format!("{k}={:016x}", v.to_bits()))
            .collect();
        format!(
            "{}[{}]t0={:016x}",
            self.name,
            params.join(","),
            self.t0().to_bits()
        )
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("system", &self.system)
            .field("exact", &self.exact.is_some())
            .field("parameters", &self.parameters)
            .finish()
    }
}

fn merge(
    problem: &str,
    defaults: &[(&str, f64)],
    overrides: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, ProblemError> {
    let mut params: BTreeMap<String, f64> =
        defaults.iter().map(|&(k, v)| (k.to_string(), v)).collect();
    for (name, &value) in overrides {
        let slot = params
            .get_mut(name)
            .ok_or_else(|| ProblemError::UnknownParameter {
                problem: problem.to_string(),
                name: name.clone(),
            })?;
        if !value.is_finite() {
            return Err(ProblemError::InvalidParameter(format!("{name} = {value}")));
        }
        *slot = value;
    }
    Ok(params)
}

/// `u' = λu + 2u/(1 + u²)`, `λ = -1000`, `u(0) = 1` on `[0, 0.1]`.
pub fn toy_model() -> ProblemSpec {
    toy_model_with(&BTreeMap::new()).expect("defaults are valid")
}

/// Toy model with overrides for `lambda`, `u0` and `tf`.
pub fn toy_model_with(overrides: &BTreeMap<String, f64>) -> Result<ProblemSpec, ProblemError> {
    let params = merge(
        "toy",
        &[("lambda", -1000.0), ("u0", 1.0), ("tf", 0.1)],
        overrides,
    )?;
    let lambda = params["lambda"];
    let g = vector_field(|_, u, out| out[0] = toy_nonlinearity(u[0]));
    let semi = SemilinearProblem::new(
        DenseMatrix::from_diag(&[lambda]),
        g,
        vec![params["u0"]],
        0.0,
        params["tf"],
    )?;
    let mut system = OdeProblem::from_semilinear(semi);
    system.general.jacobian = Some(jacobian_field(move |_, u| {
        let s = 1.0 + u[0] * u[0];
        DenseMatrix::from_diag(&[lambda + 2.0 * (1.0 - u[0] * u[0]) / (s * s)])
    }));
    Ok(ProblemSpec {
        name: "toy".into(),
        system,
        exact: None,
        parameters: params,
    })
}

/// `2u/(1 + u²)`.
pub fn toy_nonlinearity(u: f64) -> f64 {
    2.0 * u / (1.0 + u * u)
}

/// `u' = k u + sin t`, `k = -100`, `u(0) = 1` on `[0, π/2]`, with its
/// closed-form solution.
pub fn cm1d() -> ProblemSpec {
    cm1d_with(&BTreeMap::new()).expect("defaults are valid")
}

/// `cm1d` with overrides for `k`, `u0` and `tf`.
pub fn cm1d_with(overrides: &BTreeMap<String, f64>) -> Result<ProblemSpec, ProblemError> {
    let params = merge(
        "cm1d",
        &[
            ("k", -100.0),
            ("u0", 1.0),
            ("tf", std::f64::consts::FRAC_PI_2),
        ],
        overrides,
    )?;
    let (k, u0) = (params["k"], params["u0"]);
    let semi = SemilinearProblem::new(
        DenseMatrix::from_diag(&[k]),
        vector_field(|t, _, out| out[0] = t.sin()),
        vec![u0],
        0.0,
        params["tf"],
    )?;
    let mut system = OdeProblem::from_semilinear(semi);
    system.general.jacobian = Some(jacobian_field(move |_, _| DenseMatrix::from_diag(&[k])));
    let exact: ExactSolution = Arc::new(move |t| vec![cm1d_exact(k, u0, t)]);
    Ok(ProblemSpec {
        name: "cm1d".into(),
        system,
        exact: Some(exact),
        parameters: params,
    })
}

/// `u(t) = e^{kt} (u0 + 1/(1+k²)) - (cos t + k sin t)/(1+k²)`.
pub fn cm1d_exact(k: f64, u0: f64, t: f64) -> f64 {
    let d = 1.0 + k * k;
    (k * t).exp() * (u0 + 1.0 / d) - (t.cos() + k * t.sin()) / d
}

/// Time derivative of [`cm1d_exact`].
pub fn cm1d_exact_derivative(k: f64, u0: f64, t: f64) -> f64 {
    let d = 1.0 + k * k;
    k * (k * t).exp() * (u0 + 1.0 / d) - (-t.sin() + k * t.cos()) / d
}

/// `u'' + ω u + k u³ = 0` as the first-order system in `(u, v)`, with
/// `ω = 1`, `k = 100`, `(u, v)(0) = (1, 0)` on `[0, 10]`.
pub fn duffing() -> ProblemSpec {
    duffing_with(&BTreeMap::new()).expect("defaults are valid")
}

/// Duffing oscillator with overrides for `omega`, `k`, `u0`, `v0` and `tf`.
pub fn duffing_with(overrides: &BTreeMap<String, f64>) -> Result<ProblemSpec, ProblemError> {
    let params = merge(
        "duffing",
        &[
            ("omega", 1.0),
            ("k", 100.0),
            ("u0", 1.0),
            ("v0", 0.0),
            ("tf", 10.0),
        ],
        overrides,
    )?;
    let (omega, k) = (params["omega"], params["k"]);
    let semi = SemilinearProblem::new(
        DenseMatrix::from_rows(&[[0.0, 1.0], [-omega, 0.0]]),
        vector_field(move |_, u, out| {
            out[0] = 0.0;
            out[1] = -k * u[0] * u[0] * u[0];
        }),
        vec![params["u0"], params["v0"]],
        0.0,
        params["tf"],
    )?;
    let mut system = OdeProblem::from_semilinear(semi);
    system.general.jacobian = Some(jacobian_field(move |_, u| {
        DenseMatrix::from_rows(&[[0.0, 1.0], [-omega - 3.0 * k * u[0] * u[0], 0.0]])
    }));
    Ok(ProblemSpec {
        name: "duffing".into(),
        system,
        exact: None,
        parameters: params,
    })
}

/// `v²/2 + ω u²/2 + k u⁴/4`.
pub fn duffing_energy(omega: f64, k: f64, state: &[f64]) -> f64 {
    let (u, v) = (state[0], state[1]);
    0.5 * v * v + 0.5 * omega * u * u + 0.25 * k * u.powi(4)
}

/// Looks a problem up by its CLI name and applies parameter overrides.
pub fn by_name(name: &str, overrides: &BTreeMap<String, f64>) -> Result<ProblemSpec, ProblemError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "toy" => toy_model_with(overrides),
        "cm1d" => cm1d_with(overrides),
        "duffing" => duffing_with(overrides),
        other => Err(ProblemError::UnknownProblem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_values() {
        let p = toy_model();
        assert_eq!(toy_nonlinearity(1.0), 1.0);
        assert_eq!(toy_nonlinearity(0.0), 0.0);
        assert_eq!(p.system.general.rhs_at(0.0, &[1.0]), vec![-999.0]);
        assert_eq!((p.t0(), p.tf()), (0.0, 0.1));
        let j = p.system.general.jacobian_at(0.0, &[1.0]).unwrap();
        assert_eq!(j[(0, 0)], -1000.0);
    }

    #[test]
    fn cm1d_values() {
        let p = cm1d();
        let exact = p.exact.as_ref().unwrap();
        assert!((exact(0.0)[0] - 1.0).abs() < 1e-15);
        let end = exact(std::f64::consts::FRAC_PI_2)[0];
        assert!((end - 100.0 / 10001.0).abs() < 1e-16, "{end}");
        let slow = -(1.0f64).sin() / -100.0 - (1.0f64).cos() / 1e4;
        assert!((exact(1.0)[0] - slow).abs() < 1e-5);
    }

    #[test]
    fn duffing_values() {
        let p = duffing();
        assert_eq!(p.system.general.rhs_at(0.0, &[1.0, 0.0]), vec![0.0, -101.0]);
        assert_eq!(p.system.general.rhs_at(0.0, &[0.0, 2.5]), vec![2.5, 0.0]);
        assert_eq!(duffing_energy(1.0, 100.0, &[1.0, 0.0]), 25.5);
        assert_eq!(p.u0(), &[1.0, 0.0]);
        assert_eq!(p.tf(), 10.0);
    }

    #[test]
    fn lookup_and_overrides() {
        let mut o = BTreeMap::new();
        o.insert("tf".to_string(), 2.0);
        o.insert("u0".to_string(), 0.5);
        let p = by_name("duffing", &o).unwrap();
        assert_eq!(p.tf(), 2.0);
        assert_eq!(p.u0(), &[0.5, 0.0]);
        assert!(matches!(
            by_name("vdp", &o),
            Err(ProblemError::UnknownProblem(_))
        ));
        o.insert("mu".to_string(), 1.0);
        assert!(matches!(
            by_name("cm1d", &o),
            Err(ProblemError::UnknownParameter { .. })
        ));
        let mut bad = BTreeMap::new();
        bad.insert("tf".to_string(), -1.0);
        assert!(matches!(
            by_name("toy", &bad),
            Err(ProblemError::Integrate(_))
        ));
    }

    #[test]
    fn cache_keys_separate_parameters() {
        let mut o = BTreeMap::new();
        o.insert("k".to_string(), 50.0);
        assert_ne!(duffing().cache_key(), duffing_with(&o).unwrap().cache_key());
        assert_eq!(duffing().cache_key(), duffing().cache_key());
    }
}
