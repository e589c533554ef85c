//! Fixed-step time steppers and the driver that runs them over a window.
//!
//! Exponential methods ([`Method::EtdEuler`], [`Method::ExpRk2`]) need the
//! semilinear split `u' = A u + g(t, u)`; the others work on the general
//! form `u' = F(t, u)`.

mod problem;
mod steppers;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::matfun::{DenseMatrix, MatfunError};

pub use problem::{
    jacobian_field, vector_field, GeneralProblem, JacobianField, OdeProblem, Rhs,
    SemilinearProblem, VectorField,
};
pub use steppers::{
    step_etd_euler, step_exprk2, step_rb2, step_rk2, step_rk4, PrecomputedPropagators,
};

/// Default Rosenbrock parameter; the one-stage method is second order on
/// autonomous problems only for this value.
pub const RB2_DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("invalid step size: {0}")]
    InvalidStep(String),
    #[error("method {0} needs a semilinear split of the problem")]
    MissingSemilinearForm(Method),
    #[error("linear system singular at t = {t} (condition estimate {cond_estimate:e})")]
    SingularStep { t: f64, cond_estimate: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Matfun(#[from] MatfunError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    EtdEuler,
    ExpRk2,
    Rk2,
    Rk4,
    Rb2 { gamma: f64 },
}

impl Method {
    /// RB2 with the default `γ = 1/2`.
    pub const RB2: Method = Method::Rb2 {
        gamma: RB2_DEFAULT_GAMMA,
    };

    pub fn is_exponential(self) -> bool {
        matches!(self, Method::EtdEuler | Method::ExpRk2)
    }

    pub fn tag(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::EtdEuler => f.write_str("etd-euler"),
            Method::ExpRk2 => f.write_str("exprk2"),
            Method::Rk2 => f.write_str("rk2"),
            Method::Rk4 => f.write_str("rk4"),
            Method::Rb2 { gamma } if *gamma == RB2_DEFAULT_GAMMA => f.write_str("rb2"),
            Method::Rb2 { gamma } => write!(f, "rb2:{gamma}"),
        }
    }
}

impl FromStr for Method {
    type Err = IntegrateError;

    /// Accepts `etd-euler`, `exprk2`, `rk2`, `rk4`, `rb2` and `rb2:<gamma>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        if let Some(gamma) = s.strip_prefix("rb2:") {
            let gamma: f64 = gamma
                .parse()
                .map_err(|_| IntegrateError::InvalidProblem(format!("bad Rb2 gamma `{gamma}`")))?;
            if !gamma.is_finite() {
                return Err(IntegrateError::InvalidProblem(
                    "Rb2 gamma must be finite".into(),
                ));
            }
            return Ok(Method::Rb2 { gamma });
        }
        match s.as_str() {
            "etd-euler" | "etd_euler" | "etdeuler" | "etd" => Ok(Method::EtdEuler),
            "exprk2" | "exp-rk2" | "exprk" => Ok(Method::ExpRk2),
            "rk2" => Ok(Method::Rk2),
            "rk4" => Ok(Method::Rk4),
            "rb2" => Ok(Method::RB2),
            other => Err(IntegrateError::InvalidProblem(format!(
                "unknown method `{other}`"
            ))),
        }
    }
}

/// How the step sequence covers `[t0, tf]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum StepGrid {
    /// `ceil((tf - t0)/h)` steps, the last one shortened to land on `tf`.
    #[default]
    LandOnEnd,
    /// `round((tf - t0)/h)` full steps of size `h`; the run ends within
    /// `h/2` of `tf`. This is the grid behind the published step-size tables,
    /// where the error is still measured against the solution at `tf`.
    Rounded,
}

impl StepGrid {
    /// Number of steps and size of the final step.
    pub fn plan(self, span: f64, h: f64) -> (usize, f64) {
        let ratio = span / h;
        let nearest = ratio.round();
        match self {
            StepGrid::Rounded => ((nearest as usize).max(1), h),
            StepGrid::LandOnEnd => {
                if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
                    ((nearest as usize).max(1), h)
                } else {
                    let n = ratio.ceil() as usize;
                    (n, span - (n - 1) as f64 * h)
                }
            }
        }
    }
}

impl fmt::Display for StepGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepGrid::LandOnEnd => "land",
            StepGrid::Rounded => "rounded",
        })
    }
}

impl FromStr for StepGrid {
    type Err = IntegrateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "land" | "land-on-end" | "exact" => Ok(StepGrid::LandOnEnd),
            "rounded" | "round" => Ok(StepGrid::Rounded),
            other => Err(IntegrateError::InvalidProblem(format!(
                "unknown step grid `{other}`"
            ))),
        }
    }
}

/// Result of one fixed-step run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub method: Method,
    pub h: f64,
    /// Seconds spent in the run, propagator setup included.
    pub wall_time: f64,
    /// False when a state became non-finite; the run stops at that state.
    pub finite: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory holds the initial time")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Central-difference Jacobian with step `sqrt(eps) max(1, |u_j|)` per column.
pub fn finite_difference_jacobian(
    f: &Rhs,
    t: f64,
    u: &[f64],
) -> Result<DenseMatrix, IntegrateError> {
    let n = u.len();
    let mut jac = DenseMatrix::zeros(n, n);
    let mut probe = u.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let root_eps = f64::EPSILON.sqrt();
    for j in 0..n {
        let delta = root_eps * u[j].abs().max(1.0);
        probe[j] = u[j] + delta;
        f(t, &probe, &mut plus);
        probe[j] = u[j] - delta;
        f(t, &probe, &mut minus);
        probe[j] = u[j];
        let width = 2.0 * delta;
        for i in 0..n {
            let d = (plus[i] - minus[i]) / width;
            if !d.is_finite() {
                return Err(IntegrateError::Domain(format!(
                    "F is not finite near u at column {j}"
                )));
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

#[allow(clippy::large_enum_variant)] // one per run
enum Stepper<'a> {
    Exponential {
        problem: &'a SemilinearProblem,
        second_order: bool,
        full: PrecomputedPropagators,
        last: Option<PrecomputedPropagators>,
    },
    Explicit {
        problem: &'a GeneralProblem,
        method: Method,
    },
}

impl<'a> Stepper<'a> {
    fn new(p: &'a OdeProblem, method: Method, h: f64, last_h: f64) -> Result<Self, IntegrateError> {
        if !method.is_exponential() {
            return Ok(Stepper::Explicit {
                problem: &p.general,
                method,
            });
        }
        let problem = p
            .semilinear
            .as_ref()
            .ok_or(IntegrateError::MissingSemilinearForm(method))?;
        let full = PrecomputedPropagators::new(&problem.linear, h)?;
        let last = if last_h != h {
            Some(PrecomputedPropagators::new(&problem.linear, last_h)?)
        } else {
            None
        };
        Ok(Stepper::Exponential {
            problem,
            second_order: method == Method::ExpRk2,
            full,
            last,
        })
    }

    fn step(&self, t: f64, u: &[f64], h: f64, is_last: bool) -> Result<Vec<f64>, IntegrateError> {
        match self {
            Stepper::Exponential {
                problem,
                second_order,
                full,
                last,
            } => {
                let pre = match (is_last, last) {
                    (true, Some(short)) => short,
                    _ => full,
                };
                Ok(if *second_order {
                    step_exprk2(problem, pre, t, u)
                } else {
                    step_etd_euler(problem, pre, t, u)
                })
            }
            Stepper::Explicit { problem, method } => match *method {
                Method::Rk2 => Ok(step_rk2(problem, t, u, h)),
                Method::Rk4 => Ok(step_rk4(problem, t, u, h)),
                Method::Rb2 { gamma } => step_rb2(problem, t, u, h, gamma),
                Method::EtdEuler | Method::ExpRk2 => unreachable!("exponential method"),
            },
        }
    }
}

/// Runs `method` with step `h` from `t0` to `tf`, landing exactly on `tf`.
pub fn integrate(p: &OdeProblem, method: Method, h: f64) -> Result<Trajectory, IntegrateError> {
    integrate_on_grid(p, method, h, StepGrid::LandOnEnd)
}

/// Runs `method` with step `h` on the chosen grid.
///
/// Propagators for exponential methods are built once (twice when the final
/// step is shortened). A non-finite state ends the run early with
/// `finite == false`; step failures such as a singular Rosenbrock matrix are
/// returned as errors.
pub fn integrate_on_grid(
    p: &OdeProblem,
    method: Method,
    h: f64,
    grid: StepGrid,
) -> Result<Trajectory, IntegrateError> {
    p.validate()?;
    let (t0, tf) = (p.t0(), p.tf());
    let span = tf - t0;
    if !(h.is_finite() && h > 0.0) {
        return Err(IntegrateError::InvalidStep(format!(
            "h = {h} must be positive"
        )));
    }
    if h > span * (1.0 + 1e-12) {
        return Err(IntegrateError::InvalidStep(format!(
            "h = {h} exceeds the window length {span}"
        )));
    }
    let (n, last_h) = grid.plan(span, h);

    let start = Instant::now();
    let stepper = Stepper::new(p, method, h, last_h)?;
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    times.push(t0);
    states.push(p.u0().to_vec());
    let mut finite = true;

    for i in 0..n {
        let is_last = i + 1 == n;
        let step_h = if is_last { last_h } else { h };
        let t = times[i];
        let next = stepper.step(t, &states[i], step_h, is_last)?;
        let t_next = if is_last && grid == StepGrid::LandOnEnd {
            tf
        } else {
            t0 + (i + 1) as f64 * h
        };
        let ok = next.iter().all(|x| x.is_finite());
        times.push(t_next);
        states.push(next);
        if !ok {
            finite = false;
            break;
        }
    }

    Ok(Trajectory {
        times,
        states,
        method,
        h,
        wall_time: start.elapsed().as_secs_f64(),
        finite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_scalar(lambda: f64, tf: f64) -> OdeProblem {
        OdeProblem::from_semilinear(
            SemilinearProblem::new(
                DenseMatrix::from_diag(&[lambda]),
                vector_field(|_, _, out| out[0] = 0.0),
                vec![1.0],
                0.0,
                tf,
            )
            .unwrap(),
        )
    }

    #[test]
    fn method_tags_round_trip() {
        for m in [
            Method::EtdEuler,
            Method::ExpRk2,
            Method::Rk2,
            Method::Rk4,
            Method::RB2,
            Method::Rb2 { gamma: 0.25 },
        ] {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("rk3".parse::<Method>().is_err());
        assert!("rb2:abc".parse::<Method>().is_err());
    }

    #[test]
    fn grid_plans() {
        assert_eq!(StepGrid::LandOnEnd.plan(1.0, 0.1), (10, 0.1));
        assert_eq!(StepGrid::LandOnEnd.plan(10.0, 1e-4), (100_000, 1e-4));
        let (n, last) = StepGrid::LandOnEnd.plan(std::f64::consts::FRAC_PI_2, 0.1);
        assert_eq!(n, 16);
        assert!((last - (std::f64::consts::FRAC_PI_2 - 1.5)).abs() < 1e-15);
        assert_eq!(
            StepGrid::Rounded.plan(std::f64::consts::FRAC_PI_2, 0.1),
            (16, 0.1)
        );
        assert_eq!(
            StepGrid::Rounded.plan(std::f64::consts::FRAC_PI_2, 0.01),
            (157, 0.01)
        );
    }

    #[test]
    fn linear_etd_euler_is_exact() {
        let lambda = -3.0;
        let p = linear_scalar(lambda, 1.0);
        for h in [0.5, 0.3, 0.01] {
            let run = integrate(&p, Method::EtdEuler, h).unwrap();
            for (t, u) in run.times.iter().zip(&run.states) {
                assert!((u[0] - (lambda * t).exp()).abs() < 1e-13, "h={h} t={t}");
            }
            assert_eq!(run.final_time(), 1.0);
        }
    }

    #[test]
    fn landing_grid_shortens_last_step() {
        let p = linear_scalar(-1.0, 1.0);
        let run = integrate(&p, Method::Rk4, 0.3).unwrap();
        assert_eq!(run.steps(), 4);
        assert_eq!(run.final_time(), 1.0);
        assert!((run.times[3] - 0.9).abs() < 1e-15);
        let rounded = integrate_on_grid(&p, Method::Rk4, 0.3, StepGrid::Rounded).unwrap();
        assert_eq!(rounded.steps(), 3);
        assert!((rounded.final_time() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn step_size_validation() {
        let p = linear_scalar(-1.0, 1.0);
        assert!(matches!(
            integrate(&p, Method::Rk2, 0.0),
            Err(IntegrateError::InvalidStep(_))
        ));
        assert!(matches!(
            integrate(&p, Method::Rk2, 1.5),
            Err(IntegrateError::InvalidStep(_))
        ));
        assert!(matches!(
            integrate(&p, Method::Rk2, f64::NAN),
            Err(IntegrateError::InvalidStep(_))
        ));
    }

    #[test]
    fn exponential_methods_need_semilinear_form() {
        let p = OdeProblem::from_general(
            GeneralProblem::new(
                vector_field(|_, u, out| out[0] = -u[0]),
                vec![1.0],
                0.0,
                1.0,
            )
            .unwrap(),
        );
        assert!(matches!(
            integrate(&p, Method::ExpRk2, 0.1),
            Err(IntegrateError::MissingSemilinearForm(Method::ExpRk2))
        ));
        assert!(integrate(&p, Method::Rk2, 0.1).unwrap().finite);
    }

    #[test]
    fn blow_up_is_flagged_not_raised() {
        let p = OdeProblem::from_general(
            GeneralProblem::new(
                vector_field(|_, u, out| out[0] = u[0] * u[0] * u[0]),
                vec![10.0],
                0.0,
                1.0,
            )
            .unwrap(),
        );
        let run = integrate(&p, Method::Rk2, 0.1).unwrap();
        assert!(!run.finite);
        assert!(run.steps() < 10);
        assert!(!run.final_state()[0].is_finite());
    }

    #[test]
    fn fd_jacobian_examples() {
        let a = DenseMatrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]);
        let a2 = a.clone();
        let f = move |_t: f64, u: &[f64], out: &mut [f64]| a2.matvec_into(u, out);
        let j = finite_difference_jacobian(&f, 0.0, &[0.7, -1.3]).unwrap();
        assert!(j.sub(&a).max_abs() < 1e-7);

        let sq = |_t: f64, u: &[f64], out: &mut [f64]| out[0] = u[0] * u[0];
        let j = finite_difference_jacobian(&sq, 0.0, &[3.0]).unwrap();
        assert!((j[(0, 0)] - 6.0).abs() < 1e-7);

        let duffing = |_t: f64, u: &[f64], out: &mut [f64]| {
            out[0] = u[1];
            out[1] = -u[0] - 100.0 * u[0].powi(3);
        };
        let j = finite_difference_jacobian(&duffing, 0.0, &[1.0, 0.0]).unwrap();
        let expect = DenseMatrix::from_rows(&[[0.0, 1.0], [-301.0, 0.0]]);
        assert!(j.sub(&expect).max_abs() < 1e-5);

        let bad = |_t: f64, u: &[f64], out: &mut [f64]| out[0] = 1.0 / (u[0] - u[0]);
        assert!(matches!(
            finite_difference_jacobian(&bad, 0.0, &[1.0]),
            Err(IntegrateError::Domain(_))
        ));
    }
}
