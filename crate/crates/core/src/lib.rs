//! Exponential Runge-Kutta toolkit for stiff ODEs.
//!
//! * [`matfun`]: scalar and dense kernels for `e^A` and the φ-functions.
//! * [`integrators`]: fixed-step ETD Euler, ExpRK2, RK2, RK4 and a one-stage
//!   Rosenbrock method.
//! * [`stability`]: stability functions, region rasters, real-axis boundaries.
//! * [`problems`]: the stiff benchmark problems and a reference solver.
//! * [`harness`]: step-size sweeps, error measurement and CSV/PGM output.
//!
//! Sweeps and rasters run their independent cells on rayon when the
//! `parallel` feature is on (the default); [`Execution`] selects the path at
//! run time.
//!
//! ```
//! use exprk_core::integrators::{integrate, Method};
//! use exprk_core::problems::cm1d;
//!
//! let problem = cm1d();
//! let run = integrate(&problem.system, Method::ExpRk2, 1e-2).unwrap();
//! let exact = (problem.exact.as_ref().unwrap())(problem.tf());
//! let err = ((run.final_state()[0] - exact[0]) / exact[0]).abs();
//! assert!(err < 1e-4);
//! ```

pub mod harness;
pub mod integrators;
pub mod matfun;
pub mod problems;
pub mod stability;

mod par;

pub use par::Execution;
