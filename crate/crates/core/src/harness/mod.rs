//! Step-size sweeps against exact or reference solutions, plus CSV and PGM
//! output for sweep tables, trajectories and stability rasters.

mod output;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::integrators::{integrate_on_grid, IntegrateError, Method, StepGrid};
use crate::problems::{by_name, ProblemError, ProblemSpec};
use crate::Execution;

pub use output::{
    emit_csv, emit_raster, parse_csv, read_csv, write_csv, write_raster, write_trajectory_csv,
    RasterFormat, CSV_HEADER,
};

/// Reference components at or below this magnitude are compared absolutely.
pub const NEAR_ZERO: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("every reference component is below {NEAR_ZERO:e} in magnitude")]
    DegenerateReference,
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `max_i |u_i - r_i| / |r_i|` over components with `|r_i| > 1e-14`, and
/// `|u_i - r_i|` over the rest. For scalars this is `|(u - r)/r|`.
pub fn relative_error(u_num: &[f64], u_ref: &[f64]) -> Result<f64, HarnessError> {
    if u_num.len() != u_ref.len() {
        return Err(HarnessError::Config(format!(
            "state has {} components, reference has {}",
            u_num.len(),
            u_ref.len()
        )));
    }
    if u_ref.iter().any(|r| !r.is_finite()) {
        return Err(HarnessError::Config("reference is not finite".into()));
    }
    if u_ref.iter().all(|r| r.abs() <= NEAR_ZERO) {
        return Err(HarnessError::DegenerateReference);
    }
    Ok(u_num.iter().zip(u_ref).fold(0.0f64, |worst, (&u, &r)| {
        let e = if r.abs() > NEAR_ZERO {
            ((u - r) / r).abs()
        } else {
            (u - r).abs()
        };
        // NaN must win over any finite error.
        if e.is_nan() || worst.is_nan() {
            f64::NAN
        } else {
            worst.max(e)
        }
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub problem: String,
    pub parameters: BTreeMap<String, f64>,
    pub methods: Vec<Method>,
    /// Sorted in descending order by [`SweepConfig::new`].
    pub step_sizes: Vec<f64>,
    pub repetitions: usize,
    /// Seeds the order in which sweep cells are executed.
    pub seed: u64,
    pub grid: StepGrid,
}

impl SweepConfig {
    pub fn new(
        problem: impl Into<String>,
        methods: Vec<Method>,
        mut step_sizes: Vec<f64>,
    ) -> Result<Self, HarnessError> {
        step_sizes.sort_by(|a, b| b.total_cmp(a));
        let cfg = Self {
            problem: problem.into(),
            parameters: BTreeMap::new(),
            methods,
            step_sizes,
            repetitions: 5,
            seed: 0,
            grid: StepGrid::LandOnEnd,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_repetitions(mut self, repetitions: usize) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid(mut self, grid: StepGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_parameters(mut self, parameters: BTreeMap<String, f64>) -> Self {
        self.parameters = parameters;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.methods.is_empty() {
            return Err(HarnessError::Config("no methods given".into()));
        }
        if self.step_sizes.is_empty() {
            return Err(HarnessError::Config("no step sizes given".into()));
        }
        if let Some(h) = self
            .step_sizes
            .iter()
            .find(|h| !(h.is_finite() && **h > 0.0))
        {
            return Err(HarnessError::Config(format!(
                "step size {h} must be positive"
            )));
        }
        if self.step_sizes.windows(2).any(|w| w[0] < w[1]) {
            return Err(HarnessError::Config(
                "step sizes must be sorted descending".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(HarnessError::Config(
                "repetitions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One (method, h) cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub method: Method,
    pub h: f64,
    /// Error at the final time; NaN when the run failed or the reference is
    /// degenerate.
    pub rel_error: f64,
    /// Median over repetitions, in seconds.
    pub wall_time: f64,
    pub finite: bool,
}

/// [`run_sweep_with`] on the default execution path.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    run_sweep_with(cfg, Execution::default())
}

pub fn run_sweep_sequential(cfg: &SweepConfig) -> Result<Vec<SweepRecord>, HarnessError> {
    run_sweep_with(cfg, Execution::Sequential)
}

/// Runs every (method, h) pair and compares the state at the end of the run
/// with the exact or reference solution at `tf`.
///
/// Cells run in a seed-determined shuffled order, in parallel under
/// [`Execution::Parallel`]. The output is ordered by method (config order)
/// and then by descending `h`. Failed or non-finite runs yield
/// `finite == false` rows rather than errors.
pub fn run_sweep_with(
    cfg: &SweepConfig,
    exec: Execution,
) -> Result<Vec<SweepRecord>, HarnessError> {
    cfg.validate()?;
    let problem = by_name(&cfg.problem, &cfg.parameters)?;
    let span = problem.tf() - problem.t0();
    if let Some(h) = cfg.step_sizes.iter().find(|h| **h > span) {
        return Err(HarnessError::Config(format!(
            "step size {h} exceeds the window length {span}"
        )));
    }
    if problem.system.semilinear.is_none() {
        if let Some(m) = cfg.methods.iter().find(|m| m.is_exponential()) {
            return Err(IntegrateError::MissingSemilinearForm(*m).into());
        }
    }
    let reference = problem.solution_at(problem.tf())?;

    let mut cells: Vec<(usize, usize)> = (0..cfg.methods.len())
        .flat_map(|m| (0..cfg.step_sizes.len()).map(move |s| (m, s)))
        .collect();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));

    let mut rows = exec.map(&cells, |&(m, s)| {
        let record = run_cell(&problem, &reference, cfg, cfg.methods[m], cfg.step_sizes[s]);
        ((m, s), record)
    });
    rows.sort_by_key(|(key, _)| *key);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

fn run_cell(
    problem: &ProblemSpec,
    reference: &[f64],
    cfg: &SweepConfig,
    method: Method,
    h: f64,
) -> SweepRecord {
    let mut times = Vec::with_capacity(cfg.repetitions);
    let mut outcome = None;
    for _ in 0..cfg.repetitions {
        let start = Instant::now();
        let run = integrate_on_grid(&problem.system, method, h, cfg.grid);
        times.push(start.elapsed().as_secs_f64());
        let failed = !matches!(&run, Ok(t) if t.finite);
        outcome.get_or_insert(run);
        if failed {
            // Blow-ups are deterministic; repeating them only burns time.
            break;
        }
    }
    let (rel_error, finite) = match outcome.expect("at least one repetition") {
        Ok(run) if run.finite => (
            relative_error(run.final_state(), reference).unwrap_or(f64::NAN),
            true,
        ),
        _ => (f64::NAN, false),
    };
    SweepRecord {
        method,
        h,
        rel_error,
        wall_time: median(&mut times),
        finite,
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        assert_eq!(relative_error(&[1.0], &[1.0]).unwrap(), 0.0);
        assert!((relative_error(&[1.1], &[1.0]).unwrap() - 0.1).abs() < 1e-15);
        assert!((relative_error(&[1.01, 2.02], &[1.0, 2.0]).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(relative_error(&[1.0, 0.5], &[1.0, 0.0]).unwrap(), 0.5);
        assert!(matches!(
            relative_error(&[1.0, 2.0], &[0.0, 1e-15]),
            Err(HarnessError::DegenerateReference)
        ));
        assert!(relative_error(&[f64::NAN], &[1.0]).unwrap().is_nan());
        assert!(relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = SweepConfig::new("cm1d", vec![Method::Rk2], vec![1e-3, 1e-1, 1e-2]).unwrap();
        assert_eq!(cfg.step_sizes, vec![1e-1, 1e-2, 1e-3]);
        assert!(SweepConfig::new("cm1d", vec![], vec![0.1]).is_err());
        assert!(SweepConfig::new("cm1d", vec![Method::Rk2], vec![]).is_err());
        assert!(SweepConfig::new("cm1d", vec![Method::Rk2], vec![-0.1]).is_err());
        assert!(cfg.clone().with_repetitions(0).validate().is_err());
        let unknown = SweepConfig::new("brusselator", vec![Method::Rk2], vec![0.1]).unwrap();
        assert!(matches!(
            run_sweep(&unknown),
            Err(HarnessError::Problem(ProblemError::UnknownProblem(_)))
        ));
        let too_big = SweepConfig::new("cm1d", vec![Method::Rk2], vec![2.0]).unwrap();
        assert!(matches!(run_sweep(&too_big), Err(HarnessError::Config(_))));
    }

    #[test]
    fn sweep_shape_and_order() {
        let cfg = SweepConfig::new(
            "cm1d",
            vec![Method::ExpRk2, Method::Rk2],
            vec![1e-2, 1e-1, 5e-2],
        )
        .unwrap()
        .with_repetitions(2)
        .with_seed(7);
        let rows = run_sweep(&cfg).unwrap();
        let keys: Vec<(Method, f64)> = rows.iter().map(|r| (r.method, r.h)).collect();
        assert_eq!(
            keys,
            vec![
                (Method::ExpRk2, 1e-1),
                (Method::ExpRk2, 5e-2),
                (Method::ExpRk2, 1e-2),
                (Method::Rk2, 1e-1),
                (Method::Rk2, 5e-2),
                (Method::Rk2, 1e-2),
            ]
        );
        assert!(rows.iter().all(|r| r.finite && r.wall_time >= 0.0));
        assert!(rows[0].rel_error < 1e-2);
        assert!(rows[3].rel_error > 1e10);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
