use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use super::{ProblemError, ProblemSpec};
use crate::integrators::VectorField;
use crate::Execution;

/// Step of the reference RK4 run.
pub const REFERENCE_STEP: f64 = 1e-6;

/// Largest accepted relative disagreement between the `h` and `h/2` runs.
const RICHARDSON_TOL: f64 = 1e-8;

type Cache = RwLock<HashMap<(String, u64), Vec<f64>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// High-accuracy solution of `p` at `t_eval`.
///
/// Classical RK4 with step [`REFERENCE_STEP`] is compared against a run with
/// half that step; the finer result is returned if the two agree to `1e-8`
/// relative (max-norm). Results are cached per problem and `t_eval`.
pub fn reference_solution(p: &ProblemSpec, t_eval: f64) -> Result<Vec<f64>, ProblemError> {
    let key = (p.cache_key(), t_eval.to_bits());
    if let Some(hit) = cache().read().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let (coarse, fine) = Execution::default().join(
        || reference_solution_with_step(p, t_eval, REFERENCE_STEP),
        || reference_solution_with_step(p, t_eval, 0.5 * REFERENCE_STEP),
    );
    let (coarse, fine) = (coarse?, fine?);
    let scale = fine.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = coarse
        .iter()
        .zip(&fine)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if diff > RICHARDSON_TOL * scale.max(f64::MIN_POSITIVE) && diff > 1e-300 {
        return Err(ProblemError::Oracle(format!(
            "{} at t = {t_eval}: step-halving disagreement {:e} relative",
            p.name,
            diff / scale
        )));
    }
    cache()
        .write()
        .expect("cache lock")
        .entry(key)
        .or_insert_with(|| fine.clone());
    Ok(fine)
}

/// Uncached RK4 run from `t0` to `t_eval` with step `h` (the last step is
/// shortened to land on `t_eval`). State updates use compensated summation.
pub fn reference_solution_with_step(
    p: &ProblemSpec,
    t_eval: f64,
    h: f64,
) -> Result<Vec<f64>, ProblemError> {
    let t0 = p.t0();
    if !(t_eval.is_finite() && t_eval >= t0) {
        return Err(ProblemError::Oracle(format!(
            "t_eval = {t_eval} is before t0 = {t0}"
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(ProblemError::Oracle(format!("step {h} must be positive")));
    }
    let span = t_eval - t0;
    if span == 0.0 {
        return Ok(p.u0().to_vec());
    }
    let ratio = span / h;
    let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.round().max(1.0) {
        (ratio.round() as usize).max(1)
    } else {
        ratio.ceil() as usize
    };
    let last_h = span - (n - 1) as f64 * h;

    let mut rk = Rk4::new(p.system.general.rhs.clone(), p.u0());
    for i in 0..n {
        let step = if i + 1 == n { last_h } else { h };
        rk.step(t0 + i as f64 * h, step);
    }
    if rk.u.iter().any(|x| !x.is_finite()) {
        return Err(ProblemError::Oracle(format!(
            "{}: reference state is not finite at t = {t_eval}",
            p.name
        )));
    }
    Ok(rk.u)
}

struct Rk4 {
    f: VectorField,
    u: Vec<f64>,
    carry: Vec<f64>,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
}

impl Rk4 {
    fn new(f: VectorField, u0: &[f64]) -> Self {
        let n = u0.len();
        Self {
            f,
            u: u0.to_vec(),
            carry: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
        }
    }

    fn step(&mut self, t: f64, h: f64) {
        let f = &self.f;
        let [k1, k2, k3, k4] = &mut self.k;
        f(t, &self.u, k1);
        for ((s, u), k) in self.stage.iter_mut().zip(&self.u).zip(k1.iter()) {
            *s = u + 0.5 * h * k;
        }
        f(t + 0.5 * h, &self.stage, k2);
        for ((s, u), k) in self.stage.iter_mut().zip(&self.u).zip(k2.iter()) {
            *s = u + 0.5 * h * k;
        }
        f(t + 0.5 * h, &self.stage, k3);
        for ((s, u), k) in self.stage.iter_mut().zip(&self.u).zip(k3.iter()) {
            *s = u + h * k;
        }
        f(t + h, &self.stage, k4);
        for i in 0..self.u.len() {
            let inc = h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
            // Kahan summation of the increments.
            let y = inc - self.carry[i];
            let sum = self.u[i] + y;
            self.carry[i] = (sum - self.u[i]) - y;
            self.u[i] = sum;
        }
    }
}
