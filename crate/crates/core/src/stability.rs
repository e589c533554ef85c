//! Stability functions on the linear test equation `u' = λu`, `z = hλ`.
//!
//! | method     | `R(z)`                                   |
//! |------------|------------------------------------------|
//! | ETD Euler  | `e^z`                                    |
//! | ExpRK2     | `e^z` (the nonlinear correction vanishes) |
//! | RK2        | `1 + z + z²/2`                           |
//! | RK4        | `1 + z + z²/2 + z³/6 + z⁴/24`            |
//! | Rb2(γ)     | `(1 + (1 - γ) z) / (1 - γ z)`            |
//!
//! The RK2 and Rb2 entries follow from one step of each method on `u' = λu`.
//! A point belongs to the stability domain when `|R(z)| < 1` strictly.

use num_complex::Complex64;
use thiserror::Error;

use crate::integrators::Method;
use crate::Execution;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("R(z) has a pole at z = {0}")]
    Pole(Complex64),
    #[error("z = {0} is not finite")]
    NonFinite(Complex64),
    #[error("{0} has an unbounded stability interval on the negative real axis")]
    Unbounded(Method),
    #[error("invalid raster window: {0}")]
    Window(String),
}

/// Amplification factor of one step of `method` on `u' = λu` at `z = hλ`.
pub fn stability_function(method: Method, z: Complex64) -> Result<Complex64, StabilityError> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(StabilityError::NonFinite(z));
    }
    Ok(match method {
        Method::EtdEuler | Method::ExpRk2 => z.exp(),
        Method::Rk2 => 1.0 + z * (1.0 + z * 0.5),
        Method::Rk4 => 1.0 + z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))),
        Method::Rb2 { gamma } => {
            let den = 1.0 - gamma * z;
            if den == Complex64::new(0.0, 0.0) {
                return Err(StabilityError::Pole(z));
            }
            (1.0 + (1.0 - gamma) * z) / den
        }
    })
}

/// Whether `z` lies in the open stability domain. Poles count as outside.
pub fn is_stable(method: Method, z: Complex64) -> bool {
    stability_function(method, z).is_ok_and(|r| r.norm() < 1.0)
}

/// Boolean mask of the stability domain over a rectangular window.
///
/// `mask[iy * nx + ix]` refers to the cell centre
/// `re_min + (ix + 1/2) dx`, `im_min + (iy + 1/2) dy`; row 0 is the bottom row.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityRaster {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub mask: Vec<bool>,
}

impl StabilityRaster {
    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / self.ny as f64
    }

    pub fn center(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.re_min + (ix as f64 + 0.5) * self.dx(),
            self.im_min + (iy as f64 + 0.5) * self.dy(),
        )
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.mask[iy * self.nx + ix]
    }

    /// Cell containing `z`, if it is inside the window.
    pub fn cell_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let fx = (z.re - self.re_min) / self.dx();
        let fy = (z.im - self.im_min) / self.dy();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn count_stable(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Rasterizes with the default execution path.
pub fn rasterize(
    method: Method,
    window: [f64; 4],
    nx: usize,
    ny: usize,
) -> Result<StabilityRaster, StabilityError> {
    rasterize_with(method, window, nx, ny, Execution::default())
}

/// Rasterizes `[re_min, re_max] × [im_min, im_max]` on an `nx × ny` grid.
/// Rows are independent and are split across threads under
/// [`Execution::Parallel`].
pub fn rasterize_with(
    method: Method,
    window: [f64; 4],
    nx: usize,
    ny: usize,
    exec: Execution,
) -> Result<StabilityRaster, StabilityError> {
    let [re_min, re_max, im_min, im_max] = window;
    if !window.iter().all(|x| x.is_finite()) || re_max <= re_min || im_max <= im_min {
        return Err(StabilityError::Window(format!(
            "[{re_min}, {re_max}] x [{im_min}, {im_max}] is empty or not finite"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(StabilityError::Window(format!(
            "resolution {nx}x{ny} is empty"
        )));
    }
    let mut raster = StabilityRaster {
        re_min,
        re_max,
        im_min,
        im_max,
        nx,
        ny,
        mask: Vec::new(),
    };
    let rows: Vec<usize> = (0..ny).collect();
    let grid = &raster;
    let mask_rows = exec.map(&rows, |&iy| {
        (0..nx)
            .map(|ix| is_stable(method, grid.center(ix, iy)))
            .collect::<Vec<bool>>()
    });
    raster.mask = mask_rows.concat();
    Ok(raster)
}

fn modulus_on_axis(method: Method, x: f64) -> f64 {
    stability_function(method, Complex64::new(x, 0.0)).map_or(f64::INFINITY, |r| r.norm())
}

/// Leftmost point `x < 0` of the real-axis stability interval, located by
/// bisection on `|R(x)| = 1` to an absolute tolerance of `1e-8`.
///
/// The interval is searched by doubling `x` from `-1/8` until `|R(x)| ≥ 1`;
/// if that never happens by `-2^30` the interval is reported as unbounded.
pub fn real_axis_boundary(method: Method) -> Result<f64, StabilityError> {
    let mut inside = -0.125;
    if modulus_on_axis(method, inside) >= 1.0 {
        // Not even a small interval to the left of the origin is stable.
        return Ok(0.0);
    }
    let mut outside = inside;
    loop {
        outside *= 2.0;
        if modulus_on_axis(method, outside) >= 1.0 {
            break;
        }
        inside = outside;
        if outside < -(2f64.powi(30)) {
            return Err(StabilityError::Unbounded(method));
        }
    }
    // The stable set scanned so far is connected from the origin to `inside`;
    // the first exit lies in (outside, inside].
    while inside - outside > 1e-8 {
        let mid = 0.5 * (inside + outside);
        if modulus_on_axis(method, mid) < 1.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(0.5 * (inside + outside))
}
