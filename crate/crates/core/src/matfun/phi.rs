//! Scalar φ-functions.
//!
//! `φ_0(z) = e^z` and `φ_{k+1}(z) = (φ_k(z) - 1/k!) / z`, with `φ_k(0) = 1/k!`.
//! Equivalently `φ_k(z) = Σ_{j≥0} z^j / (j+k)!`. The recursion loses digits
//! to cancellation near the origin, so several evaluation strategies exist
//! and [`PhiStrategy::Auto`] picks one by `|z|` and `k`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::MatfunError;

/// Highest φ index accepted by [`phi_scalar`].
pub const MAX_PHI_ORDER: usize = 8;

const FACTORIALS: [f64; MAX_PHI_ORDER + 1] =
    [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0];

const TAYLOR_MAX_TERMS: usize = 60;
const TAYLOR_REL_STOP: f64 = 1e-17;
const CONTOUR_NODES: usize = 32;

/// `1/k!` for `k <= MAX_PHI_ORDER`.
#[inline]
pub fn inv_factorial(k: usize) -> f64 {
    1.0 / FACTORIALS[k]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum PhiStrategy {
    /// Closed form through the downward recursion from `e^z`.
    Recursion,
    /// Power series `Σ z^j/(j+k)!`, summed until the terms stop mattering.
    TaylorSeries,
    /// Trapezoidal rule for the Cauchy integral on a circle around `z`.
    ContourTrapezoid,
    /// Taylor below `|z| = 0.5`, contour on `[0.5, 1)`, recursion above.
    /// For `k >= 6` the series is used up to `|z| = 4`, where the recursion
    /// would amplify rounding by more than three orders of magnitude.
    #[default]
    Auto,
}

impl PhiStrategy {
    pub const ALL: [PhiStrategy; 4] = [
        PhiStrategy::Recursion,
        PhiStrategy::TaylorSeries,
        PhiStrategy::ContourTrapezoid,
        PhiStrategy::Auto,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhiStrategy::Recursion => "recursion",
            PhiStrategy::TaylorSeries => "taylor",
            PhiStrategy::ContourTrapezoid => "contour",
            PhiStrategy::Auto => "auto",
        }
    }

    /// Concrete strategy that [`PhiStrategy::Auto`] resolves to.
    pub fn resolve(self, k: usize, z: Complex64) -> PhiStrategy {
        if self != PhiStrategy::Auto {
            return self;
        }
        let r = z.norm();
        if r < 0.5 || (k >= 6 && r < 4.0) {
            PhiStrategy::TaylorSeries
        } else if r < 1.0 {
            PhiStrategy::ContourTrapezoid
        } else {
            PhiStrategy::Recursion
        }
    }
}

impl fmt::Display for PhiStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiStrategy {
    type Err = MatfunError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "recursion" => Ok(PhiStrategy::Recursion),
            "taylor" | "taylorseries" | "taylor-series" => Ok(PhiStrategy::TaylorSeries),
            "contour" | "contourtrapezoid" | "contour-trapezoid" => {
                Ok(PhiStrategy::ContourTrapezoid)
            }
            "auto" => Ok(PhiStrategy::Auto),
            other => Err(MatfunError::Domain(format!(
                "unknown phi strategy `{other}`"
            ))),
        }
    }
}

/// Evaluates `φ_k(z)`.
///
/// `φ_0` is always the host complex exponential and `φ_k(0)` is always
/// exactly `1/k!`, whatever the strategy.
pub fn phi_scalar(k: usize, z: Complex64, strategy: PhiStrategy) -> Result<Complex64, MatfunError> {
    if k > MAX_PHI_ORDER {
        return Err(MatfunError::UnsupportedOrder {
            k,
            max: MAX_PHI_ORDER,
        });
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MatfunError::Domain(format!(
            "phi argument {z} is not finite"
        )));
    }
    if k == 0 {
        return Ok(z.exp());
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(inv_factorial(k), 0.0));
    }
    Ok(match strategy.resolve(k, z) {
        PhiStrategy::Recursion => phi_recursion(k, z),
        PhiStrategy::TaylorSeries => phi_taylor(k, z),
        PhiStrategy::ContourTrapezoid => phi_contour(k, z),
        PhiStrategy::Auto => unreachable!("resolve never returns Auto"),
    })
}

/// Real-argument convenience wrapper around [`phi_scalar`] with
/// [`PhiStrategy::Auto`].
pub fn phi_real(k: usize, x: f64) -> Result<f64, MatfunError> {
    phi_scalar(k, Complex64::new(x, 0.0), PhiStrategy::Auto).map(|c| c.re)
}

fn phi_recursion(k: usize, z: Complex64) -> Complex64 {
    let mut p = z.exp();
    for j in 0..k {
        p = (p - inv_factorial(j)) / z;
    }
    p
}

fn phi_taylor(k: usize, z: Complex64) -> Complex64 {
    let mut term = Complex64::new(inv_factorial(k), 0.0);
    let mut sum = term;
    for j in 1..TAYLOR_MAX_TERMS {
        term = term * z / (k + j) as f64;
        sum += term;
        if term.norm() < TAYLOR_REL_STOP * sum.norm() {
            break;
        }
    }
    sum
}

// Mean value of φ_k over a circle centred at z. The radius keeps every node at
// least 1 away from the origin so the closed form is well conditioned there:
// radius 1 once |z| >= 2, otherwise |z| + 1 (the circle then encloses 0).
fn phi_contour(k: usize, z: Complex64) -> Complex64 {
    let r = z.norm();
    let radius = if r >= 2.0 { 1.0 } else { r + 1.0 };
    let node = |j: usize| {
        let theta = 2.0 * PI * (j as f64 + 0.5) / CONTOUR_NODES as f64;
        phi_recursion(k, z + Complex64::from_polar(radius, theta))
    };
    if z.im == 0.0 {
        // Nodes j and N-1-j are conjugate; their mean is the real part.
        let half: f64 = (0..CONTOUR_NODES / 2).map(|j| node(j).re).sum();
        Complex64::new(2.0 * half / CONTOUR_NODES as f64, 0.0)
    } else {
        let sum: Complex64 = (0..CONTOUR_NODES).map(node).sum();
        sum / CONTOUR_NODES as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    // Reference values computed with 50-digit arithmetic (mpmath).
    const PHI1_M10: f64 = 0.099_995_460_007_023_75;
    const PHI2_M10: f64 = 0.090_000_453_999_297_62;
    const PHI2_M1: f64 = 0.367_879_441_171_442_3;

    #[test]
    fn phi0_is_the_exponential() {
        let v = phi_scalar(0, c(-10.0, 0.0), PhiStrategy::Auto).unwrap();
        assert_eq!(v, c(-10.0, 0.0).exp());
        assert!((v.re - 4.539_993e-5).abs() < 1e-11);
    }

    #[test]
    fn phi_at_zero_is_inverse_factorial() {
        for strategy in PhiStrategy::ALL {
            for k in 0..=MAX_PHI_ORDER {
                let v = phi_scalar(k, c(0.0, 0.0), strategy).unwrap();
                assert_eq!(v, c(inv_factorial(k), 0.0));
            }
        }
        assert_eq!(phi_real(2, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn phi1_of_minus_ten() {
        for strategy in PhiStrategy::ALL {
            let v = phi_scalar(1, c(-10.0, 0.0), strategy).unwrap();
            assert!(rel(v, c(PHI1_M10, 0.0)) < 1e-12, "{strategy}: {v}");
        }
        assert!((phi_real(2, -10.0).unwrap() - PHI2_M10).abs() < 1e-15);
        assert!((phi_real(2, -1.0).unwrap() - PHI2_M1).abs() < 1e-15);
    }

    #[test]
    fn phi1_agrees_with_long_taylor_series() {
        // 200 terms of Σ z^j/(j+1)!, accumulated independently of phi_taylor.
        let z = -10.0_f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..200 {
            term *= z / (j + 1) as f64;
            sum += term;
        }
        assert!((sum - PHI1_M10).abs() / PHI1_M10 < 1e-12);
    }

    #[test]
    fn rejects_bad_order_and_argument() {
        assert_eq!(
            phi_scalar(9, c(1.0, 0.0), PhiStrategy::Auto),
            Err(MatfunError::UnsupportedOrder { k: 9, max: 8 })
        );
        assert!(matches!(
            phi_scalar(1, c(f64::NAN, 0.0), PhiStrategy::Auto),
            Err(MatfunError::Domain(_))
        ));
        assert!(matches!(
            phi_scalar(1, c(0.0, f64::INFINITY), PhiStrategy::TaylorSeries),
            Err(MatfunError::Domain(_))
        ));
    }

    #[test]
    fn auto_dispatch_thresholds() {
        assert_eq!(
            PhiStrategy::Auto.resolve(1, c(0.3, 0.0)),
            PhiStrategy::TaylorSeries
        );
        assert_eq!(
            PhiStrategy::Auto.resolve(1, c(0.0, 0.7)),
            PhiStrategy::ContourTrapezoid
        );
        assert_eq!(
            PhiStrategy::Auto.resolve(1, c(-1.0, 0.0)),
            PhiStrategy::Recursion
        );
        assert_eq!(
            PhiStrategy::Auto.resolve(7, c(-3.0, 0.0)),
            PhiStrategy::TaylorSeries
        );
        assert_eq!(
            PhiStrategy::Auto.resolve(7, c(-5.0, 0.0)),
            PhiStrategy::Recursion
        );
    }

    #[test]
    fn complex_contour_matches_series() {
        for &z in &[c(0.6, 0.6), c(-0.2, 0.9), c(3.0, -4.0)] {
            for k in 1..=4 {
                let a = phi_scalar(k, z, PhiStrategy::ContourTrapezoid).unwrap();
                let b = phi_scalar(k, z, PhiStrategy::TaylorSeries).unwrap();
                assert!(rel(a, b) < 1e-12, "k={k} z={z}");
            }
        }
    }

    #[test]
    fn strategy_names_parse() {
        for s in PhiStrategy::ALL {
            assert_eq!(s.name().parse::<PhiStrategy>().unwrap(), s);
        }
        assert!("pade".parse::<PhiStrategy>().is_err());
    }
}
