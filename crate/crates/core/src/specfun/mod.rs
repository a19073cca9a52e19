//! Scalar special functions in double precision.
//!
//! The multiprecision counterparts used by the closed-form matrix elements
//! live in [`extended`].

pub mod extended;

pub use extended::ExtendedReal;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const CF_MAX_ITER: usize = 100_000;
const SERIES_MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-17;
const FPMIN: f64 = 1e-300;

/// Rising factorial `(a)_n = a (a+1) … (a+n-1)`, with `(a)_0 = 1`.
pub fn pochhammer(a: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (a + k as f64))
}

/// Natural logarithm of `Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument {x} must be positive and finite")));
    }
    Ok(libm::lgamma(x))
}

/// Upper incomplete gamma function `Γ(a, z) = ∫_z^∞ t^{a-1} e^{-t} dt` for any
/// real `a` and `z > 0`.
///
/// For `z < 1` and `a ≤ 0` the parameter is lifted to `a + n ∈ (0, 1]` (or to
/// `0` when `a` is a nonpositive integer, where `Γ(0, z) = E₁(z)`) and
/// unwound with
///
/// ```text
/// Γ(a, z) = Γ(a+n, z)/(a)_n − e^{−z} Σ_{k=1}^{n} z^{a+k−1}/(a)_k
/// ```
///
/// which is forward stable there. For `z ≥ 1` the Legendre continued fraction
/// converges for every real `a` and is used directly.
pub fn gamma_upper(a: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("gamma_upper", format!("z = {z} must be positive and finite")));
    }
    if !a.is_finite() {
        return Err(Error::domain("gamma_upper", format!("parameter a = {a} is not finite")));
    }
    if z >= 1.0 {
        if a > 1.0 && z < a + 1.0 {
            return positive_series(a, z);
        }
        return continued_fraction(a, z);
    }
    if a > 0.0 {
        return small_z(a, z);
    }
    let (shift, base_param) = lift(a);
    let base = if base_param == 0.0 { exp_integral_e1_small(z) } else { small_z(base_param, z)? };
    Ok(unwind(a, shift, z, base))
}

/// Smallest shift `n` with `a + n ∈ (0, 1]`, or `a + n = 0` for nonpositive
/// integer `a`. Returns `(n, a + n)`.
pub(crate) fn lift(a: f64) -> (usize, f64) {
    if a == a.floor() {
        let n = (-a) as usize;
        (n, 0.0)
    } else {
        let n = (-a).floor() as usize + 1;
        (n, a + n as f64)
    }
}

fn unwind(a: f64, shift: usize, z: f64, base: f64) -> f64 {
    let mut poch = 1.0;
    let mut tail = 0.0;
    for k in 1..=shift {
        poch *= a + (k - 1) as f64;
        tail += (((a + k as f64 - 1.0) * z.ln()).exp()) / poch;
    }
    base / poch - (-z).exp() * tail
}

/// `Γ(a, z)` for `a > 0`, `z < 1`, written so that `a → 0` stays accurate:
/// `(Γ(1+a) − 1)/a − expm1(a ln z)/a − z^a Σ_{k≥1} (−z)^k / (k! (k+a))`.
fn small_z(a: f64, z: f64) -> Result<f64> {
    let gamma_part = libm::expm1(libm::lgamma(1.0 + a)) / a;
    let power_part = -libm::expm1(a * z.ln()) / a;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..SERIES_MAX_ITER {
        term *= -z / k as f64;
        let contrib = term / (k as f64 + a);
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            return Ok(gamma_part + power_part - z.powf(a) * sum);
        }
    }
    Err(Error::NoConvergence { op: "gamma_upper series", iterations: SERIES_MAX_ITER })
}

fn exp_integral_e1_small(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..SERIES_MAX_ITER {
        term *= -z / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() < EPS * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// `Γ(a) − γ(a, z)` with the lower function from its power series.
fn positive_series(a: f64, z: f64) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..SERIES_MAX_ITER {
        ap += 1.0;
        del *= z / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            let lg = libm::lgamma(a);
            let p = sum * (-z + a * z.ln() - lg).exp();
            return Ok(lg.exp() * (1.0 - p));
        }
    }
    Err(Error::NoConvergence { op: "gamma_upper series", iterations: SERIES_MAX_ITER })
}

/// Legendre continued fraction by the modified Lentz method.
fn continued_fraction(a: f64, z: f64) -> Result<f64> {
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok((-z + a * z.ln()).exp() * h);
        }
    }
    Err(Error::NoConvergence { op: "gamma_upper continued fraction", iterations: CF_MAX_ITER })
}

/// Terminating confluent hypergeometric series
/// `₁F₁(−n; b; z) = Σ_{k=0}^{n} (−n)_k z^k / ((b)_k k!)`.
pub fn hyp1f1_terminating(n: usize, b: f64, z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..n {
        let kf = k as f64;
        term *= (kf - n as f64) * z / ((b + kf) * (kf + 1.0));
        sum += term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn pochhammer_values() {
        assert_eq!(pochhammer(7.3, 0), 1.0);
        assert_eq!(pochhammer(3.0, 2), 12.0);
        assert_eq!(pochhammer(-2.0, 4), 0.0);
        assert_eq!(pochhammer(0.5, 3), 0.5 * 1.5 * 2.5);
    }

    #[test]
    fn ln_gamma_values() {
        assert_eq!(ln_gamma(1.0).unwrap(), 0.0);
        assert!(rel(ln_gamma(0.5).unwrap(), std::f64::consts::PI.sqrt().ln()) < 1e-15);
        assert!(rel(ln_gamma(10.0).unwrap(), 362_880f64.ln()) < 1e-15);
        // ln 199! against a direct sum of logs
        let direct: f64 = (1..200).map(|k| (k as f64).ln()).sum();
        assert!(rel(ln_gamma(200.0).unwrap(), direct) < 1e-14);
        assert!(ln_gamma(0.0).is_err());
        assert!(ln_gamma(-1.5).is_err());
    }

    #[test]
    fn gamma_upper_elementary() {
        for &z in &[0.01, 0.3, 1.0, 2.5, 17.0] {
            assert!(rel(gamma_upper(1.0, z).unwrap(), (-z).exp()) < 1e-14, "z={z}");
        }
        assert!(rel(gamma_upper(2.0, 0.5).unwrap(), 1.5 * (-0.5f64).exp()) < 1e-14);
        // E1(1)
        assert!(rel(gamma_upper(0.0, 1.0).unwrap(), 0.219_383_934_395_520_27) < 1e-14);
        assert!(rel(gamma_upper(0.0, 0.5).unwrap(), 0.559_773_594_776_160_8) < 1e-14);
    }

    #[test]
    fn gamma_upper_negative_parameter() {
        // ∫_2^∞ t^{-2.5} e^{-t} dt, frozen from an independent 40-digit quadrature
        let v = gamma_upper(-1.5, 2.0).unwrap();
        assert!(rel(v, 0.011_832_994_103_345_997_09) < 1e-13, "{v}");
        // Γ(-1, z) = E₂(z)/z: E₂(0.5) = 0.3266438623245530
        let e2 = 0.326_643_862_324_553_0;
        assert!(rel(gamma_upper(-1.0, 0.5).unwrap(), e2 / 0.5) < 1e-13);
    }

    #[test]
    fn gamma_upper_rejects_nonpositive_z() {
        assert!(gamma_upper(0.5, 0.0).is_err());
        assert!(gamma_upper(0.5, -1.0).is_err());
        assert!(gamma_upper(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn lift_shifts() {
        assert_eq!(lift(-1.5), (2, 0.5));
        assert_eq!(lift(-3.0), (3, 0.0));
        assert_eq!(lift(0.0), (0, 0.0));
        let (n, b) = lift(-0.25);
        assert_eq!(n, 1);
        assert!((b - 0.75).abs() < 1e-15);
    }

    #[test]
    fn hyp1f1_values() {
        assert_eq!(hyp1f1_terminating(5, 2.5, 0.0), 1.0);
        let z = 0.7;
        let zeta = 1.5;
        assert!((hyp1f1_terminating(1, zeta, z) - (1.0 - z / zeta)).abs() < 1e-15);
        // 1 − 2/1.5 + 2/(1.5·2.5·2) = −1/15
        assert!((hyp1f1_terminating(2, 1.5, 1.0) + 1.0 / 15.0).abs() < 1e-15);
    }
}
