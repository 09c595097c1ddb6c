//! Bessel functions `Y0` and `K0` of positive real argument.
//!
//! `Y0` uses the ascending series in double-double arithmetic for
//! `z < Y0_CROSSOVER` (the terms reach 10^7 before cancelling) and the
//! Hankel expansion `sqrt(2/(pi z)) (P sin chi + Q cos chi)` above it.
//! `K0` uses the ascending series for `z <= 2`, the trapezoidal rule on
//! `int_0^inf exp(-z cosh t) dt` (geometrically convergent because the
//! integrand is analytic in a strip) up to `K0_CROSSOVER`, and its
//! asymptotic series beyond that.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};

pub const Y0_CROSSOVER: f64 = 20.0;
pub const K0_SERIES_LIMIT: f64 = 2.0;
pub const K0_CROSSOVER: f64 = 30.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn check(z: f64) -> Result<()> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::Domain(format!("Bessel argument must be positive, got {z}")));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite(z));
    }
    Ok(())
}

/// `sin(z - pi/4)` and `cos(z - pi/4)` without rounding `z - pi/4`.
fn shifted_sin_cos(z: f64) -> (f64, f64) {
    let (s, c) = z.sin_cos();
    ((s - c) * FRAC_1_SQRT_2, (c + s) * FRAC_1_SQRT_2)
}

/// Hankel series `P(z)`, `Q(z)` for order zero, summed to the smallest term.
fn hankel_pq(z: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    // a_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k), term_k = a_k / z^k.
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        term *= -odd * odd / (f64::from(k) * 8.0 * z);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        // P collects even k with sign (-1)^{k/2}; Q odd k with sign (-1)^{(k-1)/2}.
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    (p, q)
}

fn y0_series(z: f64) -> f64 {
    let (zz, zz_lo) = crate::dd::two_prod(z, z);
    let quarter = Dd::new(zz * 0.25, zz_lo * 0.25);
    let mut term = Dd::from_f64(1.0);
    let mut harmonic = Dd::ZERO;
    let mut j0 = Dd::from_f64(1.0);
    let mut rest = Dd::ZERO;
    for k in 1..200i128 {
        term = -(term * quarter) / Dd::from_i128(k * k);
        harmonic = harmonic + Dd::ratio(1, k);
        j0 = j0 + term;
        // (-1)^{k+1} H_k q^k / (k!)^2 = -term * H_k
        rest = rest - term * harmonic;
        if term.hi.abs() * harmonic.hi < 1e-34 {
            break;
        }
    }
    let log_part = (0.5 * z).ln() + EULER_GAMMA;
    (2.0 / PI) * (log_part * j0.to_f64() + rest.to_f64())
}

/// Bessel function of the second kind, order zero.
pub fn bessel_y0(z: f64) -> Result<f64> {
    check(z)?;
    if z < Y0_CROSSOVER {
        return Ok(y0_series(z));
    }
    let (p, q) = hankel_pq(z);
    let (s, c) = shifted_sin_cos(z);
    Ok((2.0 / (PI * z)).sqrt() * (p * s + q * c))
}

fn k0_series(z: f64) -> f64 {
    let quarter = 0.25 * z * z;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut rest = 0.0;
    for k in 1..100u32 {
        let kf = f64::from(k);
        term *= quarter / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        rest += term * harmonic;
        if term * harmonic < 1e-18 * rest {
            break;
        }
    }
    -((0.5 * z).ln() + EULER_GAMMA) * i0 + rest
}

/// `exp(z) K0(z)` by the trapezoidal rule on `int_0^inf exp(-z (cosh t - 1)) dt`.
fn k0_scaled_trapezoid(z: f64) -> f64 {
    let h = 0.125;
    let mut sum = 0.5;
    for j in 1..2000 {
        let t = h * f64::from(j);
        let v = (-z * (t.cosh() - 1.0)).exp();
        sum += v;
        if v < 1e-18 * sum {
            break;
        }
    }
    h * sum
}

fn k0_scaled_asymptotic(z: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0f64;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        term *= -odd * odd / (f64::from(k) * 8.0 * z);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        sum += term;
    }
    (PI / (2.0 * z)).sqrt() * sum
}

/// `exp(z) K0(z)`, finite for every positive `z`.
pub fn bessel_k0_scaled(z: f64) -> Result<f64> {
    check(z)?;
    Ok(if z <= K0_SERIES_LIMIT {
        k0_series(z) * z.exp()
    } else if z <= K0_CROSSOVER {
        k0_scaled_trapezoid(z)
    } else {
        k0_scaled_asymptotic(z)
    })
}

/// Modified Bessel function of the second kind, order zero.
pub fn bessel_k0(z: f64) -> Result<f64> {
    check(z)?;
    if z <= K0_SERIES_LIMIT {
        return Ok(k0_series(z));
    }
    Ok(bessel_k0_scaled(z)? * (-z).exp())
}

/// Oscillatory expansion `Y0(z) ~ c_plus e^{i(z - pi/4)} + c_minus e^{-i(z - pi/4)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Y0Expansion {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    /// Size of the first omitted term: `z^{-5/2}` with the second-order
    /// correction, `z^{-3/2}` without.
    pub remainder_scale: f64,
}

impl Y0Expansion {
    pub fn value(&self, z: f64) -> f64 {
        let (s, c) = shifted_sin_cos(z);
        let up = Complex64::new(c, s);
        (self.c_plus * up + self.c_minus * up.conj()).re
    }
}

/// Leading terms of the large-argument expansion of `Y0`.
///
/// The leading coefficients are `-+ i (2 pi z)^{-1/2}`; the second-order
/// term `-cos(z - pi/4) / (8 z) sqrt(2/(pi z))` adds `-(8 z)^{-1} (2 pi z)^{-1/2}`
/// to both.
pub fn y0_asymptotic(z: f64, include_second_order: bool) -> Result<Y0Expansion> {
    if !(z >= 1.0) || !z.is_finite() {
        return Err(Error::Domain(format!("expansion needs z >= 1, got {z}")));
    }
    let lead = 1.0 / (2.0 * PI * z).sqrt();
    let mut c_plus = Complex64::new(0.0, -lead);
    let mut c_minus = Complex64::new(0.0, lead);
    let remainder_scale = if include_second_order {
        let second = -lead / (8.0 * z);
        c_plus += second;
        c_minus += second;
        z.powf(-2.5)
    } else {
        z.powf(-1.5)
    };
    Ok(Y0Expansion {
        c_plus,
        c_minus,
        remainder_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        // Reference values from an arbitrary-precision evaluation.
        assert!((bessel_y0(1.0).unwrap() - 0.088_256_964_215_676_96).abs() < 1e-15);
        assert!((bessel_k0(1.0).unwrap() - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((bessel_y0(30.0).unwrap() - (-0.117_295_731_686_664_03)).abs() < 1e-14);
    }

    #[test]
    fn nonpositive_arguments_fail() {
        assert!(bessel_y0(0.0).is_err());
        assert!(bessel_k0(-1.0).is_err());
        assert!(bessel_k0(f64::NAN).is_err());
    }

    #[test]
    fn crossovers_are_continuous() {
        let c = Y0_CROSSOVER;
        let (p, q) = hankel_pq(c);
        let (s, co) = shifted_sin_cos(c);
        let above = (2.0 / (PI * c)).sqrt() * (p * s + q * co);
        assert!((y0_series(c) - above).abs() < 1e-14);
        let a = k0_series(2.0) * 2f64.exp();
        let b = k0_scaled_trapezoid(2.0);
        assert!((a - b).abs() < 1e-14);
        let a = k0_scaled_trapezoid(30.0);
        let b = k0_scaled_asymptotic(30.0);
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn k0_large_argument_limit() {
        let z = 50.0;
        let r = bessel_k0(z).unwrap() * z.exp() * (2.0 * z / PI).sqrt();
        assert!((r - 1.0).abs() < 0.01);
    }

    #[test]
    fn expansion_orders() {
        for &z in &[20.0, 100.0, 1000.0] {
            let y = bessel_y0(z).unwrap();
            let one = y0_asymptotic(z, false).unwrap();
            let two = y0_asymptotic(z, true).unwrap();
            assert!((y - one.value(z)).abs() <= 0.2 * one.remainder_scale);
            assert!((y - two.value(z)).abs() <= 0.2 * two.remainder_scale);
        }
    }
}
